"""Iterative orphan-adoption engine.

Each iteration freezes the current mapping, reinitializes the configured
attraction function against it (documents rebuilt, classifier retrained,
matrix refactorized), computes attraction vectors for every orphan, then
maps each orphan whose selection rule singles out a module. The loop stops
as soon as an iteration maps nothing. Initial assignments are never
touched and auto assignments are never revisited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .count_attract import CountParams, CountScorer
from .model import AttractionVector, MappingState, Origin, SystemModel
from .nbayes import NbScorer
from .textsim import IrScorer, LsiScorer


class Af(Enum):
    """Attraction function ids, as spelled on the command line and in CSVs."""

    COUNT = "count"
    IR = "ir"
    LSI = "lsi"
    NB = "nb"


TEXT_AFS = (Af.IR, Af.LSI, Af.NB)


@dataclass
class AfConfig:
    af: Af
    use_cda: Optional[bool] = None          # text functions only
    count_params: Optional[CountParams] = None  # CountAttract only
    nb_threshold: float = 0.9               # NBAttract only

    def __post_init__(self):
        if isinstance(self.af, str):
            self.af = Af(self.af)
        if not 0.0 < self.nb_threshold <= 1.0:
            raise ValueError(f"nb_threshold must be in (0, 1], got {self.nb_threshold}")
        if self.af is Af.COUNT:
            if self.use_cda is not None:
                raise ValueError("CountAttract does not take a CDA flag")
            if self.count_params is None:
                self.count_params = CountParams()
        else:
            if self.count_params is not None:
                raise ValueError(f"{self.af.value} does not take CountAttract parameters")
            if self.use_cda is None:
                self.use_cda = False


def _values_of(av) -> np.ndarray:
    if isinstance(av, AttractionVector):
        return av.values
    return np.asarray(av, dtype=float)


def select_candidate_meansd(av) -> Optional[int]:
    """Index of the single value one population-sd above the mean, else of
    the single value above the mean, else None. Strict comparisons, so an
    all-equal vector selects nothing."""
    values = _values_of(av)
    mean = float(values.mean())
    sd = float(values.std())  # population (divide by n)
    above_sd = np.flatnonzero(values > mean + sd)
    if len(above_sd) == 1:
        return int(above_sd[0])
    above_mean = np.flatnonzero(values > mean)
    if len(above_mean) == 1:
        return int(above_mean[0])
    return None


def select_candidate_threshold(av, threshold: float) -> Optional[int]:
    """Index of the unique maximum if it exceeds the threshold, else None."""
    values = _values_of(av)
    best = float(values.max())
    if best <= threshold:
        return None
    winners = np.flatnonzero(values == best)
    if len(winners) != 1:
        return None
    return int(winners[0])


@dataclass
class IterationRecord:
    iteration: int
    orphans: int
    mapped_this_iter: int
    cumulative_mapped: int

    def line(self) -> str:
        return f"{self.iteration},{self.orphans},{self.mapped_this_iter},{self.cumulative_mapped}"


def _make_scorer(cfg: AfConfig, model: SystemModel, state: MappingState):
    if cfg.af is Af.COUNT:
        return CountScorer(model, state, cfg.count_params)
    if cfg.af is Af.IR:
        return IrScorer(model, state, cfg.use_cda)
    if cfg.af is Af.LSI:
        return LsiScorer(model, state, cfg.use_cda)
    return NbScorer(model, state, cfg.use_cda)


def run_hugme(
    model: SystemModel, initial: MappingState, cfg: AfConfig
) -> tuple[MappingState, list[IterationRecord]]:
    """Run the engine to a fixed point; returns the final state and the
    per-iteration log. The input state is not modified."""
    if cfg.af in TEXT_AFS:
        empty = [
            m for m in model.architecture.modules
            if not any(initial.module_of(e) == m for e in initial.mapped_ids())
        ]
        if empty:
            raise ValueError(
                f"{cfg.af.value} needs at least one initially mapped entity per module; "
                f"empty: {', '.join(empty)}"
            )
    state = initial.copy()
    modules = model.architecture.modules
    log: list[IterationRecord] = []
    iteration = 0
    while True:
        iteration += 1
        try:
            scorer = _make_scorer(cfg, model, state)
            orphans = scorer.orphans()
            # two phases: all attractions against the frozen state, then mapping
            vectors = [(o, scorer.attractions(o)) for o in orphans]
        except Exception as exc:
            raise RuntimeError(
                f"attraction function {cfg.af.value!r} failed in iteration {iteration}: {exc}"
            ) from exc
        mapped_now = 0
        for orphan, values in vectors:
            state.attractions[orphan] = AttractionVector(orphan, values)
            if cfg.af is Af.NB:
                idx = select_candidate_threshold(values, cfg.nb_threshold)
            else:
                idx = select_candidate_meansd(values)
            if idx is not None:
                state.assign(orphan, modules[idx], Origin.AUTO)
                mapped_now += 1
        log.append(
            IterationRecord(iteration, len(orphans), mapped_now, len(state.auto_ids()))
        )
        if mapped_now == 0:
            break
    return state, log
