"""Batch experiment harness: random module-covering initial mappings,
random per-function parameters, repeated engine runs, metrics, CSV output.

Reproducibility: every repetition derives its generators from the master
seed alone — SeedSequence((seed, rep, 0)) drives the initial mapping and
SeedSequence((seed, rep, 1 + i)) drives parameter sampling for the i-th
attraction function — so results are identical no matter how repetitions
are scheduled across workers.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .count_attract import CountParams, WeightProfile
from .hugme import Af, AfConfig, run_hugme
from .model import MappingState, SystemModel, initial_state

RESULT_COLUMNS = (
    "system", "af", "run_id", "seed", "use_cda", "omega", "phi", "threshold",
    "initial_size", "initial_fraction", "orphans", "auto_mapped", "correct",
    "unmapped", "iterations", "precision", "recall", "f1",
)

DEFAULT_AFS = (Af.COUNT, Af.IR, Af.LSI, Af.NB)


@dataclass(frozen=True)
class RunConfig:
    system: str
    afs: tuple[Af, ...]
    seed: int
    repetitions: int
    fraction_range: Optional[tuple[float, float]] = None
    nb_threshold: float = 0.9

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass
class RunResult:
    run_id: int
    af: Af
    use_cda: Optional[bool]
    omega: Optional[float]
    phi: Optional[float]
    threshold: Optional[float]
    initial_size: int
    initial_fraction: float
    orphans: int
    auto_mapped: int
    correct: int
    unmapped: int
    iterations: int
    precision: float
    recall: float
    f1: float

    def __post_init__(self):
        if not 0 <= self.correct <= self.auto_mapped <= self.orphans:
            raise ValueError(
                f"inconsistent counts: correct={self.correct} "
                f"auto_mapped={self.auto_mapped} orphans={self.orphans}"
            )

    def csv_row(self, system: str, seed: int) -> str:
        def opt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "true" if v else "false"
            return repr(v)

        fields = (
            system, self.af.value, str(self.run_id), str(seed), opt(self.use_cda),
            opt(self.omega), opt(self.phi), opt(self.threshold),
            str(self.initial_size), repr(self.initial_fraction), str(self.orphans),
            str(self.auto_mapped), str(self.correct), str(self.unmapped),
            str(self.iterations), repr(self.precision), repr(self.recall), repr(self.f1),
        )
        return ",".join(fields)


def _size_bounds(model: SystemModel, fraction_range) -> tuple[int, int]:
    n = len(model.entities)
    lo, hi = len(model.architecture.modules), n - 1
    if fraction_range is not None:
        f_lo, f_hi = fraction_range
        lo = max(lo, math.ceil(f_lo * n))
        hi = min(hi, math.floor(f_hi * n))
    if lo > hi:
        raise ValueError(f"no feasible initial size in [{lo}, {hi}]")
    return lo, hi


def generate_initial_mapping(
    model: SystemModel,
    rng: np.random.Generator,
    fraction_range: Optional[tuple[float, float]] = None,
    size: Optional[int] = None,
) -> MappingState:
    """Ground-truth sample covering every module.

    The size is uniform over [#modules, #entities - 1] (optionally narrowed
    to a fraction range); one entity per module is drawn first, the rest
    uniformly without replacement.
    """
    entities = list(model.entities)
    modules = model.architecture.modules
    if len(entities) < len(modules):
        raise ValueError("fewer entities than modules; cannot cover every module")
    by_module: dict[str, list[str]] = {m: [] for m in modules}
    for eid in entities:
        by_module[model.ground_truth[eid]].append(eid)
    starved = [m for m, es in by_module.items() if not es]
    if starved:
        raise ValueError(f"module(s) without ground-truth entities: {', '.join(starved)}")

    if size is None:
        lo, hi = _size_bounds(model, fraction_range)
        size = int(rng.integers(lo, hi + 1))
    else:
        if not len(modules) <= size <= len(entities) - 1:
            raise ValueError(f"initial size {size} out of range")

    chosen: set[str] = set()
    for m in modules:
        pool = by_module[m]
        chosen.add(pool[int(rng.integers(len(pool)))])
    remaining = [e for e in entities if e not in chosen]
    extra = size - len(chosen)
    if extra > 0:
        idx = rng.choice(len(remaining), size=extra, replace=False)
        chosen.update(remaining[i] for i in idx)
    return initial_state({e: model.ground_truth[e] for e in entities if e in chosen})


def sample_params(
    af: Af,
    rng: np.random.Generator,
    weights: Optional[WeightProfile] = None,
    nb_threshold: float = 0.9,
) -> AfConfig:
    """Random parameters for one run: omega and phi uniform on [0, 1] for
    CountAttract (weights come from the given per-system profile, unit by
    default); a fair CDA coin for the text functions; the NB threshold is
    fixed."""
    if af is Af.COUNT:
        omega = float(rng.uniform())
        phi = float(rng.uniform())
        return AfConfig(
            af=af,
            count_params=CountParams(phi=phi, omega=omega,
                                     weights=weights or WeightProfile.unit()),
        )
    use_cda = bool(rng.integers(0, 2))
    if af is Af.NB:
        return AfConfig(af=af, use_cda=use_cda, nb_threshold=nb_threshold)
    return AfConfig(af=af, use_cda=use_cda)


def compute_metrics(
    final: MappingState,
    initial: MappingState,
    model: SystemModel,
    recall_mode: str = "correct",
) -> tuple[float, float, float]:
    """Precision, recall, F1 over the orphan universe (all non-initial
    entities). recall_mode="performed" scores recall by attempted mappings
    instead of correct ones (sensitivity switch)."""
    if recall_mode not in ("correct", "performed"):
        raise ValueError(f"unknown recall_mode {recall_mode!r}")
    orphan_universe = [e for e in model.entities if not initial.is_mapped(e)]
    performed = 0
    correct = 0
    for eid in orphan_universe:
        module = final.module_of(eid)
        if module is None:
            continue
        performed += 1
        if module == model.ground_truth[eid]:
            correct += 1
    precision = correct / performed if performed else 0.0
    numerator = correct if recall_mode == "correct" else performed
    recall = numerator / len(orphan_universe) if orphan_universe else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def run_repetition(
    model: SystemModel,
    rep: int,
    seed: int,
    afs: Sequence[Af],
    weights: Optional[WeightProfile] = None,
    fraction_range: Optional[tuple[float, float]] = None,
    nb_threshold: float = 0.9,
) -> list[RunResult]:
    """One repetition: a single shared initial mapping, then every
    attraction function against it with freshly sampled parameters."""
    rng_init = np.random.default_rng(np.random.SeedSequence((seed, rep, 0)))
    initial = generate_initial_mapping(model, rng_init, fraction_range)
    n_entities = len(model.entities)
    initial_size = len(initial)
    orphan_count = n_entities - initial_size
    results = []
    for i, af in enumerate(afs):
        rng_params = np.random.default_rng(np.random.SeedSequence((seed, rep, 1 + i)))
        cfg = sample_params(af, rng_params, weights, nb_threshold)
        final, log = run_hugme(model, initial, cfg)
        precision, recall, f1 = compute_metrics(final, initial, model)
        auto_mapped = len(final.auto_ids())
        correct = sum(
            1 for e in final.auto_ids() if final.module_of(e) == model.ground_truth[e]
        )
        results.append(
            RunResult(
                run_id=rep,
                af=af,
                use_cda=cfg.use_cda,
                omega=cfg.count_params.omega if af is Af.COUNT else None,
                phi=cfg.count_params.phi if af is Af.COUNT else None,
                threshold=cfg.nb_threshold if af is Af.NB else None,
                initial_size=initial_size,
                initial_fraction=initial_size / n_entities,
                orphans=orphan_count,
                auto_mapped=auto_mapped,
                correct=correct,
                unmapped=orphan_count - auto_mapped,
                iterations=len(log),
                precision=precision,
                recall=recall,
                f1=f1,
            )
        )
    return results


# -- worker-pool plumbing ----------------------------------------------------

_WORKER_STATE: dict = {}


def _init_worker(model, seed, afs, weights, fraction_range, nb_threshold):
    _WORKER_STATE.update(
        model=model, seed=seed, afs=afs, weights=weights,
        fraction_range=fraction_range, nb_threshold=nb_threshold,
    )


def _run_rep_worker(rep: int) -> list[RunResult]:
    w = _WORKER_STATE
    return run_repetition(
        w["model"], rep, w["seed"], w["afs"], w["weights"],
        w["fraction_range"], w["nb_threshold"],
    )


def _resume_signature(model, afs, n, seed, fraction_range, weights, nb_threshold):
    return {
        "system": model.name,
        "afs": [af.value for af in afs],
        "repetitions": n,
        "seed": seed,
        "fraction_range": list(fraction_range) if fraction_range else None,
        "weights": weights.to_json_dict() if weights else None,
        "nb_threshold": nb_threshold,
    }


def run_batch(
    model: SystemModel,
    afs: Sequence[Af],
    n: int,
    seed: int,
    out_path,
    threads: int = 1,
    weights: Optional[WeightProfile] = None,
    fraction_range: Optional[tuple[float, float]] = None,
    nb_threshold: float = 0.9,
) -> int:
    """Run n repetitions and append rows to a CSV at out_path.

    Deterministic for a given seed regardless of thread count. A marker
    file `<out>.resume` tracks progress; if it matches the requested
    configuration, completed repetitions are skipped and the CSV is
    appended to, which reproduces the exact single-shot file. Returns the
    number of repetitions executed this call.
    """
    afs = tuple(Af(a) for a in afs)
    marker_path = str(out_path) + ".resume"
    signature = _resume_signature(model, afs, n, seed, fraction_range, weights, nb_threshold)
    start_rep = 0
    if os.path.exists(marker_path) and os.path.exists(out_path):
        with open(marker_path, encoding="utf-8") as fh:
            marker = json.load(fh)
        if marker.get("signature") == signature:
            start_rep = int(marker["next_rep"])
            # drop any rows written after the last marker update
            with open(out_path, encoding="utf-8", newline="") as fh:
                lines = fh.readlines()
            keep = 1 + start_rep * len(afs)
            with open(out_path, "w", encoding="utf-8", newline="") as fh:
                fh.writelines(lines[:keep])
        else:
            os.remove(marker_path)

    mode = "a" if start_rep > 0 else "w"
    executed = 0
    fh = open(out_path, mode, encoding="utf-8", newline="")

    def emit(rep: int, results: list[RunResult]) -> None:
        nonlocal executed
        for r in results:
            fh.write(r.csv_row(model.name, seed) + "\n")
        fh.flush()
        executed += 1
        _write_marker(marker_path, signature, rep + 1)

    try:
        if start_rep == 0:
            fh.write(",".join(RESULT_COLUMNS) + "\n")
        reps = range(start_rep, n)
        if threads > 1 and len(reps) > 1:
            chunk = max(1, math.ceil(len(reps) / (threads * 8)))
            pool = ProcessPoolExecutor(
                max_workers=threads,
                initializer=_init_worker,
                initargs=(model, seed, afs, weights, fraction_range, nb_threshold),
            )
            with pool:
                stream = pool.map(_run_rep_worker, reps, chunksize=chunk)
                for rep, results in zip(reps, stream):
                    emit(rep, results)
        else:
            for rep in reps:
                emit(rep, run_repetition(
                    model, rep, seed, afs, weights, fraction_range, nb_threshold
                ))
    finally:
        fh.close()
    if os.path.exists(marker_path):
        os.remove(marker_path)
    return executed


def _write_marker(marker_path: str, signature: dict, next_rep: int) -> None:
    tmp = marker_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump({"signature": signature, "next_rep": next_rep}, fh)
    os.replace(tmp, marker_path)
