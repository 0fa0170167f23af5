"""Genetic search for per-system dependency-type weights.

Fitness of a genome (11 weights in [0, 1], one per dependency type) is the
mean F1 of the dependency-counting function over a fixed panel of seeded
initial mappings spanning initial fractions 0.1 through 0.9, with phi and
omega pinned at 0.5. The panel is generated once per optimization so all
genomes face identical conditions. Found weights are rounded to the
five-level scale {0, 0.25, 0.5, 0.75, 1} before use in experiments,
mimicking how a human expert would set them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .count_attract import CountParams, WeightProfile
from .experiment import compute_metrics, generate_initial_mapping
from .hugme import Af, AfConfig, run_hugme
from .model import MappingState, SystemModel

GENOME_LENGTH = 11
DEFAULT_PANEL_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class GaSettings:
    population: int = 32
    tournament: int = 3
    crossover_p: float = 0.5
    mutation_rate: float = 0.2
    mutation_sigma: float = 0.1
    elitism: int = 1


def round_weights(genome) -> WeightProfile:
    """Round each weight to the nearest quarter; exact midpoints round up."""
    if isinstance(genome, WeightProfile):
        values = np.asarray(genome.as_values())
    else:
        values = np.asarray(genome, dtype=float)
    rounded = np.floor(values * 4 + 0.5) / 4
    return WeightProfile.from_values(np.clip(rounded, 0.0, 1.0))


def _build_panel(model: SystemModel, fractions: Sequence[float],
                 seed_seq: np.random.SeedSequence) -> list[MappingState]:
    n = len(model.entities)
    lo, hi = len(model.architecture.modules), n - 1
    panel = []
    for child, fraction in zip(seed_seq.spawn(len(fractions)), fractions):
        size = min(max(int(round(fraction * n)), lo), hi)
        rng = np.random.default_rng(child)
        panel.append(generate_initial_mapping(model, rng, size=size))
    return panel


def panel_fitness(model: SystemModel, panel: Sequence[MappingState],
                  genome, phi: float = 0.5, omega: float = 0.5) -> float:
    """Mean F1 of the counting function with the genome's weights."""
    params = CountParams(phi=phi, omega=omega, weights=WeightProfile.from_values(genome))
    cfg = AfConfig(af=Af.COUNT, count_params=params)
    total = 0.0
    for initial in panel:
        final, _ = run_hugme(model, initial, cfg)
        total += compute_metrics(final, initial, model)[2]
    return total / len(panel)


def optimize_weights(
    model: SystemModel,
    budget: int,
    seed: int,
    settings: GaSettings = GaSettings(),
    panel_fractions: Sequence[float] = DEFAULT_PANEL_FRACTIONS,
    phi: float = 0.5,
    omega: float = 0.5,
) -> tuple[np.ndarray, list[tuple[int, float]]]:
    """Return (best genome, per-generation best-fitness trace).

    budget counts genome evaluations; generations = budget // population.
    Elitism keeps the best genome alive, so the trace never decreases.
    """
    if budget < settings.population:
        raise ValueError("budget must cover at least one population")
    generations = budget // settings.population
    root = np.random.SeedSequence(seed)
    ga_seq, panel_seq = root.spawn(2)
    panel = _build_panel(model, panel_fractions, panel_seq)
    rng = np.random.default_rng(ga_seq)

    cache: dict[bytes, float] = {}

    def fitness(genome: np.ndarray) -> float:
        key = genome.tobytes()
        if key not in cache:
            cache[key] = panel_fitness(model, panel, genome, phi, omega)
        return cache[key]

    population = rng.uniform(0.0, 1.0, size=(settings.population, GENOME_LENGTH))
    best_genome: Optional[np.ndarray] = None
    best_fitness = -np.inf
    trace: list[tuple[int, float]] = []

    for gen in range(generations):
        scores = np.array([fitness(g) for g in population])
        gen_best = int(scores.argmax())
        if scores[gen_best] > best_fitness:
            best_fitness = float(scores[gen_best])
            best_genome = population[gen_best].copy()
        trace.append((gen, best_fitness))
        if gen == generations - 1:
            break

        def pick_parent() -> np.ndarray:
            contenders = rng.integers(0, settings.population, size=settings.tournament)
            return population[contenders[scores[contenders].argmax()]]

        next_pop = [best_genome.copy() for _ in range(settings.elitism)]
        while len(next_pop) < settings.population:
            p1, p2 = pick_parent(), pick_parent()
            take_p2 = rng.random(GENOME_LENGTH) < settings.crossover_p
            child = np.where(take_p2, p2, p1)
            mutate = rng.random(GENOME_LENGTH) < settings.mutation_rate
            if mutate.any():
                child = child.copy()
                child[mutate] += rng.normal(0.0, settings.mutation_sigma, mutate.sum())
            next_pop.append(np.clip(child, 0.0, 1.0))
        population = np.array(next_pop)

    assert best_genome is not None
    return best_genome, trace
