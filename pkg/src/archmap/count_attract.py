"""Dependency-counting attraction.

The attraction of an orphan to a module is its total weighted dependency
mass toward mapped entities, minus a penalty for every dependency that
would cross module boundaries under the hypothesis that the orphan joins
that module: a convergent crossing costs its mass times phi, a divergent
crossing costs its full mass. Orphan eligibility is gated by the omega
ratio of mapped-neighbor mass to total mass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .model import DependencyType, MappingState, SystemModel

COARSE_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class WeightProfile:
    """One weight in [0, 1] per dependency type."""

    weights: Mapping[DependencyType, float]

    def __post_init__(self):
        missing = [t.value for t in DependencyType if t not in self.weights]
        if missing:
            raise ValueError(f"weight profile misses type(s): {', '.join(missing)}")
        extra = [k for k in self.weights if not isinstance(k, DependencyType)]
        if extra:
            raise ValueError(f"weight profile has non-DependencyType key(s): {extra}")
        bad = {t.value: w for t, w in self.weights.items() if not 0.0 <= w <= 1.0}
        if bad:
            raise ValueError(f"weights outside [0, 1]: {bad}")
        object.__setattr__(self, "weights", dict(self.weights))

    def of(self, dep_type: DependencyType) -> float:
        return self.weights[dep_type]

    def is_coarse(self) -> bool:
        return all(w in COARSE_LEVELS for w in self.weights.values())

    @classmethod
    def unit(cls) -> "WeightProfile":
        return cls({t: 1.0 for t in DependencyType})

    @classmethod
    def from_values(cls, values) -> "WeightProfile":
        """11 floats in DependencyType declaration order."""
        values = list(values)
        if len(values) != len(DependencyType):
            raise ValueError(f"expected {len(DependencyType)} weights, got {len(values)}")
        return cls(dict(zip(DependencyType, map(float, values))))

    def as_values(self) -> tuple[float, ...]:
        return tuple(self.weights[t] for t in DependencyType)

    def to_json_dict(self) -> dict[str, float]:
        return {t.value: self.weights[t] for t in DependencyType}

    @classmethod
    def from_json_dict(cls, data: Mapping[str, float]) -> "WeightProfile":
        unknown = set(data) - {t.value for t in DependencyType}
        if unknown:
            raise ValueError(f"unknown dependency type(s) in weight map: {sorted(unknown)}")
        return cls({t: float(data[t.value]) for t in DependencyType if t.value in data})

    @classmethod
    def load(cls, path) -> "WeightProfile":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class CountParams:
    phi: float = 1.0
    omega: float = 0.0
    weights: WeightProfile = field(default_factory=WeightProfile.unit)

    def __post_init__(self):
        if not 0.0 <= self.phi <= 1.0:
            raise ValueError(f"phi must be in [0, 1], got {self.phi}")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega must be in [0, 1], got {self.omega}")


def mapped_mass_ratio(entity_id: str, model: SystemModel, state: MappingState,
                      weights: WeightProfile) -> float:
    """Weighted mass of edges to mapped entities over total weighted mass;
    zero when the entity has no (weighted) dependencies at all."""
    total = 0.0
    mapped = 0.0
    for other, dep_type, count, _ in model.adjacency().get(entity_id, ()):
        mass = weights.of(dep_type) * count
        total += mass
        if state.is_mapped(other):
            mapped += mass
    if total == 0.0:
        return 0.0
    return mapped / total


def filter_orphans_omega(model: SystemModel, state: MappingState,
                         params: CountParams) -> list[str]:
    """Unmapped entities whose mapped-mass ratio reaches omega (inclusive,
    so omega = 0 admits every unmapped entity)."""
    return [
        eid
        for eid in state.unmapped_ids(model)
        if mapped_mass_ratio(eid, model, state, params.weights) >= params.omega
    ]


class CountScorer:
    """Attraction vectors for many orphans against one frozen mapping."""

    def __init__(self, model: SystemModel, state: MappingState, params: CountParams):
        self.model = model
        self.state = state
        self.params = params
        self.modules = model.architecture.modules
        self._allowed = model.architecture.allowed

    def orphans(self) -> list[str]:
        return filter_orphans_omega(self.model, self.state, self.params)

    def attractions(self, orphan: str) -> np.ndarray:
        out_mass: dict[str, float] = {}
        in_mass: dict[str, float] = {}
        overall = 0.0
        for other, dep_type, count, outgoing in self.model.adjacency().get(orphan, ()):
            other_mod = self.state.module_of(other)
            if other_mod is None:
                continue
            mass = self.params.weights.of(dep_type) * count
            overall += mass
            bucket = out_mass if outgoing else in_mass
            bucket[other_mod] = bucket.get(other_mod, 0.0) + mass
        phi = self.params.phi
        values = np.empty(len(self.modules))
        for i, mod in enumerate(self.modules):
            penalty = 0.0
            for target, mass in out_mass.items():
                if target != mod:
                    penalty += mass * (phi if (mod, target) in self._allowed else 1.0)
            for source, mass in in_mass.items():
                if source != mod:
                    penalty += mass * (phi if (source, mod) in self._allowed else 1.0)
            values[i] = overall - penalty
        return values


def count_attract(orphan: str, module: str, model: SystemModel,
                  state: MappingState, params: CountParams) -> float:
    """Attraction of one orphan to one module."""
    if state.is_mapped(orphan):
        raise ValueError(f"entity {orphan!r} is already mapped")
    scorer = CountScorer(model, state, params)
    return float(scorer.attractions(orphan)[model.architecture.index_of(module)])
