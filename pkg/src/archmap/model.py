"""Domain model: source-code entities, typed dependencies, intended architecture,
ground-truth mapping, and the JSON model-file loader/validator.

A loaded SystemModel is immutable by convention and safe to share across
workers; MappingState is the only mutable piece and belongs to a single run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np


class DependencyType(Enum):
    """The closed set of 11 dependency kinds between source-code entities."""

    EXTENDS = "Extends"
    IMPLEMENTS = "Implements"
    FIELD = "Field"
    ARGUMENT = "Argument"
    RETURNS = "Returns"
    LOCAL_VAR = "LocalVar"
    METHOD_CALL = "MethodCall"
    CONSTRUCTOR_CALL = "ConstructorCall"
    OWN_FIELD_USE = "OwnFieldUse"
    FIELD_USE = "FieldUse"
    THROWS = "Throws"


DEPENDENCY_TYPE_NAMES = tuple(t.value for t in DependencyType)

_NAME_KINDS = ("package", "file", "methods", "identifiers", "strings")


class ModelError(Exception):
    """Base class for model loading problems."""


class ModelParseError(ModelError):
    """The file is not syntactically valid (includes line context)."""


class ModelValidationError(ModelError):
    """The parsed file violates model invariants; lists every violation."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__(
            "invalid model (%d violation%s):\n  %s"
            % (len(violations), "" if len(violations) == 1 else "s", "\n  ".join(violations))
        )


@dataclass(frozen=True)
class Entity:
    """A source-code entity and its raw name strings grouped by source kind."""

    id: str
    package: str = ""
    file: str = ""
    methods: tuple[str, ...] = ()
    identifiers: tuple[str, ...] = ()
    strings: tuple[str, ...] = ()

    def raw_names(self) -> Iterable[str]:
        """All raw name strings, every source kind, in a stable order."""
        if self.package:
            yield self.package
        if self.file:
            yield self.file
        yield from self.methods
        yield from self.identifiers
        yield from self.strings


@dataclass(frozen=True)
class Dependency:
    """A typed, directed edge between two entities with a multiplicity count."""

    source: str
    target: str
    type: DependencyType
    count: int = 1


@dataclass(frozen=True)
class ArchitectureModel:
    """Intended modules plus the allowed directed module dependencies.

    Self-pairs (m, m) are implicitly allowed and never stored.
    """

    modules: tuple[str, ...]
    allowed: frozenset[tuple[str, str]]

    def index_of(self, module: str) -> int:
        return self.modules.index(module)

    def is_allowed(self, source_module: str, target_module: str) -> bool:
        if source_module == target_module:
            return True
        return (source_module, target_module) in self.allowed


class Conformance(Enum):
    """Classification of one dependency against an architecture + mapping."""

    INTERNAL = "internal"
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    UNKNOWN = "unknown"


@dataclass
class SystemModel:
    """A complete subject system: entities, dependencies, architecture, ground truth."""

    name: str
    entities: dict[str, Entity]
    dependencies: tuple[Dependency, ...]
    architecture: ArchitectureModel
    ground_truth: dict[str, str]
    # build-once caches; derived from the frozen fields above
    _adjacency: Optional[dict[str, tuple]] = field(
        default=None, repr=False, compare=False
    )

    @property
    def entity_ids(self) -> tuple[str, ...]:
        return tuple(self.entities)

    def dependency_mass(self) -> int:
        """Total dependency count, multiplicities included."""
        return sum(d.count for d in self.dependencies)

    def adjacency(self) -> dict[str, tuple]:
        """Per-entity dependency view: id -> tuple of (other, type, count, is_outgoing)."""
        if self._adjacency is None:
            adj: dict[str, list] = {eid: [] for eid in self.entities}
            for dep in self.dependencies:
                adj[dep.source].append((dep.target, dep.type, dep.count, True))
                adj[dep.target].append((dep.source, dep.type, dep.count, False))
            self._adjacency = {eid: tuple(rows) for eid, rows in adj.items()}
        return self._adjacency


@dataclass
class AttractionVector:
    """Per-orphan attraction values, aligned with the architecture's module list."""

    orphan: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"attraction values for {self.orphan!r} are not all finite")


class Origin(Enum):
    INITIAL = "initial"
    AUTO = "auto"


@dataclass
class Assignment:
    module: str
    origin: Origin


class MappingState:
    """Partial entity -> module assignment; initial entries are immutable.

    Also remembers, per entity, the attraction vector that was current when
    it was auto-mapped (useful for reporting confidence).
    """

    def __init__(self) -> None:
        self._assignment: dict[str, Assignment] = {}
        self.attractions: dict[str, "object"] = {}

    def assign(self, entity_id: str, module: str, origin: Origin = Origin.AUTO) -> None:
        existing = self._assignment.get(entity_id)
        if existing is not None and existing.origin is Origin.INITIAL:
            raise ValueError(f"entity {entity_id!r} has an initial assignment and cannot be remapped")
        self._assignment[entity_id] = Assignment(module, origin)

    def module_of(self, entity_id: str) -> Optional[str]:
        a = self._assignment.get(entity_id)
        return a.module if a is not None else None

    def origin_of(self, entity_id: str) -> Optional[Origin]:
        a = self._assignment.get(entity_id)
        return a.origin if a is not None else None

    def is_mapped(self, entity_id: str) -> bool:
        return entity_id in self._assignment

    def mapped_ids(self) -> list[str]:
        return list(self._assignment)

    def initial_ids(self) -> list[str]:
        return [e for e, a in self._assignment.items() if a.origin is Origin.INITIAL]

    def auto_ids(self) -> list[str]:
        return [e for e, a in self._assignment.items() if a.origin is Origin.AUTO]

    def unmapped_ids(self, model: SystemModel) -> list[str]:
        return [eid for eid in model.entities if eid not in self._assignment]

    def entities_of(self, module: str) -> list[str]:
        return [e for e, a in self._assignment.items() if a.module == module]

    def copy(self) -> "MappingState":
        clone = MappingState()
        clone._assignment = {e: Assignment(a.module, a.origin) for e, a in self._assignment.items()}
        clone.attractions = dict(self.attractions)
        return clone

    def __len__(self) -> int:
        return len(self._assignment)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MappingState):
            return NotImplemented
        return {e: (a.module, a.origin) for e, a in self._assignment.items()} == {
            e: (a.module, a.origin) for e, a in other._assignment.items()
        }


def initial_state(assignment: dict[str, str]) -> MappingState:
    """Build a MappingState whose every entry has origin=initial."""
    state = MappingState()
    for eid, module in assignment.items():
        state.assign(eid, module, Origin.INITIAL)
    return state


def edge_conformance(
    state: MappingState, dep: Dependency, arch: ArchitectureModel
) -> Conformance:
    """Classify one dependency under a (possibly partial) mapping.

    Intra-module dependencies are always internal, whatever the allowed set
    says; a dependency with an unmapped endpoint is unknown.
    """
    src_mod = state.module_of(dep.source)
    tgt_mod = state.module_of(dep.target)
    if src_mod is None or tgt_mod is None:
        return Conformance.UNKNOWN
    if src_mod == tgt_mod:
        return Conformance.INTERNAL
    if (src_mod, tgt_mod) in arch.allowed:
        return Conformance.CONVERGENT
    return Conformance.DIVERGENT


def conformance_counts(state: MappingState, model: SystemModel) -> dict[Conformance, int]:
    """Count dependencies (with multiplicity) per conformance class."""
    counts = {c: 0 for c in Conformance}
    for dep in model.dependencies:
        counts[edge_conformance(state, dep, model.architecture)] += dep.count
    return counts


# ---------------------------------------------------------------------------
# Model file loading / saving
# ---------------------------------------------------------------------------

_TOP_LEVEL_FIELDS = {"name", "entities", "dependencies", "modules", "allowed", "groundTruth"}
_ENTITY_FIELDS = {"id", "names"}
_NAMES_FIELDS = {"package", "file", "methods", "identifiers", "strings"}
_DEP_FIELDS = {"from", "to", "type", "count"}


def _check_str_list(value, where: str, errors: list[str]) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        errors.append(f"{where}: expected a list of strings")
        return ()
    return tuple(value)


def parse_model(data: dict, *, source: str = "<data>") -> SystemModel:
    """Validate a parsed JSON document and build a SystemModel.

    Collects every violation before raising, so one load reports all problems.
    """
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ModelValidationError([f"{source}: top level must be a JSON object"])

    unknown = set(data) - _TOP_LEVEL_FIELDS
    if unknown:
        errors.append(f"unknown top-level field(s): {', '.join(sorted(unknown))}")

    name = data.get("name")
    if not isinstance(name, str) or not name:
        errors.append("field 'name' must be a non-empty string")
        name = ""

    entities: dict[str, Entity] = {}
    for i, raw in enumerate(data.get("entities", [])):
        where = f"entities[{i}]"
        if not isinstance(raw, dict):
            errors.append(f"{where}: expected an object")
            continue
        unknown = set(raw) - _ENTITY_FIELDS
        if unknown:
            errors.append(f"{where}: unknown field(s): {', '.join(sorted(unknown))}")
        eid = raw.get("id")
        if not isinstance(eid, str) or not eid:
            errors.append(f"{where}: 'id' must be a non-empty string")
            continue
        if eid in entities:
            errors.append(f"{where}: duplicate entity id {eid!r}")
            continue
        names = raw.get("names", {})
        if not isinstance(names, dict):
            errors.append(f"{where}: 'names' must be an object")
            names = {}
        unknown = set(names) - _NAMES_FIELDS
        if unknown:
            errors.append(f"{where}.names: unknown field(s): {', '.join(sorted(unknown))}")
        package = names.get("package", "")
        file_name = names.get("file", "")
        if not isinstance(package, str):
            errors.append(f"{where}.names.package: expected a string")
            package = ""
        if not isinstance(file_name, str):
            errors.append(f"{where}.names.file: expected a string")
            file_name = ""
        entities[eid] = Entity(
            id=eid,
            package=package,
            file=file_name,
            methods=_check_str_list(names.get("methods", []), f"{where}.names.methods", errors),
            identifiers=_check_str_list(
                names.get("identifiers", []), f"{where}.names.identifiers", errors
            ),
            strings=_check_str_list(names.get("strings", []), f"{where}.names.strings", errors),
        )

    modules: list[str] = []
    for i, raw in enumerate(data.get("modules", [])):
        where = f"modules[{i}]"
        if not isinstance(raw, dict) or set(raw) != {"name"} or not isinstance(raw.get("name"), str):
            errors.append(f"{where}: expected an object with a single string field 'name'")
            continue
        if raw["name"] in modules:
            errors.append(f"{where}: duplicate module name {raw['name']!r}")
            continue
        modules.append(raw["name"])
    if not modules:
        errors.append("architecture must declare at least one module")

    allowed: set[tuple[str, str]] = set()
    for i, raw in enumerate(data.get("allowed", [])):
        where = f"allowed[{i}]"
        if not isinstance(raw, dict) or set(raw) != {"from", "to"}:
            errors.append(f"{where}: expected an object with fields 'from' and 'to'")
            continue
        src, tgt = raw["from"], raw["to"]
        for end, label in ((src, "from"), (tgt, "to")):
            if end not in modules:
                errors.append(f"{where}: '{label}' references undeclared module {end!r}")
        if src in modules and tgt in modules and src != tgt:
            # (m, m) is implicitly allowed; listing it is tolerated but not stored
            allowed.add((src, tgt))

    dependencies: list[Dependency] = []
    seen_edges: dict[tuple[str, str, DependencyType], int] = {}
    for i, raw in enumerate(data.get("dependencies", [])):
        where = f"dependencies[{i}]"
        if not isinstance(raw, dict):
            errors.append(f"{where}: expected an object")
            continue
        unknown = set(raw) - _DEP_FIELDS
        if unknown:
            errors.append(f"{where}: unknown field(s): {', '.join(sorted(unknown))}")
        src, tgt = raw.get("from"), raw.get("to")
        ok = True
        for end, label in ((src, "from"), (tgt, "to")):
            if end not in entities:
                errors.append(f"{where}: '{label}' references unknown entity {end!r}")
                ok = False
        if src == tgt and src is not None:
            errors.append(f"{where}: self-dependency {src!r} -> {tgt!r} is not allowed")
            ok = False
        type_name = raw.get("type")
        if type_name not in DEPENDENCY_TYPE_NAMES:
            errors.append(f"{where}: unknown dependency type {type_name!r}")
            ok = False
        count = raw.get("count", 1)
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            errors.append(f"{where}: 'count' must be a positive integer")
            ok = False
        if not ok:
            continue
        key = (src, tgt, DependencyType(type_name))
        if key in seen_edges:
            # multiplicity lives in 'count'; merge repeated edges
            seen_edges[key] += count
        else:
            seen_edges[key] = count
    dependencies = [Dependency(s, t, ty, c) for (s, t, ty), c in seen_edges.items()]

    ground_truth: dict[str, str] = {}
    for i, raw in enumerate(data.get("groundTruth", [])):
        where = f"groundTruth[{i}]"
        if not isinstance(raw, dict) or set(raw) != {"entity", "module"}:
            errors.append(f"{where}: expected an object with fields 'entity' and 'module'")
            continue
        eid, module = raw["entity"], raw["module"]
        if eid not in entities:
            errors.append(f"{where}: unknown entity {eid!r}")
            continue
        if module not in modules:
            errors.append(f"{where}: undeclared module {module!r}")
            continue
        if eid in ground_truth:
            errors.append(f"{where}: duplicate ground-truth entry for {eid!r}")
            continue
        ground_truth[eid] = module

    missing = [eid for eid in entities if eid not in ground_truth]
    if missing:
        shown = ", ".join(repr(m) for m in missing[:5])
        more = "" if len(missing) <= 5 else f" (+{len(missing) - 5} more)"
        errors.append(f"ground truth is not total; unmapped: {shown}{more}")

    if errors:
        raise ModelValidationError(errors)

    return SystemModel(
        name=name,
        entities=entities,
        dependencies=tuple(dependencies),
        architecture=ArchitectureModel(modules=tuple(modules), allowed=frozenset(allowed)),
        ground_truth=ground_truth,
    )


def load_model(path) -> SystemModel:
    """Load and validate a UTF-8 JSON model file."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelParseError(
                f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return parse_model(data, source=str(path))


def model_to_dict(model: SystemModel) -> dict:
    """Serialize back to the model-file dictionary layout."""
    return {
        "name": model.name,
        "entities": [
            {
                "id": e.id,
                "names": {
                    "package": e.package,
                    "file": e.file,
                    "methods": list(e.methods),
                    "identifiers": list(e.identifiers),
                    "strings": list(e.strings),
                },
            }
            for e in model.entities.values()
        ],
        "dependencies": [
            {"from": d.source, "to": d.target, "type": d.type.value, "count": d.count}
            for d in model.dependencies
        ],
        "modules": [{"name": m} for m in model.architecture.modules],
        "allowed": [{"from": s, "to": t} for s, t in sorted(model.architecture.allowed)],
        "groundTruth": [{"entity": e, "module": m} for e, m in model.ground_truth.items()],
    }


def save_model(model: SystemModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
