"""Turn raw code names into term documents.

Pipeline: split identifiers at camelCase / kebab-case / snake_case
boundaries (keeping the original token), lowercase, Porter-stem, then drop
terms shorter than three characters. Entity documents union the terms of
all raw names; module documents union the documents of the entities mapped
to the module plus the module-name terms and, optionally, synthesized
dependency terms.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .model import Entity, MappingState, SystemModel
from .porter import stem

MIN_TERM_LENGTH = 3

_SEPARATORS = frozenset("-_")


@dataclass
class TermDoc:
    """A multiset of terms owned by an entity id or a module name."""

    owner: str
    terms: Counter = field(default_factory=Counter)

    def total(self) -> int:
        return sum(self.terms.values())

    def distinct(self) -> set[str]:
        return set(self.terms)


@lru_cache(maxsize=65536)
def split_identifier(raw: str) -> tuple[str, ...]:
    """Split at case/`-`/`_` boundaries; the unsplit original is kept.

    A boundary sits before every uppercase letter, so acronym runs split
    into single letters (the length filter drops those later). Digits and
    any other characters stay inside their token.
    """
    if not raw:
        return ()
    parts: list[str] = []
    current: list[str] = []
    for ch in raw:
        if ch in _SEPARATORS:
            if current:
                parts.append("".join(current))
                current = []
        elif ch.isupper():
            if current:
                parts.append("".join(current))
            current = [ch]
        else:
            current.append(ch)
    if current:
        parts.append("".join(current))
    if parts == [raw]:
        return (raw,)
    return (raw, *parts)


@lru_cache(maxsize=65536)
def make_terms(raw: str) -> tuple[str, ...]:
    """split -> lowercase -> stem -> keep stems of length >= 3."""
    terms = []
    for token in split_identifier(raw):
        stemmed = stem(token.lower())
        if len(stemmed) >= MIN_TERM_LENGTH:
            terms.append(stemmed)
    return tuple(terms)


def entity_document(entity: Entity) -> TermDoc:
    """Multiset union of the terms of every raw name of the entity."""
    counts: Counter = Counter()
    for raw in entity.raw_names():
        counts.update(make_terms(raw))
    return TermDoc(owner=entity.id, terms=counts)


def entity_documents(model: SystemModel) -> dict[str, Counter]:
    """Term counts for every entity, computed once per model instance."""
    cache = getattr(model, "_entity_term_cache", None)
    if cache is None:
        cache = {eid: entity_document(e).terms for eid, e in model.entities.items()}
        model._entity_term_cache = cache
    return cache


def module_name_terms(module: str) -> Counter:
    return Counter(make_terms(module))


def module_document(
    module: str,
    state: MappingState,
    model: SystemModel,
    cda_terms: Optional[TermDoc] = None,
) -> TermDoc:
    """Terms of all entities currently mapped to the module, the module-name
    terms (added once, not per entity), and optional dependency terms."""
    if module not in model.architecture.modules:
        raise ValueError(f"module {module!r} is not declared in the architecture")
    docs = entity_documents(model)
    counts = module_name_terms(module)
    for eid in state.entities_of(module):
        counts.update(docs[eid])
    if cda_terms is not None:
        counts.update(cda_terms.terms)
    return TermDoc(owner=module, terms=counts)
