"""Synthesized dependency terms.

Every dependency between two mapped entities is lifted to the module level
as an opaque token `<SrcModule>-<DepType>-<TgtModule>`; the token is added
to the documents of both end modules, once per edge multiplicity. For an
orphan, hypothetical tokens are produced as if it were mapped to a given
module. These tokens never pass through the text pipeline: no splitting,
stemming, or length filtering.
"""

from __future__ import annotations

from collections import Counter

from .model import DependencyType, MappingState, SystemModel
from .textgen import TermDoc


def cda_term(source_module: str, dep_type: DependencyType, target_module: str) -> str:
    return f"{source_module}-{dep_type.value}-{target_module}"


def cda_module_terms(model: SystemModel, state: MappingState) -> dict[str, TermDoc]:
    """Dependency tokens per module for every fully mapped edge.

    An intra-module edge contributes its `A-T-A` token twice to A's
    document (once as source holder, once as target holder).
    """
    docs = {m: Counter() for m in model.architecture.modules}
    for dep in model.dependencies:
        src_mod = state.module_of(dep.source)
        tgt_mod = state.module_of(dep.target)
        if src_mod is None or tgt_mod is None:
            continue
        term = cda_term(src_mod, dep.type, tgt_mod)
        docs[src_mod][term] += dep.count
        docs[tgt_mod][term] += dep.count
    return {m: TermDoc(owner=m, terms=c) for m, c in docs.items()}


def cda_hypothetical_terms(
    orphan: str, module: str, model: SystemModel, state: MappingState
) -> TermDoc:
    """Tokens of the orphan's mapped-neighbor edges as if it sat in `module`."""
    if state.is_mapped(orphan):
        raise ValueError(f"entity {orphan!r} is already mapped")
    if module not in model.architecture.modules:
        raise ValueError(f"module {module!r} is not declared in the architecture")
    counts: Counter = Counter()
    for other, dep_type, count, outgoing in model.adjacency().get(orphan, ()):
        other_mod = state.module_of(other)
        if other_mod is None:
            continue
        if outgoing:
            term = cda_term(module, dep_type, other_mod)
        else:
            term = cda_term(other_mod, dep_type, module)
        counts[term] += count
    return TermDoc(owner=orphan, terms=counts)
