"""Multinomial naive Bayes attraction.

Trained on one document per module with term-occurrence counts: a term
counts once per mapped entity containing it, once if the module name
produces it, and once per distinct synthesized dependency token. Laplace
smoothing with alpha = 1, uniform class priors (one training document per
class), and all probability math in log space.

Without dependency tokens the attraction vector is the posterior and sums
to one. With them, each module is scored by a separate hypothesis document
(the orphan's terms plus the tokens it would produce if mapped there), so
the attraction values are posteriors from different classifications and
need not sum to one.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .cda import cda_hypothetical_terms, cda_module_terms
from .model import AttractionVector, MappingState, SystemModel
from .textgen import TermDoc, entity_documents, module_name_terms
from .textsim import Vocabulary


@dataclass
class NbModel:
    vocabulary: Vocabulary
    modules: tuple[str, ...]
    log_cond: np.ndarray   # |V| x |M|, log P(term | module)
    log_prior: np.ndarray  # |M|, uniform


def build_nb_training_docs(model: SystemModel, state: MappingState,
                           use_cda: bool = False) -> dict[str, TermDoc]:
    """Occurrence-collapsed module documents for training."""
    docs = entity_documents(model)
    cda_docs = cda_module_terms(model, state) if use_cda else None
    out: dict[str, TermDoc] = {}
    for module in model.architecture.modules:
        counts: Counter = Counter()
        counts.update(set(module_name_terms(module)))
        for eid in state.entities_of(module):
            counts.update(set(docs[eid]))
        if cda_docs is not None:
            counts.update(set(cda_docs[module].terms))
        out[module] = TermDoc(owner=module, terms=counts)
    return out


def train_nb(module_docs: dict[str, TermDoc]) -> NbModel:
    """Laplace-smoothed conditionals from the given per-module counts."""
    if not module_docs:
        raise ValueError("need at least one module document")
    modules = tuple(module_docs)
    vocab = Vocabulary(t for doc in module_docs.values() for t in doc.terms)
    if len(vocab) == 0:
        raise ValueError("empty vocabulary: nothing to learn from")
    counts = np.zeros((len(vocab), len(modules)))
    for j, module in enumerate(modules):
        for term, count in module_docs[module].terms.items():
            counts[vocab.index(term), j] = count
    totals = counts.sum(axis=0)
    log_cond = np.log(counts + 1.0) - np.log(totals + len(vocab))
    log_prior = np.full(len(modules), -np.log(len(modules)))
    return NbModel(vocabulary=vocab, modules=modules, log_cond=log_cond, log_prior=log_prior)


def _posterior(nb: NbModel, term_indices) -> np.ndarray:
    scores = nb.log_prior.copy()
    if term_indices:
        scores = scores + nb.log_cond[term_indices].sum(axis=0)
    scores -= scores.max()
    probs = np.exp(scores)
    return probs / probs.sum()


def classify(nb: NbModel, doc) -> np.ndarray:
    """Posterior over modules for a document.

    Occurrence semantics: duplicate terms count once; terms outside the
    vocabulary are ignored.
    """
    counts = doc.terms if isinstance(doc, TermDoc) else doc
    indices = [i for i in (nb.vocabulary.get(t) for t in set(counts)) if i is not None]
    return _posterior(nb, indices)


class NbScorer:
    """Attractions for many orphans against one trained model."""

    def __init__(self, model: SystemModel, state: MappingState, use_cda: bool = False):
        self.model = model
        self.state = state
        self.use_cda = use_cda
        self.modules = model.architecture.modules
        self._entity_docs = entity_documents(model)
        self.nb = train_nb(build_nb_training_docs(model, state, use_cda))

    def orphans(self) -> list[str]:
        return self.state.unmapped_ids(self.model)

    def attractions(self, orphan: str) -> np.ndarray:
        base = self._entity_docs[orphan]
        if not self.use_cda:
            return classify(self.nb, base)
        values = np.zeros(len(self.modules))
        base_indices = [
            i for i in (self.nb.vocabulary.get(t) for t in set(base)) if i is not None
        ]
        for i, m in enumerate(self.modules):
            hyp = cda_hypothetical_terms(orphan, m, self.model, self.state)
            extra = set(hyp.terms) - set(base)
            indices = base_indices + [
                j for j in (self.nb.vocabulary.get(t) for t in extra) if j is not None
            ]
            values[i] = _posterior(self.nb, indices)[i]
        return values


def nb_attract(orphan: str, model: SystemModel, state: MappingState,
               use_cda: bool = False) -> AttractionVector:
    if state.is_mapped(orphan):
        raise ValueError(f"entity {orphan!r} is already mapped")
    return AttractionVector(orphan, NbScorer(model, state, use_cda).attractions(orphan))
