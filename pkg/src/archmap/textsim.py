"""Text-similarity attractions: vector-space cosine and latent semantic
indexing over module documents.

The vector space uses raw term frequencies normalized by each document's
maximum frequency (no TF-IDF). The LSI variant builds a raw-frequency
term-by-module matrix, truncates its SVD at rank = number of modules
(shrunk past zero singular values), folds the orphan query into the
reduced space and compares against the module rows there.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Optional

import numpy as np

from .cda import cda_hypothetical_terms, cda_module_terms
from .model import AttractionVector, MappingState, SystemModel
from .textgen import TermDoc, entity_documents, module_document

_RANK_TOLERANCE = 1e-12


class Vocabulary:
    """Ordered distinct terms with O(1) index lookup."""

    def __init__(self, terms: Iterable[str]):
        seen: dict[str, int] = {}
        for t in terms:
            if t not in seen:
                seen[t] = len(seen)
        self._index = seen
        self.terms = tuple(seen)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index(self, term: str) -> int:
        return self._index[term]

    def get(self, term: str) -> Optional[int]:
        return self._index.get(term)


def _counts_of(doc) -> Counter:
    return doc.terms if isinstance(doc, TermDoc) else doc


def tf_maxnorm_vector(doc, vocab: Vocabulary) -> np.ndarray:
    """Term frequencies divided by the document's own maximum frequency.

    Terms outside the vocabulary are ignored; an empty document (or one
    sharing no term with the vocabulary) yields the zero vector.
    """
    counts = _counts_of(doc)
    vec = np.zeros(len(vocab))
    if not counts:
        return vec
    max_tf = max(counts.values())
    for term, count in counts.items():
        i = vocab.get(term)
        if i is not None:
            vec[i] = count / max_tf
    return vec


def tf_vector(doc, vocab: Vocabulary) -> np.ndarray:
    """Raw term-frequency vector over the vocabulary."""
    counts = _counts_of(doc)
    vec = np.zeros(len(vocab))
    for term, count in counts.items():
        i = vocab.get(term)
        if i is not None:
            vec[i] = count
    return vec


def cosine(u, v) -> float:
    """u.v / (|u||v|); 0 if either norm is 0. In [0, 1] for nonnegative input."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def build_term_matrix(module_docs: dict[str, TermDoc], vocab: Vocabulary) -> np.ndarray:
    """Raw term frequencies; rows = vocabulary terms, columns = modules."""
    matrix = np.zeros((len(vocab), len(module_docs)))
    for j, doc in enumerate(module_docs.values()):
        for term, count in _counts_of(doc).items():
            i = vocab.get(term)
            if i is not None:
                matrix[i, j] = count
    return matrix


def svd(matrix: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best rank-k factorization (U_k, s_k, V_k) with A ~ U_k diag(s_k) V_k^T.

    s_k is the nonincreasing vector of singular values; U_k and V_k are
    column-orthonormal. Raises on k out of range; LAPACK non-convergence
    surfaces as numpy.linalg.LinAlgError.
    """
    matrix = np.asarray(matrix, dtype=float)
    if k < 0 or k > min(matrix.shape):
        raise ValueError(f"rank {k} out of range for shape {matrix.shape}")
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    return u[:, :k], s[:k], vt[:k].T


def _module_docs(model: SystemModel, state: MappingState, use_cda: bool) -> dict[str, TermDoc]:
    cda_docs = cda_module_terms(model, state) if use_cda else None
    return {
        m: module_document(m, state, model, cda_docs[m] if cda_docs else None)
        for m in model.architecture.modules
    }


class IrScorer:
    """Cosine attraction of orphans against max-TF-normalized module documents.

    Works directly on term multisets; this equals the vector computation
    over any vocabulary containing both documents' terms, because absent
    terms contribute zero to the dot product and each document's norm only
    involves its own terms.
    """

    def __init__(self, model: SystemModel, state: MappingState, use_cda: bool = False):
        self.model = model
        self.state = state
        self.use_cda = use_cda
        self.modules = model.architecture.modules
        self._entity_docs = entity_documents(model)
        self._mod_vec: dict[str, dict[str, float]] = {}
        self._mod_norm: dict[str, float] = {}
        for m, doc in _module_docs(model, state, use_cda).items():
            counts = doc.terms
            if counts:
                max_tf = max(counts.values())
                vec = {t: c / max_tf for t, c in counts.items()}
            else:
                vec = {}
            self._mod_vec[m] = vec
            self._mod_norm[m] = math.sqrt(sum(v * v for v in vec.values()))

    def orphans(self) -> list[str]:
        return self.state.unmapped_ids(self.model)

    def attractions(self, orphan: str) -> np.ndarray:
        base = self._entity_docs[orphan]
        values = np.zeros(len(self.modules))
        for i, m in enumerate(self.modules):
            if self.use_cda:
                doc = base.copy()
                doc.update(cda_hypothetical_terms(orphan, m, self.model, self.state).terms)
            else:
                doc = base
            values[i] = self._cosine_against(doc, m)
        return values

    def _cosine_against(self, counts: Counter, module: str) -> float:
        mod_norm = self._mod_norm[module]
        if not counts or mod_norm == 0.0:
            return 0.0
        mod_vec = self._mod_vec[module]
        max_tf = max(counts.values())
        dot = 0.0
        sq = 0.0
        for term, count in counts.items():
            v = count / max_tf
            sq += v * v
            mv = mod_vec.get(term)
            if mv is not None:
                dot += v * mv
        return dot / (math.sqrt(sq) * mod_norm)


class LsiScorer:
    """Truncated-SVD attraction: fold each orphan query into the reduced
    document space and compare against module rows by cosine."""

    def __init__(self, model: SystemModel, state: MappingState, use_cda: bool = False):
        self.model = model
        self.state = state
        self.use_cda = use_cda
        self.modules = model.architecture.modules
        self._entity_docs = entity_documents(model)
        docs = _module_docs(model, state, use_cda)
        self.vocab = Vocabulary(t for doc in docs.values() for t in doc.terms)
        matrix = build_term_matrix(docs, self.vocab)
        n_modules = len(self.modules)
        if min(matrix.shape) == 0:
            self.k = 0
        else:
            u, s, vt = np.linalg.svd(matrix, full_matrices=False)
            nonzero = int(np.sum(s > _RANK_TOLERANCE * s[0])) if s[0] > 0 else 0
            self.k = min(n_modules, nonzero)
            self._u = u[:, : self.k]
            self._s = s[: self.k]
            self._v = vt[: self.k].T  # rows = module documents in reduced space

    def orphans(self) -> list[str]:
        return self.state.unmapped_ids(self.model)

    def _fold_in(self, counts: Counter) -> Optional[np.ndarray]:
        rows = []
        vals = []
        for term, count in counts.items():
            i = self.vocab.get(term)
            if i is not None:
                rows.append(i)
                vals.append(count)
        if not rows:
            return None
        return (self._u[rows].T @ np.asarray(vals, dtype=float)) / self._s

    def attractions(self, orphan: str) -> np.ndarray:
        values = np.zeros(len(self.modules))
        if self.k == 0:
            return values
        base = self._entity_docs[orphan]
        for i, m in enumerate(self.modules):
            if self.use_cda:
                doc = base.copy()
                doc.update(cda_hypothetical_terms(orphan, m, self.model, self.state).terms)
            else:
                doc = base
            query = self._fold_in(doc)
            if query is not None:
                values[i] = cosine(query, self._v[i])
        return values


def ir_attract(orphan: str, model: SystemModel, state: MappingState,
               use_cda: bool = False) -> AttractionVector:
    if state.is_mapped(orphan):
        raise ValueError(f"entity {orphan!r} is already mapped")
    return AttractionVector(orphan, IrScorer(model, state, use_cda).attractions(orphan))


def lsi_attract(orphan: str, model: SystemModel, state: MappingState,
                use_cda: bool = False) -> AttractionVector:
    if state.is_mapped(orphan):
        raise ValueError(f"entity {orphan!r} is already mapped")
    return AttractionVector(orphan, LsiScorer(model, state, use_cda).attractions(orphan))
