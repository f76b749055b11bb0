"""
mindblend.text — tokenization, TF-IDF and dense embeddings.

    tf-idf(t, d, D) = tf(t, d) * idf(t, D)
    tf(t, d)        = count(t in d) / len(d)
    idf(t, D)       = ln(N / df(t))

No idf smoothing and no stopword list: terms present in every document get
idf 0 and drop out. Document vectors are L2-normalized so cosine reduces to
a dot product; empty documents get the zero vector.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from exceptions import (
    DatasetValidationError,
    DimensionMismatchError,
    ParseError,
    UnknownTermError,
)
from logger import get_logger
from mindblend.dataset import Catalog
from mindblend.io import read_text, split_lines

logger = get_logger(__name__)

_TOKEN_PATTERN = re.compile(r"[^\W_]+", re.UNICODE)


# ─── TYPES ────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class TokenizedDoc:
    article_id: str
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Sorted (index, weight) pairs over a vocabulary of size dim."""
    indices: np.ndarray
    weights: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        if idx.shape != w.shape or idx.ndim != 1:
            raise ValueError("indices and weights must be 1-d arrays of equal length")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.dim):
            raise ValueError("indices must be strictly increasing and within [0, dim)")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "indices", _readonly(idx))
        object.__setattr__(self, "weights", _readonly(w))

    @classmethod
    def zeros(cls, dim: int) -> "SparseVector":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), dim)

    @classmethod
    def from_mapping(cls, entries: Mapping[int, float], dim: int) -> "SparseVector":
        keys = sorted(k for k, v in entries.items() if v != 0.0)
        return cls(
            np.array(keys, dtype=np.int64),
            np.array([entries[k] for k in keys], dtype=np.float64),
            dim,
        )

    def __len__(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.weights))

    def get(self, index: int) -> float:
        pos = int(np.searchsorted(self.indices, index))
        if pos < self.indices.size and self.indices[pos] == index:
            return float(self.weights[pos])
        return 0.0

    def dot(self, other: "SparseVector") -> float:
        if self.dim != other.dim:
            raise DimensionMismatchError(self.dim, other.dim)
        _, left, right = np.intersect1d(
            self.indices, other.indices, assume_unique=True, return_indices=True
        )
        return float(np.dot(self.weights[left], other.weights[right]))

    def scaled(self, factor: float) -> "SparseVector":
        return SparseVector(self.indices, self.weights * factor, self.dim)

    def normalized(self) -> "SparseVector":
        n = self.norm()
        if n == 0.0:
            return SparseVector.zeros(self.dim)
        return self.scaled(1.0 / n)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim, dtype=np.float64)
        dense[self.indices] = self.weights
        return dense


def mean_vector(vectors: Sequence[SparseVector], dim: int) -> SparseVector:
    """Component-wise mean; the zero vector for an empty sequence."""
    if not vectors:
        return SparseVector.zeros(dim)
    indices = np.concatenate([v.indices for v in vectors])
    weights = np.concatenate([v.weights for v in vectors])
    unique, inverse = np.unique(indices, return_inverse=True)
    sums = np.bincount(inverse, weights=weights, minlength=unique.size)
    return SparseVector(unique, sums / len(vectors), dim)


@dataclass(frozen=True, eq=False)
class TfidfModel:
    """Fitted TF-IDF state. Immutable; safe for concurrent lookups."""
    vocabulary: Mapping[str, int]
    idf: np.ndarray
    doc_vectors: Mapping[str, SparseVector]
    doc_norms: Mapping[str, float] = field(default_factory=dict)
    n_documents: int = 0

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    def vector(self, article_id: str) -> Optional[SparseVector]:
        """L2-normalized document vector, or None for an unknown article."""
        return self.doc_vectors.get(article_id)

    def raw_vector(self, article_id: str) -> Optional[SparseVector]:
        """Document vector before normalization (plain tf * idf weights)."""
        vec = self.doc_vectors.get(article_id)
        if vec is None:
            return None
        return vec.scaled(self.doc_norms.get(article_id, 0.0))

    def weight(self, article_id: str, term: str, normalized: bool = True) -> float:
        vec = self.vector(article_id) if normalized else self.raw_vector(article_id)
        if vec is None or term not in self.vocabulary:
            return 0.0
        return vec.get(self.vocabulary[term])

    def transform(self, text: str) -> SparseVector:
        """Vectorize unseen text; out-of-vocabulary terms are dropped."""
        tokens = tokenize(text)
        if not tokens:
            return SparseVector.zeros(self.dim)
        counts = Counter(tokens)
        entries = {
            self.vocabulary[t]: (c / len(tokens)) * float(self.idf[self.vocabulary[t]])
            for t, c in counts.items()
            if t in self.vocabulary
        }
        return SparseVector.from_mapping(entries, self.dim).normalized()


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """Precomputed dense article vectors of one dimension."""
    dim: int
    vectors: Mapping[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, article_id: object) -> bool:
        return article_id in self.vectors

    def get(self, article_id: str) -> Optional[np.ndarray]:
        return self.vectors.get(article_id)


Vector = Union[SparseVector, np.ndarray]


# ─── OPERATIONS ───────────────────────────────────────────────────────────────


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN_PATTERN.findall(text.lower())


def term_frequency(term: str, doc: TokenizedDoc) -> float:
    if not doc.tokens:
        return 0.0
    return doc.tokens.count(term) / len(doc.tokens)


def inverse_document_frequency(term: str, corpus: Sequence[TokenizedDoc]) -> float:
    """ln(N / df(t)).

    Raises:
        DatasetValidationError: empty corpus.
        UnknownTermError: term occurs in no document.
    """
    n = len(corpus)
    if n < 1:
        raise DatasetValidationError("IDF over an empty corpus")
    df = sum(1 for doc in corpus if term in doc.tokens)
    if df == 0:
        raise UnknownTermError(term)
    return math.log(n / df)


def _document_frequencies(docs: Iterable[TokenizedDoc]) -> Counter[str]:
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(doc.tokens))
    return df


def fit_tfidf(catalog: Catalog) -> TfidfModel:
    """Fit TF-IDF over title + abstract of every catalog article.

    Raises:
        DatasetValidationError: empty catalog.
    """
    if len(catalog) == 0:
        raise DatasetValidationError("Cannot fit TF-IDF on an empty catalog")

    docs = [TokenizedDoc(a.id, tuple(tokenize(a.text))) for a in catalog]
    n = len(docs)
    df = _document_frequencies(docs)
    vocabulary = {term: i for i, term in enumerate(sorted(df))}
    idf = np.zeros(len(vocabulary), dtype=np.float64)
    for term, i in vocabulary.items():
        idf[i] = math.log(n / df[term])

    dim = len(vocabulary)
    doc_vectors: dict[str, SparseVector] = {}
    doc_norms: dict[str, float] = {}
    for doc in docs:
        if not doc.tokens:
            doc_vectors[doc.article_id] = SparseVector.zeros(dim)
            doc_norms[doc.article_id] = 0.0
            continue
        length = len(doc.tokens)
        entries = {
            vocabulary[t]: (c / length) * float(idf[vocabulary[t]])
            for t, c in Counter(doc.tokens).items()
        }
        raw = SparseVector.from_mapping(entries, dim)
        norm = raw.norm()
        doc_norms[doc.article_id] = norm
        doc_vectors[doc.article_id] = raw.normalized()

    logger.info("Fitted TF-IDF: %d documents, %d terms", n, dim)
    return TfidfModel(
        vocabulary=vocabulary,
        idf=_readonly(idf),
        doc_vectors=doc_vectors,
        doc_norms=doc_norms,
        n_documents=n,
    )


def cosine(a: Vector, b: Vector) -> float:
    """dot(a, b) / (|a| |b|); 0 when either norm is 0.

    Raises:
        DimensionMismatchError: vectors of different dimensionality.
    """
    if isinstance(a, SparseVector) and isinstance(b, SparseVector):
        if a.dim != b.dim:
            raise DimensionMismatchError(a.dim, b.dim)
        na, nb = a.norm(), b.norm()
        if na == 0.0 or nb == 0.0:
            return 0.0
        value = a.dot(b) / (na * nb)
    else:
        da = a.to_dense() if isinstance(a, SparseVector) else np.asarray(a, dtype=np.float64)
        db = b.to_dense() if isinstance(b, SparseVector) else np.asarray(b, dtype=np.float64)
        if da.shape != db.shape:
            raise DimensionMismatchError(int(da.size), int(db.size))
        na, nb = float(np.linalg.norm(da)), float(np.linalg.norm(db))
        if na == 0.0 or nb == 0.0:
            return 0.0
        value = float(np.dot(da, db)) / (na * nb)
    return max(-1.0, min(1.0, value))


def load_embeddings(path: Path | str) -> EmbeddingTable:
    """Load a "dim <k>" header followed by "<article_id> v1 ... vk" lines.

    Raises:
        ParseError: bad header, wrong component count, non-numeric or
            non-finite value, duplicate article id.
    """
    path = Path(path)
    text, replaced = read_text(path)
    if replaced:
        logger.warning("Invalid UTF-8 bytes replaced in %s", path)
    lines = split_lines(text)
    if not lines:
        raise ParseError(str(path), 1, "missing 'dim <k>' header")

    header = lines[0].split()
    if len(header) != 2 or header[0] != "dim" or not header[1].isdigit() or int(header[1]) < 1:
        raise ParseError(str(path), 1, f"expected 'dim <k>' header, got {lines[0]!r}")
    dim = int(header[1])

    vectors: dict[str, np.ndarray] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        article_id, values = parts[0], parts[1:]
        if len(values) != dim:
            raise ParseError(
                str(path), line_no, f"expected {dim} components, got {len(values)}"
            )
        try:
            vec = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(str(path), line_no, f"non-numeric component ({exc})") from exc
        if not np.all(np.isfinite(vec)):
            raise ParseError(str(path), line_no, "non-finite component")
        if article_id in vectors:
            raise ParseError(str(path), line_no, f"duplicate article id '{article_id}'")
        vectors[article_id] = _readonly(vec)

    logger.info("Loaded %d embeddings of dim %d from %s", len(vectors), dim, path)
    return EmbeddingTable(dim=dim, vectors=vectors)


def serialize_embeddings(table: EmbeddingTable) -> str:
    lines = [f"dim {table.dim}\n"]
    for article_id, vec in table.vectors.items():
        lines.append(article_id + " " + " ".join(f"{x:.6f}" for x in vec) + "\n")
    return "".join(lines)
