"""Bag-of-substitutes vectors with optional TFIDF weighting."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .combine import Representative
from .errors import NoSubstitutesError, ParseError, ValidationError


@dataclass
class Lemmatizer:
    mapping: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.mapping = _resolve_chains(self.mapping)

    @classmethod
    def from_file(cls, path: str | Path | None) -> "Lemmatizer":
        if path is None:
            return cls()
        mapping = {}
        with open(path, encoding="utf-8", newline="") as f:
            for lineno, row in enumerate(csv.reader(f, delimiter="\t", quoting=csv.QUOTE_NONE), 1):
                if not row or not "".join(row).strip():
                    continue
                if len(row) != 2 or not row[0] or not row[1]:
                    raise ParseError("expected two columns: token<TAB>lemma", lineno)
                mapping[row[0]] = row[1]
        return cls(mapping)

    def __call__(self, token: str) -> str:
        return self.mapping.get(token, token)


def _resolve_chains(mapping: dict[str, str]) -> dict[str, str]:
    # a -> b, b -> c becomes a -> c, b -> c so that lemmatization is idempotent
    resolved = {}
    for token in mapping:
        seen = [token]
        lemma = mapping[token]
        while lemma in mapping and mapping[lemma] != lemma:
            if lemma in seen:
                raise ValidationError(f"lemma dictionary has a cycle through {lemma!r}")
            seen.append(lemma)
            lemma = mapping[lemma]
        resolved[token] = lemma
    return resolved


@dataclass(frozen=True)
class VectorizeConfig:
    use_tfidf: bool = False
    exclude_target: bool = True


@dataclass(frozen=True, eq=False)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=float)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.dim):
            raise ValueError("indices must be strictly increasing and inside [0, dim)")
        if np.any(val <= 0):
            raise ValueError("values must be strictly positive")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def __eq__(self, other):
        return (
            isinstance(other, SparseVector)
            and self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


def _lemmas(rep: Representative, lem: Lemmatizer, exclude: str | None) -> list[str]:
    lemmas = [lem(t) for t in rep.substitutes]
    if exclude is not None:
        lemmas = [x for x in lemmas if x != exclude]
    return lemmas


def build_vocab(
    reps: Sequence[Representative],
    lem: Lemmatizer,
    target_lemma: str,
    cfg: VectorizeConfig,
) -> dict[str, int]:
    exclude = lem(target_lemma) if cfg.exclude_target else None
    lemmas = set()
    for rep in reps:
        lemmas.update(_lemmas(rep, lem, exclude))
    if not lemmas:
        raise NoSubstitutesError(f"{target_lemma}: no substitutes left after lemmatization/exclusion")
    return {x: i for i, x in enumerate(sorted(lemmas))}


def to_bow(
    rep: Representative, vocab: dict[str, int], lem: Lemmatizer, cfg: VectorizeConfig | None = None
) -> SparseVector:
    counts = Counter(vocab[x] for x in (lem(t) for t in rep.substitutes) if x in vocab)
    idx = sorted(counts)
    return SparseVector(np.array(idx, dtype=np.int64), np.array([counts[i] for i in idx], dtype=float), len(vocab))


def tfidf_scale(vectors: Sequence[SparseVector]) -> list[SparseVector]:
    """Weight term counts by smoothed idf = ln((1 + N) / (1 + df)) + 1."""
    if not vectors:
        return []
    n = len(vectors)
    dim = vectors[0].dim
    df = np.zeros(dim)
    for v in vectors:
        df[v.indices] += 1
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    return [SparseVector(v.indices, v.values * idf[v.indices], v.dim) for v in vectors]


def to_csr(vectors: Sequence[SparseVector]) -> sp.csr_matrix:
    dim = vectors[0].dim if vectors else 0
    indptr = np.cumsum([0] + [v.nnz for v in vectors])
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.array([], dtype=np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.array([])
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def vectorize_word(
    reps: Sequence[Representative],
    lem: Lemmatizer,
    target_lemma: str,
    cfg: VectorizeConfig,
) -> tuple[list[SparseVector], dict[str, int]]:
    vocab = build_vocab(reps, lem, target_lemma, cfg)
    vectors = [to_bow(r, vocab, lem, cfg) for r in reps]
    if cfg.use_tfidf:
        vectors = tfidf_scale(vectors)
    return vectors, vocab

