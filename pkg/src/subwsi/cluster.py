"""Agglomerative clustering of substitute vectors and cluster-count selection.

Clusters live in slots named after their smallest member, so the pair merged
at each step is the lexicographically smallest (min id, max id) among the
closest pairs and every run is bit-reproducible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, NoSubstitutesError
from .metrics import ari
from .vectorize import SparseVector, to_csr

log = logging.getLogger(__name__)

LINKAGES = ("average", "complete", "single")
AFFINITIES = ("cosine", "euclidean")
SELECTORS = ("silnc", "fixnc", "prevnc", "prevnc2", "gold-oracle")


@dataclass(frozen=True)
class ClusterSelectConfig:
    nc_min: int = 2
    nc_max: int = 12
    fixed_nc: int | None = None

    def __post_init__(self):
        if self.nc_min < 2:
            raise ConfigError(f"nc_min must be >= 2, got {self.nc_min}")
        if self.nc_min > self.nc_max:
            raise ConfigError(f"nc_min {self.nc_min} exceeds nc_max {self.nc_max}")
        if self.fixed_nc is not None and self.fixed_nc < 1:
            raise ConfigError(f"fixed_nc must be >= 1, got {self.fixed_nc}")


@dataclass
class ClusteringResult:
    word: str
    occurrence_ids: list[str]
    labels: np.ndarray
    distribution: np.ndarray
    num_clusters: int
    selector: str
    rep_labels: np.ndarray = field(repr=False, default=None)
    flags: list[str] = field(default_factory=list)

    def distribution_row(self, i: int) -> dict[int, float]:
        row = self.distribution[i]
        return {int(c): float(row[c]) for c in np.flatnonzero(row)}


def check_distance_matrix(dm: np.ndarray) -> np.ndarray:
    dm = np.asarray(dm, dtype=float)
    if dm.ndim != 2 or dm.shape[0] != dm.shape[1]:
        raise DomainError(f"distance matrix must be square, got shape {dm.shape}")
    if not np.all(np.isfinite(dm)):
        raise DomainError("distance matrix has non-finite entries")
    if np.any(np.diag(dm) != 0) or not np.array_equal(dm, dm.T):
        raise DomainError("distance matrix must be symmetric with a zero diagonal")
    return dm


def _symmetrize(d: np.ndarray) -> np.ndarray:
    upper = np.triu(d, 1)
    return upper + upper.T


def cosine_distance_matrix(vectors: Sequence[SparseVector]) -> np.ndarray:
    x = to_csr(vectors)
    norms = np.sqrt(np.asarray(x.multiply(x).sum(axis=1)).ravel())
    if np.any(norms == 0):
        raise NoSubstitutesError("zero-norm vector reached the distance computation")
    x = x.multiply(1.0 / norms[:, None]).tocsr()
    d = 1.0 - (x @ x.T).toarray()
    d[np.abs(d) < 1e-12] = 0.0
    return _symmetrize(np.clip(d, 0.0, 2.0))


def euclidean_distance_matrix(vectors: Sequence[SparseVector]) -> np.ndarray:
    x = to_csr(vectors)
    sq = np.asarray(x.multiply(x).sum(axis=1)).ravel()
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T).toarray()
    d = np.sqrt(np.clip(d2, 0.0, None))
    d[d < 1e-12] = 0.0
    return _symmetrize(d)


def distance_matrix(vectors: Sequence[SparseVector], affinity: str = "cosine") -> np.ndarray:
    if affinity == "cosine":
        return cosine_distance_matrix(vectors)
    if affinity == "euclidean":
        return euclidean_distance_matrix(vectors)
    raise ConfigError(f"unknown affinity {affinity!r}")


def canonical_labels(labels: Sequence) -> np.ndarray:
    """Relabel clusters 0, 1, ... in order of first appearance."""
    mapping: dict = {}
    return np.array([mapping.setdefault(x, len(mapping)) for x in labels], dtype=np.int64)


def agglomerative_levels(
    dm: np.ndarray, levels: Iterable[int], linkage: str = "average"
) -> dict[int, np.ndarray]:
    """Labels for every requested cluster count from one bottom-up pass."""
    dm = np.asarray(dm, dtype=float)
    n = dm.shape[0]
    wanted = sorted(set(levels), reverse=True)
    for k in wanted:
        if not 1 <= k <= n:
            raise DomainError(f"number of clusters {k} outside [1, {n}]")
    if linkage not in LINKAGES:
        raise ConfigError(f"unknown linkage {linkage!r}")

    out: dict[int, np.ndarray] = {}
    slot = np.arange(n)
    d = dm.copy()
    np.fill_diagonal(d, np.inf)
    size = np.ones(n)
    alive = np.ones(n, dtype=bool)
    row_min = d.min(axis=1) if n > 1 else np.full(n, np.inf)
    row_arg = d.argmin(axis=1) if n > 1 else np.zeros(n, dtype=np.int64)
    count = n
    for k in wanted:
        while count > k:
            i = int(np.argmin(row_min))
            j = int(row_arg[i])
            if linkage == "average":
                merged = (size[i] * d[i] + size[j] * d[j]) / (size[i] + size[j])
            elif linkage == "complete":
                merged = np.maximum(d[i], d[j])
            else:
                merged = np.minimum(d[i], d[j])
            merged[~alive] = np.inf
            merged[i] = merged[j] = np.inf
            d[i, :] = merged
            d[:, i] = merged
            d[j, :] = np.inf
            d[:, j] = np.inf
            alive[j] = False
            size[i] += size[j]
            slot[slot == j] = i
            count -= 1

            row_min[j] = np.inf
            row_min[i] = merged.min()
            row_arg[i] = int(np.argmin(merged))
            stale = alive & ((row_arg == i) | (row_arg == j))
            stale[i] = False
            for r in np.flatnonzero(stale):
                row_arg[r] = int(np.argmin(d[r]))
                row_min[r] = d[r, row_arg[r]]
            others = alive & ~stale
            others[i] = False
            better = others & ((merged < row_min) | ((merged == row_min) & (i < row_arg)))
            row_min[better] = merged[better]
            row_arg[better] = i
        out[k] = canonical_labels(slot)
    return out


def agglomerative(dm: np.ndarray, num_clusters: int, linkage: str = "average") -> np.ndarray:
    return agglomerative_levels(dm, [num_clusters], linkage)[num_clusters]


def silhouette_samples(dm: np.ndarray, labels: Sequence) -> np.ndarray:
    dm = np.asarray(dm, dtype=float)
    _, lab = np.unique(np.asarray(labels), return_inverse=True)
    lab = lab.ravel()
    k = lab.max() + 1
    if k < 2:
        raise DomainError("silhouette needs at least two clusters")
    onehot = np.zeros((len(lab), k))
    onehot[np.arange(len(lab)), lab] = 1.0
    sizes = onehot.sum(axis=0)
    sums = dm @ onehot
    own_size = sizes[lab]
    a = np.where(own_size > 1, sums[np.arange(len(lab)), lab] / np.maximum(own_size - 1, 1), 0.0)
    mean_other = sums / sizes[None, :]
    mean_other[np.arange(len(lab)), lab] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    s[own_size == 1] = 0.0
    return s


def silhouette(dm: np.ndarray, labels: Sequence) -> float:
    return float(np.mean(silhouette_samples(dm, labels)))


@dataclass
class NcSelection:
    num_clusters: int
    labels: np.ndarray
    scores: dict[int, float] = field(default_factory=dict)
    degenerate: bool = False


def select_nc_silhouette(dm: np.ndarray, cfg: ClusterSelectConfig = ClusterSelectConfig()) -> NcSelection:
    n = dm.shape[0]
    if n < 3:
        nc = min(n, cfg.nc_min)
        return NcSelection(nc, agglomerative(dm, nc), degenerate=True)
    hi = min(cfg.nc_max, n - 1)
    if np.all(dm == 0) or cfg.nc_min > hi:
        nc = min(cfg.nc_min, n)
        return NcSelection(nc, agglomerative(dm, nc), degenerate=True)
    levels = agglomerative_levels(dm, range(cfg.nc_min, hi + 1))
    scores = {k: silhouette(dm, levels[k]) for k in sorted(levels)}
    best = max(scores, key=lambda k: (scores[k], -k))
    return NcSelection(best, levels[best], scores)


def redistribute_prevnc2(dm: np.ndarray, sil_labels: Sequence, target_nc: int) -> np.ndarray:
    """Shrink a silhouette clustering to ``target_nc`` clusters.

    The ``target_nc`` largest clusters are kept; every other item moves to the
    kept cluster with the smallest average distance to its members. When the
    silhouette clustering has no more than ``target_nc`` clusters, the items
    are simply reclustered into ``target_nc`` clusters.
    """
    dm = np.asarray(dm, dtype=float)
    n = dm.shape[0]
    if not 1 <= target_nc <= n:
        raise DomainError(f"target number of clusters {target_nc} outside [1, {n}]")
    labels = canonical_labels(sil_labels)
    s = labels.max() + 1
    if s == target_nc:
        return labels
    if s < target_nc:
        return agglomerative(dm, target_nc)
    sizes = np.bincount(labels)
    kept = sorted(range(s), key=lambda c: (-sizes[c], c))[:target_nc]
    kept = sorted(kept)
    kept_mask = np.isin(labels, kept)
    avg = np.stack([dm[:, labels == c].mean(axis=1) for c in kept], axis=1)
    out = labels.copy()
    moved = ~kept_mask
    out[moved] = np.asarray(kept)[np.argmin(avg[moved], axis=1)]
    return canonical_labels(out)


def _aggregate(word, owners, rep_labels, occurrence_ids, selector, flags) -> ClusteringResult:
    index = {cid: i for i, cid in enumerate(occurrence_ids)}
    k = int(rep_labels.max()) + 1
    counts = np.zeros((len(occurrence_ids), k))
    np.add.at(counts, ([index[o] for o in owners], rep_labels), 1.0)
    dist = counts / counts.sum(axis=1, keepdims=True)
    return ClusteringResult(
        word, list(occurrence_ids), np.argmax(counts, axis=1), dist, k, selector, rep_labels, flags
    )


def _occurrence_order(owners: Sequence[str]) -> list[str]:
    return list(dict.fromkeys(owners))


def _attach_empty(nonempty_labels: np.ndarray, mask: np.ndarray) -> np.ndarray:
    labels = np.empty(len(mask), dtype=np.int64)
    labels[mask] = nonempty_labels
    if not mask.all():
        largest = int(np.argmax(np.bincount(nonempty_labels)))
        labels[~mask] = largest
    return labels


def cluster_word(
    vectors: Sequence[SparseVector],
    owners: Sequence[str],
    cfg: ClusterSelectConfig = ClusterSelectConfig(),
    selector: str = "silnc",
    word: str = "",
    target_nc: int | None = None,
    gold: Mapping[str, str] | None = None,
    dm: np.ndarray | None = None,
) -> ClusteringResult:
    """Cluster one word's representative vectors and derive per-occurrence labels.

    ``owners[i]`` is the occurrence id that produced ``vectors[i]``. Vectors
    with no nonzero entry are attached to the largest cluster afterwards.
    ``dm`` may carry a precomputed cosine distance matrix over the nonempty
    vectors.
    """
    if len(vectors) != len(owners):
        raise DomainError("vectors and owners differ in length")
    if selector not in SELECTORS:
        raise ConfigError(f"unknown selector {selector!r}")
    occurrence_ids = _occurrence_order(owners)
    mask = np.array([v.nnz > 0 for v in vectors], dtype=bool)
    m = int(mask.sum())
    if m == 0:
        raise NoSubstitutesError(f"{word}: every representative vector is empty")
    flags = []
    if m < len(vectors):
        flags.append(f"{len(vectors) - m} empty vectors attached to the largest cluster")
    if dm is None:
        dm = cosine_distance_matrix([v for v, keep in zip(vectors, mask) if keep])

    if m == 1:
        labels = np.zeros(1, dtype=np.int64)
        flags.append("single nonempty vector")
    elif selector == "silnc":
        sel = select_nc_silhouette(dm, cfg)
        labels = sel.labels
        if sel.degenerate:
            flags.append("degenerate silhouette selection")
    elif selector == "fixnc":
        if cfg.fixed_nc is None:
            raise ConfigError("selector fixnc requires fixed_nc")
        labels = agglomerative(dm, min(cfg.fixed_nc, m))
    elif selector in ("prevnc", "prevnc2"):
        if target_nc is None:
            raise ConfigError(f"selector {selector} requires a target number of clusters")
        nc = min(target_nc, m)
        if selector == "prevnc":
            labels = agglomerative(dm, nc)
        else:
            labels = redistribute_prevnc2(dm, select_nc_silhouette(dm, cfg).labels, nc)
    else:
        if gold is None:
            raise ConfigError("selector gold-oracle requires gold labels")
        labels = _gold_oracle_labels(dm, mask, owners, occurrence_ids, gold, cfg, m)

    rep_labels = _attach_empty(labels, mask)
    return _aggregate(word, owners, rep_labels, occurrence_ids, selector, flags)


def _occurrence_labels(rep_labels, owners, occurrence_ids) -> np.ndarray:
    index = {cid: i for i, cid in enumerate(occurrence_ids)}
    k = int(rep_labels.max()) + 1
    counts = np.zeros((len(occurrence_ids), k))
    np.add.at(counts, ([index[o] for o in owners], rep_labels), 1.0)
    return np.argmax(counts, axis=1)


def _gold_oracle_labels(dm, mask, owners, occurrence_ids, gold, cfg, m) -> np.ndarray:
    gold_seq = [gold[c] for c in occurrence_ids]
    levels = agglomerative_levels(dm, range(1, min(cfg.nc_max, m) + 1))
    best_k, best = None, -np.inf
    for k in sorted(levels):
        occ = _occurrence_labels(_attach_empty(levels[k], mask), owners, occurrence_ids)
        score = ari(gold_seq, occ, warn=False) if len(gold_seq) >= 2 else 0.0
        if score > best:
            best_k, best = k, score
    return levels[best_k]


@dataclass(frozen=True)
class MaxAriGrid:
    linkages: tuple[str, ...] = LINKAGES
    affinities: tuple[str, ...] = AFFINITIES
    nc_min: int = 1
    nc_max: int | None = 20

    def __post_init__(self):
        for x in self.linkages:
            if x not in LINKAGES:
                raise ConfigError(f"unknown linkage {x!r}")
        for x in self.affinities:
            if x not in AFFINITIES:
                raise ConfigError(f"unknown affinity {x!r}")
        if self.nc_min < 1 or (self.nc_max is not None and self.nc_max < self.nc_min):
            raise ConfigError("invalid maxARI cluster-count range")


@dataclass
class MaxAriResult:
    best_ari: float
    best_config: dict
    table: list[dict] = field(default_factory=list, repr=False)


def max_ari_search(
    dms: Mapping[str, np.ndarray],
    gold_labels: Sequence | Mapping[str, str],
    grid: MaxAriGrid = MaxAriGrid(),
    owners: Sequence[str] | None = None,
    mask: np.ndarray | None = None,
) -> MaxAriResult:
    """Best ARI reachable by agglomerative clustering over ``grid``.

    ``dms`` maps an affinity name to a distance matrix over the (nonempty)
    items. Without ``owners`` the items are the occurrences themselves and
    ``gold_labels`` is a sequence aligned with them; otherwise ``gold_labels``
    maps occurrence ids to senses and ``mask`` marks which owners have a row
    in the distance matrices.
    """
    if gold_labels is None or len(gold_labels) == 0:
        raise DomainError("maxARI needs gold labels")
    first = next(iter(dms.values()))
    n_items = first.shape[0]
    if owners is None:
        owners = [str(i) for i in range(n_items)]
        gold_labels = dict(zip(owners, gold_labels))
    occurrence_ids = _occurrence_order(owners)
    if mask is None:
        mask = np.ones(len(owners), dtype=bool)
    gold_seq = [gold_labels[c] for c in occurrence_ids]
    hi = n_items if grid.nc_max is None else min(grid.nc_max, n_items)
    lo = min(grid.nc_min, hi)

    best = MaxAriResult(-np.inf, {})
    for affinity in grid.affinities:
        if affinity not in dms:
            continue
        for linkage in grid.linkages:
            levels = agglomerative_levels(dms[affinity], range(lo, hi + 1), linkage)
            for k in sorted(levels):
                occ = _occurrence_labels(_attach_empty(levels[k], mask), owners, occurrence_ids)
                score = ari(gold_seq, occ, warn=False) if len(gold_seq) >= 2 else 0.0
                row = {"affinity": affinity, "linkage": linkage, "nc": k, "ari": score}
                best.table.append(row)
                if score > best.best_ari:
                    best.best_ari, best.best_config = score, {x: row[x] for x in ("affinity", "linkage", "nc")}
    if not best.table:
        raise ConfigError("maxARI grid evaluated no configuration")
    return best


def max_ari_word(
    vectors: Sequence[SparseVector],
    owners: Sequence[str],
    gold: Mapping[str, str],
    grid: MaxAriGrid = MaxAriGrid(),
) -> MaxAriResult:
    mask = np.array([v.nnz > 0 for v in vectors], dtype=bool)
    kept = [v for v, keep in zip(vectors, mask) if keep]
    if len(kept) == 0:
        raise NoSubstitutesError("every representative vector is empty")
    dms = {a: distance_matrix(kept, a) for a in grid.affinities}
    return max_ari_search(dms, gold, grid, owners=list(owners), mask=mask)

