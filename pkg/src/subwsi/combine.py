"""Turning a forward and a backward substitute distribution into representatives."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, NoSubstitutesError
from .sources import SubstituteDistribution

METHODS = ("base-union", "sampling", "avg", "pos-weight-avg", "bayes-comb")

ScoredList = list[tuple[str, float]]


@dataclass(frozen=True)
class CombineConfig:
    method: str = "bayes-comb"
    top_k: int = 200
    num_representatives: int = 20
    sample_size: int = 15
    zipf_z: float = 2.0
    beta: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown combine method {self.method!r}; expected one of {METHODS}")
        if self.top_k < 1 or self.num_representatives < 1 or self.sample_size < 1:
            raise ConfigError("top_k, num_representatives and sample_size must all be >= 1")
        if self.zipf_z < 0:
            raise ConfigError(f"zipf_z must be >= 0, got {self.zipf_z}")
        if not (0 < self.beta <= 0.5):
            raise ConfigError(f"beta must lie in (0, 0.5], got {self.beta}")


@dataclass(frozen=True)
class Representative:
    context_id: str
    substitutes: tuple[str, ...]
    fallback: bool = False


def renormalize_top_k(dist: SubstituteDistribution, k: int) -> SubstituteDistribution:
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if not dist.entries:
        raise NoSubstitutesError(f"{dist.context_id}: no {dist.direction.value} substitutes")
    kept = dist.entries[:k]
    total = sum(p for _, p, _ in kept)
    return SubstituteDistribution(
        dist.context_id,
        dist.direction,
        tuple((t, p / total, r) for t, p, r in kept),
        word=dist.word,
        meta=dist.meta,
    )


def _ranks(fwd: SubstituteDistribution, bwd: SubstituteDistribution) -> dict[str, int]:
    ranks = bwd.ranks()
    ranks.update(fwd.ranks())
    return ranks


def _sorted(scores: dict[str, float], ranks: dict[str, int]) -> ScoredList:
    return sorted(scores.items(), key=lambda kv: (-kv[1], ranks.get(kv[0], 0), kv[0]))


def _weighted(fwd, bwd, w_fwd: float) -> ScoredList:
    if not fwd.entries and not bwd.entries:
        raise NoSubstitutesError(f"{fwd.context_id}: both distributions are empty")
    pf, pb = fwd.as_dict(), bwd.as_dict()
    scores = {}
    for token in pf.keys() | pb.keys():
        s = w_fwd * pf.get(token, 0.0) + (1.0 - w_fwd) * pb.get(token, 0.0)
        if s > 0:
            scores[token] = s
    return _sorted(scores, _ranks(fwd, bwd))


def combine_avg(fwd: SubstituteDistribution, bwd: SubstituteDistribution) -> ScoredList:
    return _weighted(fwd, bwd, 0.5)


def alpha(pos: float, beta: float) -> float:
    """Forward-LM weight for a target at normalized position ``pos``.

    Equals 0.5 while both contexts are longer than ``beta`` of the example and
    falls linearly to 0 (target at the start) or rises to 1 (at the end).
    """
    if not (0.0 <= pos <= 1.0):
        raise DomainError(f"pos must lie in [0, 1], got {pos}")
    if not (0.0 < beta <= 0.5):
        raise DomainError(f"beta must lie in (0, 0.5], got {beta}")
    slope = 0.5 / beta
    return max(min(0.5, slope * pos), slope * (pos - 1.0 + 2.0 * beta))


def combine_pos_weighted(
    fwd: SubstituteDistribution, bwd: SubstituteDistribution, pos: float, beta: float
) -> ScoredList:
    return _weighted(fwd, bwd, alpha(pos, beta))


def combine_bayes(fwd: SubstituteDistribution, bwd: SubstituteDistribution, z: float) -> ScoredList:
    """Score shared tokens by P_fwd * P_bwd * rank**z (unnormalized)."""
    pb = bwd.as_dict()
    scores = {}
    ranks = fwd.ranks()
    for token, p, rank in fwd.entries:
        if token in pb:
            scores[token] = p * pb[token] * float(rank) ** z
    if not scores:
        raise NoSubstitutesError(f"{fwd.context_id}: forward and backward share no substitutes")
    return _sorted(scores, ranks)


def _rng(seed: int, context_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(context_id.encode("utf-8"))])


def _sample(dist: SubstituteDistribution, size: int, rng: np.random.Generator) -> list[str]:
    probs = np.array([p for _, p, _ in dist.entries])
    idx = rng.choice(len(probs), size=size, replace=True, p=probs / probs.sum())
    return [dist.entries[i][0] for i in idx]


def make_representatives(
    fwd: SubstituteDistribution,
    bwd: SubstituteDistribution,
    cfg: CombineConfig,
    pos: float = 0.5,
) -> list[Representative]:
    cid = fwd.context_id
    k = cfg.top_k
    if cfg.method == "sampling":
        f, b = renormalize_top_k(fwd, k), renormalize_top_k(bwd, k)
        rng = _rng(cfg.rng_seed, cid)
        return [
            Representative(cid, tuple(_sample(f, cfg.sample_size, rng) + _sample(b, cfg.sample_size, rng)))
            for _ in range(cfg.num_representatives)
        ]
    if cfg.method == "base-union":
        tokens = dict.fromkeys(fwd.tokens[:k])
        tokens.update(dict.fromkeys(bwd.tokens[:k]))
        if not tokens:
            raise NoSubstitutesError(f"{cid}: both distributions are empty")
        return [Representative(cid, tuple(tokens))]
    if cfg.method == "bayes-comb":
        try:
            scored = combine_bayes(fwd, bwd, cfg.zipf_z)
            fallback = False
        except NoSubstitutesError:
            scored = _weighted(fwd, bwd, 0.5)
            fallback = True
        return [Representative(cid, tuple(t for t, _ in scored[:k]), fallback)]

    f, b = renormalize_top_k(fwd, k), renormalize_top_k(bwd, k)
    if cfg.method == "avg":
        scored = combine_avg(f, b)
    else:
        scored = combine_pos_weighted(f, b, pos, cfg.beta)
    return [Representative(cid, tuple(t for t, _ in scored[:k]))]
