"""Hard-clustering evaluation: ARI, V-measure, paired F-score and aggregates."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError

log = logging.getLogger(__name__)


def contingency(gold: Sequence, pred: Sequence) -> np.ndarray:
    if len(gold) != len(pred):
        raise DomainError(f"label sequences differ in length: {len(gold)} vs {len(pred)}")
    _, g = np.unique(np.asarray(gold, dtype=object).astype(str), return_inverse=True)
    _, p = np.unique(np.asarray(pred, dtype=object).astype(str), return_inverse=True)
    table = np.zeros((g.max(initial=-1) + 1, p.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (g.ravel(), p.ravel()), 1)
    return table


def _pairs(x: np.ndarray) -> int:
    x = np.asarray(x, dtype=np.int64)
    return int((x * (x - 1) // 2).sum())


def _check(gold, pred):
    if len(gold) != len(pred):
        raise DomainError(f"label sequences differ in length: {len(gold)} vs {len(pred)}")
    if len(gold) < 2:
        raise DomainError("at least two items are needed to compare clusterings")


def ari(gold: Sequence, pred: Sequence, warn: bool = True) -> float:
    """Adjusted Rand index; 0 (with a warning) when gold has a single class."""
    _check(gold, pred)
    table = contingency(gold, pred)
    if table.shape[0] == 1:
        if warn:
            log.warning("ARI is undefined for a single gold class; reporting 0")
        return 0.0
    n = int(table.sum())
    index = _pairs(table)
    sum_a = _pairs(table.sum(axis=1))
    sum_b = _pairs(table.sum(axis=0))
    total = n * (n - 1) // 2
    expected = sum_a * sum_b / total
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        return 1.0 if index == sum_a == sum_b else 0.0
    return (index - expected) / (max_index - expected)


def _entropy(counts: np.ndarray) -> float:
    counts = counts[counts > 0].astype(float)
    n = counts.sum()
    return float(-(counts / n * np.log(counts / n)).sum())


def _mutual_information(table: np.ndarray) -> float:
    """I(rows; columns) in nats; exactly 0 when either side is constant."""
    n = table.sum()
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    i, j = np.nonzero(table)
    nij = table[i, j].astype(float)
    # integer counts keep the ratio exactly 1 for independent cells
    ratio = (nij * n) / (rows[i].astype(float) * cols[j])
    return float(max((nij / n * np.log(ratio)).sum(), 0.0))


def homogeneity_completeness(gold: Sequence, pred: Sequence) -> tuple[float, float]:
    table = contingency(gold, pred)
    h_c = _entropy(table.sum(axis=1))
    h_k = _entropy(table.sum(axis=0))
    mi = _mutual_information(table)
    homogeneity = 1.0 if h_c == 0 else min(mi / h_c, 1.0)
    completeness = 1.0 if h_k == 0 else min(mi / h_k, 1.0)
    return homogeneity, completeness


def v_measure(gold: Sequence, pred: Sequence) -> float:
    _check(gold, pred)
    h, c = homogeneity_completeness(gold, pred)
    return 0.0 if h + c == 0 else 2 * h * c / (h + c)


def pair_counts(gold: Sequence, pred: Sequence) -> tuple[int, int, int]:
    """(same-cluster pairs in both, pairs in pred, pairs in gold)."""
    table = contingency(gold, pred)
    return _pairs(table), _pairs(table.sum(axis=0)), _pairs(table.sum(axis=1))


def _f_from_pairs(common: int, pred_pairs: int, gold_pairs: int) -> float:
    if pred_pairs == 0:
        return 1.0 if gold_pairs == 0 else 0.0
    if gold_pairs == 0 or common == 0:
        return 0.0
    precision = common / pred_pairs
    recall = common / gold_pairs
    return 2 * precision * recall / (precision + recall)


def paired_f(gold: Sequence, pred: Sequence) -> float:
    _check(gold, pred)
    return _f_from_pairs(*pair_counts(gold, pred))


@dataclass
class WordScores:
    word: str
    ari: float
    v_measure: float
    paired_f: float
    num_clusters: int
    num_examples: int
    gold_nc: int
    gold: list = field(default_factory=list, repr=False)
    pred: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "ari": self.ari,
            "v_measure": self.v_measure,
            "paired_f": self.paired_f,
            "num_clusters": self.num_clusters,
            "num_examples": self.num_examples,
            "gold_nc": self.gold_nc,
        }


def evaluate_word(word: str, gold: Sequence, pred: Sequence) -> WordScores:
    gold, pred = [str(g) for g in gold], [str(p) for p in pred]
    return WordScores(
        word,
        ari(gold, pred),
        v_measure(gold, pred),
        paired_f(gold, pred),
        len(set(pred)),
        len(gold),
        len(set(gold)),
        gold,
        pred,
    )


AGGREGATION_NOTE = (
    "weighted_ari, v_measure and paired_f are example-weighted means of per-word scores; "
    "v_measure_pooled and paired_f_pooled treat (word, label) pairs as clusters of one pooled dataset"
)


@dataclass
class EvalReport:
    per_word: dict[str, dict]
    aggregate: dict[str, float]
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {"per_word": self.per_word, "aggregate": self.aggregate, "meta": self.meta},
            ensure_ascii=False,
            indent=2,
            sort_keys=True,
        )

    def to_csv(self) -> str:
        cols = ["ari", "v_measure", "paired_f", "num_clusters", "num_examples", "gold_nc"]
        buf = io.StringIO()
        w = csv.writer(buf, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        w.writerow(["word"] + cols + ["avg", "mse_nc"])
        for word in sorted(self.per_word):
            row = self.per_word[word]
            w.writerow([word] + [row[c] for c in cols] + ["", ""])
        a = self.aggregate
        w.writerow(
            ["__all__", a["weighted_ari"], a["v_measure"], a["paired_f"], a["mean_num_clusters"],
             a["num_examples"], a["mean_gold_nc"], a["avg"], a["mse_nc"]]
        )
        return buf.getvalue()


def aggregate(scores: Sequence[WordScores], meta: Mapping | None = None) -> EvalReport:
    if not scores:
        raise DomainError("cannot aggregate an empty set of words")
    sizes = np.array([s.num_examples for s in scores], dtype=float)
    weights = sizes / sizes.sum()

    def wmean(attr):
        return float(np.dot(weights, [getattr(s, attr) for s in scores]))

    vm, pf = wmean("v_measure"), wmean("paired_f")
    pooled_gold = [f"{s.word}\x1f{g}" for s in scores for g in s.gold]
    pooled_pred = [f"{s.word}\x1f{p}" for s in scores for p in s.pred]
    if len(pooled_gold) >= 2:
        vm_pooled = v_measure(pooled_gold, pooled_pred)
        pf_pooled = _f_from_pairs(*map(sum, zip(*(pair_counts(s.gold, s.pred) for s in scores))))
    else:
        vm_pooled = pf_pooled = float("nan")
    nc_err = [(s.num_clusters - s.gold_nc) ** 2 for s in scores]
    agg = {
        "weighted_ari": wmean("ari"),
        "v_measure": vm,
        "paired_f": pf,
        "avg": math.sqrt(vm * pf),
        "v_measure_pooled": vm_pooled,
        "paired_f_pooled": pf_pooled,
        "mean_num_clusters": float(np.mean([s.num_clusters for s in scores])),
        "mean_gold_nc": float(np.mean([s.gold_nc for s in scores])),
        "mse_nc": float(np.mean(nc_err)),
        "num_words": len(scores),
        "num_examples": int(sizes.sum()),
    }
    info = {"aggregation": AGGREGATION_NOTE}
    info.update(meta or {})
    return EvalReport({s.word: s.as_dict() for s in scores}, agg, info)


def mse_nc(pred_nc: Sequence[int], gold_nc: Sequence[int]) -> float:
    pred_nc, gold_nc = np.asarray(pred_nc, float), np.asarray(gold_nc, float)
    return float(np.mean((pred_nc - gold_nc) ** 2))


def baselines(gold_by_word: Mapping[str, Sequence]) -> tuple[EvalReport, EvalReport]:
    """Scores of one-cluster-per-word and one-cluster-per-instance clusterings."""
    per_word, per_instance = [], []
    for word in sorted(gold_by_word):
        gold = list(gold_by_word[word])
        per_word.append(evaluate_word(word, gold, [0] * len(gold)))
        per_instance.append(evaluate_word(word, gold, list(range(len(gold)))))
    return (
        aggregate(per_word, {"baseline": "1 cluster per word"}),
        aggregate(per_instance, {"baseline": "1 cluster per instance"}),
    )
