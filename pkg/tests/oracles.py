"""Brute-force reference implementations used by the metric tests."""

import math
from collections import Counter
from itertools import combinations


def pair_sets(gold, pred):
    n = len(gold)
    same_gold = {(i, j) for i, j in combinations(range(n), 2) if gold[i] == gold[j]}
    same_pred = {(i, j) for i, j in combinations(range(n), 2) if pred[i] == pred[j]}
    return same_gold, same_pred


def brute_ari(gold, pred):
    n = len(gold)
    g, p = pair_sets(gold, pred)
    total = n * (n - 1) / 2
    index = len(g & p)
    expected = len(g) * len(p) / total
    max_index = (len(g) + len(p)) / 2
    if max_index == expected:
        return 1.0 if g == p else 0.0
    return (index - expected) / (max_index - expected)


def brute_paired_f(gold, pred):
    g, p = pair_sets(gold, pred)
    if not p:
        return 1.0 if not g else 0.0
    if not g or not (g & p):
        return 0.0
    prec, rec = len(g & p) / len(p), len(g & p) / len(g)
    return 2 * prec * rec / (prec + rec)


def _h(labels):
    n = len(labels)
    return -sum(c / n * math.log(c / n) for c in Counter(labels).values())


def _h_cond(a, b):
    """H(a | b) by direct summation over joint counts."""
    n = len(a)
    joint = Counter(zip(a, b))
    marg = Counter(b)
    return -sum(c / n * math.log(c / marg[y]) for (x, y), c in joint.items())


def brute_v_measure(gold, pred):
    hc, hk = _h(gold), _h(pred)
    hom = 1.0 if hc == 0 else 1 - _h_cond(gold, pred) / hc
    com = 1.0 if hk == 0 else 1 - _h_cond(pred, gold) / hk
    return 0.0 if hom + com == 0 else 2 * hom * com / (hom + com)
