import numpy as np
import pytest

from subwsi.sources import Direction, SubstituteDistribution


def make_dist(cid, direction, probs, ranks=None):
    """Distribution from a {token: prob} dict; ranks default to 1, 2, ... in input order."""
    items = sorted(probs.items(), key=lambda kv: -kv[1])
    ranks = ranks or {t: i + 1 for i, t in enumerate(probs)}
    return SubstituteDistribution(cid, Direction(direction), tuple((t, p, ranks[t]) for t, p in items))


@pytest.fixture
def dist():
    return make_dist


def naive_average_linkage(dm, k):
    """O(n^3) reference: recompute every inter-cluster mean distance before each merge."""
    n = len(dm)
    clusters = [[i] for i in range(n)]
    while len(clusters) > k:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                d = np.mean([dm[i][j] for i in clusters[a] for j in clusters[b]])
                key = (d, min(clusters[a]), min(clusters[b]))
                if best is None or key < best[0]:
                    best = (key, a, b)
        _, a, b = best
        clusters[a] = clusters[a] + clusters[b]
        del clusters[b]
    labels = [0] * n
    for c, members in enumerate(clusters):
        for i in members:
            labels[i] = c
    return labels


def same_partition(x, y):
    pairs = {}
    for a, b in zip(x, y):
        if pairs.setdefault(a, b) != b:
            return False
    return len(set(x)) == len(set(y))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
