"""Post-hoc reports: discriminative substitutes per sense, substitute listings
and cluster-count differences."""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .combine import Representative
from .vectorize import Lemmatizer


@dataclass
class SenseProfile:
    word: str
    sense_id: str
    substitute_counts: dict[str, int]
    vocab_size: int
    num_examples: int = 0
    total: int = field(init=False)

    def __post_init__(self):
        self.total = sum(self.substitute_counts.values())


def build_sense_profiles(
    word: str,
    reps: Mapping[str, Sequence[Representative]],
    senses: Mapping[str, str],
    lem: Lemmatizer | None = None,
    exclude: str | None = None,
) -> dict[str, SenseProfile]:
    """Per-sense substitute counts; a lemma counts once per example.

    ``senses`` maps occurrence ids to gold senses or to induced cluster ids.
    """
    lem = lem or Lemmatizer()
    counts: dict[str, Counter] = defaultdict(Counter)
    examples: Counter = Counter()
    for cid, sense in senses.items():
        lemmas = {lem(t) for r in reps.get(cid, ()) for t in r.substitutes}
        lemmas.discard(exclude)
        counts[str(sense)].update(lemmas)
        examples[str(sense)] += 1
    vocab = set().union(*counts.values()) if counts else set()
    return {
        s: SenseProfile(word, s, dict(counts[s]), max(len(vocab), 1), examples[s])
        for s in sorted(counts)
    }


def smoothed_prob(profile: SenseProfile, lemma: str) -> float:
    """Add-one estimate of P(lemma | sense)."""
    return (profile.substitute_counts.get(lemma, 0) + 1) / (profile.total + profile.vocab_size)


@dataclass(frozen=True)
class DiscriminativeSubstitute:
    lemma: str
    freq1: float
    freq2: float
    ratio: float
    count1: int
    count2: int


def discriminative_substitutes(
    p1: SenseProfile, p2: SenseProfile, min_count: int = 10, top_n: int | None = 10
) -> list[DiscriminativeSubstitute]:
    """Lemmas most typical of ``p1`` relative to ``p2``."""
    rows = []
    for lemma in sorted(p1.substitute_counts.keys() | p2.substitute_counts.keys()):
        c1 = p1.substitute_counts.get(lemma, 0)
        c2 = p2.substitute_counts.get(lemma, 0)
        if max(c1, c2) < min_count:
            continue
        ratio = smoothed_prob(p1, lemma) / smoothed_prob(p2, lemma)
        rows.append(
            DiscriminativeSubstitute(
                lemma,
                c1 / p1.num_examples if p1.num_examples else 0.0,
                c2 / p2.num_examples if p2.num_examples else 0.0,
                ratio,
                c1,
                c2,
            )
        )
    rows.sort(key=lambda r: (-r.ratio, r.lemma))
    return rows if top_n is None else rows[:top_n]


def two_main_senses(profiles: Mapping[str, SenseProfile]) -> tuple[SenseProfile, SenseProfile] | None:
    ranked = sorted(profiles.values(), key=lambda p: (-p.num_examples, p.sense_id))
    return (ranked[0], ranked[1]) if len(ranked) >= 2 else None


def discriminative_table(
    profiles_by_word: Mapping[str, Mapping[str, SenseProfile]], min_count: int = 10, top_n: int = 10
) -> list[dict]:
    rows = []
    for word in sorted(profiles_by_word):
        pair = two_main_senses(profiles_by_word[word])
        if pair is None:
            continue
        a, b = pair
        for first, second in ((a, b), (b, a)):
            for r in discriminative_substitutes(first, second, min_count, top_n):
                rows.append(
                    {
                        "word": word,
                        "sense": first.sense_id,
                        "other_sense": second.sense_id,
                        "lemma": r.lemma,
                        "freq1": round(r.freq1, 6),
                        "freq2": round(r.freq2, 6),
                        "ratio": round(r.ratio, 6),
                    }
                )
    return rows


def substitute_listing(
    context_id: str,
    combined: Sequence[str],
    fwd: Sequence[str],
    bwd: Sequence[str],
    n_combined: int = 10,
    n_single: int = 5,
) -> dict:
    return {
        "context_id": context_id,
        "combined": " ".join(combined[:n_combined]),
        "forward": " ".join(fwd[:n_single]),
        "backward": " ".join(bwd[:n_single]),
    }


NC_DIFF_COLUMNS = ("submitted_minus_true", "submitted_minus_max_ari", "true_minus_max_ari")


@dataclass
class NcDifferenceReport:
    rows: list[dict]
    summary: dict[str, dict[str, float]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        w.writerow(["word", "true_nc", "submitted_nc", "max_ari_nc", *NC_DIFF_COLUMNS])
        for r in self.rows:
            w.writerow([r["word"], r["true_nc"], r["submitted_nc"], r["max_ari_nc"], *(r[c] for c in NC_DIFF_COLUMNS)])
        for stat in ("min", "q25", "median", "q75", "max", "mean", "mse"):
            w.writerow([f"__{stat}__", "", "", "", *(self.summary[c][stat] for c in NC_DIFF_COLUMNS)])
        return buf.getvalue()


def nc_difference_report(
    per_word: Iterable[tuple[int, int, int]], words: Sequence[str] | None = None
) -> NcDifferenceReport:
    """Pairwise differences between true, submitted and maxARI-optimal counts.

    Each item of ``per_word`` is ``(true_nc, submitted_nc, max_ari_nc)``.
    """
    per_word = list(per_word)
    words = list(words) if words is not None else [str(i) for i in range(len(per_word))]
    rows = []
    for word, (true_nc, sub_nc, best_nc) in zip(words, per_word):
        rows.append(
            {
                "word": word,
                "true_nc": true_nc,
                "submitted_nc": sub_nc,
                "max_ari_nc": best_nc,
                "submitted_minus_true": sub_nc - true_nc,
                "submitted_minus_max_ari": sub_nc - best_nc,
                "true_minus_max_ari": true_nc - best_nc,
            }
        )
    summary = {}
    for col in NC_DIFF_COLUMNS:
        x = np.array([r[col] for r in rows], dtype=float)
        if x.size == 0:
            summary[col] = dict.fromkeys(("min", "q25", "median", "q75", "max", "mean", "mse"), float("nan"))
            continue
        q = np.quantile(x, [0.0, 0.25, 0.5, 0.75, 1.0])
        summary[col] = {
            "min": float(q[0]),
            "q25": float(q[1]),
            "median": float(q[2]),
            "q75": float(q[3]),
            "max": float(q[4]),
            "mean": float(x.mean()),
            "mse": float(np.mean(x**2)),
        }
    return NcDifferenceReport(rows, summary)


def rows_to_csv(rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: r[c] for c in columns})
    return buf.getvalue()
