"""Dataset TSV ingestion, prediction output and synthetic pseudoword data."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, IngestError
from .sources import Occurrence

COLUMNS = ("context_id", "word", "gold_sense_id", "predict_sense_id", "positions", "context")


@dataclass
class Dataset:
    occurrences: list[Occurrence]
    rows: list[dict[str, str]] = field(repr=False, default_factory=list)

    @property
    def by_word(self) -> dict[str, list[Occurrence]]:
        groups: dict[str, list[Occurrence]] = {}
        for occ in self.occurrences:
            groups.setdefault(occ.word, []).append(occ)
        return dict(sorted(groups.items()))

    @property
    def has_gold(self) -> bool:
        return bool(self.occurrences) and all(o.gold_sense_id is not None for o in self.occurrences)

    def gold_by_word(self) -> dict[str, dict[str, str]]:
        return {
            w: {o.context_id: o.gold_sense_id for o in occs if o.gold_sense_id is not None}
            for w, occs in self.by_word.items()
        }

    def summary(self) -> dict:
        groups = self.by_word
        out = {"words": len(groups), "examples": len(self.occurrences)}
        if self.has_gold:
            senses = [len({o.gold_sense_id for o in occs}) for occs in groups.values()]
            out["senses_per_word"] = float(np.mean(senses))
        out["examples_per_word"] = out["examples"] / max(out["words"], 1)
        return out


def parse_positions(text: str) -> tuple[int, int]:
    """First ``begin-end`` span (end exclusive) of a possibly comma-separated list."""
    first = text.split(",")[0].strip()
    begin, sep, end = first.partition("-")
    if not sep:
        raise ValueError(f"positions {text!r} are not of the form begin-end")
    return int(begin), int(end)


def read_dataset(path: str | Path) -> Dataset:
    occurrences, rows = [], []
    seen: set[str] = set()
    with open(path, encoding="utf-8", newline="") as f:
        lines = f.read().splitlines()
    if not lines:
        raise IngestError("empty dataset file", 1)
    header = lines[0].split("\t")
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise IngestError(f"missing column(s): {', '.join(missing)}", 1)
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        values = line.split("\t")
        if len(values) != len(header):
            raise IngestError(f"expected {len(header)} fields, found {len(values)}", lineno)
        row = dict(zip(header, values))
        cid = row["context_id"]
        if not cid:
            raise IngestError("empty context_id", lineno)
        if cid in seen:
            raise IngestError(f"duplicate context_id {cid!r}", lineno)
        seen.add(cid)
        try:
            span = parse_positions(row["positions"])
            occ = Occurrence(cid, row["word"], row["context"], span, row["gold_sense_id"] or None)
        except (ValueError, DomainError) as exc:
            raise IngestError(str(exc), lineno) from None
        occurrences.append(occ)
        rows.append(row)
    return Dataset(occurrences, rows)


def _clean(value: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise ValueError(f"field {value!r} contains a tab or newline")
    return value


def dataset_tsv(rows: Iterable[Mapping[str, str]], columns: Sequence[str] = COLUMNS) -> str:
    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join(_clean(str(row.get(c, "") or "")) for c in columns))
    return "\n".join(lines) + "\n"


def write_predictions(dataset: Dataset, predictions: Mapping[str, str], path: str | Path) -> None:
    """Rewrite ``dataset`` with ``predict_sense_id`` filled from ``predictions``."""
    rows = []
    for row in dataset.rows:
        row = dict(row)
        row["predict_sense_id"] = predictions.get(row["context_id"], "")
        rows.append(row)
    columns = list(dataset.rows[0].keys()) if dataset.rows else list(COLUMNS)
    Path(path).write_text(dataset_tsv(rows, columns), encoding="utf-8")


def predictions_by_word(dataset: Dataset) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    for occ, row in zip(dataset.occurrences, dataset.rows):
        out.setdefault(occ.word, {})[occ.context_id] = row.get("predict_sense_id", "")
    return dict(sorted(out.items()))


# -- synthetic pseudoword data ------------------------------------------------

_ONSETS = "b d f g k l m n p r s t v z".split()
_VOWELS = "a e i o u".split()


def _lexicon(rng: np.random.Generator, count: int, taken: set[str], syllables: int) -> list[str]:
    words = []
    while len(words) < count:
        w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(syllables))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


@dataclass
class SyntheticSpec:
    seed: int = 0
    num_classes: int = 12
    nouns_per_class: int = 30
    cues_per_class: int = 4
    fillers_per_class: int = 1
    filler_bias: float = 0.5
    form_weights: tuple[float, float, float] = (1.0, 2.0, 2.0)
    corpus_tokens: int = 50_000
    num_pseudowords: int = 6
    examples_per_sense: int = 30
    outlier_rate: float = 0.0


@dataclass
class SyntheticData:
    corpus: list[list[str]]
    dataset: Dataset
    classes: list[dict[str, list[str]]] = field(repr=False, default_factory=list)


def make_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticData:
    """Pseudoword WSI data over a toy class-based language.

    Every noun belongs to one semantic class with its own adjectives (seen to
    the left of its nouns) and verbs (seen to the right). Some sentences hide
    one side behind a class-neutral filler word, so a single direction can be
    uninformative. A pseudoword conflates two nouns from different classes;
    its gold sense is the original noun.
    """
    if spec.num_pseudowords * 2 > spec.num_classes:
        raise DomainError("each pseudoword needs two classes of its own")
    rng = np.random.default_rng(spec.seed)
    taken: set[str] = {"the", "a", "."}
    classes = []
    for _ in range(spec.num_classes):
        classes.append(
            {
                "nouns": _lexicon(rng, spec.nouns_per_class, taken, 3),
                "adjs": _lexicon(rng, spec.cues_per_class, taken, 2),
                "verbs": _lexicon(rng, spec.cues_per_class, taken, 2),
            }
        )
    # filler i mostly sits next to nouns of class i % num_classes
    fillers = _lexicon(rng, spec.fillers_per_class * spec.num_classes, taken, 2)
    # Zipf-like noun popularity inside each class
    weights = 1.0 / np.arange(1, spec.nouns_per_class + 1)
    weights /= weights.sum()

    def noun(c):
        return classes[c]["nouns"][rng.choice(spec.nouns_per_class, p=weights)]

    form_p = np.asarray(spec.form_weights, dtype=float) / sum(spec.form_weights)

    def filler(c):
        if rng.random() < spec.filler_bias:
            return fillers[c + spec.num_classes * int(rng.integers(spec.fillers_per_class))]
        return fillers[int(rng.integers(len(fillers)))]

    def sentence(c, target=None):
        n = target or noun(c)
        other = int(rng.integers(spec.num_classes))
        adj = rng.choice(classes[c]["adjs"])
        verb = rng.choice(classes[c]["verbs"])
        form = int(rng.choice(3, p=form_p))
        if form == 0:
            toks, pos = ["the", adj, n, verb, "the", noun(other), "."], 2
        elif form == 1:
            toks, pos = [filler(c), n, verb, "the", rng.choice(classes[other]["adjs"]), noun(other), "."], 1
        else:
            toks, pos = ["the", noun(other), rng.choice(classes[other]["verbs"]), "a", adj, n, filler(c), "."], 5
        return [str(t) for t in toks], pos

    corpus, total = [], 0
    while total < spec.corpus_tokens:
        toks, _ = sentence(int(rng.integers(spec.num_classes)))
        corpus.append(toks)
        total += len(toks)

    order = rng.permutation(spec.num_classes)
    occurrences, rows = [], []
    for p in range(spec.num_pseudowords):
        ca, cb = int(order[2 * p]), int(order[2 * p + 1])
        na, nb = classes[ca]["nouns"][0], classes[cb]["nouns"][0]
        pseudo = f"{na}{nb}"
        k = 0
        for c, original in ((ca, na), (cb, nb)):
            for _ in range(spec.examples_per_sense):
                if spec.outlier_rate and rng.random() < spec.outlier_rate:
                    toks = [fillers[int(rng.integers(len(fillers)))], original,
                            fillers[int(rng.integers(len(fillers)))], "."]
                    pos = 1
                else:
                    toks, pos = sentence(c, target=original)
                toks = list(toks)
                toks[pos] = pseudo
                begin = sum(len(t) + 1 for t in toks[:pos])
                context = " ".join(toks)
                cid = f"{pseudo}.{k}"
                k += 1
                occ = Occurrence(cid, pseudo, context, (begin, begin + len(pseudo)), original)
                occurrences.append(occ)
                rows.append(
                    {
                        "context_id": cid,
                        "word": pseudo,
                        "gold_sense_id": original,
                        "predict_sense_id": "",
                        "positions": f"{begin}-{begin + len(pseudo)}",
                        "context": context,
                    }
                )
    return SyntheticData(corpus, Dataset(occurrences, rows), classes)


def write_corpus(corpus: Iterable[Sequence[str]], path: str | Path) -> None:
    Path(path).write_text("".join(" ".join(s) + "\n" for s in corpus), encoding="utf-8")


def read_corpus(path: str | Path) -> list[list[str]]:
    with open(path, encoding="utf-8") as f:
        return [line.split() for line in f if line.strip()]


def senses_per_word(gold: Mapping[str, Sequence[str]]) -> float:
    return float(np.mean([len(set(v)) for v in gold.values()])) if gold else math.nan


def gold_nc_by_word(dataset: Dataset) -> dict[str, int]:
    return {w: len(Counter(o.gold_sense_id for o in occs)) for w, occs in dataset.by_word.items()}
