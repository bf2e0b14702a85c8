"""Forward/backward substitute distributions.

Substitutes come either from a small add-k smoothed n-gram model trained on
a plain-text corpus, or from a JSON-lines file produced by an external
language model.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ParseError, ValidationError

BOS = "<s>"
DEFAULT_PATTERN = " and "


class Direction(str, enum.Enum):
    FORWARD = "fwd"
    BACKWARD = "bwd"


@dataclass(frozen=True)
class Occurrence:
    context_id: str
    word: str
    context: str
    target_span: tuple[int, int]
    gold_sense_id: str | None = None

    def __post_init__(self):
        begin, end = self.target_span
        if not (0 <= begin < end <= len(self.context)):
            raise DomainError(
                f"{self.context_id}: span {begin}-{end} outside context of length {len(self.context)}"
            )
        if not self.context[begin:end].strip():
            raise DomainError(f"{self.context_id}: target span is blank")

    @property
    def left(self) -> str:
        return self.context[: self.target_span[0]]

    @property
    def target(self) -> str:
        begin, end = self.target_span
        return self.context[begin:end]

    @property
    def right(self) -> str:
        return self.context[self.target_span[1]:]

    @property
    def position(self) -> float:
        """Target start offset divided by the context length, in [0, 1)."""
        return self.target_span[0] / len(self.context)


@dataclass(frozen=True)
class SubstituteDistribution:
    context_id: str
    direction: Direction
    entries: tuple[tuple[str, float, int], ...]
    word: str = ""
    meta: dict = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(
            self, "entries", tuple((str(t), float(p), int(r)) for t, p, r in self.entries)
        )
        validate_entries(self.entries)

    @property
    def tokens(self) -> list[str]:
        return [t for t, _, _ in self.entries]

    def as_dict(self) -> dict[str, float]:
        return {t: p for t, p, _ in self.entries}

    def ranks(self) -> dict[str, int]:
        return {t: r for t, _, r in self.entries}

    def __len__(self):
        return len(self.entries)


def validate_entries(entries: Sequence[tuple[str, float, int]]) -> None:
    seen = set()
    total = 0.0
    prev = math.inf
    for token, prob, rank in entries:
        if not (0.0 < prob <= 1.0):
            raise ValidationError(f"probability {prob!r} of {token!r} outside (0, 1]")
        if rank < 1:
            raise ValidationError(f"rank {rank} of {token!r} is not positive")
        if token in seen:
            raise ValidationError(f"duplicate token {token!r}")
        if prob > prev:
            raise ValidationError(f"entries not sorted by probability at {token!r}")
        seen.add(token)
        total += prob
        prev = prob
    if total > 1.0 + 1e-6:
        raise ValidationError(f"probabilities sum to {total:.6f} > 1")


def tokenize(text: str) -> list[str]:
    return text.lower().split()


@dataclass(frozen=True, eq=False)
class ToyLm:
    """Add-k smoothed n-gram model over a closed vocabulary.

    ``vocab`` is sorted by corpus frequency (descending, ties lexicographic),
    so ``vocab[i]`` has frequency rank ``i + 1``.
    """

    order: int
    direction: Direction
    vocab: tuple[str, ...]
    counts: dict
    smoothing_k: float

    @property
    def index(self) -> dict[str, int]:
        idx = self.__dict__.get("_index")
        if idx is None:
            idx = {t: i for i, t in enumerate(self.vocab)}
            object.__setattr__(self, "_index", idx)
        return idx

    def rank(self, token: str) -> int:
        return self.index[token] + 1

    def history(self, tokens: Sequence[str]) -> tuple[str, ...]:
        """Conditioning history for a blank following ``tokens`` (in model order)."""
        padded = [BOS] * (self.order - 1) + list(tokens)
        return tuple(padded[len(padded) - (self.order - 1):])

    def probabilities(self, history: Sequence[str]) -> np.ndarray:
        history = tuple(history)
        if len(history) != self.order - 1:
            raise DomainError(f"history length {len(history)} != order - 1 = {self.order - 1}")
        probs = np.full(len(self.vocab), self.smoothing_k, dtype=float)
        successors = self.counts.get(history)
        total = 0
        if successors:
            for token_id, c in successors.items():
                probs[token_id] += c
                total += c
        return probs / (total + self.smoothing_k * len(self.vocab))

    def prob(self, token: str, history: Sequence[str]) -> float:
        return float(self.probabilities(history)[self.index[token]])


def train_toy_lm(
    corpus: Iterable[Sequence[str]],
    order: int = 2,
    direction: Direction | str = Direction.FORWARD,
    smoothing_k: float = 1.0,
) -> ToyLm:
    direction = Direction(direction)
    if order < 2:
        raise ConfigError(f"order must be >= 2, got {order}")
    if not smoothing_k > 0:
        raise ConfigError(f"smoothing_k must be > 0, got {smoothing_k}")
    sentences = [[t.lower() for t in sent] for sent in corpus]
    sentences = [s for s in sentences if s]
    if not sentences:
        raise ConfigError("cannot train a language model on an empty corpus")
    if direction is Direction.BACKWARD:
        sentences = [s[::-1] for s in sentences]

    freq = Counter(t for s in sentences for t in s)
    vocab = tuple(sorted(freq, key=lambda t: (-freq[t], t)))
    index = {t: i for i, t in enumerate(vocab)}

    counts: dict[tuple[str, ...], dict[int, int]] = defaultdict(lambda: defaultdict(int))
    for sent in sentences:
        padded = [BOS] * (order - 1) + sent
        for i in range(order - 1, len(padded)):
            counts[tuple(padded[i - order + 1: i])][index[padded[i]]] += 1
    frozen = {h: dict(succ) for h, succ in counts.items()}
    return ToyLm(order, direction, vocab, frozen, float(smoothing_k))


def query_tokens(
    occ: Occurrence,
    direction: Direction | str,
    use_pattern: bool = False,
    pattern_text: str = DEFAULT_PATTERN,
) -> list[str]:
    """Context tokens the LM of ``direction`` conditions on, in reading order.

    With a pattern, the forward query is ``l + target + pattern`` (blank
    after it) and the backward query is ``pattern + target + r`` (blank
    before it).
    """
    direction = Direction(direction)
    if direction is Direction.FORWARD:
        text = occ.left + (" " + occ.target + " " + pattern_text if use_pattern else "")
    else:
        text = (pattern_text + " " + occ.target + " " if use_pattern else "") + occ.right
    return tokenize(text)


def predict_substitutes(
    lm: ToyLm,
    occ: Occurrence,
    top_k: int,
    use_pattern: bool = False,
    pattern_text: str = DEFAULT_PATTERN,
) -> SubstituteDistribution:
    if top_k < 1:
        raise DomainError(f"top_k must be >= 1, got {top_k}")
    tokens = query_tokens(occ, lm.direction, use_pattern, pattern_text)
    if lm.direction is Direction.BACKWARD:
        tokens = tokens[::-1]
    probs = lm.probabilities(lm.history(tokens))
    # vocab order is rank order, so a stable sort on -prob breaks ties by rank
    order = np.argsort(-probs, kind="stable")[: min(top_k, len(lm.vocab))]
    entries = tuple((lm.vocab[i], float(probs[i]), int(i) + 1) for i in order)
    return SubstituteDistribution(
        occ.context_id,
        lm.direction,
        entries,
        word=occ.word,
        meta={"source": "toy-lm", "order": lm.order, "pattern": bool(use_pattern)},
    )


def _parse_line(line: str, lineno: int) -> SubstituteDistribution:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", lineno)
    for key in ("context_id", "direction", "entries"):
        if key not in obj:
            raise ParseError(f"missing key {key!r}", lineno)
    if obj["direction"] not in ("fwd", "bwd"):
        raise ParseError(f"direction must be 'fwd' or 'bwd', got {obj['direction']!r}", lineno)
    entries = []
    for e in obj["entries"]:
        if not (isinstance(e, list) and len(e) == 3):
            raise ParseError(f"entry {e!r} is not a [token, probability, rank] triple", lineno)
        token, prob, rank = e
        if not isinstance(token, str) or isinstance(prob, bool) or isinstance(rank, bool):
            raise ParseError(f"malformed entry {e!r}", lineno)
        if not isinstance(prob, (int, float)) or not isinstance(rank, int):
            raise ParseError(f"malformed entry {e!r}", lineno)
        entries.append((token, float(prob), rank))
    try:
        return SubstituteDistribution(
            str(obj["context_id"]),
            Direction(obj["direction"]),
            tuple(entries),
            word=str(obj.get("word", "")),
            meta=dict(obj.get("meta") or {}),
        )
    except ValidationError as exc:
        raise ValidationError(str(exc), lineno) from None


def read_distribution_file(path: str | Path) -> list[SubstituteDistribution]:
    dists = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            dist = _parse_line(line, lineno)
            key = (dist.context_id, dist.direction)
            if key in seen:
                raise ValidationError(
                    f"second {dist.direction.value} distribution for {dist.context_id!r}", lineno
                )
            seen.add(key)
            dists.append(dist)
    return dists


def write_distribution_file(path: str | Path, dists: Iterable[SubstituteDistribution]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for d in dists:
            obj = {
                "context_id": d.context_id,
                "word": d.word,
                "direction": d.direction.value,
                "entries": [[t, p, r] for t, p, r in d.entries],
            }
            if d.meta:
                obj["meta"] = d.meta
            f.write(json.dumps(obj, ensure_ascii=False) + "\n")
