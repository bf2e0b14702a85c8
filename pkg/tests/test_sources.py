import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subwsi.errors import ConfigError, DomainError, ParseError, ValidationError
from subwsi.sources import (
    Direction,
    Occurrence,
    SubstituteDistribution,
    predict_substitutes,
    query_tokens,
    read_distribution_file,
    train_toy_lm,
    write_distribution_file,
)


def occ_at(context, target, cid="c1", word=None):
    begin = context.index(target)
    return Occurrence(cid, word or target, context, (begin, begin + len(target)))


def test_add_one_bigram_probability():
    lm = train_toy_lm([["a", "b", "a", "c"]], order=2, direction=Direction.FORWARD, smoothing_k=1.0)
    assert sorted(lm.vocab) == ["a", "b", "c"]
    # "a" is followed once by "b" and once by "c"
    assert lm.prob("b", ("a",)) == pytest.approx(0.4)
    assert lm.rank("a") == 1


def test_empty_corpus_rejected():
    with pytest.raises(ConfigError):
        train_toy_lm([], 2, Direction.FORWARD, 1.0)


def test_predict_top_k_after_a():
    lm = train_toy_lm([["a", "b", "a", "c", "a", "b"]], 2, Direction.FORWARD, 1.0)
    occ = occ_at("x a TARGET y", "TARGET")
    d = predict_substitutes(lm, occ, 2)
    assert d.tokens == ["b", "c"]
    probs = [p for _, p, _ in d.entries]
    assert probs == sorted(probs, reverse=True)


def test_top_k_truncates_to_vocab():
    lm = train_toy_lm([["a", "b", "a", "c"]], 2, Direction.FORWARD, 1.0)
    d = predict_substitutes(lm, occ_at("a T", "T"), len(lm.vocab) + 10)
    assert len(d) == len(lm.vocab)


def test_pattern_forward_query():
    occ = occ_at("These apples are sold", "apples")
    assert query_tokens(occ, "fwd", use_pattern=True) == ["these", "apples", "and"]
    assert query_tokens(occ, "bwd", use_pattern=True) == ["and", "apples", "are", "sold"]
    assert query_tokens(occ, "fwd") == ["these"]
    assert query_tokens(occ, "bwd") == ["are", "sold"]


def test_occurrence_span_validation():
    with pytest.raises(DomainError):
        Occurrence("c", "w", "short", (10, 15))
    occ = Occurrence("c", "w", "left word right", (5, 9))
    assert (occ.left, occ.target, occ.right) == ("left ", "word", " right")
    assert occ.position == pytest.approx(5 / 15)


def test_distribution_validation():
    with pytest.raises(ValidationError):
        SubstituteDistribution("c", Direction.FORWARD, (("a", 0.5, 1), ("a", 0.2, 2)))
    with pytest.raises(ValidationError):
        SubstituteDistribution("c", Direction.FORWARD, (("a", 0.0, 1),))
    with pytest.raises(ValidationError):
        SubstituteDistribution("c", Direction.FORWARD, (("a", 1.5, 1),))


def test_distribution_file_round_trip(tmp_path):
    dists = [
        SubstituteDistribution("c1", Direction.FORWARD, (("печать", 0.3, 50),), word="штамп"),
        SubstituteDistribution("c1", Direction.BACKWARD, (("печать", 0.2, 50), ("клеймо", 0.1, 900)),
                               word="штамп", meta={"add_bias": True}),
    ]
    path = tmp_path / "d.jsonl"
    write_distribution_file(path, dists)
    back = read_distribution_file(path)
    assert back == dists
    assert {d.context_id for d in back} == {"c1"}


def test_distribution_file_errors(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = json.dumps({"context_id": "c", "direction": "fwd", "entries": [["a", 0.3, 1]]})
    path.write_text(good + "\n{not json\n", encoding="utf-8")
    with pytest.raises(ParseError, match="line 2"):
        read_distribution_file(path)
    dup = json.dumps({"context_id": "c", "direction": "fwd", "entries": [["a", 0.3, 1], ["a", 0.1, 2]]})
    path.write_text(dup + "\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="line 1"):
        read_distribution_file(path)
    path.write_text(good + "\n" + good + "\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="line 2"):
        read_distribution_file(path)


token_lists = st.lists(st.lists(st.sampled_from("abcde"), min_size=1, max_size=8), min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(token_lists, st.sampled_from([2, 3]), st.floats(0.01, 2.0), st.lists(st.sampled_from("abcdex"), max_size=3))
def test_probabilities_sum_to_one(corpus, order, k, history):
    for direction in Direction:
        lm = train_toy_lm(corpus, order, direction, k)
        assert lm.probabilities(lm.history(history)).sum() == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(token_lists, st.sampled_from([2, 3]))
def test_backward_equals_forward_on_reversed_corpus(corpus, order):
    bwd = train_toy_lm(corpus, order, Direction.BACKWARD, 0.5)
    fwd = train_toy_lm([s[::-1] for s in corpus], order, Direction.FORWARD, 0.5)
    assert bwd.vocab == fwd.vocab
    for hist in (["a"], ["b", "c"], []):
        np.testing.assert_allclose(bwd.probabilities(bwd.history(hist)), fwd.probabilities(fwd.history(hist)))


@settings(max_examples=40, deadline=None)
@given(token_lists, st.integers(1, 8))
def test_prediction_order_is_deterministic(corpus, top_k):
    lm = train_toy_lm(corpus, 2, Direction.FORWARD, 1.0)
    d = predict_substitutes(lm, occ_at("a T", "T"), top_k)
    keys = [(-p, r, t) for t, p, r in d.entries]
    assert keys == sorted(keys)
