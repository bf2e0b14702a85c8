import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.feature_extraction.text import TfidfTransformer

from subwsi.combine import Representative
from subwsi.errors import NoSubstitutesError, ParseError, ValidationError
from subwsi.vectorize import (
    Lemmatizer,
    SparseVector,
    VectorizeConfig,
    build_vocab,
    tfidf_scale,
    to_bow,
    to_csr,
    vectorize_word,
)


def rep(*tokens):
    return Representative("c", tuple(tokens))


def test_vocab_collapses_lemmas():
    lem = Lemmatizer({"making": "make"})
    assert build_vocab([rep("making", "make")], lem, "w", VectorizeConfig()) == {"make": 0}


def test_vocab_excludes_target():
    vocab = build_vocab([rep("штамп", "печать")], Lemmatizer(), "штамп", VectorizeConfig(exclude_target=True))
    assert vocab == {"печать": 0}
    vocab = build_vocab([rep("штамп", "печать")], Lemmatizer(), "штамп", VectorizeConfig(exclude_target=False))
    assert vocab == {"печать": 0, "штамп": 1}


def test_vocab_all_excluded():
    with pytest.raises(NoSubstitutesError, match="w"):
        build_vocab([rep("w"), rep()], Lemmatizer(), "w", VectorizeConfig())


def test_empty_lemmatizer_file_is_identity(tmp_path):
    path = tmp_path / "lem.tsv"
    path.write_text("", encoding="utf-8")
    lem = Lemmatizer.from_file(path)
    assert build_vocab([rep("b", "a", "b")], lem, "x", VectorizeConfig()) == {"a": 0, "b": 1}


def test_lemmatizer_file(tmp_path):
    path = tmp_path / "lem.tsv"
    path.write_text("печати\tпечать\nmaking\tmake\n", encoding="utf-8")
    lem = Lemmatizer.from_file(path)
    assert lem("печати") == "печать" and lem("other") == "other"
    path.write_text("only-one-column\n", encoding="utf-8")
    with pytest.raises(ParseError, match="line 1"):
        Lemmatizer.from_file(path)


def test_lemmatizer_chains_and_cycles():
    lem = Lemmatizer({"a": "b", "b": "c"})
    assert lem("a") == "c" and lem(lem("a")) == lem("a")
    with pytest.raises(ValidationError):
        Lemmatizer({"a": "b", "b": "a"})


def test_bow_counts():
    v = to_bow(rep("a", "a", "b"), {"a": 0, "b": 1}, Lemmatizer())
    assert v.indices.tolist() == [0, 1] and v.values.tolist() == [2, 1]
    assert to_bow(rep(), {"a": 0}, Lemmatizer()).nnz == 0
    assert to_bow(rep("c"), {"a": 0}, Lemmatizer()).nnz == 0


def test_sparse_vector_invariants():
    with pytest.raises(ValueError):
        SparseVector(np.array([1, 0]), np.array([1.0, 1.0]), 3)
    with pytest.raises(ValueError):
        SparseVector(np.array([0]), np.array([0.0]), 3)
    with pytest.raises(ValueError):
        SparseVector(np.array([3]), np.array([1.0]), 3)


def test_idf_values():
    vocab = {"a": 0, "b": 1}
    vecs = [to_bow(rep("a", "b"), vocab, Lemmatizer()), to_bow(rep("a"), vocab, Lemmatizer())]
    out = tfidf_scale(vecs)
    assert out[0].values[0] == pytest.approx(1.0)
    assert out[0].values[1] == pytest.approx(math.log(1.5) + 1)
    assert out[0].values[1] == pytest.approx(1.405, abs=5e-4)
    assert tfidf_scale([SparseVector(np.array([], int), np.array([]), 2)])[0].nnz == 0


bags = st.lists(st.lists(st.sampled_from("abcdefg"), max_size=10), min_size=1, max_size=8)


@settings(max_examples=100, deadline=None)
@given(bags)
def test_tfidf_matches_sklearn(docs):
    reps = [rep(*d) for d in docs]
    try:
        vectors, vocab = vectorize_word(reps, Lemmatizer(), "zzz", VectorizeConfig(use_tfidf=True))
    except NoSubstitutesError:
        assert all(not d for d in docs)
        return
    raw, _ = vectorize_word(reps, Lemmatizer(), "zzz", VectorizeConfig())
    ref = TfidfTransformer(norm=None, smooth_idf=True).fit_transform(to_csr(raw)).toarray()
    np.testing.assert_allclose(to_csr(vectors).toarray(), ref, rtol=1e-12)
    for v, r in zip(vectors, raw):
        assert np.array_equal(v.indices, r.indices)
        assert np.all(v.values >= r.values)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["run", "runs", "ran", "walk", "walks", "x"]), max_size=12))
def test_lemmatize_then_count_equals_count_then_merge(tokens):
    lem = Lemmatizer({"runs": "run", "ran": "run", "walks": "walk"})
    try:
        vocab = build_vocab([rep(*tokens)], lem, "x", VectorizeConfig())
    except NoSubstitutesError:
        return
    v = to_bow(rep(*tokens), vocab, lem)
    merged = {}
    for t in tokens:
        if lem(t) != "x":
            merged[lem(t)] = merged.get(lem(t), 0) + 1
    assert {k: int(v.values[list(v.indices).index(i)]) for k, i in vocab.items()} == merged
