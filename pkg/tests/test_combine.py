
import pytest
from hypothesis import given, settings, strategies as st

from subwsi.combine import (
    CombineConfig,
    alpha,
    combine_avg,
    combine_bayes,
    combine_pos_weighted,
    make_representatives,
    renormalize_top_k,
)
from subwsi.errors import ConfigError, DomainError, NoSubstitutesError
from subwsi.sources import Direction, SubstituteDistribution

from conftest import make_dist


def scores(scored):
    return {t: s for t, s in scored}


def test_renormalize_top_k():
    d = make_dist("c", "fwd", {"a": 0.2, "b": 0.2})
    assert [(t, p) for t, p, _ in renormalize_top_k(d, 2).entries] == [("a", 0.5), ("b", 0.5)]
    d = make_dist("c", "fwd", {"a": 0.4, "b": 0.2, "c": 0.1})
    out = renormalize_top_k(d, 2).entries
    assert [t for t, _, _ in out] == ["a", "b"]
    assert [p for _, p, _ in out] == pytest.approx([2 / 3, 1 / 3])
    assert len(renormalize_top_k(d, 10).entries) == 3
    with pytest.raises(NoSubstitutesError):
        renormalize_top_k(SubstituteDistribution("c", Direction.FORWARD, ()), 3)


def test_avg():
    f = make_dist("c", "fwd", {"a": 0.6, "b": 0.4})
    b = make_dist("c", "bwd", {"a": 0.2, "b": 0.8})
    assert scores(combine_avg(f, b)) == pytest.approx({"a": 0.4, "b": 0.6})
    assert [t for t, _ in combine_avg(f, b)] == ["b", "a"]
    disjoint = combine_avg(make_dist("c", "fwd", {"a": 1.0}), make_dist("c", "bwd", {"b": 1.0}))
    assert scores(disjoint) == pytest.approx({"a": 0.5, "b": 0.5})
    assert scores(combine_avg(f, make_dist("c", "bwd", {"a": 0.6, "b": 0.4}))) == pytest.approx(f.as_dict())
    empty = SubstituteDistribution("c", Direction.FORWARD, ())
    with pytest.raises(NoSubstitutesError):
        combine_avg(empty, SubstituteDistribution("c", Direction.BACKWARD, ()))


@pytest.mark.parametrize("pos, expected", [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (0.95, 0.75)])
def test_alpha_values(pos, expected):
    assert abs(alpha(pos, 0.1) - expected) < 1e-12


def test_alpha_domain():
    with pytest.raises(DomainError):
        alpha(1.2, 0.1)
    with pytest.raises(DomainError):
        alpha(-0.1, 0.1)


def test_pos_weighted_reductions():
    f = make_dist("c", "fwd", {"a": 0.6, "b": 0.4})
    b = make_dist("c", "bwd", {"c": 0.7, "b": 0.3})
    assert combine_pos_weighted(f, b, 0.5, 0.1) == combine_avg(f, b)
    assert scores(combine_pos_weighted(f, b, 1.0, 0.1)) == pytest.approx(f.as_dict())
    assert scores(combine_pos_weighted(f, b, 0.0, 0.1)) == pytest.approx(b.as_dict())


def test_bayes_prefers_rarer_word():
    f = make_dist("c", "fwd", {"common": 0.2, "rare": 0.1}, ranks={"common": 10, "rare": 100})
    b = make_dist("c", "bwd", {"common": 0.2, "rare": 0.2}, ranks={"common": 10, "rare": 100})
    out = combine_bayes(f, b, 2.0)
    assert out[0] == ("rare", pytest.approx(200.0))
    assert out[1] == ("common", pytest.approx(4.0))


def test_bayes_z_zero_orders_by_product():
    f = make_dist("c", "fwd", {"x": 0.5, "y": 0.3, "w": 0.1}, ranks={"x": 9, "y": 1, "w": 4})
    b = make_dist("c", "bwd", {"x": 0.1, "y": 0.4, "w": 0.2}, ranks={"x": 9, "y": 1, "w": 4})
    assert [t for t, _ in combine_bayes(f, b, 0.0)] == ["y", "x", "w"]


def test_bayes_empty_intersection():
    f = make_dist("c", "fwd", {"a": 1.0})
    b = make_dist("c", "bwd", {"b": 1.0})
    with pytest.raises(NoSubstitutesError):
        combine_bayes(f, b, 2.0)
    [rep] = make_representatives(f, b, CombineConfig("bayes-comb", top_k=5))
    assert rep.fallback and set(rep.substitutes) == {"a", "b"}


def test_sampling_shape_and_seeding():
    f = make_dist("c", "fwd", {"a": 0.5, "b": 0.3, "c": 0.2})
    b = make_dist("c", "bwd", {"d": 0.6, "a": 0.4})
    cfg = CombineConfig("sampling", top_k=3, num_representatives=20, sample_size=15, rng_seed=1)
    reps = make_representatives(f, b, cfg)
    assert len(reps) == 20 and all(len(r.substitutes) == 30 for r in reps)
    assert set(reps[0].substitutes[:15]) <= {"a", "b", "c"}
    assert set(reps[0].substitutes[15:]) <= {"d", "a"}
    assert make_representatives(f, b, cfg) == reps
    other = make_representatives(f, b, CombineConfig("sampling", top_k=3, rng_seed=2))
    assert other != reps


def test_base_union():
    f = make_dist("c", "fwd", {"a": 0.5, "b": 0.3, "x": 0.1})
    b = make_dist("c", "bwd", {"b": 0.5, "c": 0.3, "y": 0.1})
    [rep] = make_representatives(f, b, CombineConfig("base-union", top_k=2))
    assert sorted(rep.substitutes) == ["a", "b", "c"]


def test_bayes_top_k_bound():
    probs = {f"t{i}": 1.0 / 300 for i in range(300)}
    f = make_dist("c", "fwd", probs)
    b = make_dist("c", "bwd", probs)
    [rep] = make_representatives(f, b, CombineConfig("bayes-comb", top_k=200))
    assert len(rep.substitutes) == 200


def test_config_validation():
    with pytest.raises(ConfigError):
        CombineConfig("median")
    with pytest.raises(ConfigError):
        CombineConfig(top_k=0)
    with pytest.raises(ConfigError):
        CombineConfig(beta=0.7)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0.01, 0.5))
def test_alpha_in_unit_interval_and_monotone(pos, beta):
    a = alpha(pos, beta)
    assert 0.0 <= a <= 1.0
    assert alpha(min(1.0, pos + 0.01), beta) >= a - 1e-12


probs_st = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8)


@settings(max_examples=100, deadline=None)
@given(probs_st, probs_st, st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0, 3))
def test_bayes_order_invariant_to_rescaling(pf, pb, sf, sb, z):
    n = min(len(pf), len(pb))
    toks = [f"w{i}" for i in range(n)]
    ranks = {t: i + 1 for i, t in enumerate(toks)}

    def build(direction, ps, scale):
        total = sum(ps[:n]) * max(scale, 1.0)
        return make_dist("c", direction, {t: p / total for t, p in zip(toks, ps)}, ranks)

    base = combine_bayes(build("fwd", pf, 1.0), build("bwd", pb, 1.0), z)
    scaled = combine_bayes(build("fwd", pf, sf), build("bwd", pb, sb), z)
    assert [t for t, _ in base] == [t for t, _ in scaled]
