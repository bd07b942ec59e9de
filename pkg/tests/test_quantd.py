import numpy as np
import pytest
from helpers import aggregated_vs_three_level, random_feasible_alphas, random_masses, random_minsum_support
from hypothesis import given, settings, strategies as st

from quantpolar.dist import SymmetricDist, aggregate
from quantpolar.evolve3 import transform_minus, transform_plus
from quantpolar.quantd import (
    SIGN_POLICY,
    SIGN_QUANTIZER,
    DynamicPolicy,
    Quantizer,
    StaticPolicy,
    apply_quantizer,
    boxplus,
    conv_boxplus,
    conv_plus,
    minsum,
    minsum_check,
    minsum_quantizer,
    minsum_spacing,
    proper_static_pair,
    proper_static_single,
    remap_and_switch,
    self_boxplus,
    single_feasibility_threshold,
    transform_d,
    uniform_quantizer,
)

# mpmath, 40 digits
BOXPLUS_1_3 = 0.89122191687483724391
BOXPLUS_07_M25 = -0.58697572263635622246
LNCOSH = {0.5: 0.12011450695827752463, 1: 0.43378083048302718703, 2: 1.3250027473578644309,
          3: 2.3093285045777851401, 5: 4.3068982183392715552}
ACOSH_EXP = {0.5: 1.0850385019483877703, 1: 1.6574544541530772726, 2: 2.6885364973074748431,
             3: 3.6925269157013498472}
SINGLE_THRESHOLD = 1.2187557268720124631



@settings(max_examples=200, deadline=None)
@given(st.floats(-500, 500), st.floats(-500, 500))
def test_boxplus_matches_high_precision(a, b):
    mp = pytest.importorskip("mpmath")
    # the atanh form has no cancellation; 400 digits cover tanh(250) = 1 - 2e-217
    with mp.workdps(400):
        exact = 2 * mp.atanh(mp.tanh(mp.mpf(a) / 2) * mp.tanh(mp.mpf(b) / 2))
    assert boxplus(a, b) == pytest.approx(float(exact), rel=1e-13, abs=1e-300)

def test_boxplus_values():
    assert boxplus(1.0, 3.0) == pytest.approx(BOXPLUS_1_3, abs=1e-15)
    assert boxplus(-1.0, 3.0) == pytest.approx(-BOXPLUS_1_3, abs=1e-15)
    assert boxplus(0.7, -2.5) == pytest.approx(BOXPLUS_07_M25, abs=1e-15)
    assert boxplus(0.0, 5.0) == 0.0


@pytest.mark.parametrize("a", sorted(LNCOSH))
def test_self_boxplus_is_log_cosh(a):
    assert self_boxplus(a) == pytest.approx(LNCOSH[a], abs=1e-14)
    assert boxplus(a, a) == pytest.approx(LNCOSH[a], abs=1e-14)


def test_boxplus_is_finite_for_huge_inputs():
    assert boxplus(800.0, 900.0) == pytest.approx(800.0, abs=1e-9)
    assert boxplus(-800.0, 900.0) == pytest.approx(-800.0, abs=1e-9)
    assert self_boxplus(1000.0) == pytest.approx(1000.0 - np.log(2), abs=1e-9)


@settings(max_examples=300)
@given(st.floats(-30, 30), st.floats(-30, 30))
def test_boxplus_properties(a, b):
    x = boxplus(a, b)
    assert abs(x) <= min(abs(a), abs(b)) + 1e-12
    assert boxplus(b, a) == pytest.approx(x, abs=1e-12)
    assert np.sign(x) == np.sign(a) * np.sign(b) or abs(x) < 1e-12
    # tanh rule
    assert np.tanh(x / 2) == pytest.approx(np.tanh(a / 2) * np.tanh(b / 2), abs=1e-12)


def test_minsum_spacing_values():
    for a, v in ACOSH_EXP.items():
        assert minsum_spacing(a) == pytest.approx(v, abs=1e-14)


def test_quantizer_validation_and_evaluation():
    q = Quantizer(((0.5, 1.0), (1.5, 2.0)))
    assert q.levels == 5
    x = np.array([0.0, 0.3, 0.5, 1.0, 1.5, 7.0, -0.6, -2.0])
    assert q(x).tolist() == [0.0, 0.0, 1.0, 1.0, 2.0, 2.0, -1.0, -2.0]
    assert SIGN_QUANTIZER(0.0) == 0.0
    assert SIGN_QUANTIZER(-1e-300) == -1.0
    with pytest.raises(ValueError, match="strictly increasing"):
        Quantizer(((1.0, 1.0), (1.0, 2.0)))
    with pytest.raises(ValueError, match="proper"):
        Quantizer(((1.0, 1.0), (2.0, 1.0)))
    assert Quantizer(((1.0, 1.0), (2.0, 1.0)), proper=False).d == 2
    assert Quantizer.from_json(q.to_json()) == q


def test_uniform_quantizer_matches_rounding():
    q = uniform_quantizer(0.5, 3)
    x = np.linspace(-3, 3, 601)
    ref = 0.5 * np.clip(np.floor(np.abs(x) / 0.5 + 0.5), 0, 3) * np.sign(x)
    off_boundary = np.abs(np.abs(x) / 0.5 - np.round(np.abs(x) / 0.5) - 0.5) > 1e-9
    assert np.array_equal(q(x)[off_boundary], ref[off_boundary])


def test_convolutions_on_point_masses():
    pt = SymmetricDist(0.0, ((1.0, 1.0, 0.0),))
    assert conv_plus(pt, pt).levels == ((2.0, 1.0, 0.0),)
    lam, p, m = conv_boxplus(pt, pt).levels[0]
    assert (lam, p, m) == pytest.approx((LNCOSH[1], 1.0, 0.0), abs=1e-15)
    q = uniform_quantizer(1.0, 2)
    assert transform_d(pt, "+", StaticPolicy(q)).levels == ((2.0, 1.0, 0.0),)
    # 1 boxplus 1 = 0.434 falls below the first threshold 0.5
    assert transform_d(pt, "-", StaticPolicy(q)).z == 1.0


dists = st.integers(1, 3).flatmap(
    lambda d: st.tuples(
        st.lists(st.floats(0.1, 5.0), min_size=d, max_size=d, unique=True),
        st.lists(st.floats(0.01, 1.0), min_size=2 * d + 1, max_size=2 * d + 1),
    )
).filter(lambda t: min(np.diff(sorted(t[0])), default=1.0) > 1e-6).map(
    lambda t: SymmetricDist(
        t[1][0] / sum(t[1]),
        tuple((lam, t[1][1 + 2 * i] / sum(t[1]), t[1][2 + 2 * i] / sum(t[1])) for i, lam in enumerate(sorted(t[0]))),
    )
)


@settings(max_examples=100)
@given(dists)
def test_convolutions_conserve_mass_and_shrink(dist):
    for conv in (conv_plus(dist, dist), conv_boxplus(dist, dist)):
        _, w = conv.atoms()
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
    lam = dist.magnitudes
    a, b = np.meshgrid(np.concatenate((lam, -lam)), np.concatenate((lam, -lam)))
    assert np.all(np.abs(boxplus(a, b)) <= np.minimum(np.abs(a), np.abs(b)) + 1e-12)


@settings(max_examples=50)
@given(dists, st.sampled_from("+-"))
def test_sign_policy_matches_three_level(dist, sign):
    agg = aggregate(dist)
    out = aggregate(transform_d(dist, sign, SIGN_POLICY))
    ref = transform_plus(agg.state) if sign == "+" else transform_minus(agg.state)
    if dist.d == 1 or sign == "-":
        # sign of a sum is not a function of the input signs once d > 1
        assert out.state.as_tuple() == pytest.approx(ref.as_tuple(), abs=1e-12)


def test_erasure_is_absorbing():
    erased = SymmetricDist(1.0)
    for policy in (SIGN_POLICY, StaticPolicy(uniform_quantizer(0.7, 3))):
        for sign in "+-":
            assert transform_d(erased, sign, policy).z == 1.0


def test_proper_pair_constraints():
    plus, minus = proper_static_pair([1.0, 1.5, 1.9])
    assert plus.gammas.tolist() == [1.0, 1.5, 1.9]
    assert minus.alphas[0] == pytest.approx(LNCOSH[1], abs=1e-15)
    with pytest.raises(ValueError, match="2\\*alpha_1"):
        proper_static_pair([1.0, 2.0])
    with pytest.raises(ValueError, match="alpha_2 <= alpha_1"):
        proper_static_pair([1.0, 0.9])


def test_single_construction_threshold():
    assert single_feasibility_threshold() == pytest.approx(SINGLE_THRESHOLD, abs=1e-14)
    assert 2 * self_boxplus(SINGLE_THRESHOLD) == pytest.approx(SINGLE_THRESHOLD, abs=1e-12)
    # just above the threshold a second level fits, just below it does not
    a1 = SINGLE_THRESHOLD + 0.01
    proper_static_single([a1, 0.5 * (a1 + 2 * self_boxplus(a1))])
    a1 = SINGLE_THRESHOLD - 0.01
    with pytest.raises(ValueError):
        proper_static_single([a1, a1 + 1e-3])
    # d = 1 has no constraint
    assert proper_static_single([0.3]).d == 1


@pytest.mark.parametrize("construction, d, seed", [("pair", 2, 1), ("pair", 3, 2), ("single", 2, 3), ("single", 3, 4)])
def test_aggregated_evolution_matches_three_level(construction, d, seed):
    rng = np.random.default_rng(seed)
    for _ in range(3):
        alphas = random_feasible_alphas(rng, d, construction)
        assert aggregated_vs_three_level(alphas, random_masses(rng, d), construction, 6) <= 1e-12


def test_minsum_examples():
    assert minsum_check([1.0, 2.0])
    assert minsum_check([0.5, 2.0])
    with pytest.raises(ValueError, match="alpha_2"):
        minsum_check([2.0, 2.3])
    with pytest.raises(ValueError, match="alpha_3"):
        minsum_quantizer([0.5, 1.2, 1.3])


def test_minsum_exact_on_random_supports():
    rng = np.random.default_rng(5)
    for _ in range(100):
        support = random_minsum_support(rng, int(rng.integers(1, 5)))
        assert minsum_check(support)


def test_minsum_fails_when_spacing_is_violated():
    # 1.2 is inside the spacing bound of 1; a far level pushes 1 boxplus 10
    # above the threshold of the 1.2 level
    support = [1.0, 1.2, 10.0]
    assert support[1] < minsum_spacing(support[0])
    signed = np.array(support + [-x for x in support])
    a, b = np.meshgrid(signed, signed)
    q = Quantizer(tuple((self_boxplus(x), x) for x in support))
    assert not np.array_equal(q(boxplus(a, b)), minsum(a, b))


def test_spacing_is_sufficient_not_necessary():
    support = [0.5, 0.9]
    assert support[1] < minsum_spacing(support[0])
    signed = np.array(support + [-x for x in support])
    a, b = np.meshgrid(signed, signed)
    q = Quantizer(tuple((self_boxplus(x), x) for x in support))
    assert np.array_equal(q(boxplus(a, b)), minsum(a, b))


def test_remap_and_switch_examples():
    d = SymmetricDist(0.1, ((1.0, 0.2, 0.5), (2.0, 0.19, 0.01)))
    assert remap_and_switch(d).as_tuple() == pytest.approx((0.69, 0.21, 0.1), abs=1e-15)
    assert remap_and_switch(SymmetricDist(1.0)).as_tuple() == (0.0, 0.0, 1.0)
    e = SymmetricDist(0.1, ((1.0, 0.5, 0.2), (2.0, 0.19, 0.01)))
    assert remap_and_switch(e) == aggregate(e).state


def test_policy_contract_is_enforced():
    dist = SymmetricDist(0.0, ((1.0, 0.9, 0.1),))
    with pytest.raises(TypeError):
        transform_d(dist, "+", DynamicPolicy(lambda c, s: "nope", 1))
    with pytest.raises(ValueError, match="declared"):
        transform_d(dist, "+", DynamicPolicy(lambda c, s: uniform_quantizer(1.0, 3), 1))
    with pytest.raises(ValueError, match="sign"):
        transform_d(dist, "x", SIGN_POLICY)


def test_apply_quantizer_merges_to_zero():
    dist = SymmetricDist(0.2, ((0.3, 0.3, 0.1), (1.0, 0.3, 0.1)))
    out = apply_quantizer(dist, uniform_quantizer(1.0, 1))
    assert out.z == pytest.approx(0.6, abs=1e-15)
    assert out.d == 1
    assert out.levels[0] == pytest.approx((1.0, 0.3, 0.1), abs=1e-15)


def test_threshold_tie_lands_on_level():
    # alpha boxplus alpha sits exactly on the minus threshold
    _, minus = proper_static_pair([1.0, 1.5])
    assert minus(boxplus(1.5, 1.5)) == 1.5
    assert minus(boxplus(1.0, 1.0)) == 1.0
