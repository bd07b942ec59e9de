"""End-to-end acceptance checks, one test per criterion.

Each criterion prints a ``[PASS]``/``[FAIL]`` line; the lines are collected
and repeated in the pytest terminal summary. Run this file directly with
``python tests/test_acceptance.py`` to get the lines without pytest.
"""

import math
import time

import numpy as np
import pytest

from quantpolar.bounds import branch_means, gamma_bracket, plain_sign_rate, rate_search_dynamic
from quantpolar.bounds import rate_search_static_pair, verify_submartingale
from quantpolar.codec import CodeConfig, construct_frozen, fer_sim, genie_aided_bit_error, k_for_target, union_bound
from quantpolar.dist import SymmetricDist, ThreeLevelState, mutual_information_d
from quantpolar.evolve3 import dominance_margin, in_region_pm, minus_step, plus_step, random_states
from quantpolar.montecarlo import decay_exponent, ratio_statistic, sample_trajectories, weak_polarization_stats
from quantpolar.quantd import StaticPolicy, minsum_check, uniform_quantizer

try:
    from helpers import aggregated_vs_three_level, random_feasible_alphas, random_masses, random_minsum_support
except ImportError:  # direct execution from the repository root
    import sys
    from pathlib import Path

    sys.path.insert(0, str(Path(__file__).parent))
    from helpers import aggregated_vs_three_level, random_feasible_alphas, random_masses, random_minsum_support

RESULTS = {}


def _record(num, title, passed, detail, elapsed, budget):
    passed = bool(passed) and elapsed <= budget
    line = f"[{'PASS' if passed else 'FAIL'}] {num:>2} {title}: {detail} ({elapsed:.1f}s / {budget:.0f}s)"
    RESULTS[num] = line
    print(line)
    return passed


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def conservation():
    rng = np.random.default_rng(101)
    p, m, z = random_states(rng, 10**6)
    worst_sum, worst_neg, orient = 0.0, 0.0, True
    for step in (plus_step, minus_step):
        a, b, c = step(p, m, z)
        worst_sum = max(worst_sum, float(np.max(np.abs(a + b + c - 1))))
        worst_neg = min(worst_neg, float(min(a.min(), b.min(), c.min())))
        orient &= bool(np.all(a >= b))
    return worst_sum <= 1e-12 and worst_neg >= 0 and orient, f"max |sum-1|={worst_sum:.2e}, min mass={worst_neg:.1e}"


def region_laws():
    rng = np.random.default_rng(202)
    p, m, z = random_states(rng, 10**6)
    pp, mp_, _ = plus_step(p, m, z)
    bad_a = int(np.count_nonzero(~in_region_pm(pp, mp_, 1e-9)))
    chunks, have = [], 0
    while have < 10**6:
        p, m, z = random_states(rng, 10**6)
        keep = in_region_pm(p, m, 0.0)
        chunks.append((p[keep], m[keep], z[keep]))
        have += int(keep.sum())
    p, m, z = (np.concatenate(c)[: 10**6] for c in zip(*chunks))
    bad_b = 0
    for step in (plus_step, minus_step):
        a, b, _ = step(p, m, z)
        bad_b += int(np.count_nonzero(~in_region_pm(a, b, 1e-9)))
    return bad_a == 0 and bad_b == 0, f"(a) {bad_a} outside, (b) {bad_b} outside"


def martingales():
    rng = np.random.default_rng(303)
    p, m, z = random_states(rng, 10**5)
    pp, mp_, zp = plus_step(p, m, z)
    pm, mm, zm = minus_step(p, m, z)
    e1 = float(np.max(np.abs((zp + zm) / 2 - z - m * p)))
    e2 = float(np.max(np.abs(m - (mp_ + mm) / 2 - m * m / 2)))
    w_i = verify_submartingale(1.0, 500, False, "super")
    w_sq = verify_submartingale(2.0, 500, False, "sub")
    w_124 = verify_submartingale(1.24, 500, True, "sub")
    ok = e1 <= 1e-12 and e2 <= 1e-12 and min(w_i, w_sq, w_124) >= -1e-10
    return ok, f"identities {e1:.1e}/{e2:.1e}; worst I {w_i:.1e}, I^2 {w_sq:.1e}, I^1.24 on region {w_124:.1e}"


def bound_ordering():
    rng = np.random.default_rng(404)
    p, m, z = random_states(rng, 100)
    worst_lo, worst_hi, worst_gap = math.inf, math.inf, -math.inf
    for s in (ThreeLevelState(*t) for t in zip(p, m, z)):
        hist = gamma_bracket(s, 1e-300, n_max=12).history
        for n, lower, upper in hist:
            worst_lo = min(worst_lo, lower - branch_means(s, n)[0])
            worst_hi = min(worst_hi, upper - lower)
        gaps = np.array([u - lo for _, lo, u in hist])
        worst_gap = max(worst_gap, float(np.max(np.diff(gaps))))
    ok = worst_lo >= -1e-12 and worst_hi >= -1e-12 and worst_gap <= 1e-12
    return ok, f"min(F-E[I^2])={worst_lo:.1e}, min(E[I]-F)={worst_hi:.1e}, max gap increase={worst_gap:.1e}"


def minsum_exactness():
    rng = np.random.default_rng(505)
    mismatches = sum(not minsum_check(random_minsum_support(rng, int(rng.integers(1, 5)))) for _ in range(1000))
    return mismatches == 0, f"{mismatches} mismatching supports out of 1000"


def aggregated_equivalence():
    rng = np.random.default_rng(606)
    worst = 0.0
    cases = 0
    for construction in ("pair", "single"):
        for d in (2, 3):
            for _ in range(3):
                alphas = random_feasible_alphas(rng, d, construction)
                worst = max(worst, aggregated_vs_three_level(alphas, random_masses(rng, d), construction, 10))
                cases += 1
    return worst <= 1e-12, f"{cases} cases x 2^10 branches, max component gap {worst:.1e}"


def golden_ratio():
    ens = sample_trajectories(ThreeLevelState(0.9, 0.01, 0.09), 24, 10**5, 20240607)
    r = ratio_statistic(ens, 0.15, 1e-6)
    d = decay_exponent(ens, 1e-6)
    ok = r.fraction_cutoff >= 0.9 and 0.25 <= d.median <= 0.42
    return ok, (f"{r.fraction_cutoff:.4f} of {r.n_cutoff} within 0.15 of phi; median exponent {d.median:.4f} "
                f"(reference {d.reference:.5f}); unconditional {r.fraction_all:.4f}")


def weak_polarization():
    dist0 = SymmetricDist(0.05, ((0.5, 0.3, 0.1), (1.5, 0.4, 0.05), (3.0, 0.08, 0.02)))
    policy = StaticPolicy(uniform_quantizer(1.0, 2))
    w = weak_polarization_stats(dist0, policy, 20, 10**4, 8)
    ok = w.median_pm[-1] <= 1e-3 and w.median_min_z[-1] <= 0.05
    return ok, f"median sum p_i m_i={w.median_pm[-1]:.2e}, median min(Z,1-Z)={w.median_min_z[-1]:.2e}"


def codec_vs_density_evolution():
    ch = ThreeLevelState(0.9, 0.01, 0.09)
    g = genie_aided_bit_error(CodeConfig(8, channel=ch), 10**5, 909)
    inside = int(g.within_sigma(3.0).sum())
    k = k_for_target(ch, 8, 1e-2)
    cfg = CodeConfig(8, construct_frozen(ch, 8, k), "coin", ch)
    ub = union_bound(ch, 8, cfg.frozen)
    res = fer_sim(cfg, 10**5, 910)
    sigma = math.sqrt(ub * (1 - ub) / res.trials)
    ok = inside == 256 and res.fer <= ub + 3 * sigma
    return ok, f"{inside}/256 indices within 3 sigma; FER {res.fer:.4f} vs union bound {ub:.4f} (k={k})"


def dominance():
    t = np.linspace(1 / 3, 1, 10**4)
    worst = float(dominance_margin(t).min())
    return worst >= -1e-12, f"min margin {worst:.2e}"


def rate_ordering():
    dist = SymmetricDist(0.05, ((0.3, 0.3, 0.15), (2.5, 0.45, 0.05)))
    n = 8
    plain = plain_sign_rate(dist, n)
    pair = rate_search_static_pair(dist, n).rate
    dyn = rate_search_dynamic(dist, n).rate
    cap = mutual_information_d(dist)
    ok = plain <= pair <= dyn <= cap
    return ok, f"plain {plain:.6f} <= static pair {pair:.6f} <= dynamic {dyn:.6f} <= I {cap:.6f}"


CRITERIA = [
    (1, "conservation and validity", conservation, 30),
    (2, "region laws", region_laws, 120),
    (3, "martingale identities and grid checks", martingales, 600),
    (4, "bound ordering", bound_ordering, 600),
    (5, "min-sum exactness", minsum_exactness, 600),
    (6, "aggregated D-level equivalence", aggregated_equivalence, 600),
    (7, "golden-ratio rate", golden_ratio, 300),
    (8, "weak polarization", weak_polarization, 120),
    (9, "codec vs density evolution", codec_vs_density_evolution, 600),
    (10, "curve dominance", dominance, 600),
    (11, "rate search ordering", rate_ordering, 600),
]


@pytest.mark.parametrize("num, title, check, budget", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, title, check, budget):
    (passed, detail), elapsed = _timed(check)
    assert _record(num, title, passed, detail, elapsed, budget), RESULTS[num]


if __name__ == "__main__":
    failed = 0
    for num, title, check, budget in CRITERIA:
        (passed, detail), elapsed = _timed(check)
        failed += not _record(num, title, passed, detail, elapsed, budget)
    raise SystemExit(1 if failed else 0)
