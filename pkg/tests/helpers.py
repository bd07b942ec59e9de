"""Shared checks used by unit and acceptance tests."""

import numpy as np

from quantpolar.dist import SymmetricDist, ThreeLevelState
from quantpolar.evolve3 import transform_minus, transform_plus
from quantpolar.quantd import (
    StaticPolicy,
    minsum_spacing,
    proper_static_pair,
    proper_static_single,
    self_boxplus,
    single_feasibility_threshold,
    transform_d,
)


def _raw_sign_state(dist: SymmetricDist):
    p = float(dist.p.sum()) if dist.d else 0.0
    m = float(dist.m.sum()) if dist.d else 0.0
    return np.array([p, m, dist.z])


def aggregated_vs_three_level(alphas, masses, construction: str, depth: int) -> float:
    """Largest per-component gap between the aggregated D-level evolution and
    three-level evolution of the aggregate, over all ``2^depth`` branches.

    ``masses`` is ``(z, p_1, m_1, ..., p_d, m_d)`` on the support ``{0, +-alpha_i}``.
    """
    levels = tuple((a, masses[1 + 2 * i], masses[2 + 2 * i]) for i, a in enumerate(alphas))
    dist0 = SymmetricDist(masses[0], levels)
    if construction == "pair":
        plus, minus = proper_static_pair(alphas)
        policy = StaticPolicy(plus, minus)
    else:
        policy = StaticPolicy(proper_static_single(alphas))
    s0 = ThreeLevelState(*_raw_sign_state(dist0))

    worst = 0.0
    stack = [(dist0, s0, 0)]
    while stack:
        dist, s, k = stack.pop()
        worst = max(worst, float(np.max(np.abs(_raw_sign_state(dist) - np.array(s.as_tuple())))))
        if k == depth:
            continue
        stack.append((transform_d(dist, "+", policy), transform_plus(s), k + 1))
        stack.append((transform_d(dist, "-", policy), transform_minus(s), k + 1))
    return worst


def random_feasible_alphas(rng: np.random.Generator, d: int, construction: str) -> list:
    if construction == "pair":
        a1 = rng.uniform(0.2, 4.0)
        hi = 2 * a1
    else:
        a1 = rng.uniform(single_feasibility_threshold() + 0.05, 5.0) if d > 1 else rng.uniform(0.2, 4.0)
        hi = 2 * self_boxplus(a1)
    rest = np.sort(rng.uniform(a1, hi, size=d - 1))
    return [a1, *rest.tolist()]


def random_masses(rng: np.random.Generator, d: int) -> list:
    w = rng.dirichlet(np.ones(2 * d + 1))
    # put the larger mass of each level on the positive side
    for i in range(d):
        a, b = w[1 + 2 * i], w[2 + 2 * i]
        w[1 + 2 * i], w[2 + 2 * i] = max(a, b), min(a, b)
    return w.tolist()


def random_minsum_support(rng: np.random.Generator, size: int) -> list:
    out = [rng.uniform(0.05, 3.0)]
    for _ in range(size - 1):
        out.append(minsum_spacing(out[-1]) + rng.exponential(0.5) + 1e-6)
    return out
