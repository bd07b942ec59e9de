"""Lower bounds on the fraction of lossless quantized statistics.

``F_n`` averages ``I^1.24`` over all ``2^n`` synthetic branches (the
all-minus branch uses ``I^2`` when the start lies outside the region under
the limiting curve). The mean of ``I`` over the same branches is an upper
bound, so the two bracket the achievable fraction.

Branch ``k`` of depth ``n`` is the sign sequence given by the binary digits
of ``k``, most significant first, with ``1`` meaning ``+``. Index 0 is the
all-minus branch.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

import numpy as np

from .dist import SymmetricDist, ThreeLevelState, mutual_information_pm
from .evolve3 import in_region_pm, minus_step, plus_step
from .quantd import (
    Quantizer,
    conv_boxplus,
    conv_plus,
    minsum_spacing,
    proper_static_pair,
    proper_static_single,
    self_boxplus,
    single_feasibility_threshold,
)

EXPONENT = 1.24
BRANCH_CAP = 22
_CHUNK_DEPTH = 18


@dataclass(frozen=True)
class GammaBracket:
    lower: float
    upper: float
    n_used: int
    history: tuple[tuple[int, float, float], ...] = ()

    @property
    def gap(self) -> float:
        return self.upper - self.lower


class StaticSearchResult(NamedTuple):
    rate: float
    alphas: tuple[float, ...]


class DynamicSearchResult(NamedTuple):
    rate: float
    plus: Quantizer | None
    minus: Quantizer | None


def expand(p, m, z, depth: int):
    """All ``2^depth`` descendants of each input state, in branch order."""
    p, m, z = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (p, m, z))
    for _ in range(depth):
        mp_, mm_, mz_ = minus_step(p, m, z)
        pp_, pm_, pz_ = plus_step(p, m, z)
        p = np.stack((mp_, pp_), axis=-1).ravel()
        m = np.stack((mm_, pm_), axis=-1).ravel()
        z = np.stack((mz_, pz_), axis=-1).ravel()
    return p, m, z


def branch_chunks(s: ThreeLevelState, n: int, cap: int = BRANCH_CAP) -> Iterator[tuple[np.ndarray, ...]]:
    """Yield the depth-``n`` branch states in order, in chunks of ``<= 2^18``."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n > cap:
        raise ValueError(f"n={n} exceeds the branch enumeration cap of {cap}")
    head = max(0, n - _CHUNK_DEPTH)
    roots = expand(s.p, s.m, s.z, head)
    for r in range(len(roots[0])):
        yield expand(roots[0][r], roots[1][r], roots[2][r], n - head)


def branch_states(s: ThreeLevelState, n: int, cap: int = BRANCH_CAP):
    return tuple(np.concatenate(parts) for parts in zip(*branch_chunks(s, n, cap)))


def f0(s: ThreeLevelState, exponent: float = EXPONENT) -> float:
    if in_region_pm(s.p, s.m):
        return float(mutual_information_pm(s.p, s.m) ** exponent)
    pp, pm_, _ = plus_step(s.p, s.m, s.z)
    mp_, mm_, _ = minus_step(s.p, s.m, s.z)
    return 0.5 * mutual_information_pm(pp, pm_) ** exponent + 0.5 * mutual_information_pm(mp_, mm_) ** 2


def fn(s: ThreeLevelState, n: int, exponent: float = EXPONENT, cap: int = BRANCH_CAP) -> float:
    """Branch-averaged lower bound; ``fn(s, 0)`` is defined as ``f0(s)``."""
    if n == 0:
        if n > cap:
            raise ValueError(f"n={n} exceeds the branch enumeration cap of {cap}")
        return f0(s, exponent)
    inside = in_region_pm(s.p, s.m)
    partial = []
    for k, (p, m, _) in enumerate(branch_chunks(s, n, cap)):
        vals = mutual_information_pm(p, m) ** exponent
        if k == 0 and not inside:
            vals[0] = mutual_information_pm(p[0], m[0]) ** 2
        partial.append(float(np.sum(vals)))
    return math.fsum(partial) / 2.0**n


def branch_means(s: ThreeLevelState, n: int, cap: int = BRANCH_CAP) -> tuple[float, float]:
    """``(E[I^2], E[I])`` over the depth-``n`` branches."""
    sq, lin = [], []
    for p, m, _ in branch_chunks(s, n, cap):
        info = mutual_information_pm(p, m)
        sq.append(float(np.sum(info**2)))
        lin.append(float(np.sum(info)))
    return math.fsum(sq) / 2.0**n, math.fsum(lin) / 2.0**n


def gamma_bracket(s: ThreeLevelState, delta: float, n_max: int = 20,
                  exponent: float = EXPONENT, cap: int = BRANCH_CAP) -> GammaBracket:
    """Grow ``n`` until ``mean I - F_n <= delta`` or ``n == n_max``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if n_max > cap:
        raise ValueError(f"n_max={n_max} exceeds the branch enumeration cap of {cap}")
    history = []
    for n in range(n_max + 1):
        lower = fn(s, n, exponent, cap)
        upper = branch_means(s, n, cap)[1]
        history.append((n, lower, upper))
        if upper - lower <= delta:
            break
    return GammaBracket(lower, upper, n, tuple(history))


def martingale_drift(exponent: float, grid_res: int, restrict_region: bool = False):
    """``(I^e(s+) + I^e(s-))/2 - I^e(s)`` on a ``grid_res x grid_res`` state grid.

    The grid covers all states with ``p >= m``: ``u`` sets ``p + m`` and ``v``
    sets ``m / (p + m) = v / 2``. Returns the drift values and the states.
    """
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    if grid_res < 2:
        raise ValueError("grid_res must be at least 2")
    u, v = np.meshgrid(np.linspace(0, 1, grid_res), np.linspace(0, 1, grid_res), indexing="ij")
    a, r = u.ravel(), v.ravel() / 2
    p, m, z = a * (1 - r), a * r, 1 - a
    if restrict_region:
        keep = in_region_pm(p, m)
        p, m, z = p[keep], m[keep], z[keep]
    pp, pm_, _ = plus_step(p, m, z)
    mp_, mm_, _ = minus_step(p, m, z)
    f = lambda x, y: mutual_information_pm(x, y) ** exponent  # noqa: E731
    drift = 0.5 * (f(pp, pm_) + f(mp_, mm_)) - f(p, m)
    return drift, (p, m, z)


def verify_submartingale(exponent: float, grid_res: int, restrict_region: bool = False,
                         direction: str = "sub") -> float:
    """Worst violation of the (sub|super)martingale inequality for ``I^exponent``.

    A nonnegative result confirms the claim on the grid.
    """
    drift, _ = martingale_drift(exponent, grid_res, restrict_region)
    if direction == "sub":
        return float(drift.min())
    if direction == "super":
        return float((-drift).min())
    raise ValueError("direction must be 'sub' or 'super'")


# --- rates for D-level procedures -------------------------------------------------


@lru_cache(maxsize=4096)
def _fn_cached(p: float, m: float, z: float, n: int) -> float:
    return fn(ThreeLevelState(p, m, z), n)


def _sign_statistic(conv: SymmetricDist, q: Quantizer) -> ThreeLevelState:
    """Sign statistic of ``q(conv)``, summed exactly over the conv atoms.

    Two quantizers with the same zero region give bit-identical states, which
    keeps comparisons between the searches free of rounding noise.
    """
    values, masses = conv.atoms()
    qv = q(values)
    p = math.fsum(masses[qv > 0])
    m = math.fsum(masses[qv < 0])
    z = math.fsum(masses[qv == 0])
    return ThreeLevelState.unchecked_orientation(p, m, z)


def _state_fn(s: ThreeLevelState, n: int) -> float:
    return _fn_cached(s.p, s.m, s.z, n)


def _first_step_rate(dist: SymmetricDist, n: int, q_plus: Quantizer, q_minus: Quantizer) -> float:
    plus = _sign_statistic(conv_plus(dist, dist), q_plus)
    minus = _sign_statistic(conv_boxplus(dist, dist), q_minus)
    return 0.5 * (_state_fn(plus, n) + _state_fn(minus, n))


def _sign_equivalent_alpha(dist: SymmetricDist) -> float:
    """A first threshold small enough that both branches act like sign quantization."""
    mags = np.concatenate((conv_plus(dist, dist).magnitudes, conv_boxplus(dist, dist).magnitudes))
    return 0.5 * float(mags.min()) if len(mags) else 1.0


def plain_sign_rate(dist: SymmetricDist, n: int) -> float:
    """Rate when the first step is also sign-quantized."""
    if dist.d == 0:
        return 0.0
    sign = Quantizer(((0.0, 1.0),))
    return _first_step_rate(dist, n, sign, sign)


def _search(dist, n, candidates, build):
    best_rate, best_alphas, feasible = -1.0, None, 0
    for alphas in candidates:
        try:
            qp, qm = build(alphas)
        except ValueError:
            continue
        feasible += 1
        rate = _first_step_rate(dist, n, qp, qm)
        if rate > best_rate:
            best_rate, best_alphas = rate, tuple(float(a) for a in alphas)
    if not feasible:
        raise ValueError("no feasible point on the alpha grid")
    return StaticSearchResult(best_rate, best_alphas)


def _ratio_combos(d: int, grid: int):
    fracs = (np.arange(grid) + 0.5) / grid
    return list(itertools.combinations(fracs, d - 1))


def rate_search_static_pair(dist: SymmetricDist, n: int, grid: int = 16) -> StaticSearchResult:
    """Grid search over ``a_1 <= ... <= a_d`` for the pair construction.

    Constraints: ``a_d < 2 a_1`` and ``max(a_1 boxplus a_1, a_1 / 2) <= l_d``.
    The grid always includes a first threshold below every convolution atom,
    which reproduces plain sign quantization.
    """
    if grid < 1:
        raise ValueError("grid must be positive")
    if dist.d == 0:
        return StaticSearchResult(0.0, ())
    lam_d = dist.magnitudes[-1]
    a1_max = min(2 * lam_d, minsum_spacing(lam_d))
    a1_grid = np.concatenate(([min(_sign_equivalent_alpha(dist), a1_max)], np.linspace(a1_max / grid, a1_max, grid)))
    combos = _ratio_combos(dist.d, grid)
    candidates = ([a1] + [a1 * (1 + f) for f in fr] for a1 in a1_grid for fr in combos)
    return _search(dist, n, candidates, proper_static_pair)


def rate_search_static_single(dist: SymmetricDist, n: int, grid: int = 16) -> StaticSearchResult:
    """Grid search for one quantizer ``{(a_i boxplus a_i, a_i)}`` on both branches.

    Constraints: ``a_d < 2 (a_1 boxplus a_1)`` and ``a_1 boxplus a_1 <= l_d``.
    For ``d >= 2`` this forces ``a_1`` above :func:`single_feasibility_threshold`.
    """
    if grid < 1:
        raise ValueError("grid must be positive")
    if dist.d == 0:
        return StaticSearchResult(0.0, ())
    lam_d = dist.magnitudes[-1]
    a1_max = minsum_spacing(lam_d)
    if dist.d == 1:
        a1_grid = np.concatenate(([min(_sign_equivalent_alpha(dist), a1_max)], np.linspace(a1_max / grid, a1_max, grid)))
    else:
        lo = single_feasibility_threshold()
        if a1_max <= lo:
            raise ValueError(f"no feasible alpha_1: need {lo:.6g} < alpha_1 <= {a1_max:.6g}")
        a1_grid = lo + (a1_max - lo) * np.arange(1, grid + 1) / grid
    combos = _ratio_combos(dist.d, grid)
    candidates = (
        [a1] + [a1 + f * (2 * self_boxplus(a1) - a1) for f in fr] for a1 in a1_grid for fr in combos
    )

    def build(alphas):
        q = proper_static_single(alphas)
        return q, q

    return _search(dist, n, candidates, build)


def _threshold_quantizer(mags: np.ndarray, k: int, d: int) -> Quantizer:
    """D-level quantizer whose zero region ends at ``mags[k]``."""
    if k >= len(mags):
        top = float(mags[-1]) * 2 + 1 if len(mags) else 1.0
        return Quantizer(((top, top),))
    ths = mags[k:k + d]
    return Quantizer(tuple((float(a), float(a)) for a in ths))


def _best_threshold(conv: SymmetricDist, n: int, d: int) -> tuple[float, Quantizer]:
    """Maximize ``F_n`` of the sign statistic over every zero-region cut."""
    mags = conv.magnitudes
    best, best_q = -1.0, None
    for k in range(len(mags) + 1):
        q = _threshold_quantizer(mags, k, d)
        val = _state_fn(_sign_statistic(conv, q), n)
        if val > best:
            best, best_q = val, q
    return best, best_q


def rate_search_dynamic(dist: SymmetricDist, n: int, d: int | None = None) -> DynamicSearchResult:
    """Best first-step quantizers for the two branches, chosen independently.

    Only the zero region of a quantizer affects the sign statistic, so every
    cut between consecutive convolution magnitudes is tried; this covers all
    static constructions as special cases.
    """
    if dist.d == 0:
        return DynamicSearchResult(0.0, None, None)
    d = dist.d if d is None else d
    if d < 1:
        raise ValueError("d must be at least 1")
    plus = conv_plus(dist, dist)
    minus = conv_boxplus(dist, dist)
    rp, qp = _best_threshold(plus, n, d)
    rm, qm = _best_threshold(minus, n, d)
    return DynamicSearchResult(0.5 * (rp + rm), qp, qm)
