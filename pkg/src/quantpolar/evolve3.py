"""Three-level density evolution under sign quantization.

The two polar transforms act on ``(p, m, z)`` as::

    p+ = p^2 + 2pz      p- = p^2 + m^2
    m+ = m^2 + 2mz      m- = 2mp
    z+ = z^2 + 2mp      z- = 2z - z^2

The array helpers (``plus_step``, ``minus_step``, ``curve_m_at``,
``in_region_pm``) accept numpy arrays so that large batches of states can be
processed without building ``ThreeLevelState`` objects.
"""

from __future__ import annotations

from typing import Iterable, Union

import numpy as np

from .dist import ThreeLevelState

REGION_TOL = 1e-9
CURVE_T_TOL = 1e-12
_BISECT_ITERS = 42  # (2/3) * 2**-42 < 1e-12

SignSequence = tuple[str, ...]
SignsLike = Union[str, Iterable]


def parse_signs(seq: SignsLike) -> SignSequence:
    """Normalize ``"+-"``, ``["plus", "minus"]``, ``[1, 0]`` etc. to ``('+', '-')``."""
    out = []
    for item in seq:
        if item in ("+", "plus", 1, True):
            out.append("+")
        elif item in ("-", "minus", 0, False):
            out.append("-")
        else:
            raise ValueError(f"unknown sign {item!r}; use '+' or '-'")
    return tuple(out)


def plus_step(p, m, z):
    return p * p + 2 * p * z, m * m + 2 * m * z, z * z + 2 * m * p


def minus_step(p, m, z):
    return p * p + m * m, 2 * m * p, z * (2 - z)


def transform_plus(s: ThreeLevelState) -> ThreeLevelState:
    return ThreeLevelState(*plus_step(s.p, s.m, s.z))


def transform_minus(s: ThreeLevelState) -> ThreeLevelState:
    return ThreeLevelState(*minus_step(s.p, s.m, s.z))


def evolve(s0: ThreeLevelState, seq: SignsLike) -> ThreeLevelState:
    """Apply the transforms in ``seq`` left to right."""
    s = s0
    for sign in parse_signs(seq):
        s = transform_plus(s) if sign == "+" else transform_minus(s)
    return s


def _curve_parts(t):
    """``(1 - p*(t), m*(t))`` in a form without cancellation near ``t = 1``."""
    t = np.asarray(t, dtype=float)
    v = 1.0 - t
    pstar = np.sqrt(np.clip(4 * t**3 - 3 * t**4, 0.0, None))
    q = 1.0 + pstar
    a = v * v * (6 - 8 * v + 3 * v * v)
    one_minus_p = a / q
    mstar = (8 * v**3 - 3 * v**4) / (2 * q) - 1.5 * v * v * a / (q * q)
    return one_minus_p, mstar


def limiting_curve(t):
    """Point ``(p*, m*)`` of the limiting curve at parameter ``t``.

    For ``t < 1/3`` the curve is the diagonal ``(t, t)``.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < 0) | (t_arr > 1)) or np.any(np.isnan(t_arr)):
        raise ValueError(f"limiting_curve parameter must lie in [0, 1], got {t!r}")
    one_minus_p, mstar = _curve_parts(np.maximum(t_arr, 1 / 3))
    low = t_arr < 1 / 3
    p = np.where(low, t_arr, 1.0 - one_minus_p)
    m = np.where(low, t_arr, mstar)
    if p.ndim == 0:
        return float(p), float(m)
    return p, m


def curve_m_at(p):
    """Height of the limiting curve above ``p``, by bisection in ``t``."""
    p_arr = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    target = 1.0 - p_arr  # exact for p >= 1/2
    lo = np.full(p_arr.shape, 1 / 3)
    hi = np.ones(p_arr.shape)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        above = _curve_parts(mid)[0] > target  # p*(mid) < p
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    m = _curve_parts(0.5 * (lo + hi))[1]
    m = np.where(p_arr < 1 / 3, p_arr, np.where(p_arr >= 1.0, 0.0, m))
    return float(m) if m.ndim == 0 else m


def in_region_pm(p, m, tol: float = REGION_TOL):
    """Vectorized membership test ``m <= m*(p) + tol``."""
    out = np.asarray(m) <= curve_m_at(p) + tol
    return bool(out) if out.ndim == 0 else out


def in_region_plus(s: ThreeLevelState, tol: float = REGION_TOL) -> bool:
    """Whether ``(p, m)`` lies under the limiting curve."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return in_region_pm(s.p, s.m, tol)


def upper_bound_curve(p, C: float = 2.0):
    """``C (1 - p)^{3/2}``, which dominates the limiting curve for ``C >= 2``."""
    if C < 2:
        raise ValueError(f"upper_bound_curve needs C >= 2, got {C}")
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr < 0) | (p_arr > 1)):
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    out = C * (1.0 - p_arr) ** 1.5
    return float(out) if out.ndim == 0 else out


def dominance_margin(t):
    """``2 (1 - p*(t))^{3/2} - m*(t)`` for ``t`` in ``[1/3, 1]``."""
    one_minus_p, mstar = _curve_parts(t)
    return 2.0 * one_minus_p**1.5 - mstar


def random_states(rng: np.random.Generator, size: int):
    """Uniform samples from the simplex restricted to ``p >= m``."""
    w = rng.dirichlet(np.ones(3), size=size)
    p = np.maximum(w[:, 0], w[:, 1])
    m = np.minimum(w[:, 0], w[:, 1])
    return p, m, w[:, 2]
