"""D-level quantizers and exact convolutions of symmetric LLR distributions.

A quantizer is an odd, nondecreasing step function described by pairs
``(alpha_i, gamma_i)``: on the positive axis ``Q(x) = gamma_i`` for
``alpha_i <= x < alpha_{i+1}`` and ``Q(x) = 0`` below ``alpha_1``.
``Q(0) = 0`` always, including the discontinuous case ``alpha_1 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dist import SymmetricDist, ThreeLevelState, aggregate

MERGE_TOL = 1e-12
LN2 = float(np.log(2.0))


def boxplus(a, b):
    """Check-node combination ``ln((e^{a+b} + 1) / (e^a + e^b))``.

    When ``min(|a|,|b|) < 1`` this is ``2 atanh(tanh(a/2) tanh(b/2))``, whose
    atanh argument stays below 0.47 in magnitude. Otherwise it is
    ``mu + ln((1+e^{-|a+b|}) / (1+e^{-|a-b|}))`` with ``mu = sign(ab) min(|a|,|b|)``,
    the ratio taken as one ``log1p`` built from ``expm1`` of a non-positive
    argument, so it stays finite for arbitrarily large inputs. Both branches
    keep a few ulp of relative accuracy.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mu = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    diff = np.sign(mu) * np.exp(-np.abs(np.abs(a) - np.abs(b))) * np.expm1(-2 * np.abs(mu))
    large = mu + np.log1p(diff / (1 + np.exp(-np.abs(a - b))))
    with np.errstate(divide="ignore"):  # atanh(1) only in the discarded branch
        small = 2 * np.arctanh(np.tanh(a / 2) * np.tanh(b / 2))
    out = np.where(np.abs(mu) < 1, small, large)
    return float(out) if out.ndim == 0 else out


def minsum(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.minimum(np.abs(a), np.abs(b)) * np.sign(a) * np.sign(b)
    return float(out) if out.ndim == 0 else out


def self_boxplus(a):
    """``a boxplus a = ln cosh a``, computed without overflow."""
    a = np.abs(np.asarray(a, dtype=float))
    out = a - LN2 + np.log1p(np.exp(-2 * a))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Quantizer:
    """Admissible quantizer given by threshold/output pairs.

    ``proper=True`` (the default) requires strictly increasing outputs;
    pass ``proper=False`` to allow repeated outputs.
    """

    pairs: tuple[tuple[float, float], ...]
    proper: bool = True

    def __post_init__(self):
        pairs = tuple((float(a), float(g)) for a, g in self.pairs)
        if not pairs:
            raise ValueError("a quantizer needs at least one (alpha, gamma) pair")
        alphas = [a for a, _ in pairs]
        gammas = [g for _, g in pairs]
        if alphas[0] < 0 or not all(np.isfinite(alphas)):
            raise ValueError(f"thresholds must be finite and nonnegative, got {alphas}")
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError(f"thresholds must be strictly increasing, got {alphas}")
        if gammas[0] <= 0 or not all(np.isfinite(gammas)):
            raise ValueError(f"outputs must be finite and positive, got {gammas}")
        if self.proper and any(b <= a for a, b in zip(gammas, gammas[1:])):
            raise ValueError(f"outputs of a proper quantizer must be strictly increasing, got {gammas}")
        if any(b < a for a, b in zip(gammas, gammas[1:])):
            raise ValueError(f"outputs must be nondecreasing, got {gammas}")
        object.__setattr__(self, "pairs", pairs)

    @property
    def d(self) -> int:
        return len(self.pairs)

    @property
    def levels(self) -> int:
        """Number of output values ``D = 2d + 1``."""
        return 2 * self.d + 1

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for a, _ in self.pairs])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([g for _, g in self.pairs])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        mag = np.abs(x)
        # Thresholds are compared with the support-merging tolerance so that a
        # convolution atom equal to a threshold up to rounding lands on it.
        idx = np.searchsorted(self.alphas - MERGE_TOL, mag, side="right") - 1
        out = np.where(idx >= 0, self.gammas[np.clip(idx, 0, None)], 0.0)
        out = np.where(mag > 0, out, 0.0) * np.sign(x)
        return float(out) if out.ndim == 0 else out

    def to_json(self) -> list:
        return [list(p) for p in self.pairs]

    @classmethod
    def from_json(cls, obj, proper: bool = True) -> "Quantizer":
        return cls(tuple(tuple(p) for p in obj), proper=proper)


SIGN_QUANTIZER = Quantizer(((0.0, 1.0),))


def uniform_quantizer(step: float, d: int) -> Quantizer:
    """Mid-tread uniform quantizer ``step * clip(round(x / step), -d, d)``."""
    if step <= 0 or d < 1:
        raise ValueError("uniform_quantizer needs step > 0 and d >= 1")
    return Quantizer(tuple(((i - 0.5) * step, i * step) for i in range(1, d + 1)))


def _dist_from_atoms(values: np.ndarray, masses: np.ndarray) -> SymmetricDist:
    """Merge signed atoms (magnitudes within ``MERGE_TOL``) into a distribution."""
    mags = np.abs(values)
    zero = mags <= MERGE_TOL
    z = float(masses[zero].sum())
    values, masses, mags = values[~zero], masses[~zero], mags[~zero]
    order = np.argsort(mags, kind="stable")
    values, masses, mags = values[order], masses[order], mags[order]
    levels = []
    if len(mags):
        breaks = np.flatnonzero(np.diff(mags) > MERGE_TOL) + 1
        for grp in np.split(np.arange(len(mags)), breaks):
            v = values[grp]
            w = masses[grp]
            p = float(w[v > 0].sum())
            m = float(w[v < 0].sum())
            if p + m > 0:
                levels.append((float(mags[grp[0]]), p, m))
    total = z + sum(p + m for _, p, m in levels)
    return SymmetricDist(z / total, tuple((lam, p / total, m / total) for lam, p, m in levels))


def apply_quantizer(dist: SymmetricDist, q: Quantizer) -> SymmetricDist:
    """Pushforward of ``dist`` through ``q``; mass sent to 0 joins ``z``."""
    values, masses = dist.atoms()
    return _dist_from_atoms(q(values), masses)


def _convolve(a: SymmetricDist, b: SymmetricDist, op) -> SymmetricDist:
    va, wa = a.atoms()
    vb, wb = b.atoms()
    values = op(va[:, None], vb[None, :]).ravel()
    masses = (wa[:, None] * wb[None, :]).ravel()
    keep = masses > 0
    return _dist_from_atoms(values[keep], masses[keep])


def conv_plus(a: SymmetricDist, b: SymmetricDist) -> SymmetricDist:
    """Distribution of ``L + L'`` for independent ``L ~ a``, ``L' ~ b``."""
    return _convolve(a, b, np.add)


def conv_boxplus(a: SymmetricDist, b: SymmetricDist) -> SymmetricDist:
    """Distribution of ``L boxplus L'`` for independent ``L ~ a``, ``L' ~ b``."""
    return _convolve(a, b, boxplus)


def _check_increasing_positive(alphas: Sequence[float]) -> np.ndarray:
    arr = np.asarray(alphas, dtype=float)
    if arr.ndim != 1 or len(arr) == 0:
        raise ValueError("need a nonempty list of thresholds")
    if arr[0] <= 0:
        raise ValueError(f"alpha_1 must be positive, got {arr[0]}")
    for i in range(1, len(arr)):
        if arr[i] <= arr[i - 1]:
            raise ValueError(f"alpha_{i + 1} <= alpha_{i}: thresholds must be strictly increasing")
    return arr


def proper_static_pair(alphas: Sequence[float]) -> tuple[Quantizer, Quantizer]:
    """Quantizers for the plus and minus branches that mimic sign dynamics.

    ``beta+ = {(a_i, a_i)}`` and ``beta- = {(a_i boxplus a_i, a_i)}`` with
    ``0 < a_1 < a_i < 2 a_1``.
    """
    arr = _check_increasing_positive(alphas)
    for i in range(1, len(arr)):
        if arr[i] >= 2 * arr[0]:
            raise ValueError(f"alpha_{i + 1} >= 2*alpha_1 ({arr[i]} >= {2 * arr[0]})")
    plus = Quantizer(tuple((a, a) for a in arr))
    minus = Quantizer(tuple((self_boxplus(a), a) for a in arr))
    return plus, minus


def single_feasibility_threshold() -> float:
    """Smallest ``a_1`` with ``2 (a_1 boxplus a_1) > a_1``.

    ``2 ln cosh a = a`` reduces to ``y^3 - y^2 - y - 1 = 0`` with ``y = e^{a/2}``.
    """
    roots = np.roots([1.0, -1.0, -1.0, -1.0])
    y = max(r.real for r in roots if abs(r.imag) < 1e-12)
    return 2.0 * float(np.log(y))


def proper_static_single(alphas: Sequence[float]) -> Quantizer:
    """One quantizer ``{(a_i boxplus a_i, a_i)}`` used on both branches.

    Requires ``0 < a_1 < a_i < 2 (a_1 boxplus a_1)``.
    """
    arr = _check_increasing_positive(alphas)
    bound = 2 * self_boxplus(arr[0])
    for i in range(1, len(arr)):
        if arr[i] >= bound:
            raise ValueError(
                f"alpha_{i + 1} >= 2*(alpha_1 boxplus alpha_1) ({arr[i]} >= {bound:.6g})"
            )
    return Quantizer(tuple((self_boxplus(a), a) for a in arr))


def minsum_spacing(a):
    """``ln(e^a + sqrt(e^{2a} - 1))``, the spacing bound for min-sum exactness."""
    a = np.asarray(a, dtype=float)
    out = a + np.log1p(np.sqrt(-np.expm1(-2 * a)))
    return float(out) if out.ndim == 0 else out


def minsum_quantizer(support: Sequence[float]) -> Quantizer:
    """Quantizer under which quantized box-plus equals min-sum on ``support``."""
    arr = _check_increasing_positive(support)
    for i in range(len(arr) - 1):
        bound = minsum_spacing(arr[i])
        if not arr[i + 1] > bound:
            raise ValueError(
                f"spacing violated between alpha_{i + 1}={arr[i]} and alpha_{i + 2}={arr[i + 1]}: "
                f"need alpha_{i + 2} > {bound:.6g}"
            )
    return Quantizer(tuple((self_boxplus(a), a) for a in arr))


def minsum_check(support: Sequence[float]) -> bool:
    """Exhaustively compare min-sum with quantized box-plus on all signed pairs."""
    q = minsum_quantizer(support)
    signed = np.concatenate((np.asarray(support, dtype=float), -np.asarray(support, dtype=float)))
    a, b = np.meshgrid(signed, signed, indexing="ij")
    return bool(np.array_equal(q(boxplus(a, b)), minsum(a, b)))


class StaticPolicy:
    """Fixed quantizers for the plus and minus branches."""

    def __init__(self, plus: Quantizer, minus: Quantizer | None = None):
        self.plus = plus
        self.minus = plus if minus is None else minus
        self.d = max(self.plus.d, self.minus.d)

    def __call__(self, conv: SymmetricDist, sign: str) -> Quantizer:
        return self.plus if sign == "+" else self.minus


class DynamicPolicy:
    """Quantizer chosen as a pure function of the convolution's distribution.

    ``func(conv, sign)`` must return a :class:`Quantizer` with at most ``d``
    pairs and must not keep hidden state.
    """

    def __init__(self, func: Callable[[SymmetricDist, str], Quantizer], d: int):
        self.func = func
        self.d = d

    def __call__(self, conv: SymmetricDist, sign: str) -> Quantizer:
        return self.func(conv, sign)


SIGN_POLICY = StaticPolicy(SIGN_QUANTIZER)


def transform_d(dist: SymmetricDist, sign: str, policy) -> SymmetricDist:
    """One quantized polar step: convolve ``dist`` with itself, then quantize."""
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    conv = conv_plus(dist, dist) if sign == "+" else conv_boxplus(dist, dist)
    q = policy(conv, sign)
    if not isinstance(q, Quantizer):
        raise TypeError(f"policy returned {type(q).__name__}, expected Quantizer")
    if q.d > policy.d:
        raise ValueError(f"policy returned {q.d} levels, more than its declared d={policy.d}")
    return apply_quantizer(conv, q)


def remap_and_switch(dist: SymmetricDist) -> ThreeLevelState:
    """Move the larger mass of each level to the positive side, then sign-quantize."""
    if dist.d == 0:
        return ThreeLevelState(0.0, 0.0, dist.z)
    p = np.maximum(dist.p, dist.m)
    m = np.minimum(dist.p, dist.m)
    remapped = SymmetricDist(dist.z, tuple(zip(dist.magnitudes, p, m)))
    return aggregate(remapped).state
