"""Quantized channel statistics and their scalar figures of merit.

Two value types live here:

``ThreeLevelState``
    The sign-quantized statistic ``(p, m, z)``: probabilities of observing
    ``+1``, ``-1`` and ``0`` when the all-zero codeword is sent.
``SymmetricDist``
    A finite symmetric LLR-like distribution on ``{0, +-l_1, ..., +-l_d}``.

All logarithms are base 2 unless a function says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

PROB_TOL = 1e-12


def binary_entropy(x):
    """Binary entropy in bits, with ``h(0) = h(1) = 0``. Accepts arrays."""
    x = np.asarray(x, dtype=float)
    y = 1.0 - x
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.where(x > 0, x * np.log2(np.where(x > 0, x, 1.0)), 0.0)
        out -= np.where(y > 0, y * np.log2(np.where(y > 0, y, 1.0)), 0.0)
    return out if out.ndim else float(out)


def _check_masses(masses: Sequence[float], what: str) -> np.ndarray:
    arr = np.asarray(masses, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: masses must be finite, got {arr.tolist()}")
    if np.any(arr < -PROB_TOL):
        raise ValueError(f"{what}: negative mass in {arr.tolist()}")
    arr = np.clip(arr, 0.0, None)
    total = arr.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise ValueError(f"{what}: masses sum to {total!r}, not 1 (tolerance {PROB_TOL})")
    return arr / total


@dataclass(frozen=True)
class ThreeLevelState:
    """Parameters of a sign-quantized statistic.

    ``p`` is the mass at ``+lambda``, ``m`` at ``-lambda`` and ``z`` at 0.
    Masses within ``1e-12`` of summing to one are renormalized; anything
    further off is rejected. The orientation convention ``p >= m`` is enforced;
    use :func:`aggregate` or :meth:`negated` to obtain it.
    """

    p: float
    m: float
    z: float

    def __post_init__(self):
        p, m, z = _check_masses((self.p, self.m, self.z), "ThreeLevelState")
        if m > p + PROB_TOL:
            raise ValueError(f"ThreeLevelState requires p >= m, got p={p!r}, m={m!r}")
        object.__setattr__(self, "p", float(p))
        object.__setattr__(self, "m", float(min(m, p)))
        object.__setattr__(self, "z", float(z))

    @classmethod
    def unchecked_orientation(cls, p: float, m: float, z: float) -> "ThreeLevelState":
        """Build a state, negating the output first if ``m > p``."""
        return cls(p, m, z) if p >= m else cls(m, p, z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p, self.m, self.z)


@dataclass(frozen=True)
class SymmetricDist:
    """Finite symmetric distribution on ``{0, +-l_1, ..., +-l_d}``.

    ``levels`` holds ``(l_i, p_i, m_i)`` triples with strictly increasing
    positive magnitudes ``l_i``; ``p_i`` is the mass at ``+l_i`` and ``m_i``
    the mass at ``-l_i`` under the all-zero input.
    """

    z: float
    levels: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        levels = tuple((float(lam), float(p), float(m)) for lam, p, m in self.levels)
        lams = [lev[0] for lev in levels]
        if any(lam <= 0 or not np.isfinite(lam) for lam in lams):
            raise ValueError(f"SymmetricDist: magnitudes must be positive and finite, got {lams}")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError(f"SymmetricDist: magnitudes must be strictly increasing, got {lams}")
        masses = [self.z] + [x for _, p, m in levels for x in (p, m)]
        masses = _check_masses(masses, "SymmetricDist")
        object.__setattr__(self, "z", float(masses[0]))
        object.__setattr__(
            self,
            "levels",
            tuple((lam, float(masses[1 + 2 * i]), float(masses[2 + 2 * i])) for i, lam in enumerate(lams)),
        )

    @property
    def d(self) -> int:
        return len(self.levels)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.array([lev[0] for lev in self.levels], dtype=float)

    @property
    def p(self) -> np.ndarray:
        return np.array([lev[1] for lev in self.levels], dtype=float)

    @property
    def m(self) -> np.ndarray:
        return np.array([lev[2] for lev in self.levels], dtype=float)

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Signed support values and their masses, zero first."""
        lam = self.magnitudes
        values = np.concatenate(([0.0], lam, -lam))
        masses = np.concatenate(([self.z], self.p, self.m))
        return values, masses

    @classmethod
    def from_state(cls, s: ThreeLevelState, magnitude: float = 1.0) -> "SymmetricDist":
        """Embed a three-level state as a ``d = 1`` distribution."""
        levels = ((magnitude, s.p, s.m),) if s.p + s.m > 0 else ()
        return cls(s.z, levels)

    def to_json(self) -> dict:
        return {"z": self.z, "levels": [list(lev) for lev in self.levels]}

    @classmethod
    def from_json(cls, obj: dict) -> "SymmetricDist":
        return cls(obj["z"], tuple(tuple(lev) for lev in obj.get("levels", ())))


@dataclass(frozen=True)
class ChannelStats:
    mutual_info: float
    bhattacharyya: float
    error_prob: float


class Aggregated(NamedTuple):
    """Result of :func:`aggregate`: the state and whether it was negated."""

    state: ThreeLevelState
    negated: bool


def mutual_information_3(s: ThreeLevelState) -> float:
    """``I = (p+m)(1 - h(m/(p+m)))``; zero for the pure erasure."""
    return float(mutual_information_pm(s.p, s.m))


def mutual_information_pm(p, m):
    """Vectorized three-level mutual information from the ``p`` and ``m`` masses."""
    p = np.asarray(p, dtype=float)
    m = np.asarray(m, dtype=float)
    a = p + m
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(a > 0, m / np.where(a > 0, a, 1.0), 0.0)
    out = a * (1.0 - binary_entropy(r))
    return out if np.ndim(out) else float(out)


def bhattacharyya_3(s: ThreeLevelState) -> float:
    return 2.0 * np.sqrt(s.p * s.m) + s.z


def error_prob_3(s: ThreeLevelState) -> float:
    return s.m + 0.5 * s.z


def channel_stats(s: ThreeLevelState) -> ChannelStats:
    return ChannelStats(mutual_information_3(s), bhattacharyya_3(s), error_prob_3(s))


def aggregate(dist: SymmetricDist) -> Aggregated:
    """Collapse a D-level distribution to its sign statistic.

    When the negative side carries more mass the output is negated so that
    the returned state satisfies ``p >= m``; ``negated`` records this.
    """
    p = float(np.sum(dist.p)) if dist.d else 0.0
    m = float(np.sum(dist.m)) if dist.d else 0.0
    if p < m:
        return Aggregated(ThreeLevelState(m, p, dist.z), True)
    return Aggregated(ThreeLevelState(p, m, dist.z), False)


def mutual_information_d(dist: SymmetricDist) -> float:
    """Mutual information of the symmetric channel with ``W(y|1) = W(-y|0)``."""
    if dist.d == 0:
        return 0.0
    return float(np.sum(mutual_information_pm(dist.p, dist.m)))
