"""Sampled polarization trajectories.

Each trajectory draws its signs i.i.d. uniform on ``{+, -}``. Trajectory ``i``
gets its own 64-bit seed and sign bits from
``numpy.random.SeedSequence(master_seed, spawn_key=(i,))``, so an ensemble is
reproducible bit for bit and does not depend on how work is split across
threads.

Three-level states are evolved in log2 coordinates throughout: along good
trajectories ``Z_n`` falls like ``2^{-2^{0.35 n}}`` and leaves the float64
range near ``n = 30``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dist import SymmetricDist, ThreeLevelState, mutual_information_pm
from .quantd import DynamicPolicy, StaticPolicy, boxplus, transform_d

PHI = (1 + math.sqrt(5)) / 2
DECAY_REFERENCE = math.log2(PHI) / 2
_LOG2_TINY = math.log2(np.finfo(float).tiny)
_CHUNK = 8192


def trajectory_seed_words(master_seed: int, index: int, n: int) -> np.ndarray:
    """``1 + ceil(n/64)`` uint64 words: the trajectory seed, then sign bits."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return ss.generate_state(1 + (n + 63) // 64, dtype=np.uint64)


def _signs_from_words(words: np.ndarray, n: int) -> np.ndarray:
    bits = np.unpackbits(words[1:].view(np.uint8), bitorder="little")
    return bits[:n].astype(bool)


def draw_signs(master_seed: int, start: int, stop: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    seeds = np.empty(stop - start, dtype=np.uint64)
    signs = np.empty((stop - start, n), dtype=bool)
    for row, i in enumerate(range(start, stop)):
        words = trajectory_seed_words(master_seed, i, n)
        seeds[row] = words[0]
        signs[row] = _signs_from_words(words, n)
    return seeds, signs


def log_plus(lp, lm, lz):
    with np.errstate(invalid="ignore", divide="ignore"):
        return (
            lp + np.logaddexp2(lp, 1 + lz),
            lm + np.logaddexp2(lm, 1 + lz),
            np.logaddexp2(2 * lz, 1 + lm + lp),
        )


def log_minus(lp, lm, lz):
    with np.errstate(invalid="ignore", divide="ignore"):
        return (
            np.logaddexp2(2 * lp, 2 * lm),
            1 + lm + lp,
            lz + np.log1p(np.exp2(lp) + np.exp2(lm)) / math.log(2),
        )


def _pin_dominant(lp, lm, lz):
    """Recompute a component above 1/2 as ``1 - (other two)``.

    Its log alone cannot resolve a deficit below the float spacing near 1,
    which would otherwise let the masses drift off the simplex.
    """
    with np.errstate(invalid="ignore", divide="ignore", under="ignore"):
        rest_p = np.exp2(lm) + np.exp2(lz)
        rest_z = np.exp2(lp) + np.exp2(lm)
        lp = np.where(lp > -1, np.log1p(-np.minimum(rest_p, 0.5)) / math.log(2), lp)
        lz = np.where(lz > -1, np.log1p(-np.minimum(rest_z, 0.5)) / math.log(2), lz)
    return lp, lm, lz


def _log2(x: float) -> float:
    return math.log2(x) if x > 0 else -math.inf


def evolve_log(s0: ThreeLevelState, signs: np.ndarray) -> np.ndarray:
    """Log2 states along each row of ``signs``; shape ``(rows, n + 1, 3)``."""
    signs = np.atleast_2d(signs)
    rows, n = signs.shape
    out = np.empty((rows, n + 1, 3))
    cur = tuple(np.full(rows, _log2(x)) for x in (s0.p, s0.m, s0.z))
    out[:, 0] = np.stack(cur, axis=-1)
    for k in range(n):
        plus = log_plus(*cur)
        minus = log_minus(*cur)
        cur = _pin_dominant(*(np.where(signs[:, k], a, b) for a, b in zip(plus, minus)))
        out[:, k + 1] = np.stack(cur, axis=-1)
    return out


def _resolve_threads(threads: int | None) -> int:
    return max(1, threads or 1)


def _chunked(count: int, threads: int, work):
    bounds = [(a, min(a + _CHUNK, count)) for a in range(0, count, _CHUNK)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda b: work(*b), bounds))
    return [work(a, b) for a, b in bounds]


@dataclass(frozen=True)
class Trajectory:
    seed: int
    signs: tuple[str, ...]
    states: np.ndarray  # (n + 1, 3) linear (p, m, z); may underflow to 0
    log_states: np.ndarray  # (n + 1, 3) log2 (p, m, z)

    @property
    def ratio(self) -> np.ndarray:
        """Per-step ``log M_n / log Z_n`` (NaN where undefined)."""
        lm, lz = self.log_states[:, 1], self.log_states[:, 2]
        return _ratio(lm, lz)


def _ratio(lm, lz):
    ok = np.isfinite(lm) & np.isfinite(lz) & (lz < 0)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        return np.where(ok, lm / np.where(ok, lz, -1.0), np.nan)


@dataclass(frozen=True)
class Ensemble:
    s0: ThreeLevelState
    master_seed: int
    seeds: np.ndarray  # (count,) uint64
    signs: np.ndarray  # (count, n) bool, True is '+'
    log_states: np.ndarray  # (count, n + 1, 3)

    @property
    def count(self) -> int:
        return self.signs.shape[0]

    @property
    def n(self) -> int:
        return self.signs.shape[1]

    @property
    def states(self) -> np.ndarray:
        return np.exp2(self.log_states)

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(
            int(self.seeds[i]),
            tuple("+" if s else "-" for s in self.signs[i]),
            np.exp2(self.log_states[i]),
            self.log_states[i].copy(),
        )

    def mean_information(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-step ensemble mean of ``I`` and its standard error."""
        st = self.states
        info = mutual_information_pm(st[:, :, 0], st[:, :, 1])
        return info.mean(axis=0), info.std(axis=0, ddof=1) / math.sqrt(max(1, self.count - 1))


def sample_trajectories(s0: ThreeLevelState, n: int, count: int, master_seed: int,
                        threads: int | None = None) -> Ensemble:
    if n < 1 or count < 1:
        raise ValueError("need n >= 1 and count >= 1")

    def work(a, b):
        seeds, signs = draw_signs(master_seed, a, b, n)
        return seeds, signs, evolve_log(s0, signs)

    parts = _chunked(count, _resolve_threads(threads), work)
    return Ensemble(
        s0,
        master_seed,
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
    )


@dataclass(frozen=True)
class RatioStats:
    fraction_all: float
    fraction_cutoff: float
    n_cutoff: int
    excluded: int
    underflow: int
    ratios: np.ndarray


def ratio_statistic(ens: Ensemble, eps_r: float, z_cutoff: float = 1e-6) -> RatioStats:
    """How often ``|log M_n / log Z_n - phi| <= eps_r`` at the final step.

    Trajectories with ``M_n = 0`` or ``Z_n`` in ``{0, 1}`` are excluded. Those
    whose ``M_n`` lies below the smallest normal float are counted in
    ``underflow`` but kept, since their logarithms are exact.
    """
    if eps_r <= 0 or not 0 < z_cutoff < 1:
        raise ValueError("need eps_r > 0 and 0 < z_cutoff < 1")
    lm, lz = ens.log_states[:, -1, 1], ens.log_states[:, -1, 2]
    r = _ratio(lm, lz)
    defined = np.isfinite(r)
    hit = defined & (np.abs(r - PHI) <= eps_r)
    sub = defined & (lz <= math.log2(z_cutoff))
    n_sub = int(sub.sum())
    return RatioStats(
        fraction_all=float(hit.sum() / ens.count),
        fraction_cutoff=float((hit & sub).sum() / n_sub) if n_sub else float("nan"),
        n_cutoff=n_sub,
        excluded=int((~defined).sum()),
        underflow=int((defined & (lm < _LOG2_TINY)).sum()),
        ratios=r,
    )


@dataclass(frozen=True)
class DecayStats:
    statistic: np.ndarray
    quantiles: dict
    n_subset: int
    reference: float = DECAY_REFERENCE

    @property
    def median(self) -> float:
        return self.quantiles.get(0.5, float("nan"))


QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)


def decay_exponent(ens: Ensemble, z_cutoff: float = 1e-6) -> DecayStats:
    """``log2(-log2 Z_n) / n`` per trajectory and its quantiles on ``Z_n <= z_cutoff``."""
    lz = ens.log_states[:, -1, 2]
    ok = np.isfinite(lz) & (lz < 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        stat = np.where(ok, np.log2(np.where(ok, -lz, 1.0)) / ens.n, np.nan)
    sub = ok & (lz <= math.log2(z_cutoff))
    vals = stat[sub]
    qs = {q: float(np.quantile(vals, q)) for q in QUANTILES} if len(vals) else {}
    return DecayStats(stat, qs, int(sub.sum()))


# --- D-level weak polarization -----------------------------------------------------


@dataclass(frozen=True)
class WeakPolarizationStats:
    steps: np.ndarray
    median_z: np.ndarray
    median_pm: np.ndarray
    median_min_z: np.ndarray
    frac_z_low: np.ndarray
    frac_z_high: np.ndarray
    frac_pm_small: np.ndarray


class _SupportChain:
    """Static-policy dynamics on a fixed support as a quadratic map of masses."""

    def __init__(self, policy: StaticPolicy):
        mags = np.unique(np.concatenate((policy.plus.gammas, policy.minus.gammas)))
        self.values = np.concatenate((-mags[::-1], [0.0], mags))
        k = len(self.values)
        a, b = np.meshgrid(self.values, self.values, indexing="ij")
        self.trans = {}
        for sign, q, op in (("+", policy.plus, np.add), ("-", policy.minus, boxplus)):
            out = q(op(a, b)).ravel()
            idx = np.array([self.index(v) for v in out])
            t = np.zeros((k * k, k))
            t[np.arange(k * k), idx] = 1.0
            self.trans[sign] = t

    def index(self, v: float) -> int:
        j = int(np.argmin(np.abs(self.values - v)))
        if abs(self.values[j] - v) > 1e-9:
            raise ValueError(f"value {v} outside the policy's output support")
        return j

    def vector(self, dist: SymmetricDist) -> np.ndarray:
        x = np.zeros(len(self.values))
        vals, masses = dist.atoms()
        for v, w in zip(vals, masses):
            x[self.index(v)] += w
        return x

    def step(self, x: np.ndarray, plus: np.ndarray) -> np.ndarray:
        outer = (x[:, :, None] * x[:, None, :]).reshape(len(x), -1)
        return np.where(plus[:, None], outer @ self.trans["+"], outer @ self.trans["-"])

    def stats(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = len(self.values) // 2
        z = x[:, h]
        pm = np.sum(x[:, h + 1:] * x[:, :h][:, ::-1], axis=1)
        return z, pm


def _dist_stats(dist: SymmetricDist) -> tuple[float, float]:
    return dist.z, float(np.sum(dist.p * dist.m)) if dist.d else 0.0


def _weak_paths(dist0, policy, signs):
    """Per-step ``(Z, sum_i p_i m_i)`` for each sign row; shape ``(rows, n + 1)``."""
    rows, n = signs.shape
    z = np.empty((rows, n + 1))
    pm = np.empty((rows, n + 1))
    z[:, 0], pm[:, 0] = _dist_stats(dist0)
    if isinstance(policy, StaticPolicy):
        chain = _SupportChain(policy)
        first = {s: chain.vector(transform_d(dist0, s, policy)) for s in "+-"}
        x = np.where(signs[:, :1], first["+"], first["-"])
        z[:, 1], pm[:, 1] = chain.stats(x)
        for k in range(1, n):
            x = chain.step(x, signs[:, k])
            x /= x.sum(axis=1, keepdims=True)
            z[:, k + 1], pm[:, k + 1] = chain.stats(x)
        return z, pm
    for r in range(rows):
        dist = dist0
        for k in range(n):
            dist = transform_d(dist, "+" if signs[r, k] else "-", policy)
            z[r, k + 1], pm[r, k + 1] = _dist_stats(dist)
    return z, pm


def weak_polarization_stats(dist0: SymmetricDist, policy, n: int, count: int, master_seed: int,
                            threads: int | None = None) -> WeakPolarizationStats:
    """Per-step medians and tail fractions of ``Z_n`` and ``sum_i P_{i,n} M_{i,n}``."""
    if n < 1 or count < 1:
        raise ValueError("need n >= 1 and count >= 1")
    if not isinstance(policy, (StaticPolicy, DynamicPolicy)):
        raise TypeError("policy must be a StaticPolicy or DynamicPolicy")

    def work(a, b):
        _, signs = draw_signs(master_seed, a, b, n)
        return _weak_paths(dist0, policy, signs)

    parts = _chunked(count, _resolve_threads(threads), work)
    z = np.concatenate([p[0] for p in parts])
    pm = np.concatenate([p[1] for p in parts])
    mz = np.minimum(z, 1 - z)
    return WeakPolarizationStats(
        steps=np.arange(n + 1),
        median_z=np.median(z, axis=0),
        median_pm=np.median(pm, axis=0),
        median_min_z=np.median(mz, axis=0),
        frac_z_low=np.mean(z <= 0.01, axis=0),
        frac_z_high=np.mean(z >= 0.99, axis=0),
        frac_pm_small=np.mean(pm <= 1e-3, axis=0),
    )
