"""Polar encoder and sign-quantized successive-cancellation decoder.

Bit index ``i`` of a length ``N = 2^n`` block corresponds to branch ``i`` of
the density evolution: read MSB first, digit ``1`` is a ``+`` step, and the
MSB is the first step applied to the physical channel. With this ordering the
natural-order SC schedule visits bit ``i`` on exactly the synthetic channel
whose statistic is the branch-``i`` state.

Decoder messages live in ``{-1, 0, +1}``. The check-node rule is ``a * b`` and
the variable-node rule is ``sign(b + (1 - 2u) a)``. A zero message at an
information bit is a tie; ``tie_policy="coin"`` flips a fair coin and
``"fixed-zero"`` decides 0. Under the coin policy the genie-aided error of bit
``i`` is ``m_i + z_i / 2``; under fixed-zero it is ``m_i``.

Trials run in fixed blocks of ``TRIAL_BLOCK`` frames. Block ``b`` draws all of
its randomness from ``SeedSequence(master_seed, spawn_key=(b,))``, so results
do not depend on the thread count or the kernel backend.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from . import _kernels
from .bounds import BRANCH_CAP, branch_states
from .dist import ThreeLevelState

TIE_POLICIES = ("coin", "fixed-zero")
TRIAL_BLOCK = 4096


@dataclass(frozen=True)
class CodeConfig:
    n: int
    frozen: frozenset = field(default_factory=frozenset)
    tie_policy: str = "coin"
    channel: ThreeLevelState = ThreeLevelState(1.0, 0.0, 0.0)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n!r}")
        if self.tie_policy not in TIE_POLICIES:
            raise ValueError(f"tie_policy must be one of {TIE_POLICIES}, got {self.tie_policy!r}")
        frozen = frozenset(int(i) for i in self.frozen)
        bad = [i for i in frozen if not 0 <= i < 2**self.n]
        if bad:
            raise ValueError(f"frozen indices out of range [0, {2**self.n}): {sorted(bad)[:5]}")
        object.__setattr__(self, "frozen", frozen)

    @property
    def N(self) -> int:
        return 2**self.n

    @property
    def k(self) -> int:
        return self.N - len(self.frozen)

    @property
    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.N, dtype=np.uint8)
        mask[sorted(self.frozen)] = 1
        return mask

    @property
    def info_indices(self) -> np.ndarray:
        return np.flatnonzero(self.frozen_mask == 0)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "frozen": sorted(self.frozen),
            "tie_policy": self.tie_policy,
            "channel": list(self.channel.as_tuple()),
        }

    @classmethod
    def from_json(cls, obj) -> "CodeConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["n"]), frozenset(obj["frozen"]), obj.get("tie_policy", "coin"),
                   ThreeLevelState(*obj["channel"]))


def branch_error_probs(channel: ThreeLevelState, n: int) -> np.ndarray:
    """``m + z/2`` of every depth-``n`` branch, indexed like the block bits."""
    _, m, z = branch_states(channel, n, cap=BRANCH_CAP)
    return m + 0.5 * z


def construct_frozen(channel: ThreeLevelState, n: int, k: int) -> frozenset:
    """Freeze all but the ``k`` branches with the smallest error probability."""
    if not 0 <= k <= 2**n:
        raise ValueError(f"k must lie in [0, {2**n}], got {k}")
    order = np.argsort(branch_error_probs(channel, n), kind="stable")
    return frozenset(int(i) for i in order[k:])


def union_bound(channel: ThreeLevelState, n: int, frozen) -> float:
    pe = branch_error_probs(channel, n)
    info = np.setdiff1d(np.arange(2**n), np.fromiter(frozen, dtype=int, count=len(frozen)))
    return float(np.sum(pe[info]))


def k_for_target(channel: ThreeLevelState, n: int, target: float) -> int:
    """Largest ``k`` whose best ``k`` branches have summed error at most ``target``."""
    pe = np.sort(branch_error_probs(channel, n), kind="stable")
    return int(np.searchsorted(np.cumsum(pe), target, side="right"))


def _check_length(arr: np.ndarray) -> int:
    n_sym = arr.shape[-1]
    if n_sym < 1 or n_sym & (n_sym - 1):
        raise ValueError(f"block length must be a power of two, got {n_sym}")
    return n_sym


def encode(u) -> np.ndarray:
    """``x = u F^{(x)n}`` over GF(2) with ``F = [[1, 0], [1, 1]]``; works on batches."""
    x = np.array(u, dtype=np.uint8, copy=True)
    if np.any(x > 1):
        raise ValueError("encode expects bits in {0, 1}")
    n_sym = _check_length(x)
    h = 1
    while h < n_sym:
        blocks = x.reshape(x.shape[:-1] + (n_sym // (2 * h), 2, h))
        blocks[..., 0, :] ^= blocks[..., 1, :]
        h *= 2
    return x


def channel_sim(x, channel: ThreeLevelState, seed) -> np.ndarray:
    """Pass bits through the three-level channel; output symbols in ``{-1, 0, +1}``."""
    x = np.asarray(x, dtype=np.uint8)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _channel_draw(x, channel, rng)


def _channel_draw(x, channel, rng):
    r = rng.random(x.shape)
    sym = np.where(r < channel.p, 1, np.where(r < channel.p + channel.z, 0, -1)).astype(np.int8)
    return np.where(x == 1, -sym, sym).astype(np.int8)


def _decode(received: np.ndarray, config: CodeConfig, coins: np.ndarray) -> np.ndarray:
    return _kernels.sc_decode_batch(
        np.ascontiguousarray(received, dtype=np.int8),
        config.frozen_mask,
        np.ascontiguousarray(coins, dtype=np.uint8),
        config.tie_policy == "coin",
    )


def sc_decode(received, config: CodeConfig, seed=0) -> np.ndarray:
    """SC decisions ``u_hat`` for one block or a batch of blocks."""
    received = np.asarray(received, dtype=np.int8)
    if received.shape[-1] != config.N:
        raise ValueError(f"received length {received.shape[-1]} does not match N={config.N}")
    if np.any(np.abs(received) > 1):
        raise ValueError("received symbols must lie in {-1, 0, +1}")
    batch = np.atleast_2d(received)
    coins = np.random.default_rng(seed).integers(0, 2, size=batch.shape, dtype=np.uint8)
    out = _decode(batch, config, coins)
    return out[0] if received.ndim == 1 else out


def _block_rng(master_seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(b,)))


def _run_blocks(trials: int, work, threads: int | None):
    sizes = [min(TRIAL_BLOCK, trials - a) for a in range(0, trials, TRIAL_BLOCK)]
    jobs = list(enumerate(sizes))
    if threads and threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda j: work(*j), jobs))
    return [work(*j) for j in jobs]


@dataclass(frozen=True)
class GenieResult:
    errors: np.ndarray  # per-index error count; ties add 1/2 under the coin policy
    trials: int
    predicted: np.ndarray

    @property
    def rates(self) -> np.ndarray:
        return self.errors / self.trials

    def z_scores(self) -> np.ndarray:
        """``(rate - predicted) / sigma`` with the binomial sigma of the prediction."""
        sigma = np.sqrt(self.predicted * (1 - self.predicted) / self.trials)
        diff = self.rates - self.predicted
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(sigma > 0, diff / np.where(sigma > 0, sigma, 1.0), np.where(diff == 0, 0.0, np.inf))

    def within_sigma(self, k: float = 3.0, continuity: float = 0.5) -> np.ndarray:
        """Per-index test ``|errors - T p| <= k sqrt(T p (1 - p)) + continuity``.

        Counts move in steps of 1/2 (coin ties), so half a count of continuity
        slack keeps indices with expected count far below one testable.
        """
        expected = self.trials * self.predicted
        sigma = np.sqrt(expected * (1 - self.predicted))
        return np.abs(self.errors - expected) <= k * sigma + continuity


def genie_aided_bit_error(config: CodeConfig, trials: int, master_seed: int,
                          threads: int | None = None) -> GenieResult:
    """Per-index error rates of SC decoding with all earlier bits supplied by a genie.

    Uses the all-zero codeword. With correct earlier decisions every partial
    sum is zero, so each leaf message only depends on the channel output.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    zeros = np.zeros(config.N, dtype=np.uint8)

    def work(b, size):
        rng = _block_rng(master_seed, b)
        rx = _channel_draw(np.broadcast_to(zeros, (size, config.N)), config.channel, rng)
        leaf = _kernels.genie_leaf_messages(np.ascontiguousarray(rx))
        neg = np.count_nonzero(leaf < 0, axis=0).astype(float)
        if config.tie_policy == "coin":
            neg += 0.5 * np.count_nonzero(leaf == 0, axis=0)
        return neg

    errors = np.sum(_run_blocks(trials, work, threads), axis=0)
    _, m, z = branch_states(config.channel, config.n)
    predicted = m + 0.5 * z if config.tie_policy == "coin" else m
    return GenieResult(errors, trials, predicted)


@dataclass(frozen=True)
class FerResult:
    frame_errors: int
    trials: int
    ci_low: float
    ci_high: float
    confidence: float = 0.95

    @property
    def fer(self) -> float:
        return self.frame_errors / self.trials


def fer_sim(config: CodeConfig, trials: int, master_seed: int, threads: int | None = None,
            confidence: float = 0.95) -> FerResult:
    """Frame error rate of the SC decoder with random information bits."""
    if trials < 1:
        raise ValueError("trials must be positive")
    info = config.info_indices

    def work(b, size):
        rng = _block_rng(master_seed, b)
        u = np.zeros((size, config.N), dtype=np.uint8)
        u[:, info] = rng.integers(0, 2, size=(size, len(info)), dtype=np.uint8)
        rx = _channel_draw(encode(u), config.channel, rng)
        coins = rng.integers(0, 2, size=(size, config.N), dtype=np.uint8)
        u_hat = _decode(rx, config, coins)
        return int(np.count_nonzero(np.any(u_hat != u, axis=1)))

    errors = int(sum(_run_blocks(trials, work, threads)))
    ci = binomtest(errors, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return FerResult(errors, trials, float(ci.low), float(ci.high), confidence)
