"""Compare the compiled and numpy decoder kernels.

Usage::

    python benchmarks/bench_kernels.py [--n 8] [--batch 4096] [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and backend, the speedup,
and whether both backends produced identical output.
"""

import argparse
import timeit

import numpy as np

from quantpolar import _pykernels
from quantpolar.codec import construct_frozen
from quantpolar.dist import ThreeLevelState

try:
    from quantpolar import _ckernels
except ImportError:
    _ckernels = None


def make_inputs(n, batch, seed):
    rng = np.random.default_rng(seed)
    ch = ThreeLevelState(0.9, 0.01, 0.09)
    received = rng.choice(np.array([1, 0, -1], dtype=np.int8), size=(batch, 2**n), p=ch.as_tuple())
    frozen = np.zeros(2**n, dtype=np.uint8)
    frozen[sorted(construct_frozen(ch, n, 2 ** (n - 1)))] = 1
    coins = rng.integers(0, 2, size=(batch, 2**n), dtype=np.uint8)
    return np.ascontiguousarray(received), frozen, coins


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--batch", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rx, frozen, coins = make_inputs(args.n, args.batch, args.seed)
    cases = {
        "sc_decode_batch": lambda mod: mod.sc_decode_batch(rx, frozen, coins, True),
        "genie_leaf_messages": lambda mod: mod.genie_leaf_messages(rx),
    }
    print(f"N={2**args.n} batch={args.batch} repeat={args.repeat}")
    print(f"{'kernel':<22}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}  identical")
    for name, call in cases.items():
        t_py = best_time(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<22}{t_py:>12.4f}{'n/a':>12}{'n/a':>10}  n/a")
            continue
        t_c = best_time(lambda: call(_ckernels), args.repeat)
        same = np.array_equal(call(_pykernels), call(_ckernels))
        print(f"{name:<22}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>10.1f}  {same}")


if __name__ == "__main__":
    main()
