import numpy as np
import pytest

from quantpolar import _kernels, _pykernels

_ckernels = pytest.importorskip("quantpolar._ckernels")


def _random_batch(rng, n, batch):
    rx = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=(batch, 2**n), p=[0.2, 0.3, 0.5])
    frozen = (rng.random(2**n) < 0.4).astype(np.uint8)
    coins = rng.integers(0, 2, size=(batch, 2**n), dtype=np.uint8)
    return np.ascontiguousarray(rx), frozen, coins


@pytest.mark.parametrize("n", [0, 1, 2, 5, 8])
@pytest.mark.parametrize("coin", [True, False])
def test_decoder_backends_agree(n, coin):
    rx, frozen, coins = _random_batch(np.random.default_rng(n), n, 300)
    assert np.array_equal(
        _ckernels.sc_decode_batch(rx, frozen, coins, coin),
        _pykernels.sc_decode_batch(rx, frozen, coins, coin),
    )


@pytest.mark.parametrize("n", [0, 1, 3, 8])
def test_genie_backends_agree(n):
    rx, _, _ = _random_batch(np.random.default_rng(10 + n), n, 300)
    assert np.array_equal(_ckernels.genie_leaf_messages(rx), _pykernels.genie_leaf_messages(rx))


def test_genie_equals_decoder_on_all_frozen_code():
    # with every bit frozen to zero, the decoder sees the genie's leaf messages;
    # decisions at information bits then read the leaf signs
    rng = np.random.default_rng(4)
    rx, _, coins = _random_batch(rng, 6, 200)
    leaf = _pykernels.genie_leaf_messages(rx)
    # unfreeze one bit at a time: its decision is a function of its own leaf
    for i in (0, 17, 63):
        frozen = np.ones(64, dtype=np.uint8)
        frozen[i] = 0
        u = _kernels.sc_decode_batch(rx, frozen, np.zeros_like(coins), False)
        assert np.array_equal(u[:, i], (leaf[:, i] < 0).astype(np.uint8))


def test_backend_selected():
    assert _kernels.BACKEND in ("cython", "numpy")
