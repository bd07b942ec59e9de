"""Numpy implementations of the decoder kernels, vectorized over frames."""

import numpy as np


def _decode(L, frozen, coins, coin_ties):
    n = L.shape[1]
    if n == 1:
        msg = L[:, 0]
        u = (msg < 0).astype(np.uint8)
        if coin_ties:
            u = np.where(msg == 0, coins[:, 0], u).astype(np.uint8)
        if frozen[0]:
            u[:] = 0
        return u[:, None], u[:, None].copy()
    h = n // 2
    a, b = L[:, :h], L[:, h:]
    u_left, x_left = _decode(a * b, frozen[:h], coins[:, :h], coin_ties)
    right = np.sign(b + (1 - 2 * x_left.astype(np.int8)) * a).astype(np.int8)
    u_right, x_right = _decode(right, frozen[h:], coins[:, h:], coin_ties)
    return np.hstack((u_left, u_right)), np.hstack((x_left ^ x_right, x_right))


def sc_decode_batch(received, frozen, coins, coin_ties):
    received = np.ascontiguousarray(received, dtype=np.int8)
    if received.shape[1] == 0:
        return np.zeros(received.shape, dtype=np.uint8)
    u, _ = _decode(received, np.asarray(frozen, dtype=np.uint8), np.asarray(coins, dtype=np.uint8), bool(coin_ties))
    return u


def genie_leaf_messages(received):
    L = np.ascontiguousarray(received, dtype=np.int8)
    batch, n = L.shape
    # Level by level: blocks of width w split into check (left) and sum (right) halves.
    w = n
    while w > 1:
        h = w // 2
        blocks = L.reshape(batch, n // w, 2, h)
        a, b = blocks[:, :, 0, :], blocks[:, :, 1, :]
        L = np.stack((a * b, np.sign(a + b).astype(np.int8)), axis=2).reshape(batch, n)
        w = h
    return L
