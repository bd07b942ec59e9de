# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled successive-cancellation kernels on the {-1, 0, +1} alphabet."""

import numpy as np
from libc.stdlib cimport malloc, free


cdef inline signed char _sgn(int v) noexcept nogil:
    return (v > 0) - (v < 0)


cdef void _decode(signed char* L, Py_ssize_t n, const unsigned char* frozen,
                  const unsigned char* coins, bint coin, unsigned char* u,
                  unsigned char* x, signed char* scratch) noexcept nogil:
    cdef Py_ssize_t h, j
    cdef signed char* lc
    if n == 1:
        if frozen[0]:
            u[0] = 0
        elif L[0] > 0:
            u[0] = 0
        elif L[0] < 0:
            u[0] = 1
        else:
            u[0] = coins[0] if coin else 0
        x[0] = u[0]
        return
    h = n // 2
    lc = scratch
    for j in range(h):
        lc[j] = L[j] * L[j + h]
    _decode(lc, h, frozen, coins, coin, u, x, scratch + h)
    for j in range(h):
        lc[j] = _sgn(L[j + h] + (1 - 2 * x[j]) * L[j])
    _decode(lc, h, frozen + h, coins + h, coin, u + h, x + h, scratch + h)
    for j in range(h):
        x[j] ^= x[j + h]


cdef void _genie(signed char* L, Py_ssize_t n, signed char* out,
                 signed char* scratch) noexcept nogil:
    cdef Py_ssize_t h, j
    cdef signed char* lc
    if n == 1:
        out[0] = L[0]
        return
    h = n // 2
    lc = scratch
    for j in range(h):
        lc[j] = L[j] * L[j + h]
    _genie(lc, h, out, scratch + h)
    for j in range(h):
        lc[j] = _sgn(L[j + h] + L[j])
    _genie(lc, h, out + h, scratch + h)


def sc_decode_batch(const signed char[:, ::1] received, const unsigned char[::1] frozen,
                    const unsigned char[:, ::1] coins, bint coin_ties):
    cdef Py_ssize_t batch = received.shape[0], n = received.shape[1], f
    u_arr = np.zeros((batch, n), dtype=np.uint8)
    cdef unsigned char[:, ::1] u = u_arr
    cdef unsigned char* x = <unsigned char*> malloc(n)
    cdef signed char* llr = <signed char*> malloc(n)
    cdef signed char* scratch = <signed char*> malloc(n)
    if x == NULL or llr == NULL or scratch == NULL:
        free(x); free(llr); free(scratch)
        raise MemoryError()
    try:
        with nogil:
            for f in range(batch):
                for j in range(n):
                    llr[j] = received[f, j]
                _decode(llr, n, &frozen[0], &coins[f, 0], coin_ties, &u[f, 0], x, scratch)
    finally:
        free(x); free(llr); free(scratch)
    return u_arr


def genie_leaf_messages(const signed char[:, ::1] received):
    cdef Py_ssize_t batch = received.shape[0], n = received.shape[1], f, j
    out_arr = np.zeros((batch, n), dtype=np.int8)
    cdef signed char[:, ::1] out = out_arr
    cdef signed char* llr = <signed char*> malloc(n)
    cdef signed char* scratch = <signed char*> malloc(n)
    if llr == NULL or scratch == NULL:
        free(llr); free(scratch)
        raise MemoryError()
    try:
        with nogil:
            for f in range(batch):
                for j in range(n):
                    llr[j] = received[f, j]
                _genie(llr, n, &out[f, 0], scratch)
    finally:
        free(llr); free(scratch)
    return out_arr
