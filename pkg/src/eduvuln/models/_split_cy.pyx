# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled best-split scan.

Mirrors _split_np operation for operation: sequential cumulative sums,
identical proxy expressions, first-maximum tie-breaking. Compiled with
-ffp-contract=off so results are bit-identical to the numpy fallback.
"""

import numpy as np

BACKEND = "cython"


def best_split_regression(double[::1] values, double[::1] targets, Py_ssize_t min_leaf):
    cdef Py_ssize_t n = values.shape[0]
    if n < 2 * min_leaf:
        return -1, -np.inf
    cdef Py_ssize_t i, best_pos = -1
    cdef double acc = 0.0, total = 0.0
    cdef double sl, sr, nl, nr, proxy, best_proxy = -np.inf
    cdef double nd = <double> n

    for i in range(n):
        total += targets[i]

    with nogil:
        acc = 0.0
        for i in range(n - min_leaf):
            acc += targets[i]
            if i < min_leaf - 1:
                continue
            if not values[i] < values[i + 1]:
                continue
            nl = <double> (i + 1)
            nr = nd - nl
            sl = acc
            sr = total - sl
            proxy = sl * sl / nl + sr * sr / nr
            if proxy > best_proxy:
                best_proxy = proxy
                best_pos = i

    if best_pos < 0:
        return -1, -np.inf
    return best_pos, best_proxy


def best_split_classification(double[::1] values, double[::1] labels, Py_ssize_t min_leaf):
    cdef Py_ssize_t n = values.shape[0]
    if n < 2 * min_leaf:
        return -1, -np.inf
    cdef Py_ssize_t i, best_pos = -1
    cdef double acc = 0.0, total_pos = 0.0
    cdef double pl, ql, pr, qr, nl, nr, proxy, best_proxy = -np.inf
    cdef double nd = <double> n

    for i in range(n):
        total_pos += labels[i]

    with nogil:
        acc = 0.0
        for i in range(n - min_leaf):
            acc += labels[i]
            if i < min_leaf - 1:
                continue
            if not values[i] < values[i + 1]:
                continue
            nl = <double> (i + 1)
            nr = nd - nl
            pl = acc
            ql = nl - pl
            pr = total_pos - pl
            qr = nr - pr
            proxy = (pl * pl + ql * ql) / nl + (pr * pr + qr * qr) / nr
            if proxy > best_proxy:
                best_proxy = proxy
                best_pos = i

    if best_pos < 0:
        return -1, -np.inf
    return best_pos, best_proxy
