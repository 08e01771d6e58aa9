# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled best-split search kernel; mirrors _split_py.best_split."""
import numpy as np
cimport numpy as cnp

BACKEND = "cython"


def best_split(cnp.ndarray[cnp.float64_t, ndim=2] X,
               cnp.ndarray[cnp.float64_t, ndim=1] y,
               rows, features, int min_leaf):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rows_ = np.ascontiguousarray(rows, dtype=np.int64)
    cdef Py_ssize_t n = rows_.shape[0]
    if n < 2 * min_leaf:
        return None
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ys = np.empty(n)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order
    cdef double best_score = np.inf
    cdef int best_feature = -1
    cdef double best_thr = 0.0
    cdef double lsum, lsum2, total, total2, rsum, rsum2, score
    cdef Py_ssize_t i, k, f
    cdef bint found = False

    for f_obj in features:
        f = f_obj
        for i in range(n):
            v[i] = X[rows_[i], f]
        order = np.argsort(v[:n], kind="stable")
        total = 0.0
        total2 = 0.0
        for i in range(n):
            ys[i] = y[rows_[order[i]]]
            total += ys[i]
            total2 += ys[i] * ys[i]
        lsum = 0.0
        lsum2 = 0.0
        for k in range(1, n):
            lsum += ys[k - 1]
            lsum2 += ys[k - 1] * ys[k - 1]
            if v[order[k]] <= v[order[k - 1]]:
                continue
            if k < min_leaf or n - k < min_leaf:
                continue
            rsum = total - lsum
            rsum2 = total2 - lsum2
            score = (lsum2 - lsum * lsum / k) + (rsum2 - rsum * rsum / (n - k))
            if not found or score < best_score:
                found = True
                best_score = score
                best_feature = <int>f
                best_thr = 0.5 * (v[order[k - 1]] + v[order[k]])
    if not found:
        return None
    return (best_feature, best_thr, best_score)
