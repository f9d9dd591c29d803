# cython: language_level=3
"""Compiled kernels; see :mod:`krrpm._fallback` for the reference versions."""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, pow, sqrt

cnp.import_array()


def laplacian_gram(const double[:, ::1] X, const double[:, ::1] Z, double scale):
    cdef Py_ssize_t n = X.shape[0], m = Z.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] G = out
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for t in range(d):
                    diff = X[i, t] - Z[j, t]
                    acc = acc + diff * diff
                G[i, j] = exp(-sqrt(acc) / scale)
    return out


def laplacian_gram_sym(const double[:, ::1] X, double scale):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc, diff, v
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] G = out
    with nogil:
        for i in range(n):
            G[i, i] = 1.0
            for j in range(i + 1, n):
                acc = 0.0
                for t in range(d):
                    diff = X[i, t] - X[j, t]
                    acc = acc + diff * diff
                v = exp(-sqrt(acc) / scale)
                G[i, j] = v
                G[j, i] = v
    return out


def trig2d_gram(const double[:, ::1] X, const double[:, ::1] Z):
    cdef Py_ssize_t n = X.shape[0], m = Z.shape[0]
    cdef Py_ssize_t i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] G = out
    with nogil:
        for i in range(n):
            for j in range(m):
                G[i, j] = cos(X[i, 0] - Z[j, 0]) + cos(X[i, 1] - Z[j, 1])
    return out


def trig2d_gram_sym(const double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i, j
    cdef double v
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] G = out
    with nogil:
        for i in range(n):
            for j in range(i, n):
                v = cos(X[i, 0] - X[j, 0]) + cos(X[i, 1] - X[j, 1])
                G[i, j] = v
                G[j, i] = v
    return out


def critical_values(const double[::1] resid, const double[::1] m,
                    const double[::1] one_minus_h, double ad, double mean, double p):
    cdef Py_ssize_t n = resid.shape[0]
    cdef Py_ssize_t i
    cdef double s, lead = pow(ad, 1.0 - p)
    A_arr = np.empty(n, dtype=np.float64)
    B_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] A = A_arr
    cdef double[::1] B = B_arr
    with nogil:
        for i in range(n):
            if p == 0.5:
                s = sqrt(one_minus_h[i])
            elif p == 0.0:
                s = 1.0
            else:
                s = pow(one_minus_h[i], p)
            A[i] = lead * mean + (resid[i] + ad * m[i] * mean) / s
            B[i] = lead + ad * m[i] / s
    return A_arr, B_arr


cdef Py_ssize_t _lower_bound(const double[::1] keys, double v) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _upper_bound(const double[::1] keys, double v) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def step_counts(const double[::1] keys, const double[::1] ykeys):
    cdef Py_ssize_t q = ykeys.shape[0]
    cdef Py_ssize_t j, lo
    lt_arr = np.empty(q, dtype=np.int64)
    eq_arr = np.empty(q, dtype=np.int64)
    cdef cnp.int64_t[::1] lt = lt_arr
    cdef cnp.int64_t[::1] eq = eq_arr
    with nogil:
        for j in range(q):
            lo = _lower_bound(keys, ykeys[j])
            lt[j] = lo
            eq[j] = _upper_bound(keys, ykeys[j]) - lo
    return lt_arr, eq_arr
