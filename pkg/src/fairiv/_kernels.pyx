# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled product-Epanechnikov kernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double _weight(const double[:, ::1] a, Py_ssize_t i,
                           const double[:, ::1] b, Py_ssize_t j,
                           Py_ssize_t d, double inv_h) noexcept nogil:
    cdef double w = 1.0, u
    cdef Py_ssize_t k
    for k in range(d):
        u = (a[i, k] - b[j, k]) * inv_h
        if fabs(u) >= 1.0:
            return 0.0
        w *= 0.75 * (1.0 - u * u)
    return w


def product_kernel(a, b, double h):
    """Raw product-Epanechnikov weights between rows of ``a`` and rows of ``b``."""
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0], n = bv.shape[0], d = av.shape[1]
    cdef Py_ssize_t i, j
    cdef double inv_h = 1.0 / h
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] ov = out
    with nogil:
        for i in range(m):
            for j in range(n):
                ov[i, j] = _weight(av, i, bv, j, d, inv_h)
    return out


def loo_cv_score(x, t, double h):
    """Mean squared leave-one-out Nadaraya-Watson error of targets ``t`` on ``x``."""
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], m = tv.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double inv_h = 1.0 / h, w, e, total = 0.0
    mass_arr = np.zeros(n, dtype=np.float64)
    acc_arr = np.zeros((n, m), dtype=np.float64)
    colsum_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] mass = mass_arr
    cdef double[:, ::1] acc = acc_arr
    cdef double[::1] colsum = colsum_arr
    with nogil:
        for i in range(n):
            for c in range(m):
                colsum[c] += tv[i, c]
            for j in range(i + 1, n):
                w = _weight(xv, i, xv, j, d, inv_h)
                if w > 0.0:
                    mass[i] += w
                    mass[j] += w
                    for c in range(m):
                        acc[i, c] += w * tv[j, c]
                        acc[j, c] += w * tv[i, c]
        for i in range(n):
            for c in range(m):
                if mass[i] > 0.0:
                    e = tv[i, c] - acc[i, c] / mass[i]
                else:
                    # isolated point: fall back to the mean of the others
                    e = tv[i, c] - (colsum[c] - tv[i, c]) / (n - 1)
                total += e * e
    return total / n
