# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled decode kernels: candidate-codebook residual scans.

Same contract as ``_kernels_py``: first index attaining the minimum metric
wins, which equals the lexicographically smallest bit pattern under the
package's candidate enumeration order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline double _metric_one(const double complex[:, :] y,
                               const double complex[:, :] h,
                               const double complex[:, :, :] c,
                               Py_ssize_t i, Py_ssize_t k,
                               Py_ssize_t t_dim, Py_ssize_t m_dim) nogil:
    cdef Py_ssize_t t, m
    cdef double complex v, d
    cdef double acc = 0.0
    for t in range(t_dim):
        v = 0
        for m in range(m_dim):
            v = v + c[k, t, m] * h[i, m]
        d = y[i, t] - v
        acc += d.real * d.real + d.imag * d.imag
    return acc


def scan_pair_blocks(const double complex[:, :] y1,
                     const double complex[:, :] h1,
                     const double complex[:, :, :] c1,
                     const double complex[:, :] y2,
                     const double complex[:, :] h2,
                     const double complex[:, :, :] c2):
    """Argmin over K candidates of the summed two-block residual metric."""
    cdef Py_ssize_t n = y1.shape[0]
    cdef Py_ssize_t kk = c1.shape[0]
    cdef Py_ssize_t t1 = c1.shape[1], m1 = c1.shape[2]
    cdef Py_ssize_t t2 = c2.shape[1], m2 = c2.shape[2]
    idx_arr = np.empty(n, dtype=np.int64)
    met_arr = np.empty(n, dtype=np.float64)
    cdef long long[:] idx = idx_arr
    cdef double[:] met = met_arr
    cdef Py_ssize_t i, k
    cdef double best, acc
    cdef long long bidx
    with nogil:
        for i in range(n):
            best = 1e300
            bidx = 0
            for k in range(kk):
                acc = _metric_one(y1, h1, c1, i, k, t1, m1)
                if acc < best:
                    acc += _metric_one(y2, h2, c2, i, k, t2, m2)
                    if acc < best:
                        best = acc
                        bidx = k
            idx[i] = bidx
            met[i] = best
    return idx_arr, met_arr


def scan_single_block(const double complex[:, :] y,
                      const double complex[:, :] h,
                      const double complex[:, :, :] c):
    """Single-block variant for quasi-static baseline codes."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t kk = c.shape[0]
    cdef Py_ssize_t t = c.shape[1], m = c.shape[2]
    idx_arr = np.empty(n, dtype=np.int64)
    met_arr = np.empty(n, dtype=np.float64)
    cdef long long[:] idx = idx_arr
    cdef double[:] met = met_arr
    cdef Py_ssize_t i, k
    cdef double best, acc
    cdef long long bidx
    with nogil:
        for i in range(n):
            best = 1e300
            bidx = 0
            for k in range(kk):
                acc = _metric_one(y, h, c, i, k, t, m)
                if acc < best:
                    best = acc
                    bidx = k
            idx[i] = bidx
            met[i] = best
    return idx_arr, met_arr
