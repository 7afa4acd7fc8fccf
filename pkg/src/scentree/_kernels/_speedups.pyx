# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: simplex pivot update and RBF kernel blocks."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

COMPILED = True


def pivot_update(double[:, ::1] binv, double[::1] d, Py_ssize_t r):
    """In-place product-form update of a basis inverse (see fallback)."""
    cdef Py_ssize_t m = binv.shape[0]
    cdef Py_ssize_t i, j
    cdef double piv = d[r]
    cdef double di
    with nogil:
        for j in range(m):
            binv[r, j] /= piv
        for i in range(m):
            if i == r:
                continue
            di = d[i]
            if di == 0.0:
                continue
            for j in range(m):
                binv[i, j] -= di * binv[r, j]


def rbf_cross(double[:, ::1] q, double[:, ::1] x, double inv_two_theta2):
    """Gaussian kernel block: out[i, j] = exp(-||q_i - x_j||^2 * inv_two_theta2)."""
    cdef Py_ssize_t nq = q.shape[0]
    cdef Py_ssize_t nx = x.shape[0]
    cdef Py_ssize_t d = q.shape[1]
    out_arr = np.empty((nq, nx), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double s, diff
    with nogil:
        for i in range(nq):
            for j in range(nx):
                s = 0.0
                for k in range(d):
                    diff = q[i, k] - x[j, k]
                    s += diff * diff
                out[i, j] = exp(-inv_two_theta2 * s)
    return out_arr
