# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: single-mode displacement matrices and tensor assembly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp

cnp.import_array()


def displacement(double complex alpha, Py_ssize_t dim):
    """Matrix ``<m|D(alpha)|k>`` for ``0 <= m, k < dim`` by the column recurrence."""
    out = np.zeros((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] d = out
    cdef double complex ca = alpha.conjugate()
    cdef Py_ssize_t m, k
    cdef double rk
    if dim == 0:
        return out
    d[0, 0] = exp(-0.5 * (alpha.real * alpha.real + alpha.imag * alpha.imag))
    for m in range(1, dim):
        d[m, 0] = alpha / sqrt(<double>m) * d[m - 1, 0]
    for k in range(1, dim):
        rk = 1.0 / sqrt(<double>k)
        d[0, k] = -ca * d[0, k - 1] * rk
        for m in range(1, dim):
            d[m, k] = (sqrt(<double>m) * d[m - 1, k - 1] - ca * d[m, k - 1]) * rk
    return out


def tensor_select(double complex[:, :, ::1] mats, cnp.intp_t[:, ::1] rows,
                  cnp.intp_t[:, ::1] cols):
    """``out[b, a] = prod_j mats[j, rows[b, j], cols[a, j]]``."""
    cdef Py_ssize_t nr = rows.shape[0], nc = cols.shape[0], n = mats.shape[0]
    out = np.empty((nr, nc), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef Py_ssize_t b, a, j
    cdef double complex acc
    for b in range(nr):
        for a in range(nc):
            acc = mats[0, rows[b, 0], cols[a, 0]]
            for j in range(1, n):
                acc = acc * mats[j, rows[b, j], cols[a, j]]
            o[b, a] = acc
    return out
