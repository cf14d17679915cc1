# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_pykernels``."""

import numpy as np
from libc.math cimport exp, sqrt


def gaussian_mix_eval(points, coeffs, alphas, centers):
    cdef double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef double[::1] a = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef double[:, ::1] ctr = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t nj = c.shape[0]
    value_arr = np.zeros(n)
    grad_arr = np.zeros((n, 3))
    hess_arr = np.zeros((n, 3, 3))
    cdef double[::1] value = value_arr
    cdef double[:, ::1] grad = grad_arr
    cdef double[:, :, ::1] hess = hess_arr
    cdef Py_ssize_t i, j, k, l
    cdef double d[3]
    cdef double r2, g, aj
    with nogil:
        for i in range(n):
            for j in range(nj):
                aj = a[j]
                r2 = 0.0
                for k in range(3):
                    d[k] = p[i, k] - ctr[j, k]
                    r2 += d[k] * d[k]
                g = c[j] * exp(-aj * r2)
                value[i] += g
                for k in range(3):
                    grad[i, k] += -2.0 * aj * g * d[k]
                    for l in range(3):
                        hess[i, k, l] += g * 4.0 * aj * aj * d[k] * d[l]
                    hess[i, k, k] -= g * 2.0 * aj
    return value_arr, grad_arr, hess_arr


def coulomb_pair_sum(pa, qa, pb, qb):
    cdef double[:, ::1] xa = np.ascontiguousarray(pa, dtype=np.float64)
    cdef double[:, ::1] xb = np.ascontiguousarray(pb, dtype=np.float64)
    cdef double[::1] wa = np.ascontiguousarray(qa, dtype=np.float64)
    cdef double[::1] wb = np.ascontiguousarray(qb, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double dx, dy, dz, r, inner, total = 0.0
    cdef bint coincident = False
    with nogil:
        for i in range(xa.shape[0]):
            inner = 0.0
            for j in range(xb.shape[0]):
                dx = xa[i, 0] - xb[j, 0]
                dy = xa[i, 1] - xb[j, 1]
                dz = xa[i, 2] - xb[j, 2]
                r = sqrt(dx * dx + dy * dy + dz * dz)
                if r == 0.0:
                    coincident = True
                    break
                inner += wb[j] / r
            if coincident:
                break
            total += wa[i] * inner
    if coincident:
        raise ZeroDivisionError("coincident points in Coulomb pair sum")
    return total
