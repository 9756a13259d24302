# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled alignment DP kernels.

Cell-for-cell mirror of ``_reference``; see that module for the
accumulation-order and edge-handling contract shared by both backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def dtw_accumulate(cnp.ndarray[cnp.float64_t, ndim=2] D not None):
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t m = D.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] R = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] r = R
    cdef double[:, ::1] d = np.ascontiguousarray(D)
    cdef Py_ssize_t i, j
    cdef double best

    r[0, 0] = d[0, 0]
    for j in range(1, m):
        r[0, j] = d[0, j] + r[0, j - 1]
    for i in range(1, n):
        r[i, 0] = d[i, 0] + r[i - 1, 0]
        for j in range(1, m):
            best = r[i - 1, j - 1]
            if r[i - 1, j] < best:
                best = r[i - 1, j]
            if r[i, j - 1] < best:
                best = r[i, j - 1]
            r[i, j] = d[i, j] + best
    return R


def softdtw_forward(cnp.ndarray[cnp.float64_t, ndim=2] D not None, double gamma):
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t m = D.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] R = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] r = R
    cdef double[:, ::1] d = np.ascontiguousarray(D)
    cdef Py_ssize_t i, j
    cdef double xa, xb, xc, mx, s

    r[0, 0] = d[0, 0]
    for j in range(1, m):
        r[0, j] = d[0, j] + r[0, j - 1]
    for i in range(1, n):
        r[i, 0] = d[i, 0] + r[i - 1, 0]
        for j in range(1, m):
            xa = -r[i - 1, j - 1] / gamma
            xb = -r[i - 1, j] / gamma
            xc = -r[i, j - 1] / gamma
            mx = xa
            if xb > mx:
                mx = xb
            if xc > mx:
                mx = xc
            s = exp(xa - mx) + exp(xb - mx) + exp(xc - mx)
            r[i, j] = d[i, j] - gamma * (mx + log(s))
    return R


def softdtw_backward(cnp.ndarray[cnp.float64_t, ndim=2] D not None,
                     cnp.ndarray[cnp.float64_t, ndim=2] R not None,
                     double gamma):
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t m = D.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] E = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] e = E
    cdef double[:, ::1] d = np.ascontiguousarray(D)
    cdef double[:, ::1] r = np.ascontiguousarray(R)
    cdef Py_ssize_t i, j
    cdef double acc, rij

    e[n - 1, m - 1] = 1.0
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if i == n - 1 and j == m - 1:
                continue
            rij = r[i, j]
            acc = 0.0
            if i + 1 < n:
                acc += e[i + 1, j] * exp((r[i + 1, j] - d[i + 1, j] - rij) / gamma)
            if j + 1 < m:
                acc += e[i, j + 1] * exp((r[i, j + 1] - d[i, j + 1] - rij) / gamma)
                if i + 1 < n:
                    acc += e[i + 1, j + 1] * exp((r[i + 1, j + 1] - d[i + 1, j + 1] - rij) / gamma)
            e[i, j] = acc
    return E
