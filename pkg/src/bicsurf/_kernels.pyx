# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel sums for Green potentials (see ``_kernels_py`` for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, sin, cos, sinh, exp, floor, M_PI

cnp.import_array()

cdef double INV_2PI = 1.0 / (2.0 * M_PI)
cdef double SPHERE_C0 = -1.0 / (4.0 * M_PI)
cdef double LOG2 = log(2.0)


def sphere_green_sum(const double[:, ::1] X, const double[:, ::1] Y, const double[::1] w,
                     const double[::1] fy, const double[::1] fx):
    cdef Py_ssize_t n = X.shape[0], m = Y.shape[0], i, j
    cdef double acc, d0, d1, d2, r2, g, xi0, xi1, xi2, fxi
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            xi0 = X[i, 0]; xi1 = X[i, 1]; xi2 = X[i, 2]; fxi = fx[i]
            acc = 0.0
            for j in range(m):
                d0 = xi0 - Y[j, 0]; d1 = xi1 - Y[j, 1]; d2 = xi2 - Y[j, 2]
                r2 = d0 * d0 + d1 * d1 + d2 * d2
                if r2 < 1e-28:
                    continue
                g = -0.5 * INV_2PI * log(0.25 * r2) + SPHERE_C0
                acc += w[j] * g * (fy[j] - fxi)
            o[i] = acc
    return out


def plane_log_sum(const double[:, ::1] X, const double[:, ::1] Y, const double[::1] w):
    cdef Py_ssize_t n = X.shape[0], m = Y.shape[0], i, j
    cdef double acc, d0, d1, r2, xi0, xi1
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            xi0 = X[i, 0]; xi1 = X[i, 1]
            acc = 0.0
            for j in range(m):
                d0 = xi0 - Y[j, 0]; d1 = xi1 - Y[j, 1]
                r2 = d0 * d0 + d1 * d1
                if r2 < 1e-28:
                    continue
                acc += w[j] * log(r2)
            o[i] = -0.5 * INV_2PI * acc
    return out


cdef inline double _torus_green(double dx, double dy) nogil:
    cdef double s2, acc, c, a, b
    cdef int k
    dx = dx - floor(dx + 0.5)
    dy = dy - floor(dy + 0.5)
    s2 = sin(M_PI * dx) ** 2 + sinh(M_PI * dy) ** 2
    acc = LOG2 - M_PI / 6.0 + 0.5 * log(s2)
    c = cos(2.0 * M_PI * dx)
    for k in range(1, 8):
        a = exp(-2.0 * M_PI * (k + dy))
        b = exp(-2.0 * M_PI * (k - dy))
        acc += 0.5 * (log(1.0 - 2.0 * a * c + a * a) + log(1.0 - 2.0 * b * c + b * b))
    return -INV_2PI * acc + 0.5 * dy * dy


def torus_green_exact(const double[:, ::1] D):
    cdef Py_ssize_t n = D.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _torus_green(D[i, 0], D[i, 1])
    return out


def torus_green_sum(const double[:, ::1] X, const double[:, ::1] Y, const double[::1] w,
                    const double[::1] fy, const double[::1] fx):
    cdef Py_ssize_t n = X.shape[0], m = Y.shape[0], i, j
    cdef double acc, dx, dy, fxi
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            fxi = fx[i]
            acc = 0.0
            for j in range(m):
                dx = X[i, 0] - Y[j, 0]; dy = X[i, 1] - Y[j, 1]
                dx = dx - floor(dx + 0.5); dy = dy - floor(dy + 0.5)
                if dx * dx + dy * dy < 1e-28:
                    continue
                acc += w[j] * _torus_green(dx, dy) * (fy[j] - fxi)
            o[i] = acc
    return out


def torus_fourier(const double[:, ::1] D, int truncation):
    cdef Py_ssize_t n = D.shape[0], i
    cdef int T = truncation, a, b
    cdef double acc, inv4pi2 = 1.0 / (4.0 * M_PI * M_PI)
    cdef double[::1] cx = np.empty(T + 1)
    cdef double[::1] cy = np.empty(T + 1)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    # symmetric sum: cos(2pi(m dx + n dy)) pairs reduce to products of cosines
    with nogil:
        for i in range(n):
            for a in range(T + 1):
                cx[a] = cos(2.0 * M_PI * a * D[i, 0])
                cy[a] = cos(2.0 * M_PI * a * D[i, 1])
            acc = 0.0
            for a in range(T + 1):
                for b in range(T + 1):
                    if a == 0 and b == 0:
                        continue
                    acc += (2.0 if a > 0 else 1.0) * (2.0 if b > 0 else 1.0) \
                        * cx[a] * cy[b] / (a * a + b * b)
            o[i] = acc * inv4pi2
    return out
