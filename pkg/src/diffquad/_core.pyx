# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled series kernels; see :mod:`diffquad._core_py` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

# Rotation recurrence for cos(k*delta) is re-seeded from libm this often.
DEF RESEED = 128


def cos_series(a, delta):
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] dv = np.ascontiguousarray(delta, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0], m = dv.shape[0], i, k
    out = np.zeros(m)
    cdef double[::1] ov = out
    cdef double c, s, cd, sd, tmp, acc, d
    for i in range(m):
        d = dv[i]
        cd = cos(d)
        sd = sin(d)
        c = 1.0
        s = 0.0
        acc = 0.0
        for k in range(n):
            if k % RESEED == 0:
                c = cos(k * d)
                s = sin(k * d)
            acc += av[k] * c
            tmp = c * cd - s * sd
            s = s * cd + c * sd
            c = tmp
        ov[i] = acc
    return out


def legendre_series(c, t):
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[::1] tv = np.clip(np.ascontiguousarray(t, dtype=np.float64), -1.0, 1.0)
    cdef Py_ssize_t n = cv.shape[0], m = tv.shape[0], i, ell
    out = np.zeros(m)
    cdef double[::1] ov = out
    if n == 0:
        return out
    # degree-outer, point-inner so the inner loop vectorizes
    cdef double[::1] p_prev = np.ones(m)
    cdef double[::1] p = np.array(tv, copy=True)
    cdef double a, b, ck, tmp
    for i in range(m):
        ov[i] = cv[0]
    if n == 1:
        return out
    ck = cv[1]
    for i in range(m):
        ov[i] += ck * p[i]
    for ell in range(1, n - 1):
        a = (2.0 * ell + 1.0) / (ell + 1.0)
        b = ell / (ell + 1.0)
        ck = cv[ell + 1]
        for i in range(m):
            tmp = a * tv[i] * p[i] - b * p_prev[i]
            p_prev[i] = p[i]
            p[i] = tmp
            ov[i] += ck * tmp
    return out


cdef inline void _fill_cos(double d, double* out, Py_ssize_t n) nogil:
    cdef double c = 1.0, s = 0.0, cd = cos(d), sd = sin(d), tmp
    cdef Py_ssize_t k
    for k in range(n):
        if k % RESEED == 0:
            c = cos(k * d)
            s = sin(k * d)
        out[k] = c
        tmp = c * cd - s * sd
        s = s * cd + c * sd
        c = tmp


def cos_series_2d(coef, d1, d2):
    cdef double[:, ::1] cf = np.ascontiguousarray(coef, dtype=np.float64)
    cdef double[::1] v1 = np.ascontiguousarray(d1, dtype=np.float64)
    cdef double[::1] v2 = np.ascontiguousarray(d2, dtype=np.float64)
    cdef Py_ssize_t n1 = cf.shape[0], n2 = cf.shape[1], m = v1.shape[0], i, k1, k2
    out = np.zeros(m)
    cdef double[::1] ov = out
    if n1 == 0 or n2 == 0:
        return out
    cdef double[::1] c1 = np.empty(n1)
    cdef double[::1] c2 = np.empty(n2)
    cdef double[::1] row = np.empty(n2)
    cdef double acc, w
    for i in range(m):
        _fill_cos(v1[i], &c1[0], n1)
        _fill_cos(v2[i], &c2[0], n2)
        row[:] = 0.0
        # axpy over rows keeps the inner loop free of reductions
        for k1 in range(n1):
            w = c1[k1]
            if w != 0.0:
                for k2 in range(n2):
                    row[k2] += w * cf[k1, k2]
        acc = 0.0
        for k2 in range(n2):
            acc += row[k2] * c2[k2]
        ov[i] = acc
    return out


def project_simplex(v):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = vv.shape[0], j
    cdef double[::1] u = np.sort(np.asarray(vv))[::-1].copy()
    cdef double css = 0.0, theta = 0.0
    for j in range(n):
        css += u[j]
        if u[j] - (css - 1.0) / (j + 1) > 0:
            theta = (css - 1.0) / (j + 1)
    out = np.empty(n)
    cdef double[::1] ov = out
    for j in range(n):
        ov[j] = vv[j] - theta if vv[j] > theta else 0.0
    return out
