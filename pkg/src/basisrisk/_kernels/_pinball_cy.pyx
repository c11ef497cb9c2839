# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled exact pinball-loss line fit.

Mirrors pinball_np exactly: same candidate order (horizontal lines through
each observation, then pair lines in lexicographic order, pairs with equal
index values skipped) and strict-improvement selection, so ties resolve the
same way in both backends.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _loss(const double* y, const double* f, Py_ssize_t t,
                         double c, double b, double tau) noexcept nogil:
    cdef Py_ssize_t k
    cdef double r, v = 0.0
    for k in range(t):
        r = y[k] - c - b * f[k]
        if r < 0.0:
            v += r * (tau - 1.0)
        else:
            v += r * tau
    return v


cdef void _fit_one(const double* y, const double* f, Py_ssize_t t, double tau,
                   double* out_c, double* out_b, double* out_v) noexcept nogil:
    cdef Py_ssize_t s, u
    cdef double c, b, v, df
    cdef double best_c = 0.0, best_b = 0.0, best_v
    best_v = _loss(y, f, t, y[0], 0.0, tau)
    best_c = y[0]
    for s in range(1, t):
        v = _loss(y, f, t, y[s], 0.0, tau)
        if v < best_v:
            best_v = v
            best_c = y[s]
            best_b = 0.0
    for s in range(t - 1):
        for u in range(s + 1, t):
            df = f[s] - f[u]
            if df == 0.0:
                continue
            b = (y[s] - y[u]) / df
            c = y[s] - b * f[s]
            v = _loss(y, f, t, c, b, tau)
            if v < best_v:
                best_v = v
                best_c = c
                best_b = b
    out_c[0] = best_c
    out_b[0] = best_b
    out_v[0] = best_v


def fit_line(const double[::1] y, const double[::1] f, double tau):
    """Exact minimizer of sum_t rho_tau(y_t - c - b f_t); returns (c, b, loss)."""
    cdef double c = 0.0, b = 0.0, v = 0.0
    cdef Py_ssize_t t = y.shape[0]
    with nogil:
        _fit_one(&y[0], &f[0], t, tau, &c, &b, &v)
    return c, b, v


def panel_line_v(const double[:, ::1] values, const double[::1] f, double tau):
    """Per-field minimal line losses for a T x N panel against one index."""
    cdef Py_ssize_t t = values.shape[0]
    cdef Py_ssize_t n = values.shape[1]
    cdef Py_ssize_t i, k
    cdef double c = 0.0, b = 0.0, v = 0.0
    out = np.empty(n)
    col = np.empty(t)
    cdef double[::1] out_v = out
    cdef double[::1] col_v = col
    for i in range(n):
        for k in range(t):
            col_v[k] = values[k, i]
        with nogil:
            _fit_one(&col_v[0], &f[0], t, tau, &c, &b, &v)
        out_v[i] = v
    return out
