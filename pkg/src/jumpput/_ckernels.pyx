# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal LCP sweeps.  Same contract as ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def brennan_schwartz(const double[::1] a, const double[::1] b, const double[::1] c,
                     const double[::1] d, const double[::1] g):
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i
    cdef double[::1] bp = np.empty(n)
    cdef double[::1] dp = np.empty(n)
    out = np.empty(n)
    cdef double[::1] u = out
    cdef double m, val
    bp[n - 1] = b[n - 1]
    dp[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        m = c[i] / bp[i + 1]
        bp[i] = b[i] - m * a[i + 1]
        dp[i] = d[i] - m * dp[i + 1]
    val = dp[0] / bp[0]
    u[0] = val if val > g[0] else g[0]
    for i in range(1, n):
        val = (dp[i] - a[i] * u[i - 1]) / bp[i]
        u[i] = val if val > g[i] else g[i]
    return out


def psor(const double[::1] a, const double[::1] b, const double[::1] c,
         const double[::1] d, const double[::1] g, const double[::1] u0,
         double omega, double tol, Py_ssize_t max_iter):
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i, it
    out = np.array(u0, dtype=np.float64, copy=True)
    cdef double[::1] u = out
    cdef double err, gs, new, diff, s
    for it in range(1, max_iter + 1):
        err = 0.0
        for i in range(n):
            s = d[i]
            if i > 0:
                s -= a[i] * u[i - 1]
            if i < n - 1:
                s -= c[i] * u[i + 1]
            gs = s / b[i]
            new = u[i] + omega * (gs - u[i])
            if new < g[i]:
                new = g[i]
            diff = new - u[i]
            if diff < 0:
                diff = -diff
            if diff > err:
                err = diff
            u[i] = new
        if err <= tol:
            return out, it, True
    return out, max_iter, False
