"""Pure-Python tridiagonal LCP sweeps.

Row ``i`` of the system reads ``a[i] u[i-1] + b[i] u[i] + c[i] u[i+1] = d[i]``
(``a[0]`` and ``c[-1]`` are ignored) and the solution is projected onto
``u >= g``.
"""

import numpy as np


def brennan_schwartz(a, b, c, d, g):
    """Direct LCP solve for a contact set that is a left interval.

    Eliminates the superdiagonal from the last row upward, then substitutes
    forward from the first row with projection.
    """
    a, b, c, d, g = (np.asarray(v, dtype=float).tolist() for v in (a, b, c, d, g))
    n = len(b)
    bp = [0.0] * n
    dp = [0.0] * n
    bp[-1] = b[-1]
    dp[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        m = c[i] / bp[i + 1]
        bp[i] = b[i] - m * a[i + 1]
        dp[i] = d[i] - m * dp[i + 1]
    u = [0.0] * n
    prev = max(dp[0] / bp[0], g[0])
    u[0] = prev
    for i in range(1, n):
        prev = max((dp[i] - a[i] * prev) / bp[i], g[i])
        u[i] = prev
    return np.array(u)


def psor(a, b, c, d, g, u0, omega, tol, max_iter):
    """Projected SOR; returns ``(u, iterations, converged)``.

    Stops when the largest update in a sweep is at most ``tol``.
    """
    a, b, c, d, g = (np.asarray(v, dtype=float).tolist() for v in (a, b, c, d, g))
    u = np.asarray(u0, dtype=float).tolist()
    n = len(b)
    last = n - 1
    for it in range(1, max_iter + 1):
        err = 0.0
        for i in range(n):
            s = d[i]
            if i > 0:
                s -= a[i] * u[i - 1]
            if i < last:
                s -= c[i] * u[i + 1]
            new = u[i] + omega * (s / b[i] - u[i])
            if new < g[i]:
                new = g[i]
            diff = abs(new - u[i])
            if diff > err:
                err = diff
            u[i] = new
        if err <= tol:
            return np.array(u), it, True
    return np.array(u), max_iter, False
