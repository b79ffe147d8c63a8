"""One application of the operator J as a sequence of tridiagonal LCPs.

``J f`` is the value of stopping a geometric Brownian motion (no jumps) with
killing rate ``r + lambda`` and running reward ``lambda * Pf``.  On the grid it
solves, level by level in time-to-maturity ``T``,

    min(u - payoff, u_T - (A u - (r + lambda) u + lambda Pf)) = 0,
    u(x, 0) = payoff(x),  u(0, T) = K,  u(x_M, T) = 0,

with ``A = 1/2 sigma^2 x^2 d_xx + mu x d_x``.  ``f`` is a stored previous
iterate, so ``Pf`` enters as a known source and every step is a tridiagonal
LCP.  Time stepping is theta-weighted with fully implicit start-up steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .exceptions import GridMismatch, ObstacleViolation, PsorDiverged, ValidationError
from .grid import Grid, ValueSurface
from .jump_measure import JumpOperator
from .model import ModelParams, payoff_eval

LCP_METHODS = ("brennan_schwartz", "psor")


@dataclass(frozen=True)
class SolverConfig:
    theta: float = 0.5
    rannacher_steps: int = 2
    lcp_method: str = "brennan_schwartz"
    psor_omega: float = 1.2
    psor_tol: float | None = None  # None -> 1e-10 * K
    psor_max_iter: int = 100_000
    backend: str | None = None  # None -> kernels.BACKEND

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValidationError(f"theta must lie in [0, 1], got {self.theta}")
        if self.rannacher_steps < 0:
            raise ValidationError("rannacher_steps must be >= 0")
        if self.lcp_method not in LCP_METHODS:
            raise ValidationError(f"lcp_method must be one of {LCP_METHODS}")
        if not 0.0 < self.psor_omega < 2.0:
            raise ValidationError("psor_omega must lie in (0, 2)")
        if self.psor_tol is not None and not self.psor_tol > 0:
            raise ValidationError("psor_tol must be > 0")
        if self.psor_max_iter < 1:
            raise ValidationError("psor_max_iter must be >= 1")

    def contact_tol(self, K):
        return self.psor_tol if self.psor_tol is not None else 1e-10 * K

    def theta_at(self, step):
        return 1.0 if step < self.rannacher_steps else self.theta


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Tridiagonal ``A - (r + lambda)`` on the grid.

    Rows 0 and M (Dirichlet nodes) are zero.  Row 1 uses a non-uniform
    three-point stencil in ``x`` reaching down to ``x_0 = 0``; rows 2..M-1 use
    central differences in ``y = log x`` where the coefficients are constant.
    A row switches to upwind drift only if central differencing would give a
    negative off-diagonal.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    killing: float
    upwinded: np.ndarray

    def apply(self, u):
        """``(L u)_i`` at interior nodes; NaN on the two Dirichlet rows."""
        u = np.asarray(u, dtype=float)
        out = np.full(u.shape, np.nan)
        out[1:-1] = self.lower[1:-1] * u[:-2] + self.diag[1:-1] * u[1:-1] + self.upper[1:-1] * u[2:]
        return out

    def apply_surface(self, U):
        U = np.asarray(U, dtype=float)
        lo, di, up = (v[1:-1, None] for v in (self.lower, self.diag, self.upper))
        out = np.full(U.shape, np.nan)
        out[1:-1] = lo * U[:-2] + di * U[1:-1] + up * U[2:]
        return out


def assemble(params: ModelParams, grid: Grid) -> DiscreteOperator:
    M = grid.M
    x = grid.x
    sig2 = params.sigma**2
    mu = params.mu
    kill = params.killing
    lower = np.zeros(M + 1)
    upper = np.zeros(M + 1)
    upwinded = np.zeros(M + 1, dtype=bool)

    # node 1: neighbours x_0 = 0 and x_2
    hm, hp = x[1] - x[0], x[2] - x[1]
    diff = 0.5 * sig2 * x[1] ** 2
    drift = mu * x[1]
    lo = diff * 2.0 / (hm * (hm + hp)) - drift * hp / (hm * (hm + hp))
    hi = diff * 2.0 / (hp * (hm + hp)) + drift * hm / (hp * (hm + hp))
    if lo < 0 or hi < 0:
        lo = diff * 2.0 / (hm * (hm + hp)) + max(-drift, 0.0) / hm
        hi = diff * 2.0 / (hp * (hm + hp)) + max(drift, 0.0) / hp
        upwinded[1] = True
    lower[1], upper[1] = lo, hi

    # nodes 2..M-1: constant coefficients in log-price
    dy = grid.dy
    a = 0.5 * sig2 / dy**2
    nu = mu - 0.5 * sig2
    lo, hi = a - nu / (2 * dy), a + nu / (2 * dy)
    if lo < 0 or hi < 0:
        lo, hi = a + max(-nu, 0.0) / dy, a + max(nu, 0.0) / dy
        upwinded[2:M] = True
    lower[2:M] = lo
    upper[2:M] = hi

    diag = np.zeros(M + 1)
    diag[1:M] = -(lower[1:M] + upper[1:M]) - kill
    return DiscreteOperator(lower, diag, upper, kill, upwinded)


def _source(f: ValueSurface | None, params: ModelParams, grid: Grid, jump_op=None):
    """``lambda * Pf`` on every node and level (zeros when lambda = 0)."""
    if params.lam == 0 or f is None:
        return np.zeros(grid.shape)
    if not f.grid.same_as(grid):
        raise GridMismatch("input surface lives on a different grid")
    op = jump_op if jump_op is not None else JumpOperator(grid.x, params.jump)
    return params.lam * op.apply(f.values)


def apply_J(f: ValueSurface | None, params: ModelParams, grid: Grid,
            config: SolverConfig = SolverConfig(), jump_op: JumpOperator | None = None,
            label=None) -> ValueSurface:
    """Solve the obstacle problem with source ``lambda * Pf``; returns ``Jf``."""
    K = params.K
    M, N = grid.M, grid.N
    L = assemble(params, grid)
    src = _source(f, params, grid, jump_op)
    g = payoff_eval(grid.x, K)
    g_in = np.ascontiguousarray(g[1:M])
    tol = config.contact_tol(K)
    backend = kernels.get_backend(config.backend)

    u = np.empty((M + 1, N + 1))
    u[:, 0] = g
    u[0, :] = K
    u[M, :] = 0.0
    lo, di, up = L.lower[1:M], L.diag[1:M], L.upper[1:M]
    for j in range(N):
        dt = grid.t[j + 1] - grid.t[j]
        th = config.theta_at(j)
        prev = u[:, j]
        rhs = prev[1:M].copy()
        if th < 1.0:
            rhs += (1.0 - th) * dt * (lo * prev[:-2] + di * prev[1:M] + up * prev[2:])
        rhs += dt * (th * src[1:M, j + 1] + (1.0 - th) * src[1:M, j])
        rhs[0] += th * dt * lo[0] * u[0, j + 1]
        rhs[-1] += th * dt * up[-1] * u[M, j + 1]
        a = -th * dt * lo
        b = 1.0 - th * dt * di
        c = -th * dt * up
        if config.lcp_method == "brennan_schwartz":
            sol = backend.brennan_schwartz(a, b, c, rhs, g_in)
        else:
            start = np.maximum(prev[1:M], g_in)
            sol, _, ok = backend.psor(a, b, c, rhs, g_in, start, config.psor_omega, tol,
                                      config.psor_max_iter)
            if not ok:
                raise PsorDiverged(f"PSOR did not reach {tol:g} in {config.psor_max_iter} sweeps "
                                   f"at T={grid.t[j + 1]:g}")
        if np.any(sol < g_in - tol):
            raise ObstacleViolation(f"solution below payoff at T={grid.t[j + 1]:g}")
        u[1:M, j + 1] = sol
    return ValueSurface(grid, u, label)


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """Discrete residual ``R = theta-weighted (L u + lambda Pf) - du/dT``.

    ``residual[:, j]`` belongs to the step ending at level ``T_{j+1}``.
    """

    residual: np.ndarray
    continuation: np.ndarray
    stopping: np.ndarray
    continuation_max: float
    stopping_max_positive: float


def residual_check(u: ValueSurface, f: ValueSurface | None, params: ModelParams, grid: Grid,
                   config: SolverConfig = SolverConfig()) -> ResidualReport:
    """Residual of the scheme that produced ``u = J f``.

    Continuation nodes are those separated from the payoff whose left
    neighbour is separated too (the cell at the free boundary is excluded);
    stopping nodes are the contact nodes.  Only interior nodes are reported.
    """
    if not u.grid.same_as(grid):
        raise GridMismatch("surface lives on a different grid")
    K = params.K
    N = grid.N
    L = assemble(params, grid)
    src = _source(f, params, grid)
    LU = L.apply_surface(u.values)
    theta = np.array([config.theta_at(j) for j in range(N)])[None, :]
    dt = np.diff(grid.t)[None, :]
    R = (theta * (LU[:, 1:] + src[:, 1:]) + (1 - theta) * (LU[:, :-1] + src[:, :-1])
         - np.diff(u.values, axis=1) / dt)
    sep = (u.values - payoff_eval(grid.x, K)[:, None]) > config.contact_tol(K)
    interior = np.zeros(grid.shape[0], dtype=bool)
    interior[1:-1] = True
    interior = interior[:, None]
    cont = sep[:, 1:] & np.vstack([np.zeros((1, N), bool), sep[:-1, 1:]]) & interior
    stop = ~sep[:, 1:] & interior
    R[~interior[:, 0], :] = np.nan
    cmax = float(np.max(np.abs(R[cont]))) if cont.any() else 0.0
    smax = float(max(np.max(R[stop]), 0.0)) if stop.any() else 0.0
    return ResidualReport(R, cont, stop, cmax, smax)
