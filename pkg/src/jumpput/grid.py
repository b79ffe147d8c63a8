"""Space-time grid, value surfaces and free-boundary extraction.

Prices live on ``x_0 = 0`` followed by ``M`` nodes uniform in ``log(x/K)``;
time-to-maturity levels are uniform on ``[0, T0]``.  ``x = 0`` is absorbing,
so it is carried as a Dirichlet node with value ``K`` instead of being part of
the log-grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import BoundaryAtEdge, GridMismatch, GridTooSmall, NoContactRegion
from .model import ModelParams, payoff_eval

DEFAULT_WIDTH = 5.0


@dataclass(frozen=True, eq=False)
class Grid:
    x: np.ndarray
    t: np.ndarray
    K: float

    def __post_init__(self):
        for name in ("x", "t"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.x[0] != 0.0 or np.any(np.diff(self.x) <= 0):
            raise GridTooSmall("spatial nodes must start at 0 and increase strictly")
        if self.t[0] != 0.0 or np.any(np.diff(self.t) <= 0):
            raise GridTooSmall("time levels must start at 0 and increase strictly")

    @property
    def M(self):
        return len(self.x) - 1

    @property
    def N(self):
        return len(self.t) - 1

    @property
    def dy(self):
        """Log-spacing of the nodes ``x_1 .. x_M``."""
        return math.log(self.x[2] / self.x[1])

    @property
    def shape(self):
        return (len(self.x), len(self.t))

    def same_as(self, other: Grid) -> bool:
        return (self is other) or (
            self.K == other.K
            and self.x.shape == other.x.shape
            and self.t.shape == other.t.shape
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.t, other.t)
        )

    def cell_at(self, c):
        """Width of the spatial cell containing ``c``."""
        i = int(np.clip(np.searchsorted(self.x, c, side="right") - 1, 0, self.M - 1))
        return self.x[i + 1] - self.x[i]


def effective_sigma(params: ModelParams) -> float:
    """Volatility including the jump contribution ``lambda E[(log Z)^2]``."""
    if params.lam == 0:
        return params.sigma
    jm = params.jump
    if jm.kind == "lognormal":
        second = jm.m**2 + jm.s**2
    else:
        second = sum(w * math.log(z) ** 2 for z, w in zip(jm.atoms, jm.weights))
    return math.sqrt(params.sigma**2 + params.lam * second)


def half_width(params: ModelParams, width=DEFAULT_WIDTH):
    return width * effective_sigma(params) * math.sqrt(params.T0) + abs(params.mu) * params.T0


def build_grid(params: ModelParams, M: int, N: int, width=DEFAULT_WIDTH) -> Grid:
    """Log-uniform grid on ``[K e^{-h}, K e^{h}]`` plus ``x_0 = 0``.

    ``h = width * sigma_eff * sqrt(T0) + |mu| * T0`` where ``sigma_eff`` adds the
    jump log-variance rate to ``sigma^2`` (so ``sigma_eff = sigma`` without
    jumps; a narrower range truncates the jump tails and the far-field
    condition then bends the value concave near ``x_M``).  ``M`` counts the log nodes,
    so the grid has ``M + 1`` spatial nodes and ``N + 1`` time levels.
    """
    if M < 16 or N < 8:
        raise GridTooSmall(f"need M >= 16 and N >= 8, got M={M}, N={N}")
    if width < 0:
        raise GridTooSmall(f"width must be >= 0, got {width}")
    h = half_width(params, width)
    if h <= 0:
        raise GridTooSmall("zero log-range: width=0 with zero drift")
    y = np.linspace(-h, h, M)
    x = np.concatenate([[0.0], params.K * np.exp(y)])
    t = np.linspace(0.0, params.T0, N + 1)
    return Grid(x, t, params.K)


def build_grid_spacing(params: ModelParams, dy: float, N: int, width=DEFAULT_WIDTH) -> Grid:
    """Grid with log-spacing at most ``dy`` (so ``dx ~ K dy`` near the strike)."""
    M = max(16, int(math.ceil(2.0 * half_width(params, width) / dy)) + 1)
    return build_grid(params, M, N, width)


@dataclass(frozen=True, eq=False)
class ValueSurface:
    """``values[i, j] = v(x_i, T_j)``; read-only after construction."""

    grid: Grid
    values: np.ndarray
    label: object = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != self.grid.shape:
            raise GridMismatch(f"values shape {arr.shape} does not match grid {self.grid.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def payoff(cls, grid: Grid) -> ValueSurface:
        col = payoff_eval(grid.x, grid.K)
        return cls(grid, np.repeat(col[:, None], len(grid.t), axis=1), "payoff")

    def at(self, x, T):
        """Bilinear interpolation of the surface."""
        g = self.grid
        if not (0 <= x and 0 <= T <= g.t[-1] * (1 + 1e-12)):
            raise ValueError(f"(x={x}, T={T}) outside the grid")
        if x >= g.x[-1]:
            col = self.values[-1]
        else:
            i = int(np.searchsorted(g.x, x, side="right") - 1)
            a = (x - g.x[i]) / (g.x[i + 1] - g.x[i])
            col = (1 - a) * self.values[i] + a * self.values[i + 1]
        return float(np.interp(T, g.t, col))


def sup_norm_gap(a: ValueSurface, b: ValueSurface) -> float:
    if not a.grid.same_as(b.grid):
        raise GridMismatch("surfaces live on different grids")
    return float(np.max(np.abs(a.values - b.values)))


@dataclass(frozen=True, eq=False)
class FreeBoundary:
    """Exercise boundary per time level ``T_1 .. T_N``.

    ``contact_index[j]`` is the last node of the contact interval ``[0, c]``.
    ``degenerate[j]`` marks levels where the contact set is only ``{0}`` or
    reaches the last node; ``fit_slope`` is NaN there.  ``reentry[j]`` flags a
    contact node below the strike lying above a separated node.
    """

    t: np.ndarray
    c: np.ndarray
    fit_slope: np.ndarray
    contact_index: np.ndarray
    degenerate: np.ndarray
    reentry: np.ndarray


def _slope_at(xs, vs, c):
    # derivative at c of the quadratic through three points
    x0, x1, x2 = xs
    v0, v1, v2 = vs
    l0 = ((c - x1) + (c - x2)) / ((x0 - x1) * (x0 - x2))
    l1 = ((c - x0) + (c - x2)) / ((x1 - x0) * (x1 - x2))
    l2 = ((c - x0) + (c - x1)) / ((x2 - x0) * (x2 - x1))
    return v0 * l0 + v1 * l1 + v2 * l2


def extract_boundary(v: ValueSurface, tol=None) -> FreeBoundary:
    """Locate ``c(T_j) = sup{x : v - payoff <= tol}`` on each level ``T_j > 0``.

    The contact interval is grown from ``x_0``; ``c`` is the point where the
    linear interpolant of ``v - payoff`` between the last contact node and the
    first separated node crosses ``tol``.  The fit slope is the derivative at
    ``c`` of the quadratic through the first three separated nodes.
    """
    g = v.grid
    K = g.K
    if tol is None:
        tol = 1e-10 * K
    w = v.values - payoff_eval(g.x, K)[:, None]
    contact = w <= tol
    itm = g.x < K
    N, M = g.N, g.M
    c = np.empty(N)
    slope = np.full(N, np.nan)
    idx = np.empty(N, dtype=int)
    degenerate = np.zeros(N, dtype=bool)
    reentry = np.zeros(N, dtype=bool)
    for j in range(1, N + 1):
        col = contact[:, j]
        if not col[0]:
            raise NoContactRegion(f"v > payoff + tol everywhere at T={g.t[j]}")
        sep = np.flatnonzero(~col)
        if sep.size == 0:
            k = M
        else:
            k = int(sep[0]) - 1
            # far out of the money both v and the payoff underflow to ~0
            reentry[j - 1] = bool((col & itm)[sep[0]:].any())
        idx[j - 1] = k
        if k >= M:
            c[j - 1] = g.x[M]
            degenerate[j - 1] = True
            continue
        wk, wk1 = w[k, j], w[k + 1, j]
        frac = (tol - wk) / (wk1 - wk) if wk1 > wk else 0.0
        c[j - 1] = g.x[k] + min(max(frac, 0.0), 1.0) * (g.x[k + 1] - g.x[k])
        if k == 0:
            degenerate[j - 1] = True
        if k + 3 <= M:
            slope[j - 1] = _slope_at(g.x[k + 1:k + 4], v.values[k + 1:k + 4, j], c[j - 1])
    if np.any(idx >= M):
        warnings.warn("contact region reaches the last grid node", BoundaryAtEdge, stacklevel=2)
    return FreeBoundary(g.t[1:].copy(), c, slope, idx, degenerate, reentry)


# --- discrete shape properties --------------------------------------------
# Each returns the worst violation (<= 0 means satisfied exactly).

def obstacle_violation(v: ValueSurface) -> float:
    return float(np.max(payoff_eval(v.grid.x, v.grid.K)[:, None] - v.values))


def upper_violation(v: ValueSurface) -> float:
    return float(np.max(v.values - v.grid.K))


def absorbing_violation(v: ValueSurface) -> float:
    return float(np.max(np.abs(v.values[0] - v.grid.K)))


def monotone_T_violation(v: ValueSurface) -> float:
    return float(np.max(v.values[:, :-1] - v.values[:, 1:]))


def monotone_pair_violation(lower: ValueSurface, upper: ValueSurface) -> float:
    """How far ``lower <= upper`` fails node-wise."""
    if not lower.grid.same_as(upper.grid):
        raise GridMismatch("surfaces live on different grids")
    return float(np.max(lower.values - upper.values))


FAR_FIELD_LAYER = 2


def convexity_violation(v: ValueSurface, skip_far: int = FAR_FIELD_LAYER) -> float:
    """Largest excess of ``v_i`` over the chord through its two neighbours.

    The ``skip_far`` nodes below ``x_M`` are left out: the far-field value 0
    sits under the true (small, positive) price, which puts a concave kink
    into the last couple of cells that shrinks with the mesh.
    """
    x = v.grid.x
    h0 = np.diff(x)[:-1][:, None]
    h1 = np.diff(x)[1:][:, None]
    chord = (h1 * v.values[:-2] + h0 * v.values[2:]) / (h0 + h1)
    excess = v.values[1:-1] - chord
    stop = excess.shape[0] - max(int(skip_far), 0)
    return float(np.max(excess[:max(stop, 1)]))


def lipschitz_ratio(v: ValueSurface) -> float:
    """Largest ``|v_{i+1} - v_i| / (x_{i+1} - x_i)``; 1-Lipschitz means <= 1."""
    dx = np.diff(v.grid.x)[:, None]
    return float(np.max(np.abs(np.diff(v.values, axis=0)) / dx))


def holder_constant(v: ValueSurface) -> float:
    """Empirical ``max |v(x, T_{j+1}) - v(x, T_j)| / sqrt(dT)``."""
    dt = np.diff(v.grid.t)[None, :]
    return float(np.max(np.abs(np.diff(v.values, axis=1)) / np.sqrt(dt)))
