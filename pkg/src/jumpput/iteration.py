"""Fixed-point iteration ``v_{n+1} = J v_n`` from the payoff.

The iterates increase to the American put value and the error after ``n``
steps is certified a priori by ``(lambda / (lambda + r))^n K``; on a finite
horizon ``T0`` the sharper ``(1 - e^{-(r + lambda) T0})^n`` factor applies as
well.  Every accepted iterate is checked against the shape properties the
iterates are known to have; a failure aborts the run.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import grid as gridmod
from .exceptions import InvariantViolated, MaxIterReached
from .grid import FreeBoundary, Grid, ValueSurface, extract_boundary, sup_norm_gap
from .jump_measure import JumpOperator
from .lcp_solver import SolverConfig, apply_J
from .model import ModelParams

# relative (to K) tolerances of the per-iterate checks
MONOTONE_TOL = 1e-9
UPPER_TOL = 1e-9
CONVEXITY_TOL = 1e-6
LIPSCHITZ_TOL = 1e-6


def contraction_factor(params: ModelParams) -> float:
    """``lambda / (lambda + r)``; zero without jumps."""
    if params.lam == 0:
        return 0.0
    return params.lam / (params.lam + params.r)


def horizon_factor(params: ModelParams) -> float:
    return -math.expm1(-params.killing * params.T0)


def apriori_bound(params: ModelParams, n: int) -> float:
    return contraction_factor(params) ** n * params.K


def refined_bound(params: ModelParams, n: int) -> float:
    return (horizon_factor(params) * contraction_factor(params)) ** n * params.K


def required_iterations(params: ModelParams, tol: float, use_refined: bool = False) -> int:
    """Smallest ``n >= 1`` whose error bound is at most ``tol``.

    Raises ``ValueError`` when the chosen bound does not decay, which is the
    case for the a-priori bound when ``r = 0``.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if params.lam == 0:
        return 1
    q = contraction_factor(params) * (horizon_factor(params) if use_refined else 1.0)
    if q >= 1.0:
        raise ValueError("the a-priori bound does not decay when r = 0; use the refined bound")
    bound = refined_bound if use_refined else apriori_bound
    n = max(1, int(math.floor(math.log(tol / params.K) / math.log(q))) - 1)
    while bound(params, n) > tol:
        n += 1
    while n > 1 and bound(params, n - 1) <= tol:
        n -= 1
    return n


@dataclass
class IterationReport:
    """Diagnostics for iterate ``v_n`` (``gap = ||v_n - v_{n-1}||``)."""

    n: int
    gap: float
    apriori_bound: float
    refined_bound: float
    ratio: float | None
    flags: dict = field(default_factory=dict)

    def to_dict(self):
        return {"n": self.n, "gap": self.gap, "apriori_bound": self.apriori_bound,
                "refined_bound": self.refined_bound, "ratio": self.ratio}


@dataclass
class FixedPointResult:
    surface: ValueSurface
    boundary: FreeBoundary
    reports: list
    terminated_by: str
    source: ValueSurface  # the iterate J was applied to last
    warnings: list = field(default_factory=list)
    iterates: list | None = None

    @property
    def n(self):
        return self.reports[-1].n

    @property
    def certified_bound(self):
        """Smaller of the two a-priori error bounds for the returned surface."""
        last = self.reports[-1]
        return min(last.apriori_bound, last.refined_bound)


def _boundary_checks(new: ValueSurface, params: ModelParams, prev_boundary=None):
    """Position and monotonicity of the exercise boundary.

    Only meaningful for ``r > 0``: with ``r = 0`` early exercise is worthless
    and the boundary collapses onto ``x = 0``.
    """
    g = new.grid
    b = extract_boundary(new)
    flags = {}
    if params.r > 0:
        inside = bool(np.all((b.c > g.x[1]) & (b.c < params.K)))
        cells = np.array([g.cell_at(c) for c in b.c[:-1]])
        mono_T = bool(np.all(np.diff(b.c) <= cells))
        flags["boundary_in_range"] = inside
        flags["boundary_monotone_T"] = mono_T
        flags["contact_left_interval"] = not bool(b.reentry.any())
        if prev_boundary is not None:
            cells = np.array([g.cell_at(c) for c in prev_boundary.c])
            flags["boundary_monotone_n"] = bool(np.all(b.c <= prev_boundary.c + cells))
    return b, flags


def check_iterate(new: ValueSurface, prev: ValueSurface, params: ModelParams,
                  prev_boundary: FreeBoundary | None = None):
    """Shape checks for one iterate; returns ``(flags, boundary)``."""
    K = params.K
    flags = {
        "obstacle": gridmod.obstacle_violation(new) <= 0.0,
        "upper": gridmod.upper_violation(new) <= UPPER_TOL * K,
        "absorbing": gridmod.absorbing_violation(new) == 0.0,
        "monotone_n": gridmod.monotone_pair_violation(prev, new) <= MONOTONE_TOL * K,
        "monotone_T": gridmod.monotone_T_violation(new) <= MONOTONE_TOL * K,
        "convex": gridmod.convexity_violation(new) <= CONVEXITY_TOL * K,
        "lipschitz": gridmod.lipschitz_ratio(new) <= 1.0 + LIPSCHITZ_TOL,
    }
    boundary, bflags = _boundary_checks(new, params, prev_boundary)
    flags.update(bflags)
    return flags, boundary


def run_fixed_point(params: ModelParams, grid: Grid, config: SolverConfig = SolverConfig(),
                    tol: float | None = None, max_iter: int | None = None,
                    use_refined: bool = False, check_invariants: bool = True,
                    keep_iterates: bool = False) -> FixedPointResult:
    """Iterate J from the payoff until the gap or the error bound drops below ``tol``.

    ``tol`` defaults to ``1e-4 K``.  ``max_iter`` defaults to the number of
    steps the bound needs plus five (the refined bound is used for that count
    when ``r = 0``, where the a-priori bound does not decay).
    """
    K = params.K
    if tol is None:
        tol = 1e-4 * K
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if max_iter is None:
        refined_for_count = use_refined or (params.r == 0 and params.lam > 0)
        max_iter = required_iterations(params, tol, refined_for_count) + 5
    bound_fn = refined_bound if use_refined else apriori_bound

    jump_op = JumpOperator(grid.x, params.jump) if params.lam > 0 else None
    prev = ValueSurface.payoff(grid)
    prev_boundary = None
    reports = []
    iterates = [prev] if keep_iterates else None
    notes = []
    terminated_by = "max_iter"
    for n in range(1, max_iter + 1):
        new = apply_J(prev, params, grid, config, jump_op=jump_op, label=n)
        gap = sup_norm_gap(new, prev)
        ratio = gap / reports[-1].gap if reports and reports[-1].gap > 0 else None
        flags = {}
        if check_invariants:
            flags, boundary = check_iterate(new, prev, params, prev_boundary)
            failed = [k for k, ok in flags.items() if not ok]
            if failed:
                raise InvariantViolated(n, failed[0], ", ".join(failed))
            prev_boundary = boundary
        reports.append(IterationReport(n, gap, apriori_bound(params, n),
                                       refined_bound(params, n), ratio, flags))
        if keep_iterates:
            iterates.append(new)
        done = None
        if gap <= tol:
            done = "gap_tol"
        elif bound_fn(params, n) <= tol:
            done = "bound_tol"
        source, prev = prev, new
        if done:
            terminated_by = done
            break
    else:
        msg = f"no convergence to {tol:g} within {max_iter} iterations"
        warnings.warn(msg, MaxIterReached, stacklevel=2)
        notes.append(msg)
    boundary = prev_boundary if check_invariants else extract_boundary(prev)
    return FixedPointResult(prev, boundary, reports, terminated_by, source, notes, iterates)


def check_fixed_point(surface: ValueSurface, params: ModelParams, grid: Grid,
                      config: SolverConfig = SolverConfig()) -> float:
    """``||v - J v||`` in sup norm."""
    return sup_norm_gap(surface, apply_J(surface, params, grid, config))
