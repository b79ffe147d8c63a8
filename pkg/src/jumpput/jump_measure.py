"""Jump-size distributions and the jump-averaging operator.

A jump multiplies the price by ``Z ~ nu``.  The operator P averages a value
function over one jump, ``(Pf)(x, t) = E[f(x Z, t)]``.  On a grid the
expectation becomes a finite sum over quadrature nodes and ``f(x z)`` is read
off the grid by piecewise-linear interpolation, which keeps P a positive
sup-norm contraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .exceptions import BadJumpMeasure, GridMismatch, QuadratureOrderTooSmall

DEFAULT_NODES = 32
WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class JumpMeasure:
    """Distribution of the multiplicative jump size ``Z``.

    Use the constructors :meth:`point`, :meth:`discrete` and :meth:`lognormal`
    rather than the raw fields.
    """

    kind: str
    atoms: tuple = ()
    weights: tuple = ()
    m: float = 0.0
    s: float = 0.0
    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if self.kind == "discrete":
            if len(self.atoms) == 0 or len(self.atoms) != len(self.weights):
                raise BadJumpMeasure("discrete measure needs matching atoms and weights")
            if any(not math.isfinite(z) or z <= 0 for z in self.atoms):
                raise BadJumpMeasure("jump atoms must be finite and strictly positive")
            if any(not math.isfinite(w) or w <= 0 for w in self.weights):
                raise BadJumpMeasure("jump weights must be strictly positive")
            if abs(math.fsum(self.weights) - 1.0) > WEIGHT_TOL:
                raise BadJumpMeasure(f"jump weights sum to {math.fsum(self.weights)!r}, not 1")
        elif self.kind == "lognormal":
            if not (math.isfinite(self.m) and math.isfinite(self.s)) or self.s < 0:
                raise BadJumpMeasure("lognormal needs finite m and s >= 0")
            if int(self.nodes) != self.nodes or self.nodes < 2:
                raise QuadratureOrderTooSmall(f"quadrature order must be >= 2, got {self.nodes}")
            if not math.isfinite(math.exp(self.m + 0.5 * self.s**2)):
                raise BadJumpMeasure("lognormal mean is not finite")
        else:
            raise BadJumpMeasure(f"unknown jump measure kind {self.kind!r}")

    @classmethod
    def point(cls, z=1.0):
        return cls("discrete", atoms=(float(z),), weights=(1.0,))

    @classmethod
    def discrete(cls, atoms, weights):
        return cls("discrete", atoms=tuple(float(a) for a in atoms),
                   weights=tuple(float(w) for w in weights))

    @classmethod
    def lognormal(cls, m, s, nodes=DEFAULT_NODES):
        return cls("lognormal", m=float(m), s=float(s), nodes=int(nodes))

    def mean(self):
        """Mean jump size ``xi = E[Z]``."""
        return mean(self)

    def quadrature_nodes(self):
        return quadrature_nodes(self)

    def to_dict(self):
        if self.kind == "discrete":
            return {"kind": "discrete", "atoms": list(self.atoms), "weights": list(self.weights)}
        return {"kind": "lognormal", "m": self.m, "s": self.s, "nodes": self.nodes}


def mean(measure: JumpMeasure) -> float:
    if measure.kind == "discrete":
        return math.fsum(w * z for z, w in zip(measure.atoms, measure.weights))
    return math.exp(measure.m + 0.5 * measure.s**2)


def quadrature_nodes(measure: JumpMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Jump sizes and weights of the discretized measure.

    Discrete measures are returned verbatim.  Lognormal measures use
    Gauss-Hermite nodes for the standard normal, mapped to ``z = exp(m + s g)``;
    the weights are renormalized to sum to one exactly.
    """
    if measure.kind == "discrete":
        return np.array(measure.atoms, dtype=float), np.array(measure.weights, dtype=float)
    g, w = np.polynomial.hermite_e.hermegauss(measure.nodes)
    w = w / w.sum()
    return np.exp(measure.m + measure.s * g), w


class JumpOperator:
    """P on a fixed spatial grid, with the interpolation weights precomputed.

    ``apply`` accepts one time slice (shape ``(M+1,)``) or a whole surface
    (shape ``(M+1, N+1)``); the interpolation stencil does not depend on time,
    so a surface is handled with one sparse product.

    Off-grid rule: ``x z`` never falls below the grid because ``x_0 = 0``.
    Above ``x_M`` the value at ``x_M`` decays with the slope of the last cell
    (a rising last cell counts as flat) and is floored at zero
    (``extrapolation="linear"``), or is held constant (``extrapolation="flat"``).
    Surfaces that vanish at ``x_M``, as every solver output does, are
    continued by zero under either rule.
    """

    def __init__(self, x, measure: JumpMeasure, extrapolation="linear"):
        if extrapolation not in ("linear", "flat"):
            raise ValueError(f"unknown extrapolation rule {extrapolation!r}")
        self.x = np.asarray(x, dtype=float)
        self.measure = measure
        self.extrapolation = extrapolation
        z, w = quadrature_nodes(measure)
        size = len(self.x)
        M = size - 1
        targets = np.outer(self.x, z)  # (M+1, q)
        weights = np.broadcast_to(w, targets.shape)
        inside = targets <= self.x[-1]

        rows = np.broadcast_to(np.arange(size)[:, None], targets.shape)
        xt = targets[inside]
        k = np.clip(np.searchsorted(self.x, xt, side="right") - 1, 0, M - 1)
        frac = (xt - self.x[k]) / (self.x[k + 1] - self.x[k])
        wi = weights[inside]
        ri = rows[inside]
        data = np.concatenate([wi * (1.0 - frac), wi * frac])
        cols = np.concatenate([k, k + 1])
        rr = np.concatenate([ri, ri])
        self.matrix = sparse.csr_matrix((data, (rr, cols)), shape=(size, size))

        outside = ~inside
        self._out_rows = rows[outside]
        self._out_weights = weights[outside]
        self._out_offsets = targets[outside] - self.x[-1]

    def apply(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape[0] != len(self.x):
            raise GridMismatch(f"surface has {f.shape[0]} spatial nodes, operator has {len(self.x)}")
        out = self.matrix @ f
        if self._out_rows.size:
            top = f[-1]
            if self.extrapolation == "linear":
                slope = np.minimum((f[-1] - f[-2]) / (self.x[-1] - self.x[-2]), 0.0)
                if f.ndim == 1:
                    vals = np.maximum(top + slope * self._out_offsets, 0.0)
                else:
                    vals = np.maximum(top[None, :] + np.outer(self._out_offsets, slope), 0.0)
            else:
                vals = (np.broadcast_to(top, (self._out_rows.size,) + f.shape[1:])
                        if f.ndim > 1 else np.full(self._out_rows.size, top))
            contrib = vals * (self._out_weights if f.ndim == 1 else self._out_weights[:, None])
            np.add.at(out, self._out_rows, contrib)
        return out


def apply_P(f, t_index, measure: JumpMeasure, extrapolation="linear"):
    """``x -> (Pf)(x, T_j)`` at every grid node for one time level of a surface."""
    op = JumpOperator(f.grid.x, measure, extrapolation)
    return op.apply(f.values[:, t_index])
