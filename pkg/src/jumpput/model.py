"""Model parameters and the put payoff.

The discount rate of the stopping problem is identified with the interest
rate ``r``: the pricing measure is risk neutral, so the drift of the price is
``mu = r + lambda - lambda * xi`` and ``exp(-r t) S_t`` is a martingale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    BadJumpMeasure,
    NegativeIntensity,
    NegativePrice,
    NegativeRate,
    NonPositiveHorizon,
    NonPositiveSigma,
    NonPositiveStrike,
)
from .jump_measure import JumpMeasure


@dataclass(frozen=True)
class ModelParams:
    r: float
    sigma: float
    lam: float
    K: float
    T0: float
    jump: JumpMeasure = field(default_factory=JumpMeasure.point)

    @property
    def xi(self) -> float:
        return self.jump.mean()

    @property
    def mu(self) -> float:
        return self.r + self.lam - self.lam * self.xi

    @property
    def killing(self) -> float:
        """Discount plus jump intensity, the killing rate of the operator J."""
        return self.r + self.lam

    @property
    def payoff(self) -> Payoff:
        return Payoff(self.K)


def validate(params: ModelParams) -> ModelParams:
    """Check ranges and return the (immutable) parameters unchanged."""
    if not isinstance(params.jump, JumpMeasure):
        raise BadJumpMeasure("jump must be a JumpMeasure")
    if not math.isfinite(params.sigma) or params.sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {params.sigma}")
    if not math.isfinite(params.K) or params.K <= 0:
        raise NonPositiveStrike(f"K must be > 0, got {params.K}")
    if not math.isfinite(params.T0) or params.T0 <= 0:
        raise NonPositiveHorizon(f"T0 must be > 0, got {params.T0}")
    if not math.isfinite(params.r) or params.r < 0:
        raise NegativeRate(f"r must be >= 0, got {params.r}")
    if not math.isfinite(params.lam) or params.lam < 0:
        raise NegativeIntensity(f"lambda must be >= 0, got {params.lam}")
    xi = params.xi
    if not math.isfinite(xi) or xi <= 0:
        raise BadJumpMeasure(f"jump mean must be finite and positive, got {xi}")
    return params


@dataclass(frozen=True)
class Payoff:
    K: float

    def __call__(self, x):
        return payoff_eval(x, self.K)


def payoff_eval(x, K):
    """``max(K - x, 0)`` for scalar or array ``x >= 0``."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise NegativePrice(f"price must be >= 0, got {x}")
    out = np.maximum(K - arr, 0.0)
    return float(out) if out.ndim == 0 else out
