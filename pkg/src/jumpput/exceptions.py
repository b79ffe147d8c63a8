"""Exception and warning types raised across the package."""


class PricingError(Exception):
    """Base class for all errors raised by jumpput."""


class ValidationError(PricingError, ValueError):
    """Model or configuration input outside its admissible range."""


class NonPositiveSigma(ValidationError):
    pass


class NonPositiveStrike(ValidationError):
    pass


class NonPositiveHorizon(ValidationError):
    pass


class NegativeRate(ValidationError):
    pass


class NegativeIntensity(ValidationError):
    pass


class BadJumpMeasure(ValidationError):
    pass


class QuadratureOrderTooSmall(BadJumpMeasure):
    pass


class NegativePrice(ValidationError):
    pass


class GridTooSmall(ValidationError):
    pass


class GridMismatch(PricingError, ValueError):
    """Two surfaces (or a surface and an operator) live on different grids."""


class NoContactRegion(PricingError):
    """The surface never touches the payoff, not even at x = 0."""


class PsorDiverged(PricingError):
    pass


class ObstacleViolation(PricingError):
    pass


class InvariantViolated(PricingError):
    """A proven property of the iterates failed on the discrete solution."""

    def __init__(self, n, which, detail=""):
        self.n = n
        self.which = which
        self.detail = detail
        msg = f"iterate {n}: invariant {which!r} violated"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SeriesNotConverged(PricingError):
    pass


class LambdaNotZero(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class ConfigError(ValidationError):
    """Configuration file problem; ``path`` is the dotted field path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class MaxIterReached(UserWarning):
    pass


class BoundaryAtEdge(UserWarning):
    pass
