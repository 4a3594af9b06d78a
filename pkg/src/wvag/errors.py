"""Exception types shared across the package."""


class WvagError(Exception):
    """Base class for all package-specific errors."""


class FeasibilityError(WvagError, ValueError):
    """Parameter set violates the model constraints."""


class NotInvertibleError(WvagError):
    """Fourier-invertibility condition fails for the requested (params, t)."""

    def __init__(self, margin, message=None):
        self.margin = margin
        super().__init__(message or f"invertibility condition fails: {margin}")


class SingularSigmaError(WvagError):
    """Brownian covariance is singular where positive definiteness is required."""


class GridTooCoarseError(WvagError):
    """Inversion grid cannot represent the density accurately enough."""


class NearZeroMarginalError(WvagError):
    """Conditional CDF requested at a point with negligible marginal density."""


class DegenerateGridError(WvagError):
    """Joint DME grid has an empty feasible rectangle."""


class OptimizerFailedError(WvagError):
    """All optimizer restarts failed to produce a finite objective."""
