"""Exception types raised across the package."""


class PefError(Exception):
    """Base class for all library errors."""


class ErosionTooLarge(PefError, ValueError):
    """Mollifier/erosion radius is not smaller than a module inradius."""


class DensityInfeasible(PefError, ValueError):
    """Mean density of the design is 2 or more."""


class NonZeroMeanInput(PefError, ValueError):
    """A Poisson solve was requested for data that is not zero-mean."""


class InvalidPinIndex(PefError, IndexError):
    pass


class InfeasibleBox(PefError, ValueError):
    """A module does not fit inside the placement domain."""


class NonFiniteObjective(PefError, FloatingPointError):
    pass


class NegativeDensity(PefError, FloatingPointError):
    """A transport step produced negative density (step too large)."""


class InsufficientData(PefError, ValueError):
    pass


class PremiseNotMet(PefError):
    """F(c*) > F(c_opt); the stationary-point bounds are vacuous."""
