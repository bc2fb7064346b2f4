"""Exception hierarchy shared by all maserlab modules."""


class MaserError(Exception):
    """Base class for every error raised by maserlab."""


class DomainError(MaserError, ValueError):
    """A parameter lies outside its admissible range."""


class QuadratureError(MaserError):
    """An adaptive quadrature could not reach the requested tolerance.

    Attributes
    ----------
    achieved : float
        Best error estimate obtained before giving up.
    """

    def __init__(self, message, achieved=float("nan")):
        super().__init__(f"{message} (achieved error {achieved:.3g})")
        self.achieved = achieved


class TruncationError(MaserError):
    """The photon-number truncation cannot satisfy the tail tolerance."""


class NonNormalizable(MaserError):
    """A stationary distribution does not exist (divergent geometric series)."""


class SolveError(MaserError):
    """A linear solve failed; signals an internal invariant violation."""


class SpectrumError(MaserError):
    """The spectral-gap computation failed."""


class DegenerateError(MaserError):
    """Both order-parameter derivatives vanish; the order is undetermined."""
