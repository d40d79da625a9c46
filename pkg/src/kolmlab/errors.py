"""Exception types shared across the laboratory."""


class KolmlabError(Exception):
    """Base class for all library errors."""


class DataError(KolmlabError):
    """Invalid numerical input: wrong shape, non-finite entries, bad parameters."""


class GridMismatchError(KolmlabError):
    """Two objects built on incompatible grids were combined."""


class GuardError(KolmlabError):
    """A numerical-reliability guard refused to proceed."""


class BoundaryGuardError(GuardError):
    """Field carries too much mass near the periodic box boundary.

    The box truncates the whole space; results are only trustworthy when the
    boundary layer is numerically empty.
    """


class AliasingGuardError(GuardError):
    """Shear modulation would push spectral content past the Nyquist frequency."""

    def __init__(self, message, xi_extent=None, shift=None, nyquist=None):
        super().__init__(message)
        self.xi_extent = xi_extent
        self.shift = shift
        self.nyquist = nyquist


class QuadratureGuardError(GuardError):
    """A quadrature rule is too coarse for the requested domain."""


class CflError(GuardError):
    """Finite-difference step size violates the advection stability limit."""


class GeometryError(KolmlabError):
    """A set descriptor cannot be used for the requested operation."""


class RestrictedNormZeroError(KolmlabError):
    """The restricted norm vanished, so a ratio against it is undefined."""


class MeasureConditionError(KolmlabError):
    """The telescoping measure condition failed at some step."""

    def __init__(self, message, failing_m=None):
        super().__init__(message)
        self.failing_m = failing_m


class ConfigError(KolmlabError):
    """Experiment configuration is malformed or inconsistent."""
