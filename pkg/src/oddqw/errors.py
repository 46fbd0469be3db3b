"""Exception types shared across the package."""


class OddqwError(Exception):
    """Base class for all package errors."""


class ProfileError(OddqwError, ValueError):
    """Invalid disorder settings or angle profile."""


class SingularCoinError(OddqwError, ValueError):
    """A bulk coin angle sits at +/- pi/2, where sec(theta) diverges."""


class CountingRangeError(OddqwError, ValueError):
    """Requested quasi-energy index is outside the available range."""


class FitWindowError(OddqwError, ValueError):
    """Power-law fit window holds too few usable points."""


class ResolutionWarning(UserWarning):
    """A finite-difference estimate rests on too few counted states."""


class DimensionError(OddqwError, ValueError):
    """State and operator sizes do not match."""
