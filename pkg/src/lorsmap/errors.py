"""Exception types shared across the package.

Invalid arguments raise plain ValueError; these classes cover failures that
are not the caller's fault (bad input files, numerical breakdown).
"""


class LorsError(Exception):
    """Base class for package-specific errors."""


class DataError(LorsError):
    """Input files are missing, malformed, or inconsistent."""


class NumericalError(LorsError):
    """A numerical routine failed (non-finite values, SVD breakdown)."""
