"""Exception types shared across the library.

Argument validation failures raise the builtin ``ValueError``; the classes
here cover everything that is not a plain bad argument.
"""


class EnergyModelError(Exception):
    """Base class for all library-specific errors."""


class InvalidStateError(EnergyModelError):
    """An operation was called on an object in the wrong state."""


class FormatError(EnergyModelError):
    """A binary file (IDX dataset or model container) is malformed."""


class UnsupportedVersionError(FormatError):
    """A model container declares a version or kind this build cannot read."""


class CapacityError(EnergyModelError):
    """A brute-force enumeration was requested beyond its size bound."""
