"""Exception hierarchy shared by every qxsim module."""

from __future__ import annotations


class QxsimError(Exception):
    """Base class for all library errors."""


class ZeroVector(QxsimError, ValueError):
    pass


class BadSubsystem(QxsimError, ValueError):
    pass


class DimTooLarge(QxsimError, ValueError):
    pass


class DimMismatch(QxsimError, ValueError):
    pass


class BadBasis(QxsimError, ValueError):
    pass


class LengthMismatch(QxsimError, ValueError):
    pass


class NotNormalized(QxsimError, ValueError):
    pass


class OutOfRegime(QxsimError, ValueError):
    """Argument lies outside the range where a bound is valid."""


class OutOfRange(QxsimError, ValueError):
    pass


class NoAmplification(QxsimError, ValueError):
    """The map cannot separate states (unitary, or identical inputs)."""


class IterationCap(QxsimError, RuntimeError):
    pass


class MalformedTrace(QxsimError, ValueError):
    pass


class ZeroCapacity(QxsimError, ValueError):
    pass


class ZeroDelta(QxsimError, ValueError):
    pass


class NotAQubit(QxsimError, ValueError):
    pass


class ZeroOverlap(QxsimError, ValueError):
    pass


class UnknownExperiment(QxsimError, KeyError):
    pass


class BadParam(QxsimError, ValueError):
    def __init__(self, key: str, message: str = "") -> None:
        self.key = key
        super().__init__(f"bad parameter {key!r}" + (f": {message}" if message else ""))
