"""Exception types shared across the package."""


class HandQuboError(Exception):
    """Base class for all package errors."""


class DomainError(HandQuboError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class ChainError(HandQuboError, IndexError):
    """A kinematic chain is malformed (bad joint binding, missing joint)."""


class NumericalError(HandQuboError, ArithmeticError):
    """A computed quantity is numerically invalid beyond round-off."""


class ConstructionError(HandQuboError, KeyError):
    """A required entry is missing while assembling a derived object."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ParseError(HandQuboError, ValueError):
    """A file could not be parsed; the message names the location."""
