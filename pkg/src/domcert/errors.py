"""Exception hierarchy shared by every domcert module."""


class DomcertError(Exception):
    """Base class for all errors raised by domcert."""


class InvalidInputError(DomcertError, ValueError):
    """Malformed or inconsistent input data."""


class NoSolutionError(DomcertError):
    """A matrix equation has no solution (e.g. unimodular spectrum)."""


class NumericalError(DomcertError):
    """Non-finite arithmetic or a numerically singular system."""


class EmptyLanguageError(DomcertError):
    """The automaton admits no bi-infinite word."""


class BudgetError(DomcertError):
    """An enumeration exceeded its configured budget."""


class StructureError(DomcertError):
    """The automaton violates a structural assumption."""

    def __init__(self, message, states=()):
        super().__init__(message)
        self.states = tuple(states)


class InvalidRateError(InvalidInputError):
    """A dominance rate is not strictly positive."""


class StaleCertificateError(DomcertError):
    """Certificate fingerprint does not match the supplied system."""


class ParseError(InvalidInputError):
    """A file could not be parsed; ``field`` and ``line`` carry context."""

    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


class AdmissibilityError(DomcertError):
    """A switching signal is not admissible for the automaton."""

    def __init__(self, message, position):
        super().__init__(message)
        self.position = position


class GapError(DomcertError):
    """No spectral gap between the p-th and (p+1)-th eigenvalue magnitudes."""


class DegenerateStartError(DomcertError):
    """The initial condition has (numerically) no dominant component."""
