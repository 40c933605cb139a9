"""Exception hierarchy shared by all qubitarrow modules."""


class QubitArrowError(Exception):
    """Base class for every error raised by qubitarrow."""


class InvalidStateError(QubitArrowError, ValueError):
    """A density matrix or Bloch vector violates the qubit-state invariants."""


class InvalidParametersError(QubitArrowError, ValueError):
    """Physical or numerical parameters are out of their allowed range."""


class InvalidInputError(QubitArrowError, ValueError):
    """Input data (movie, record, sequence) is malformed or inconsistent."""


class ParseError(InvalidInputError):
    """A text file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NotInvertibleError(QubitArrowError, ValueError):
    """A measurement operator is (numerically) singular, i.e. projective."""

    def __init__(self, message, index=None):
        self.index = index
        if index is not None:
            message = f"operator {index}: {message}"
        super().__init__(message)


class ZeroProbabilityError(QubitArrowError, ArithmeticError):
    """An outcome sequence has vanishing probability for the given state."""


class DomainError(QubitArrowError, ValueError):
    """A closed-form expression was evaluated outside its domain."""


class NumericalError(QubitArrowError, RuntimeError):
    """A numerical procedure (root finding, quadrature) did not converge."""
