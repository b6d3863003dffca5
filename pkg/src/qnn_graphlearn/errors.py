"""
Exception hierarchy for qnn-graphlearn.

Every error raised on purpose by the library derives from QnnGraphError so the
command-line layer can map families of failures onto exit codes:

    ConfigError               -> exit 2
    NumericalInvariantError   -> exit 3 (InvalidStateError, NotUnitaryError,
                                         NotHermitianError included)
"""


class QnnGraphError(Exception):
    """Base class for all qnn-graphlearn errors."""


class ConfigError(QnnGraphError, ValueError):
    """Invalid experiment configuration or hyperparameters."""


class DimensionMismatchError(QnnGraphError, ValueError):
    """Operands act on incompatible Hilbert spaces."""


class NumericalInvariantError(QnnGraphError, ArithmeticError):
    """A state, operator or emitted value broke a numerical invariant."""


class InvalidStateError(NumericalInvariantError, ValueError):
    """Not a valid pure state or density matrix within tolerance."""


class NotUnitaryError(NumericalInvariantError, ValueError):
    """Matrix is not unitary within tolerance."""


class NotHermitianError(NumericalInvariantError, ValueError):
    """Matrix is not Hermitian within tolerance."""


class TrainingSignalError(QnnGraphError, ValueError):
    """The requested loss or update has nothing to learn from."""


class DatasetError(QnnGraphError, ValueError):
    """Malformed graph dataset or supervision request."""


class ReportError(QnnGraphError, ValueError):
    """Malformed result file handed to a report or plot emitter."""


class PerceptronIndexError(QnnGraphError, IndexError):
    """Layer or perceptron index outside the network topology."""
