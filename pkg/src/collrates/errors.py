"""Exception hierarchy.

Each family maps onto one CLI exit code: data problems exit 1,
configuration problems exit 2, numerical failures exit 3.
"""


class CollratesError(Exception):
    exit_code = 1


class DataError(CollratesError):
    exit_code = 1


class LoadError(DataError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class LabelError(DataError):
    """Invalid rotational quantum labels."""


class MissingTransitionError(DataError):
    """Neither direction of a transition is present in the table."""


class IncompletePairError(DataError):
    """Only one direction is present and the policy requires both."""


class IncompleteDataError(DataError):
    """Rates needed for a sum or average are missing."""


class ConfigError(CollratesError):
    exit_code = 2


class NumericalError(CollratesError):
    exit_code = 3


class InsufficientDataError(NumericalError):
    """Fewer than two usable cross-section samples above threshold."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class UndefinedPointError(NumericalError):
    """Dalitz coordinates requested for an all-zero triple."""
