"""Exception hierarchy shared by the library and the command line."""


class ProgBayesError(Exception):
    """Base class for all errors raised by progbayes."""

    exit_code = 1


class DomainError(ProgBayesError, ValueError):
    """An argument lies outside the domain of a function."""

    exit_code = 2


class DataError(ProgBayesError, ValueError):
    """Input data failed validation."""

    exit_code = 3


class SingularDesignError(ProgBayesError, ArithmeticError):
    """A design or precision matrix is (numerically) singular."""

    exit_code = 4


class ConsistencyError(ProgBayesError, ArithmeticError):
    """An internal numerical identity was violated beyond tolerance."""

    exit_code = 5


class ConfigError(ProgBayesError, ValueError):
    """A sweep configuration document is invalid.

    ``problems`` lists every violation found, not just the first.
    """

    exit_code = 6

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
