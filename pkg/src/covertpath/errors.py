"""Exception hierarchy for covertpath.

Configuration problems (bad files, bad parameters) and feasibility problems
(solver non-convergence, corner points, oversized enumerations) are kept on
separate branches so the CLI can map them to distinct exit codes.
"""


class CovertPathError(Exception):
    """Base class for all covertpath errors."""


class ConfigurationError(CovertPathError):
    """Invalid configuration file, parameter, or value combination."""


class InvalidSubsetError(ConfigurationError):
    """A link subset is empty, duplicated, or references a missing link."""


class IncompatibleSupportError(ConfigurationError):
    """Two distributions do not share a common support/alphabet."""


class InvalidMessageError(ConfigurationError):
    """Message index outside the codebook's message-bin range."""


class ParameterError(ConfigurationError):
    """A numeric parameter is outside its admissible range."""


class FeasibilityError(CovertPathError):
    """Base class for runtime feasibility failures (CLI exit code 3)."""


class ConvergenceError(FeasibilityError):
    """Iterative solver failed to reach tolerance within its iteration cap."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class EnumerationTooLargeError(FeasibilityError):
    """A requested exact enumeration exceeds the configured cap."""

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


class CornerPointError(FeasibilityError):
    """The active distribution has a fully-determining tappable subset."""

    def __init__(self, message, subset=None):
        super().__init__(message)
        self.subset = subset


class RateUnderflowError(FeasibilityError):
    """The rate budget leaves no message bins."""


class EmptyBinError(FeasibilityError):
    """Random binning left a message bin empty after all retries."""
