"""Exception taxonomy shared by every survdiff module.

The CLI maps these onto exit codes: data/config problems exit 2,
degenerate statistics exit 3.
"""


class SurvdiffError(Exception):
    """Base class for all survdiff errors."""


# --- Input data ---

class SurvivalDataError(SurvdiffError, ValueError):
    """Raised when survival data fails validation."""


class EmptySampleError(SurvivalDataError):
    pass


class NegativeTimeError(SurvivalDataError):
    pass


class NonBinaryEventError(SurvivalDataError):
    pass


class NonFiniteTimeError(SurvivalDataError):
    pass


class LengthMismatchError(SurvivalDataError):
    pass


class SchemaError(SurvivalDataError):
    """CSV input does not follow the time,event,group schema."""


# --- Parameters and registries ---

class InvalidParameterError(SurvdiffError, ValueError):
    pass


class UnknownMethodError(SurvdiffError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown method"


class UnknownScenarioError(SurvdiffError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown scenario"


class ConfigParseError(SurvdiffError, ValueError):
    pass


class NoConvergenceError(SurvdiffError, RuntimeError):
    pass


# --- Degenerate statistics ---

class DegenerateStatisticError(SurvdiffError, ArithmeticError):
    """A statistic is undefined for this split of the data."""


class DegenerateWeightsError(DegenerateStatisticError):
    """A weighted mean has zero total weight (e.g. a group without events)."""


class NoEventsError(DegenerateStatisticError):
    pass


class ZeroVarianceError(DegenerateStatisticError):
    pass


class DegenerateVarianceError(DegenerateStatisticError):
    pass
