"""Exception and warning types.

Errors split into two families so the CLI can map them onto exit codes:
``InputError`` (bad files, bad ids, bad config; exit 2) and
``AnalysisError`` (numerical or statistical failure; exit 1).
"""


class CausalKGError(Exception):
    """Base class for every error raised by the package."""


class InputError(CausalKGError, ValueError):
    pass


class AnalysisError(CausalKGError, ArithmeticError):
    pass


class MalformedLine(InputError):
    def __init__(self, line_no: int, line: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: expected 3 tab-separated fields, got {line!r}")


class EmptyInput(InputError):
    pass


class OutOfBounds(InputError, IndexError):
    pass


class DimMismatch(InputError):
    pass


class DuplicateRelation(InputError):
    pass


class TooMany(InputError):
    pass


class Degenerate(InputError):
    """The adjacency tensor is too small to factorize."""


class ConfigError(InputError):
    pass


class ConstantVariable(AnalysisError):
    pass


class ConstantRegressor(AnalysisError):
    pass


class NumericalFailure(AnalysisError):
    pass


class NearGaussianPredictor(AnalysisError):
    pass


class SingularWhitening(AnalysisError):
    pass


class ZeroDiagonal(AnalysisError):
    pass


class StageError(CausalKGError):
    """Wraps an error raised inside one pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


class RankDeficientWarning(UserWarning):
    pass


class InverseRelationWarning(UserWarning):
    pass
