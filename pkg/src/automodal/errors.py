"""Exception hierarchy.

Every error raised by the library derives from :class:`AutomodalError`; the
CLI maps each subclass to its own exit code.
"""


class AutomodalError(Exception):
    exit_code = 1


class ConfigError(AutomodalError, ValueError):
    exit_code = 2


class FrfFormatError(AutomodalError, ValueError):
    exit_code = 3


class DeficientEigenbasis(AutomodalError):
    exit_code = 10


class DomainMismatch(AutomodalError):
    exit_code = 10


class ZeroVector(AutomodalError, ValueError):
    exit_code = 10


class LengthMismatch(AutomodalError, ValueError):
    exit_code = 10


class SingularResolvent(AutomodalError):
    exit_code = 10


class InsufficientData(AutomodalError):
    exit_code = 11


class RankCollapse(AutomodalError):
    exit_code = 11


class EmptyOrderList(AutomodalError, ValueError):
    exit_code = 11


class DependentColumns(AutomodalError):
    exit_code = 12


class MultiplicityExceedsInputs(AutomodalError):
    exit_code = 12


class ProjectionRankLoss(AutomodalError):
    exit_code = 12


class EnsembleCollapse(AutomodalError):
    exit_code = 13


class TooFewSamples(AutomodalError, ValueError):
    exit_code = 13


class DegenerateCluster(AutomodalError):
    exit_code = 14


class AmbiguousCenters(AutomodalError):
    exit_code = 14


class StageError(AutomodalError):
    """Wraps a module error with the pipeline stage it came from."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
