"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class EnumerationLimitError(InvalidInputError):
    """Exhaustive path enumeration was asked for a grid that is too large."""


class InfiniteDivergenceError(ArithmeticError):
    """KL divergence is infinite: q has an exact zero where p has mass."""


class CheckpointError(RuntimeError):
    """Base class for checkpoint serialization problems."""


class CheckpointFormatError(CheckpointError):
    """Checkpoint bytes do not parse as the expected layout."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint was written by an incompatible format version."""


class NonFiniteLossError(RuntimeError):
    """A training step produced a NaN or infinite loss.

    Carries the offending per-pair reports so the trainer can emit a
    diagnostic before aborting.
    """

    def __init__(self, message, reports=None):
        super().__init__(message)
        self.reports = list(reports) if reports is not None else []


class ConfigError(ValueError):
    """Experiment configuration failed validation."""
