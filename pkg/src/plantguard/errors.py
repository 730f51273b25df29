"""Exception types shared across plantguard modules."""


class PlantGuardError(Exception):
    """Base class for all plantguard errors."""


class NumericInputError(PlantGuardError, ValueError):
    """Raised when an operation receives NaN or infinite input."""


class DimensionError(PlantGuardError, ValueError):
    """Raised on shape or length mismatches, including empty inputs."""


class WindowTooShortError(DimensionError):
    """Raised when a time axis is shorter than the kernel that must slide over it."""


class ConfigError(PlantGuardError, ValueError):
    """Raised when a configuration violates its invariants."""


class GraphStateError(PlantGuardError, RuntimeError):
    """Raised when backward is requested without a cached forward pass."""


class TrainingDivergenceError(PlantGuardError, RuntimeError):
    """Raised when a loss or gradient becomes non-finite during training.

    Carries the epoch index when known.
    """

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class SchemaError(PlantGuardError, ValueError):
    """Raised when records disagree with the declared device schema."""


class IngestionError(PlantGuardError, ValueError):
    """Raised on malformed dataset rows; carries the offending row index."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class ScriptError(PlantGuardError, ValueError):
    """Raised when attack/shift scripts overlap or fall outside the stream."""


class WarmupError(PlantGuardError, ValueError):
    """Raised when detection is requested before the input window exists."""


class PipelineOrderError(PlantGuardError, RuntimeError):
    """Raised when a pipeline stage runs before its inputs are available."""


class ComparisonError(PlantGuardError, ValueError):
    """Raised when two models cannot be compared parameter-by-parameter."""


class AdaptationError(PlantGuardError, RuntimeError):
    """Raised when a feedback-driven model update fails and is rolled back."""
