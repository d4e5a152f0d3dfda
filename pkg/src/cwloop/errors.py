"""Exception hierarchy shared across the toolkit."""


class CwloopError(Exception):
    """Base class for all toolkit errors."""


class DomainError(CwloopError, ValueError):
    """An input is outside the physically or mathematically valid range."""


class CapacityExceededError(CwloopError):
    """Requested cooling load exceeds the available chiller capacity."""


class ConvergenceError(CwloopError):
    """An iterative solve failed to converge within its iteration cap."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SchemaError(CwloopError, ValueError):
    """Structured input (CSV, config, request) violates its schema."""


class ZeroVarianceColumnError(CwloopError):
    """A column selected for correlation analysis has zero variance."""

    def __init__(self, column: str):
        super().__init__(f"column {column!r} has zero variance")
        self.column = column


class TrainingError(CwloopError):
    """Model training could not proceed (insufficient or malformed data)."""


class BundleError(CwloopError):
    """Surrogate bundle construction or loading failed."""


class TableError(CwloopError):
    """A look-up table build failed at a specific cell."""


class ScheduleGapError(CwloopError):
    """A timestamp is not covered by any tariff period."""


class CoverageError(CwloopError):
    """An interval series does not fully cover the requested billing month."""

    def __init__(self, message: str, gaps: list | None = None):
        super().__init__(message)
        self.gaps = gaps or []


class AlignmentError(CwloopError):
    """Two interval series do not share identical timestamps."""


class IngestionError(CwloopError):
    """Measured-data ingestion failed (too many unparseable rows)."""


class ConfigError(CwloopError, ValueError):
    """An optimizer or service configuration value is invalid."""
