"""Exception types shared across the package."""


class GlucastError(Exception):
    """Base class for package errors."""


class DimensionError(GlucastError, ValueError):
    """Operand shapes are incompatible for the requested operation."""


class IngestionError(GlucastError, ValueError):
    """Raw input data violates the expected format or invariants."""


class ConfigError(GlucastError, ValueError):
    """A configuration value or combination is invalid."""


class ConsistencyError(GlucastError, ValueError):
    """Pieces of state that must agree (e.g. a trace and its params) do not."""


class DegenerateAttributionError(GlucastError, ValueError):
    """Attribution cannot be normalized because every contribution is zero."""


class EvaluationError(GlucastError, ArithmeticError):
    """A numeric evaluation produced a non-finite result."""


class TrainingError(GlucastError, RuntimeError):
    """Training failed (divergence, non-finite gradients, bad data)."""
