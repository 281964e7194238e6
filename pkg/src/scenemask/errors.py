"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor arguments whose shapes cannot be combined."""


class ConfigError(ValueError):
    """Invalid configuration values (sizes, rates, splits, variants)."""


class CheckpointError(ValueError):
    """Malformed or mismatched checkpoint file."""


class TrainingFailure(RuntimeError):
    """Training aborted, e.g. a non-finite loss; message carries epoch/batch."""
