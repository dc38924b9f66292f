"""Exception types shared across the package."""


class MflightError(Exception):
    """Base class for all package errors."""


class InvalidAction(MflightError):
    """Design vector entry out of range or non-finite."""


class DomainError(MflightError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(MflightError):
    """Invalid configuration value or document."""


class SolverError(MflightError):
    """Singular or unsolvable aerodynamic system."""


class EmptyBatch(MflightError):
    """PPO update requested on an empty experience batch."""


class InvalidReward(MflightError):
    """Non-finite reward fed to the transfer controller."""


class CheckpointError(MflightError):
    """Unreadable, corrupt, or version-incompatible checkpoint."""


class SchemaError(MflightError):
    """Artifact file carries an unknown or incompatible schema version."""


class RunError(MflightError):
    """Training campaign aborted."""
