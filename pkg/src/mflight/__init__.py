"""Multi-fidelity reinforcement learning for airfoil drag minimization.

A PPO agent learns a Bezier airfoil design policy against a cheap panel-method
environment; a variance-ratio transfer criterion decides when the policy is
ready to move to a target environment with a shifted Reynolds-number
distribution and/or a more expensive integral-boundary-layer drag model.
"""

__version__ = "0.1.0"

from . import agent, aeroenv, boundary_layer, ctl, geometry, orchestrator, panel, ppo
from .errors import (
    CheckpointError,
    ConfigError,
    DomainError,
    EmptyBatch,
    InvalidAction,
    InvalidReward,
    MflightError,
    RunError,
    SchemaError,
    SolverError,
)

__all__ = [
    "agent",
    "aeroenv",
    "boundary_layer",
    "ctl",
    "geometry",
    "orchestrator",
    "panel",
    "ppo",
    "CheckpointError",
    "ConfigError",
    "DomainError",
    "EmptyBatch",
    "InvalidAction",
    "InvalidReward",
    "MflightError",
    "RunError",
    "SchemaError",
    "SolverError",
    "__version__",
]
