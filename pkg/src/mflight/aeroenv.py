"""Reinforcement-learning environments: sampled Reynolds state, drag reward.

Both fidelities satisfy the same interface and are deterministic pure
functions of (shape, re_c). The low-fidelity model prices drag with a
form-factor-corrected turbulent flat-plate skin friction on top of the panel
solution; the high-fidelity model marches an integral boundary layer over the
panel edge velocities and closes with Squire-Young. One ``step`` call is one
complete episode (the flow solve IS the episode).
"""

from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass, field

import numpy as np

from . import boundary_layer as bl
from .errors import ConfigError, SolverError
from .geometry import AirfoilShape, DesignVector, GeometryBounds, build_airfoil, decode
from .panel import solve_panel

RE_FLOOR = 1e5
DEFAULT_PENALTY = -0.1
N_POINTS_LOW = 62    # 60 panels
N_POINTS_HIGH = 202  # 200 panels


@dataclass(frozen=True)
class StateDistribution:
    """Gaussian over the chord Reynolds number."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ConfigError("state distribution mu must be positive")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError("state distribution sigma must be positive")


def sample_state(dist: StateDistribution, rng: np.random.Generator) -> float:
    """One Reynolds-number draw, truncated to mu +- 6 sigma and floored at 1e5.

    Uses an explicit Box-Muller pair so every call consumes exactly two
    uniforms regardless of the outcome.
    """
    u = rng.random(2)
    z = math.sqrt(-2.0 * math.log(1.0 - u[0])) * math.cos(2.0 * math.pi * u[1])
    re_c = dist.mu + dist.sigma * z
    re_c = min(max(re_c, dist.mu - 6.0 * dist.sigma), dist.mu + 6.0 * dist.sigma)
    return max(re_c, RE_FLOOR)


@dataclass
class AeroResult:
    """Aerodynamic coefficients for one evaluated shape."""

    cd: float
    cl: float
    cp: np.ndarray
    cp_x: np.ndarray
    converged: bool


def flat_plate_cf(re_c: float) -> float:
    """Turbulent flat-plate skin-friction coefficient, one side."""
    return 0.074 * re_c ** -0.2


def form_factor(thickness_ratio: float) -> float:
    t = max(thickness_ratio, 0.0)
    return 1.0 + 2.7 * t + 100.0 * t**4


def low_fidelity_cd(shape: AirfoilShape, re_c: float, alpha: float = 0.0) -> AeroResult:
    """Skin-friction drag with a thickness form factor; Cl, Cp from the panel solve."""
    sol = solve_panel(shape.points, alpha=alpha)
    cd = 2.0 * flat_plate_cf(re_c) * form_factor(shape.thickness_max)
    return AeroResult(cd=cd, cl=sol.cl, cp=sol.cp, cp_x=sol.x_mid, converged=True)


def high_fidelity_cd(shape: AirfoilShape, re_c: float, alpha: float = 0.0) -> AeroResult:
    """Integral-boundary-layer drag over the panel edge velocities.

    converged is False when either surface's turbulent march separates ahead
    of 95% chord; the coefficients are still reported.
    """
    sol = solve_panel(shape.points, alpha=alpha)
    nu = 1.0 / re_c
    (s_lo, ue_lo, x_lo), (s_up, ue_up, x_up) = bl.split_surfaces(sol.x_mid, sol.y_mid, sol.vt)
    lower = bl.march_surface(s_lo, ue_lo, x_lo, nu)
    upper = bl.march_surface(s_up, ue_up, x_up, nu)
    cd = lower.cd + upper.cd
    converged = not (lower.separated or upper.separated)
    return AeroResult(cd=cd, cl=sol.cl, cp=sol.cp, cp_x=sol.x_mid, converged=converged)


@dataclass
class Environment:
    """One fidelity tier of the design environment.

    Immutable after construction apart from the evaluation counter; safe to
    call from multiple workers.
    """

    fidelity: str
    n_points: int
    bounds: GeometryBounds = field(default_factory=GeometryBounds)
    alpha: float = 0.0
    blend_fraction: float = 0.02

    def __post_init__(self):
        if self.fidelity not in ("low", "high"):
            raise ConfigError(f"unknown fidelity {self.fidelity!r}")
        self._lock = threading.Lock()
        self._eval_count = 0

    @property
    def eval_count(self) -> int:
        with self._lock:
            return self._eval_count

    def _count(self) -> None:
        with self._lock:
            self._eval_count += 1

    def evaluate(self, shape: AirfoilShape, re_c: float) -> AeroResult:
        self._count()
        return self._evaluate(shape, re_c)

    def _evaluate(self, shape: AirfoilShape, re_c: float) -> AeroResult:
        if self.fidelity == "low":
            return low_fidelity_cd(shape, re_c, alpha=self.alpha)
        return high_fidelity_cd(shape, re_c, alpha=self.alpha)

    def build_shape(self, design) -> AirfoilShape:
        polygon = decode(design, self.bounds)
        return build_airfoil(polygon, self.n_points, blend_fraction=self.blend_fraction)

    def step(self, design, re_c: float, penalty: float = DEFAULT_PENALTY):
        """One full episode: decode, build, evaluate; failures map to the penalty.

        Returns (reward, info). Never raises into the training loop. Every call
        counts as one environment evaluation, penalized episodes included.
        """
        self._count()
        info = {"re_c": re_c, "valid": False, "converged": False,
                "cd": None, "cl": None, "thickness_max": None}
        shape = self.build_shape(design)
        info["valid"] = shape.valid
        info["thickness_max"] = shape.thickness_max
        if not shape.valid:
            return penalty, info
        try:
            result = self._evaluate(shape, re_c)
        except SolverError:
            return penalty, info
        info["converged"] = result.converged
        info["cd"] = result.cd
        info["cl"] = result.cl
        if not result.converged:
            return penalty, info
        return -result.cd, info


def make_environment(fidelity: str, bounds: GeometryBounds | None = None,
                     alpha: float = 0.0, blend_fraction: float = 0.02,
                     n_points: int | None = None) -> Environment:
    if n_points is None:
        n_points = N_POINTS_LOW if fidelity == "low" else N_POINTS_HIGH
    return Environment(fidelity=fidelity, n_points=n_points,
                       bounds=bounds or GeometryBounds(),
                       alpha=alpha, blend_fraction=blend_fraction)


def write_cp_csv(result: AeroResult, path) -> None:
    """Dump the surface pressure distribution as a two-column CSV (atomic)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write("# mflight-cp v1\n")
        fh.write("x,cp\n")
        for x, cp in zip(result.cp_x, result.cp):
            fh.write(f"{float(x)!r},{float(cp)!r}\n")
    os.replace(tmp, path)
