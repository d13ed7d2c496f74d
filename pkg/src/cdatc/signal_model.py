"""Ground truth and per-node observations ``d = u^T w_o + v``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, ValidationError

DEFAULT_TAPS = 50


@dataclass(frozen=True)
class NodeSignalProfile:
    """Noise variance and regressor power of one node."""

    noise_variance: float
    signal_power: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.noise_variance) or self.noise_variance < 0:
            raise ValidationError("noise_variance", f"must be >= 0, got {self.noise_variance}")
        if not np.isfinite(self.signal_power) or self.signal_power <= 0:
            raise ValidationError("signal_power", f"must be > 0, got {self.signal_power}")


@dataclass(frozen=True)
class SignalParams:
    """Signal section of a scenario.

    ``jump_step``, when set, replaces ``w_o`` by a fresh independent draw at
    that step (0-based). Off by default.
    """

    taps: int = DEFAULT_TAPS
    signal_power: float = 1.0
    noise_variances: tuple = field(default_factory=lambda: tuple(default_noise_profile()))
    jump_step: Optional[int] = None

    def __post_init__(self):
        if int(self.taps) != self.taps or self.taps < 1:
            raise ValidationError("taps", f"must be an integer >= 1, got {self.taps}")
        object.__setattr__(self, "noise_variances", tuple(float(v) for v in self.noise_variances))
        for v in self.noise_variances:
            NodeSignalProfile(v, self.signal_power)
        if self.jump_step is not None and (int(self.jump_step) != self.jump_step or self.jump_step < 1):
            raise ValidationError("jump_step", f"must be an integer >= 1, got {self.jump_step}")

    def profiles(self) -> list[NodeSignalProfile]:
        return [NodeSignalProfile(v, self.signal_power) for v in self.noise_variances]


def default_noise_profile() -> list[float]:
    """Noise variances of the 7-node scenario, node 1 first."""
    return [1e-4, 1e-4, 1e-4, 1e-2, 0.5, 0.5, 0.5]


def draw_truth(M: int, rng: np.random.Generator) -> np.ndarray:
    """Parameter vector with i.i.d. N(0, 1/M) taps, so ``E||w_o||^2 = 1``."""
    if M < 1:
        raise DimensionMismatch(f"tap count must be >= 1, got {M}")
    return rng.standard_normal(M) / np.sqrt(M)


def sample_regressor(profile: NodeSignalProfile, M: int, rng: np.random.Generator) -> np.ndarray:
    """White Gaussian regressor of length ``M`` with per-tap variance ``signal_power``."""
    if M < 1:
        raise DimensionMismatch(f"tap count must be >= 1, got {M}")
    return np.sqrt(profile.signal_power) * rng.standard_normal(M)


def observe(w_o, u, profile: NodeSignalProfile, rng: np.random.Generator) -> float:
    w_o = np.asarray(w_o, dtype=float)
    u = np.asarray(u, dtype=float)
    if w_o.shape != u.shape:
        raise DimensionMismatch(f"regressor shape {u.shape} != parameter shape {w_o.shape}")
    v = np.sqrt(profile.noise_variance) * rng.standard_normal()
    return float(u @ w_o + v)
