"""Finite battery with stochastic harvesting.

The battery evolves as ``e <- clip(e - b, 0, B)`` with the per-step cost
``b = b0 + a * delta - h``. A node whose battery cannot cover the step
stalls: it does nothing, spends nothing and still harvests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class EnergyParams:
    capacity: float = 500.0
    sense_cost: float = 1.0
    tx_cost: float = 2.0
    harvest_prob: float = 0.4
    harvest_range: tuple = (2.0, 4.0)
    initial_battery: Optional[object] = None  # None: full; a number or one value per node

    def __post_init__(self):
        lo, hi = (float(v) for v in self.harvest_range)
        object.__setattr__(self, "harvest_range", (lo, hi))
        checks = [
            ("battery", self.capacity > 0, "must be > 0"),
            ("sense_cost", self.sense_cost >= 0, "must be >= 0"),
            ("tx_cost", self.tx_cost >= 0, "must be >= 0"),
            ("harvest_prob", 0 <= self.harvest_prob <= 1, "must lie in [0, 1]"),
            ("harvest_range", 0 <= lo <= hi, "needs 0 <= lo <= hi"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ValidationError(key, msg)
        if self.initial_battery is not None:
            if np.ndim(self.initial_battery):
                object.__setattr__(self, "initial_battery", tuple(float(v) for v in self.initial_battery))
            else:
                object.__setattr__(self, "initial_battery", float(self.initial_battery))
            levels = np.atleast_1d(self.initial_battery)
            if not np.all((levels >= 0) & (levels <= self.capacity)):
                raise ValidationError("initial_battery", f"must lie in [0, {self.capacity}]")

    def start_levels(self, n_nodes: int) -> np.ndarray:
        if self.initial_battery is None:
            return np.full(n_nodes, float(self.capacity))
        levels = np.broadcast_to(np.asarray(self.initial_battery, dtype=float), (n_nodes,)) \
            if np.ndim(self.initial_battery) == 0 or len(self.initial_battery) == n_nodes else None
        if levels is None:
            raise ValidationError("initial_battery", f"needs one value per node ({n_nodes})")
        return levels.copy()

    @property
    def mean_harvest(self) -> float:
        lo, hi = self.harvest_range
        return self.harvest_prob * 0.5 * (lo + hi)


@dataclass
class EnergyState:
    level: float


def harvest_from_uniforms(params: EnergyParams, occur, amount):
    """Map two U[0,1) draws (scalars or arrays) to harvested energy."""
    lo, hi = params.harvest_range
    return np.where(np.asarray(occur) < params.harvest_prob, lo + (hi - lo) * np.asarray(amount), 0.0)


def draw_harvest(params: EnergyParams, rng: np.random.Generator) -> float:
    """Zero with probability ``1 - harvest_prob``, else uniform on ``harvest_range``.

    Always consumes two uniforms so the stream stays aligned whatever the outcome.
    """
    occur, amount = rng.random(2)
    return float(harvest_from_uniforms(params, occur, amount))


def energy_cost(b0, a, delta, h):
    return b0 + a * delta - h


def idle_cost(params: EnergyParams, h):
    """Cost of a stalled step: nothing is spent, harvesting still happens."""
    return -h


def step_battery(state: EnergyState, b, B) -> float:
    state.level = float(np.clip(state.level - b, 0.0, B))
    return state.level


def stalls(level, params: EnergyParams, a, h):
    """True where the intended step would leave no energy (``e - b0 - a*delta + h <= 0``)."""
    return level - (params.sense_cost + a * params.tx_cost) + h <= 0
