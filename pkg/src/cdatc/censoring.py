"""Importance of an estimate and the adaptive balanced transmitter.

A node transmits when the importance ``x`` of its estimate exceeds a
threshold ``tau``. The threshold follows a stochastic-gradient recursion whose
zero-drift point makes the long-run transmit fraction equal ``1 - rho``, where
``rho = b1 / (b1 - b0)`` is estimated from the energy cost observed after
transmitting (``b1``) and after censoring (``b0``). At that fraction the
expected consumption matches the expected harvest.

The functions are written for scalars and broadcast over numpy arrays, which
the vectorized simulator relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

RHO_DEFAULT = 0.5


@dataclass(frozen=True)
class CensorParams:
    enabled: bool = True
    alpha_x: float = 0.1
    eta: float = 0.01
    tau_init: float = 0.0
    rho_smoothing: float = 0.05
    rho_clamp: tuple = (0.01, 0.99)

    def __post_init__(self):
        lo, hi = (float(v) for v in self.rho_clamp)
        object.__setattr__(self, "rho_clamp", (lo, hi))
        if not 0 <= self.alpha_x <= 1:
            raise ValidationError("alpha_x", "must lie in [0, 1]")
        if not self.eta >= 0:
            raise ValidationError("eta", "must be >= 0")
        if not 0 < self.rho_smoothing <= 1:
            raise ValidationError("rho_smoothing", "must lie in (0, 1]")
        if not 0 < lo <= hi < 1:
            raise ValidationError("rho_clamp", "needs 0 < lo <= hi < 1")
        if not np.isfinite(self.tau_init):
            raise ValidationError("tau_init", "must be finite")


@dataclass
class CensorState:
    """Per-node censoring bookkeeping.

    ``counts[a]`` is the number of cost samples seen after action ``a``.
    """

    params: CensorParams = field(default_factory=CensorParams)
    tau: float = 0.0
    J: float = 0.0
    b0_est: float = 0.0
    b1_est: float = 0.0
    counts: list = field(default_factory=lambda: [0, 0])

    @classmethod
    def initial(cls, params: CensorParams) -> "CensorState":
        return cls(params=params, tau=params.tau_init)

    @property
    def rho(self) -> float:
        return float(estimate_rho(self.b0_est, self.b1_est, self.counts[0], self.counts[1],
                                  self.params.rho_clamp))


def smooth_mse(J, err, alpha_x):
    return (1.0 - alpha_x) * J + alpha_x * np.square(err)


def update_local_mse(state: CensorState, check_error: float) -> float:
    """Fold the squared check error (computed with the combined estimate) into ``J``."""
    state.J = float(smooth_mse(state.J, check_error, state.params.alpha_x))
    return state.J


def importance(J_k, neighborhood_J):
    """``max(mean(neighborhood_J) - J_k, 0)``; the neighborhood includes the node itself."""
    return max(float(np.mean(neighborhood_J)) - float(J_k), 0.0)


def decide(x, tau):
    """1 to transmit, 0 to censor. Ties censor."""
    return int(x > tau)


def threshold_step(tau, a, rho, eta):
    return tau + eta * (rho * a - (1.0 - rho) * (1 - a))


def update_threshold(state: CensorState, a: int) -> float:
    state.tau = float(threshold_step(state.tau, a, state.rho, state.params.eta))
    return state.tau


def estimate_rho(b0_est, b1_est, n0, n1, clamp=(0.01, 0.99)):
    """Clamped ``b1 / (b1 - b0)``.

    Falls back to 0.5 until both actions have been observed, and when the
    denominator vanishes.
    """
    b0_est, b1_est = np.asarray(b0_est, float), np.asarray(b1_est, float)
    denom = b1_est - b0_est
    ready = (np.asarray(n0) > 0) & (np.asarray(n1) > 0) & (np.abs(denom) > 1e-12)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(ready, b1_est / np.where(ready, denom, 1.0), RHO_DEFAULT)
    rho = np.clip(rho, clamp[0], clamp[1])
    return rho if rho.ndim else float(rho)


def cost_step_size(count, smoothing):
    """Running mean for the first ``1/smoothing`` samples, then exponential smoothing."""
    return np.maximum(1.0 / np.maximum(count, 1), smoothing)


def update_cost_estimates(state: CensorState, a: int, observed_b: float) -> float:
    """Fold a realized step cost into the estimate for action ``a``; returns the new rho."""
    state.counts[a] += 1
    g = float(cost_step_size(state.counts[a], state.params.rho_smoothing))
    if a:
        state.b1_est += g * (observed_b - state.b1_est)
    else:
        state.b0_est += g * (observed_b - state.b0_est)
    return state.rho
