"""Network simulation of censoring D-ATC and its baselines.

Three schemes share one engine:

``cd-atc``
    Diffusion with energy accounting and the balanced censoring rule.
``nsd-atc``
    Same, but every active node always transmits (no censoring).
``unconstrained``
    No energy model (no stalls) and no censoring.

The engine advances all nodes of a batch of independent Monte-Carlo runs
together, with arrays shaped ``(runs, nodes, ...)``. Each run draws its data
from its own seeded substreams, so a run's trajectory does not depend on which
batch it is simulated in, nor on the scheme.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import rng as rngs
from .censoring import CensorParams, cost_step_size, estimate_rho, smooth_mse, threshold_step
from .diffusion import (DiffusionParams, check_weights, combine_all, initial_matrix,
                        ls_weights, nlms_adapt)
from .energy import EnergyParams, harvest_from_uniforms
from .errors import ConfigInvalid, WindowOutOfRange
from .network import Topology, default_topology
from .signal_model import SignalParams, draw_truth

log = logging.getLogger(__name__)

SCHEMES = ("cd-atc", "nsd-atc", "unconstrained")
CHUNK = 500
BATCH = 10


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce a simulation.

    ``schemes`` lists the schemes to compare; :func:`run` uses the first one
    unless told otherwise.
    """

    topology: Topology = field(default_factory=default_topology)
    signal: SignalParams = field(default_factory=SignalParams)
    diffusion: DiffusionParams = field(default_factory=DiffusionParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    censoring: CensorParams = field(default_factory=CensorParams)
    schemes: tuple = SCHEMES
    n_steps: int = 10000
    runs: int = 50
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigInvalid(f"steps: must be an integer >= 1, got {self.n_steps}")
        if int(self.runs) != self.runs or self.runs < 1:
            raise ConfigInvalid(f"runs: must be an integer >= 1, got {self.runs}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigInvalid(f"seed: must be a non-negative integer, got {self.seed}")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ConfigInvalid(f"schemes: each must be one of {', '.join(SCHEMES)}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigInvalid("schemes: duplicates")
        self.energy.start_levels(self.topology.n_nodes)
        if len(self.signal.noise_variances) != self.topology.n_nodes:
            raise ConfigInvalid(
                f"noise_variances: {len(self.signal.noise_variances)} values for "
                f"{self.topology.n_nodes} nodes")

    @property
    def n_nodes(self) -> int:
        return self.topology.n_nodes

    def steady_window(self) -> tuple:
        """Last 10% of the horizon (at least one step)."""
        return (self.n_steps - max(1, self.n_steps // 10), self.n_steps)


def _flags(config: SimConfig, scheme: str):
    if scheme not in SCHEMES:
        raise ConfigInvalid(f"unknown scheme {scheme!r}")
    censor = scheme == "cd-atc" and config.censoring.enabled
    energy = scheme != "unconstrained"
    return censor, energy


@dataclass
class SimTrace:
    """Per-step, per-node record of a batch of runs.

    Node arrays have shape ``(runs, steps, nodes)``. ``action`` is the
    decision taken before the energy check; ``transmitted`` is what actually
    went on air (decision 1 and not stalled). ``battery`` and ``tau`` are the
    values at the end of each step. ``weight_violation`` holds, per step, the
    largest deviation of any combination weight row from the simplex.
    """

    scheme: str
    seed: int
    run_ids: tuple
    action: np.ndarray
    stalled: np.ndarray
    battery: np.ndarray
    tau: np.ndarray
    importance: np.ndarray
    sq_dev: np.ndarray
    weight_violation: np.ndarray

    @property
    def transmitted(self) -> np.ndarray:
        return (self.action == 1) & ~self.stalled

    @property
    def nmsd(self) -> np.ndarray:
        """Network squared deviation per run and step, linear scale, ``(runs, steps)``."""
        return self.sq_dev.mean(axis=-1)

    @property
    def cumulative_transmits(self) -> np.ndarray:
        return np.cumsum(self.transmitted, axis=1)

    @property
    def n_steps(self) -> int:
        return self.sq_dev.shape[1]

    def window_counts(self, start, stop):
        tx = self.transmitted[:, start:stop].sum(axis=(0, 1))
        active = (~self.stalled[:, start:stop]).sum(axis=(0, 1))
        return tx, active

    def equals(self, other: "SimTrace") -> bool:
        """Bitwise equality of every recorded array."""
        names = ("action", "stalled", "battery", "tau", "importance", "sq_dev", "weight_violation")
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in names)


class _Streams:
    """Chunked draws from the per-(run, node, purpose) substreams."""

    def __init__(self, config: SimConfig, run_ids: Sequence[int]):
        self.config = config
        N = config.n_nodes
        seed = config.seed
        self.gens = [
            [[rngs.stream(seed, r, k, p) for p in (rngs.REGRESSOR, rngs.NOISE, rngs.HARVEST)]
             for k in range(N)]
            for r in run_ids
        ]
        M = config.signal.taps
        truths = []
        for r in run_ids:
            g = rngs.truth_stream(seed, r)
            first = draw_truth(M, g)
            second = draw_truth(M, g) if config.signal.jump_step is not None else first
            truths.append((first, second))
        self.w_o = np.array([t[0] for t in truths])
        self.w_o_jump = np.array([t[1] for t in truths])

    def chunk(self, T: int):
        M = self.config.signal.taps
        sig = np.sqrt(self.config.signal.signal_power)
        noise_sd = np.sqrt(np.asarray(self.config.signal.noise_variances))
        R, N = len(self.gens), len(self.gens[0])
        U = np.empty((T, R, N, M))
        V = np.empty((T, R, N))
        H = np.empty((T, R, N, 2))
        for r, row in enumerate(self.gens):
            for k, (g_reg, g_noise, g_harv) in enumerate(row):
                U[:, r, k] = sig * g_reg.standard_normal((T, M))
                V[:, r, k] = noise_sd[k] * g_noise.standard_normal(T)
                H[:, r, k] = g_harv.random((T, 2))
        return U, V, harvest_from_uniforms(self.config.energy, H[..., 0], H[..., 1])


def simulate(config: SimConfig, scheme: Optional[str] = None,
             run_ids: Optional[Sequence[int]] = None) -> SimTrace:
    """Simulate the given runs (default: all ``config.runs``) of one scheme."""
    scheme = scheme or config.schemes[0]
    censor, energy = _flags(config, scheme)
    run_ids = tuple(range(config.runs)) if run_ids is None else tuple(int(r) for r in run_ids)
    if not run_ids:
        raise ConfigInvalid("no runs requested")

    topo = config.topology
    R, N, M, T = len(run_ids), topo.n_nodes, config.signal.taps, config.n_steps
    dp, ep, cp = config.diffusion, config.energy, config.censoring
    mask = topo.neighborhood_mask
    adj = topo.adjacency.astype(float)
    hood_size = mask.sum(axis=1)
    adaptive = dp.combiner == "adaptive-ls"
    streams = _Streams(config, run_ids)

    psi = np.zeros((R, N, M))
    w = np.zeros((R, N, M))
    shared_w = np.zeros((R, N, M))
    shared_J = np.zeros((R, N))
    C = np.broadcast_to(initial_matrix(topo, dp.combiner), (R, N, N)).copy()
    ls_err = np.zeros((R, N, N))
    J = np.zeros((R, N))
    tau = np.full((R, N), cp.tau_init)
    b_est = np.zeros((2, R, N))
    b_cnt = np.zeros((2, R, N), dtype=np.int64)
    e = np.broadcast_to(ep.start_levels(N), (R, N)).copy()

    out = SimTrace(
        scheme=scheme, seed=config.seed, run_ids=run_ids,
        action=np.zeros((R, T, N), dtype=np.int8),
        stalled=np.zeros((R, T, N), dtype=bool),
        battery=np.zeros((R, T, N)),
        tau=np.zeros((R, T, N)),
        importance=np.zeros((R, T, N)),
        sq_dev=np.zeros((R, T, N)),
        weight_violation=np.zeros(T),
    )

    for start in range(0, T, CHUNK):
        U_c, V_c, H_c = streams.chunk(min(CHUNK, T - start))
        for i in range(U_c.shape[0]):
            n = start + i
            w_o = streams.w_o_jump if (config.signal.jump_step is not None
                                       and n >= config.signal.jump_step) else streams.w_o
            U, h = U_c[i], H_c[i]
            d = np.einsum("rnm,rm->rn", U, w_o) + V_c[i]

            # importance from own J and the last J each neighbor shared
            x = np.maximum((J + (shared_J[:, None, :] * adj).sum(axis=-1)) / hood_size - J, 0.0)
            if censor:
                a = (x > tau).astype(np.int8)
                rho = estimate_rho(b_est[0], b_est[1], b_cnt[0], b_cnt[1], cp.rho_clamp)
                tau = threshold_step(tau, a, rho, cp.eta)
            else:
                a = np.ones((R, N), dtype=np.int8)

            if energy:
                stall = e - (ep.sense_cost + a * ep.tx_cost) + h <= 0
            else:
                stall = np.zeros((R, N), dtype=bool)
            act = ~stall
            act3 = act[..., None]

            psi_new, xi = nlms_adapt(psi, U, d, dp.mu, dp.delta)
            psi = np.where(act3, psi_new, psi)
            if adaptive:
                pred = d[..., None] - np.einsum("rkm,rlm->rkl", U, shared_w)
                idx = np.arange(N)
                pred[:, idx, idx] = xi
                new_err = (1.0 - dp.ls_smoothing) * ls_err + dp.ls_smoothing * pred * pred
                ls_err = np.where(act3, new_err, ls_err)
                C = np.where(act3, ls_weights(new_err, mask), C)
            check = d - np.einsum("rnm,rnm->rn", w, U)
            J = np.where(act, smooth_mse(J, check, cp.alpha_x), J)
            w = np.where(act3, combine_all(C, psi, shared_w), w)

            send = act & (a == 1)
            shared_w = np.where(send[..., None], w, shared_w)
            shared_J = np.where(send, J, shared_J)

            if energy:
                b = np.where(act, ep.sense_cost + a * ep.tx_cost - h, -h)
                e = np.clip(e - b, 0.0, ep.capacity)
                if censor:
                    for act_value in (0, 1):
                        sel = act & (a == act_value)
                        b_cnt[act_value] += sel
                        g = cost_step_size(b_cnt[act_value], cp.rho_smoothing)
                        b_est[act_value] = np.where(sel, b_est[act_value] + g * (b - b_est[act_value]),
                                                    b_est[act_value])

            out.action[:, n] = a
            out.stalled[:, n] = stall
            out.battery[:, n] = e
            out.tau[:, n] = tau
            out.importance[:, n] = x
            out.sq_dev[:, n] = np.sum((w - w_o[:, None, :]) ** 2, axis=-1)
            out.weight_violation[n] = check_weights(C, mask)
    return out


def run(config: SimConfig, scheme: Optional[str] = None, run_index: int = 0) -> SimTrace:
    """One Monte-Carlo run; arrays keep a leading run axis of length 1."""
    return simulate(config, scheme, (run_index,))


@dataclass
class MonteCarloResult:
    """Run-averaged curves of one scheme.

    ``tx_counts``, ``active_counts`` and ``decision_counts`` are summed over
    runs, shape ``(steps, nodes)``. The ``*_violations`` counters tally
    invariant breaches over every recorded step of every run.
    """

    scheme: str
    runs: int
    nmsd: np.ndarray
    tau_mean: np.ndarray
    battery_mean: np.ndarray
    tx_counts: np.ndarray
    active_counts: np.ndarray
    decision_counts: np.ndarray
    battery_violations: int = 0
    importance_violations: int = 0
    max_weight_violation: float = 0.0

    @property
    def nmsd_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.nmsd)

    @property
    def n_steps(self) -> int:
        return self.nmsd.shape[0]

    def window_counts(self, start, stop):
        return self.tx_counts[start:stop].sum(axis=0), self.active_counts[start:stop].sum(axis=0)

    def stall_rate(self, window=None) -> np.ndarray:
        start, stop = _check_window(self, window)
        active = self.active_counts[start:stop].sum(axis=0)
        return 1.0 - active / (self.runs * (stop - start))

    def decision_rate(self, window=None) -> np.ndarray:
        """Fraction of steps on which the node decided to transmit, stalled or not."""
        start, stop = _check_window(self, window)
        return self.decision_counts[start:stop].sum(axis=0) / (self.runs * (stop - start))

    def steady_nmsd(self, window=None) -> float:
        start, stop = _check_window(self, window)
        return float(self.nmsd[start:stop].mean())

    def steady_nmsd_db(self, window=None) -> float:
        return float(10.0 * np.log10(self.steady_nmsd(window)))

    def steady_tau(self, window=None) -> np.ndarray:
        start, stop = _check_window(self, window)
        return self.tau_mean[start:stop].mean(axis=0)


def _check_window(obj, window):
    T = obj.n_steps
    if window is None:
        window = (T - max(1, T // 10), T)
    start, stop = (int(v) for v in window)
    if not 0 <= start < stop <= T:
        raise WindowOutOfRange(f"window {window} not within [0, {T}]")
    return start, stop


def transmit_rate(trace, window=None) -> np.ndarray:
    """Per-node fraction of active (non-stalled) steps in ``window`` that transmitted.

    ``trace`` is a :class:`SimTrace` or a :class:`MonteCarloResult`;
    ``window`` is a ``(start, stop)`` step range, by default the last 10% of
    the horizon. Nodes with no active step in the window get NaN.
    """
    start, stop = _check_window(trace, window)
    tx, active = trace.window_counts(start, stop)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(active > 0, tx / np.maximum(active, 1), np.nan)


def _aggregate(config: SimConfig, scheme: str, traces) -> MonteCarloResult:
    T, N = config.n_steps, config.n_nodes
    res = MonteCarloResult(
        scheme=scheme, runs=0, nmsd=np.zeros(T), tau_mean=np.zeros((T, N)),
        battery_mean=np.zeros((T, N)), tx_counts=np.zeros((T, N), dtype=np.int64),
        active_counts=np.zeros((T, N), dtype=np.int64),
        decision_counts=np.zeros((T, N), dtype=np.int64),
    )
    B = config.energy.capacity
    for tr in traces:
        res.runs += len(tr.run_ids)
        # accumulate run by run so float sums do not depend on batching
        for i in range(len(tr.run_ids)):
            res.nmsd += tr.sq_dev[i].mean(axis=-1)
            res.tau_mean += tr.tau[i]
            res.battery_mean += tr.battery[i]
        res.tx_counts += tr.transmitted.sum(axis=0)
        res.active_counts += (~tr.stalled).sum(axis=0)
        res.decision_counts += (tr.action == 1).sum(axis=0)
        res.battery_violations += int(np.count_nonzero((tr.battery < 0) | (tr.battery > B)))
        res.importance_violations += int(np.count_nonzero(tr.importance < 0))
        res.max_weight_violation = max(res.max_weight_violation, float(tr.weight_violation.max()))
    res.nmsd /= res.runs
    res.tau_mean /= res.runs
    res.battery_mean /= res.runs
    return res


def monte_carlo(config: SimConfig, scheme: Optional[str] = None, batch: int = BATCH) -> MonteCarloResult:
    """Average ``config.runs`` runs of one scheme.

    Runs are simulated ``batch`` at a time and merged in run order; the
    result does not depend on ``batch``.
    """
    scheme = scheme or config.schemes[0]
    batches = [tuple(range(s, min(s + batch, config.runs))) for s in range(0, config.runs, batch)]

    def traces():
        for ids in batches:
            log.debug("%s: runs %d-%d", scheme, ids[0], ids[-1])
            yield simulate(config, scheme, ids)

    return _aggregate(config, scheme, traces())


def compare(config: SimConfig, batch: int = BATCH) -> dict:
    """Monte-Carlo results for every scheme in ``config.schemes``, keyed by scheme."""
    return {s: monte_carlo(config, s, batch) for s in config.schemes}


def with_overrides(config: SimConfig, **kw) -> SimConfig:
    return replace(config, **kw)
