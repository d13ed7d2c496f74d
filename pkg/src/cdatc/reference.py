"""Straightforward per-node simulation loop.

Slow, but built directly on :class:`~cdatc.diffusion.NodeEstimator`,
:class:`~cdatc.censoring.CensorState` and the scalar energy helpers, one node
at a time and one step at a time. It draws from the same substreams as the
vectorized engine in :mod:`cdatc.simulator`, so the two must agree to
rounding error. Tests use it as an independent check of the engine.
"""

from __future__ import annotations

import numpy as np

from . import rng as rngs
from .censoring import (CensorState, decide, importance, update_cost_estimates,
                        update_local_mse, update_threshold)
from .diffusion import NodeEstimator, check_weights
from .energy import EnergyState, draw_harvest, energy_cost, idle_cost, stalls, step_battery
from .network import neighbors
from .signal_model import draw_truth, observe, sample_regressor
from .simulator import SimConfig, SimTrace, _flags


def run_reference(config: SimConfig, scheme: str = None, run_index: int = 0, return_nodes: bool = False):
    """Simulate one run node by node.

    Returns the :class:`SimTrace`, or ``(trace, estimators)`` with the final
    per-node :class:`NodeEstimator` objects when ``return_nodes`` is set.
    """
    scheme = scheme or config.schemes[0]
    censor, energy = _flags(config, scheme)
    topo = config.topology
    N, M, T = topo.n_nodes, config.signal.taps, config.n_steps
    ep, cp = config.energy, config.censoring
    profiles = config.signal.profiles()

    g = rngs.truth_stream(config.seed, run_index)
    w_o = draw_truth(M, g)
    w_jump = draw_truth(M, g) if config.signal.jump_step is not None else w_o
    gens = [[rngs.stream(config.seed, run_index, k, p)
             for p in (rngs.REGRESSOR, rngs.NOISE, rngs.HARVEST)] for k in range(N)]

    nodes = [NodeEstimator.cold_start(topo, k, M, config.diffusion) for k in range(N)]
    cens = [CensorState.initial(cp) for _ in range(N)]
    batt = [EnergyState(float(v)) for v in ep.start_levels(N)]
    hood = [neighbors(topo, k, include_self=False) for k in range(N)]
    mask = topo.neighborhood_mask

    tr = SimTrace(
        scheme=scheme, seed=config.seed, run_ids=(run_index,),
        action=np.zeros((1, T, N), dtype=np.int8), stalled=np.zeros((1, T, N), dtype=bool),
        battery=np.zeros((1, T, N)), tau=np.zeros((1, T, N)), importance=np.zeros((1, T, N)),
        sq_dev=np.zeros((1, T, N)), weight_violation=np.zeros(T),
    )
    for n in range(T):
        truth = w_jump if config.signal.jump_step is not None and n >= config.signal.jump_step else w_o
        outbox = []
        for k in range(N):
            g_reg, g_noise, g_harv = gens[k]
            u = sample_regressor(profiles[k], M, g_reg)
            d = observe(truth, u, profiles[k], g_noise)
            h = draw_harvest(ep, g_harv)
            node, cs = nodes[k], cens[k]

            x = importance(cs.J, [cs.J] + [node.inbox[l][1] for l in hood[k]])
            if censor:
                a = decide(x, cs.tau)
                update_threshold(cs, a)
            else:
                a = 1
            stalled = energy and bool(stalls(batt[k].level, ep, a, h))

            if not stalled:
                psi_prev = node.psi
                node.adapt(u, d)
                node.update_combiners(u, d, psi_prev)
                update_local_mse(cs, d - float(node.w @ u))
                node.combine()
                if a == 1:
                    outbox.append((k, node.w.copy(), cs.J))
            if energy:
                b = idle_cost(ep, h) if stalled else energy_cost(ep.sense_cost, a, ep.tx_cost, h)
                step_battery(batt[k], b, ep.capacity)
                if censor and not stalled:
                    update_cost_estimates(cs, a, b)

            tr.action[0, n, k] = a
            tr.stalled[0, n, k] = stalled
            tr.battery[0, n, k] = batt[k].level
            tr.tau[0, n, k] = cs.tau
            tr.importance[0, n, k] = x
            tr.sq_dev[0, n, k] = float(np.sum((node.w - truth) ** 2))

        # deliveries become visible at the next step
        for k, w, J in outbox:
            for l in hood[k]:
                nodes[l].receive(k, w, J)
        C = np.zeros((N, N))
        for k, node in enumerate(nodes):
            for l, c in node.weights.items():
                C[k, l] = c
        tr.weight_violation[n] = check_weights(C, mask)
    return (tr, nodes) if return_nodes else tr
