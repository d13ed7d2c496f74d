"""Decoupled adapt-then-combine diffusion.

Each node keeps a purely local NLMS estimate ``psi`` and a combined estimate
``w``. At every active step it adapts ``psi`` with its own data, then forms
``w`` as a convex combination of ``psi`` and the estimates most recently
received from its neighbors.

Array helpers broadcast over leading axes so the simulator can update every
node of every Monte-Carlo run in one call. :class:`NodeEstimator` wraps the
same helpers for a single node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionMismatch, MissingNeighborEstimate, NonFiniteInput,
                     ValidationError, WeightConstraintViolated)
from .network import Topology, neighbors

COMBINERS = ("uniform", "metropolis", "adaptive-ls")
WEIGHT_TOL = 1e-12
_TINY = 1e-30


@dataclass(frozen=True)
class DiffusionParams:
    """``ls_smoothing`` is the forgetting factor of the adaptive combiner's error tracks."""

    mu: float = 0.1
    delta: float = 1e-5
    combiner: str = "adaptive-ls"
    ls_smoothing: float = 0.1

    def __post_init__(self):
        if not self.mu > 0:
            raise ValidationError("mu", "must be > 0")
        if not self.delta > 0:
            raise ValidationError("delta", "must be > 0")
        if self.combiner not in COMBINERS:
            raise ValidationError("combiner", f"must be one of {', '.join(COMBINERS)}")
        if not 0 < self.ls_smoothing <= 1:
            raise ValidationError("ls_smoothing", "must lie in (0, 1]")


def nlms_adapt(psi, u, d, mu, delta):
    """One NLMS step; returns ``(new_psi, xi)`` with the a-priori error ``xi``.

    ``psi`` and ``u`` have shape ``(..., M)`` and ``d`` shape ``(...)``.
    """
    psi = np.asarray(psi, dtype=float)
    u = np.asarray(u, dtype=float)
    if psi.shape[-1:] != u.shape[-1:]:
        raise DimensionMismatch(f"regressor length {u.shape[-1:]} != estimate length {psi.shape[-1:]}")
    xi = d - np.einsum("...m,...m->...", psi, u)
    gain = mu / (delta + np.einsum("...m,...m->...", u, u))
    return psi + (gain * xi)[..., None] * u, xi


def project_simplex(v, mask=None):
    """Euclidean projection of each row of ``v`` onto the probability simplex.

    With ``mask``, only the masked entries of a row take part and the rest
    come back as zero. Sort-based algorithm of Held, Wolfe and Crowder.
    """
    v = np.asarray(v, dtype=float)
    if mask is None:
        mask = np.ones(v.shape, dtype=bool)
    mask = np.broadcast_to(mask, v.shape)
    if not np.all(np.isfinite(v[mask])):
        raise NonFiniteInput("weights must be finite")
    count = mask.sum(axis=-1, keepdims=True)
    if np.any(count == 0):
        raise WeightConstraintViolated("empty support")
    inside = np.where(mask, v, 0.0)
    if np.all(inside >= 0) and np.all(np.abs(inside.sum(axis=-1) - 1.0) <= 4 * np.finfo(float).eps):
        return inside
    srt = -np.sort(-np.where(mask, v, -np.inf), axis=-1)
    j = np.arange(1, v.shape[-1] + 1)
    live = j <= count
    css = np.cumsum(np.where(live, srt, 0.0), axis=-1)
    cond = live & (srt - (css - 1.0) / j > 0)
    r = np.maximum(cond.sum(axis=-1, keepdims=True), 1)
    theta = (np.take_along_axis(css, r - 1, axis=-1) - 1.0) / r
    return np.where(mask, np.maximum(v - theta, 0.0), 0.0)


def check_weights(weights, mask, tol=WEIGHT_TOL) -> float:
    """Largest violation of non-negativity, unit sum or support, over all rows."""
    weights = np.asarray(weights, dtype=float)
    neg = np.max(np.maximum(-weights, 0.0), initial=0.0)
    off = np.max(np.abs(np.where(mask, 0.0, weights)), initial=0.0)
    total = np.max(np.abs(weights.sum(axis=-1) - 1.0), initial=0.0)
    return float(max(neg, off, total))


def uniform_matrix(t: Topology) -> np.ndarray:
    """Row ``k`` holds the weights node ``k`` gives to each node."""
    mask = t.neighborhood_mask
    return mask / mask.sum(axis=1, keepdims=True)


def metropolis_matrix(t: Topology) -> np.ndarray:
    size = t.neighborhood_mask.sum(axis=1)
    c = np.where(t.adjacency, 1.0 / np.maximum.outer(size, size), 0.0)
    np.fill_diagonal(c, 1.0 - c.sum(axis=1))
    return c


def initial_matrix(t: Topology, combiner: str) -> np.ndarray:
    # the adaptive rule starts from uniform weights
    return metropolis_matrix(t) if combiner == "metropolis" else uniform_matrix(t)


def ls_weights(errors, mask):
    """Weights proportional to the inverse smoothed prediction errors, then projected."""
    inv = np.where(mask, 1.0 / np.maximum(errors, _TINY), 0.0)
    return project_simplex(inv / inv.sum(axis=-1, keepdims=True), mask)


@dataclass
class NodeEstimator:
    """State of one node: local and combined estimates, weights and inbox.

    ``weights`` maps every ``l`` in the self-inclusive neighborhood to its
    weight. ``inbox`` maps each neighbor to the last ``(w, J)`` it shared;
    entries are only overwritten on delivery, so a silent neighbor counts as
    unchanged.
    """

    k: int
    psi: np.ndarray
    w: np.ndarray
    mu: float = 0.1
    delta: float = 1e-5
    combiner: str = "adaptive-ls"
    ls_smoothing: float = 0.1
    weights: dict = field(default_factory=dict)
    inbox: dict = field(default_factory=dict)
    ls_errors: dict = field(default_factory=dict)

    @classmethod
    def cold_start(cls, t: Topology, k: int, M: int, params: DiffusionParams = DiffusionParams()):
        hood = neighbors(t, k, include_self=True)
        row = initial_matrix(t, params.combiner)[k]
        return cls(
            k=k, psi=np.zeros(M), w=np.zeros(M), mu=params.mu, delta=params.delta,
            combiner=params.combiner, ls_smoothing=params.ls_smoothing,
            weights={l: float(row[l]) for l in hood},
            inbox={l: (np.zeros(M), 0.0) for l in hood if l != k},
            ls_errors={l: 0.0 for l in hood},
        )

    def receive(self, l: int, w, J: float) -> None:
        self.inbox[l] = (np.array(w, dtype=float), float(J))

    def adapt(self, u, d) -> float:
        self.psi, xi = nlms_adapt(self.psi, u, d, self.mu, self.delta)
        return float(xi)

    def update_combiners(self, u, d, psi_prev) -> dict:
        """Refresh the adaptive weights from one-step-ahead prediction errors.

        ``psi_prev`` is the local estimate before this step's adaptation; it
        plays the role of the node's own received estimate. Static combiners
        leave the weights untouched.
        """
        if self.combiner != "adaptive-ls":
            return self.weights
        hood = sorted(self.weights)
        u = np.asarray(u, dtype=float)
        a = self.ls_smoothing
        for l in hood:
            est = psi_prev if l == self.k else self._received(l)[0]
            err = d - float(est @ u)
            self.ls_errors[l] = (1 - a) * self.ls_errors[l] + a * err * err
        new = ls_weights(np.array([self.ls_errors[l] for l in hood]), np.ones(len(hood), bool))
        self.weights = {l: float(c) for l, c in zip(hood, new)}
        return self.weights

    def _received(self, l):
        try:
            return self.inbox[l]
        except KeyError:
            raise MissingNeighborEstimate(f"node {self.k} has no estimate from neighbor {l}") from None

    def combine(self) -> np.ndarray:
        self.w = combine(self)
        return self.w


def combine(est: NodeEstimator) -> np.ndarray:
    """Convex combination of the node's ``psi`` and its neighbors' last shared estimates."""
    c = np.array(list(est.weights.values()))
    if np.any(c < -WEIGHT_TOL) or abs(c.sum() - 1.0) > WEIGHT_TOL:
        raise WeightConstraintViolated(f"node {est.k}: weights {c} are not on the simplex")
    out = est.weights[est.k] * est.psi
    for l in sorted(est.weights):
        if l != est.k:
            out = out + est.weights[l] * est._received(l)[0]
    return out


def combine_all(C, psi, shared):
    """Vectorized combine: ``C[..., k, l]`` is the weight node ``k`` gives node ``l``.

    ``psi`` and ``shared`` have shape ``(..., N, M)``; the diagonal of ``C``
    multiplies ``psi`` and the off-diagonal entries multiply ``shared``.
    """
    diag = np.einsum("...kk->...k", C)
    off = C - diag[..., None] * np.eye(C.shape[-1])
    return diag[..., None] * psi + off @ shared
