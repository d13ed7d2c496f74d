import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from cdatc.diffusion import (DiffusionParams, NodeEstimator, check_weights, combine, combine_all,
                             metropolis_matrix, nlms_adapt, project_simplex, uniform_matrix)
from cdatc.errors import (DimensionMismatch, MissingNeighborEstimate, NonFiniteInput,
                          WeightConstraintViolated)
from cdatc.network import build_topology, default_topology, neighbors


def grid_projection(v, step):
    """Brute force: closest point of a simplex grid to ``v``."""
    n = len(v)
    ticks = np.round(np.arange(0, 1 + step / 2, step), 12)
    best, best_d = None, np.inf
    for head in itertools.product(ticks, repeat=n - 1):
        last = 1.0 - sum(head)
        if last < -1e-12:
            continue
        p = np.array(head + (max(last, 0.0),))
        dist = np.sum((p - v) ** 2)
        if dist < best_d:
            best, best_d = p, dist
    return best


def test_nlms_hand_example():
    psi, xi = nlms_adapt(np.zeros(2), np.array([1.0, 0.0]), 1.0, 0.1, 0.0)
    assert xi == 1.0
    assert psi == pytest.approx([0.1, 0.0])


def test_nlms_fixed_point():
    psi0 = np.array([0.3, -0.2, 1.0])
    u = np.array([1.0, 2.0, -1.0])
    psi, xi = nlms_adapt(psi0, u, psi0 @ u, 0.1, 1e-5)
    assert xi == 0.0
    assert np.array_equal(psi, psi0)


def test_nlms_zero_regressor():
    psi0 = np.array([0.3, -0.2])
    psi, _ = nlms_adapt(psi0, np.zeros(2), 5.0, 0.1, 1e-5)
    assert np.array_equal(psi, psi0)


def test_nlms_dimension_check():
    with pytest.raises(DimensionMismatch):
        nlms_adapt(np.zeros(3), np.zeros(2), 0.0, 0.1, 1e-5)


def test_nlms_batched_matches_single():
    rng = np.random.default_rng(0)
    psi = rng.standard_normal((4, 3, 5))
    u = rng.standard_normal((4, 3, 5))
    d = rng.standard_normal((4, 3))
    out, xi = nlms_adapt(psi, u, d, 0.1, 1e-5)
    for i, j in itertools.product(range(4), range(3)):
        single, e = nlms_adapt(psi[i, j], u[i, j], d[i, j], 0.1, 1e-5)
        assert np.allclose(out[i, j], single) and np.isclose(xi[i, j], e)


@pytest.mark.parametrize("raw, expected", [
    ([0.2, 0.8], [0.2, 0.8]),
    ([2.0, 0.0], [1.0, 0.0]),
    ([-1.0, -1.0], [0.5, 0.5]),
])
def test_project_simplex_examples(raw, expected):
    assert project_simplex(raw) == pytest.approx(expected)


@pytest.mark.parametrize("raw", [[2.0, 0.0], [0.7, 0.9], [-0.3, 0.1], [0.4, 1.2, -0.5], [1.0, 1.0, 1.0]])
def test_project_simplex_against_grid(raw):
    step = 1e-3 if len(raw) == 2 else 1e-2
    assert project_simplex(raw) == pytest.approx(grid_projection(np.array(raw), step), abs=step)


def test_project_simplex_mask():
    out = project_simplex([[5.0, 0.3, 0.3]], mask=[[False, True, True]])
    np.testing.assert_allclose(out, [[0.0, 0.5, 0.5]])


def test_project_simplex_nonfinite():
    with pytest.raises(NonFiniteInput):
        project_simplex([np.nan, 1.0])


@given(arrays(float, st.integers(1, 8), elements=st.floats(-100, 100)))
def test_projection_is_valid_and_idempotent(v):
    p = project_simplex(v)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) < 1e-12
    assert project_simplex(p) == pytest.approx(p, abs=1e-12)
    # no other simplex vertex is closer than the projection
    for i in range(len(v)):
        e = np.zeros(len(v))
        e[i] = 1.0
        assert np.sum((p - v) ** 2) <= np.sum((e - v) ** 2) + 1e-9


def line_estimator(c_self, psi, neighbor_w):
    t = build_topology(2, [(0, 1)])
    est = NodeEstimator.cold_start(t, 0, len(psi), DiffusionParams(combiner="uniform"))
    est.psi = np.asarray(psi, float)
    est.weights = {0: c_self, 1: 1.0 - c_self}
    est.receive(1, neighbor_w, 0.0)
    return est


def test_combine_self_only():
    est = line_estimator(1.0, [1.0, 2.0], [5.0, 5.0])
    assert np.array_equal(combine(est), [1.0, 2.0])


def test_combine_hand_example():
    est = line_estimator(0.5, [1.0, 0.0], [0.0, 1.0])
    assert combine(est) == pytest.approx([0.5, 0.5])


def test_combine_identical_inputs():
    w = np.array([0.25, -1.5, 3.0])
    est = line_estimator(0.3, w, w)
    assert combine(est) == pytest.approx(w)


def test_combine_missing_inbox():
    est = line_estimator(0.5, [1.0], [0.0])
    del est.inbox[1]
    with pytest.raises(MissingNeighborEstimate):
        combine(est)


def test_combine_rejects_bad_weights():
    est = line_estimator(0.5, [1.0], [0.0])
    est.weights = {0: 0.7, 1: 0.7}
    with pytest.raises(WeightConstraintViolated):
        combine(est)


@given(st.lists(st.floats(0.01, 1), min_size=3, max_size=3),
       arrays(float, (3, 4), elements=st.floats(-10, 10)),
       st.booleans())
def test_combine_all_convex_and_equivariant(raw, vecs, swap):
    c = np.array(raw) / np.sum(raw)
    C = np.zeros((3, 3))
    C[0] = c
    shared = vecs.copy()
    w = combine_all(C, vecs, shared)[0]
    assert np.all(w >= vecs.min(axis=0) - 1e-9) and np.all(w <= vecs.max(axis=0) + 1e-9)
    # relabel the two neighbors together with their weights
    p = [0, 2, 1] if swap else [0, 1, 2]
    C2 = np.zeros((3, 3))
    V2 = np.zeros_like(vecs)
    for old, new in enumerate(p):
        C2[0, new] = c[old]
        V2[new] = vecs[old]
    assert combine_all(C2, V2, V2)[0] == pytest.approx(w)


def test_combine_at_truth_returns_truth():
    t = default_topology()
    w_o = np.linspace(-1, 1, 6)
    stack = np.tile(w_o, (7, 1))
    for C in (uniform_matrix(t), metropolis_matrix(t)):
        assert combine_all(C, stack, stack) == pytest.approx(stack, abs=1e-15)


def test_static_combiners_are_valid():
    t = default_topology()
    mask = t.neighborhood_mask
    U = uniform_matrix(t)
    assert check_weights(U, mask) < 1e-12
    assert check_weights(metropolis_matrix(t), mask) < 1e-12
    for k in range(7):
        size = len(neighbors(t, k))
        assert U[k, neighbors(t, k)] == pytest.approx(np.full(size, 1 / size))


def test_uniform_three_neighbors():
    t = build_topology(3, [(0, 1), (0, 2)])
    est = NodeEstimator.cold_start(t, 0, 2, DiffusionParams(combiner="uniform"))
    est.update_combiners(np.ones(2), 1.0, est.psi)
    assert list(est.weights.values()) == pytest.approx([1 / 3] * 3)


def test_adaptive_weight_grows_for_exact_neighbor():
    # node 0 with three neighbors; neighbor 1 holds w_o exactly
    rng = np.random.default_rng(4)
    M = 10
    t = build_topology(4, [(0, 1), (0, 2), (0, 3)])
    est = NodeEstimator.cold_start(t, 0, M, DiffusionParams(combiner="adaptive-ls"))
    w_o = rng.standard_normal(M) / np.sqrt(M)
    est.psi = w_o + 0.3 * rng.standard_normal(M)
    est.receive(1, w_o, 0.0)
    est.receive(2, w_o + 0.3 * rng.standard_normal(M), 0.0)
    est.receive(3, w_o + 0.3 * rng.standard_normal(M), 0.0)
    start = est.weights[1]
    history = []
    for _ in range(100):
        u = rng.standard_normal(M)
        d = u @ w_o + 0.01 * rng.standard_normal()
        est.update_combiners(u, d, est.psi)
        history.append(est.weights[1])
        assert check_weights(np.array(list(est.weights.values())), True) < 1e-12
    assert history[-1] > start
    assert history[-1] > max(v for l, v in est.weights.items() if l != 1)
