import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfstop.core import ObstacleSpec, STATE, make_time_grid, sample_drivers
from mfstop.errors import ConfigurationError, ShapeMismatchError
from mfstop.lattice import LatticeModel
from mfstop.models import get_preset
from mfstop.snell import ValueSurface, exact_lattice_value
from mfstop.stopping import (check_shapes, compute_z_and_hit, evaluate_rule, first_hit,
                             report_csv)


def _surface(Y, L):
    return ValueSurface(np.asarray(Y, float), np.asarray(L, float), np.asarray(Y, float), "exact")


def test_immediate_hit():
    Y = np.ones((4, 2, 4))
    rep = compute_z_and_hit(_surface(Y, Y))
    assert np.all(rep.hit_index == 0)


def test_never_hits_stops_at_horizon():
    Y = np.ones((4, 1, 4))
    rep = compute_z_and_hit(_surface(Y, Y - 1.0), nodes=make_time_grid(1.0, 3).nodes)
    assert np.all(rep.hit_index == 3)
    assert np.all(rep.tau == 1.0)


def test_running_max_hits_at_argmax():
    model = LatticeModel(1, 3)
    L = np.broadcast_to(np.array([1.5, 1.0, 0.5]), (8, 1, 3))
    surf = exact_lattice_value(model, L, np.full((8, 1), 0.2))
    assert np.all(compute_z_and_hit(surf).hit_index == 0)


def test_tau_requires_nodes():
    Y = np.ones((2, 1, 2))
    with pytest.raises(ConfigurationError):
        compute_z_and_hit(_surface(Y, Y)).tau


@given(st.integers(1, 6), st.integers(0, 2**31))
@settings(max_examples=50, deadline=None)
def test_first_hit_is_first(N, seed):
    Z = np.random.default_rng(seed).uniform(-0.5, 1, size=(20, N))
    tol = np.zeros(N)
    h = first_hit(Z, tol)
    for row, k in zip(Z, h):
        assert np.all(row[:k] > 0)
        assert k == N or row[k] <= 0


def test_rule_at_horizon_is_mean_xi():
    dr = sample_drivers(make_time_grid(1.0, 3), 1, 400, 2)
    X = dr.brownian_paths()
    spec = get_preset("recursive-linear").obstacle
    est = evaluate_rule(np.full((400, 1), 3), X, spec, X_T=X[:, :, -1])
    assert est.value[0] == pytest.approx(np.maximum(X[:, 0, -1], 0).mean())


def test_rule_zero_meanfield():
    spec = ObstacleSpec(lambda y, z: z + 0 * y, 0.0, 1.0, 0.0)
    Y = np.full((50, 1, 3), 0.8)
    est = evaluate_rule(np.zeros((50, 1), int), Y, spec, coupling="mean")
    assert est.value[0] == pytest.approx(0.8, abs=1e-15)


def test_variance_fixed_rules():
    M = 10000
    g = make_time_grid(1.0, 4)
    X = sample_drivers(g, 1, M, 3).brownian_paths()
    spec = get_preset("variance").obstacle
    for k in range(5):
        est = evaluate_rule(np.full((M, 1), k), X, spec, coupling="mean")
        # SE of a sample variance for Gaussians: t_k sqrt(2/M)
        assert abs(est.value[0] - g.nodes[k]) <= 4 * g.nodes[k] * np.sqrt(2 / M) + 1e-15


def test_evaluate_rule_errors():
    spec = get_preset("variance").obstacle
    X = np.zeros((5, 1, 3))
    with pytest.raises(ConfigurationError):
        evaluate_rule(np.full((5, 1), 3), X, spec)
    with pytest.raises(ConfigurationError):
        evaluate_rule(np.zeros((5, 1), int), X, spec, coupling="frozen")
    with pytest.raises(ConfigurationError):
        evaluate_rule(np.zeros((5, 1), int), X, spec, coupling="other")


def test_check_shapes_and_csv():
    Y = np.ones((3, 2, 3))
    surf = _surface(Y, Y)
    with pytest.raises(ShapeMismatchError):
        check_shapes(surf, np.zeros((3, 1)))
    rep = compute_z_and_hit(surf)
    text = report_csv(rep, Y, np.ones((3, 2)))
    lines = text.strip().split("\n")
    assert lines[0] == "scenario,particle,hit_index,stopped_state,stopped_value,reward"
    assert len(lines) == 7


def test_state_driven_terminal_collects_h():
    spec = ObstacleSpec(lambda x, z: (x - z) ** 2, 0, 0, None, STATE, False)
    X = np.array([[[0.0, 1.0]], [[0.0, -1.0]]])
    est = evaluate_rule(np.full((2, 1), 1), X, spec, coupling="mean")
    assert est.value[0] == 1.0
