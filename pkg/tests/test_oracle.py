import json

import numpy as np
import pytest

from mfstop.core import ObstacleSpec, RECURSIVE, STATE
from mfstop.errors import ConfigurationError, InstanceTooLargeError
from mfstop.experiments import interacting_instance, standard_instance
from mfstop.lattice import LatticeModel
from mfstop.models import get_preset
from mfstop.oracle import (OracleResult, bellman_probe, brute_force_optimal, enumerate_rules,
                           rule_count, rule_from_indices)
from mfstop.recursive import picard_interacting, picard_meanfield
from mfstop.snell import exact_lattice_value
from mfstop.stopping import compute_z_and_hit, evaluate_rule

# exact probe gap of the bellman-quadratic preset (gamma2 = 0.3, xi = X_T - 1) on a
# depth-2 lattice, derived by hand: 0.075 (1.5 + sqrt 2)
BELLMAN_GAP = 0.075 * (1.5 + np.sqrt(2.0))


def test_rule_counts():
    assert [len(enumerate_rules(N)) for N in (1, 2, 3)] == [2, 5, 26]
    assert [rule_count(d) for d in (1, 2, 3, 4)] == [2, 5, 26, 677]
    ids = [r.ident for r in enumerate_rules(1)]
    assert ids == ["00", "11"]


def test_depth_cap():
    with pytest.raises(InstanceTooLargeError) as exc:
        enumerate_rules(4)
    assert exc.value.required_cap == 4
    assert len(enumerate_rules(4, cap=4)) == 677


def test_rules_are_adapted_and_distinct():
    for N in (1, 2, 3):
        rules = enumerate_rules(N)
        assert len({r.tau_leaf for r in rules}) == len(rules)
        leaf = np.arange(2**N)
        for r in rules:
            assert rule_from_indices(r.on_paths(leaf), leaf, N) == r


def test_rule_from_indices_rejects_anticipation():
    with pytest.raises(ConfigurationError):
        rule_from_indices(np.array([1, 2, 2, 2]), np.arange(4), 2)


def test_constant_obstacle_optimal_set():
    spec = ObstacleSpec(lambda y, z: 0.9 + 0 * y, 0.0, 0.0, 0.1)
    model = LatticeModel(1, 2)
    surf, _ = picard_interacting(spec, model.drivers())
    res = brute_force_optimal(model, spec, surf)
    assert res.best == pytest.approx(0.9)
    # every rule that stops all paths before the horizon
    expected = {r.ident for r in enumerate_rules(2) if max(r.tau_leaf) < 2}
    assert set(res.optimal) == expected


def test_variance_rules_on_lattice():
    model = LatticeModel(1, 2)
    res = brute_force_optimal(model, get_preset("variance").obstacle)
    for k, t in enumerate((0.0, 0.5, 1.0)):
        assert res.values[str(k) * 4] == pytest.approx(t, abs=1e-15)
    assert res.best >= 1.0 - 1e-12


@pytest.mark.parametrize("j", range(6))
def test_standard_snell_equals_bruteforce(j):
    model, spec = standard_instance(77, j)
    surf, _ = picard_interacting(spec, model.drivers(), tol_fp=1e-14, max_iters=200)
    exact = exact_lattice_value(model, surf.L, surf.L[:, :, -1])
    assert abs(exact.Y[0, 0, 0] - brute_force_optimal(model, spec, surf).best) <= 1e-12


@pytest.mark.parametrize("j", range(6))
def test_hitting_rule_is_optimal(j):
    model, spec = interacting_instance(77, j)
    surf, _ = picard_interacting(spec, model.drivers(), tol_fp=1e-14, max_iters=200)
    hit = compute_z_and_hit(surf).hit_index
    X_T = model.drivers().brownian_paths()[:, :, -1] + np.asarray(model.initials)
    value = evaluate_rule(hit, surf.state, spec, exact=True, X_T=X_T).value[0]
    res = brute_force_optimal(model, spec, surf)
    assert abs(value - res.best) <= 1e-12
    rule = rule_from_indices(hit[:, 0], model.own_leaf()[:, 0], model.N)
    assert rule.ident in res.optimal


def test_oracle_json_roundtrip():
    model = LatticeModel(1, 1)
    res = brute_force_optimal(model, get_preset("variance").obstacle)
    data = json.loads(res.to_json())
    assert float(data["best_value"]) == res.best
    assert data["optimal_rules"] == list(res.optimal)
    assert isinstance(res, OracleResult)


def test_bellman_probe_gamma2_zero():
    spec = ObstacleSpec(lambda y, z: 0.5 * y + 0 * z, 0.5, 0.0, lambda x: x + np.maximum(x, 0))
    model = LatticeModel(1, 2)
    surf, _, _ = picard_meanfield(spec, model.drivers(), tol_fp=1e-14, max_iters=200)
    assert bellman_probe(model, spec, surf).violation <= 1e-12


def test_bellman_probe_frozen_mean():
    model = LatticeModel(1, 2)
    spec = get_preset("variance").obstacle
    phi = model.drivers().brownian_paths().mean(axis=(0, 1))
    assert bellman_probe(model, spec, coupling="frozen", phi=phi).violation <= 1e-12


def test_bellman_probe_mean_coupled_constant():
    model = LatticeModel(1, 2)
    pre = get_preset("bellman-quadratic")
    with pytest.warns(RuntimeWarning):
        surf, _, _ = picard_meanfield(pre.obstacle, model.drivers(), tol_fp=1e-14, max_iters=200, override=True)
    probe = bellman_probe(model, pre.obstacle, surf)
    assert probe.violation == pytest.approx(BELLMAN_GAP, abs=1e-12)
    assert probe.violation > 1e-6


def test_bellman_probe_rejects_particles():
    with pytest.raises(ConfigurationError):
        bellman_probe(LatticeModel(2, 1), get_preset("variance").obstacle)
