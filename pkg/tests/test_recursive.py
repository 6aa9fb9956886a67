import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfstop import mfsde
from mfstop.core import ObstacleSpec, make_time_grid, sample_drivers
from mfstop.errors import ConfigurationError, NonConvergenceError
from mfstop.lattice import LatticeModel
from mfstop.models import get_preset
from mfstop.recursive import (FixedPointTrace, contraction_report, picard_interacting,
                              picard_meanfield)


def _spec(h, g1, g2, xi):
    return ObstacleSpec(h, g1, g2, xi)


def test_constant_obstacle_two_iterations():
    spec = _spec(lambda y, z: 0.4 + 0 * y, 0.0, 0.0, 0.7)
    model = LatticeModel(1, 3)
    surf, trace = picard_interacting(spec, model.drivers())
    assert trace.iterations <= 2
    np.testing.assert_array_equal(surf.Y[:, :, :3], 0.7)
    spec = _spec(lambda y, z: 0.9 + 0 * y, 0.0, 0.0, 0.2)
    surf, _ = picard_interacting(spec, model.drivers())
    np.testing.assert_array_equal(surf.Y[:, :, :3], 0.9)
    np.testing.assert_array_equal(surf.Y[:, :, 3], 0.2)


def test_scalar_fixed_point_gamma1():
    spec = _spec(lambda y, z: 0.3 * y + 0 * z, 0.3, 0.0, 1.0)
    surf, _ = picard_interacting(spec, LatticeModel(1, 1).drivers())
    assert surf.Y[0, 0, 0] == pytest.approx(1.0, abs=1e-12)


def test_symmetric_reduction_gamma2():
    spec = _spec(lambda y, z: 0.3 * z + 0 * y, 0.0, 0.3, 1.0)
    model = LatticeModel(2, 2)
    surf, _ = picard_interacting(spec, model.drivers())
    np.testing.assert_allclose(surf.Y[:, :, 0], 1.0, atol=1e-12)


def test_meanfield_gamma2_zero_matches_interacting():
    spec = _spec(lambda y, z: 0.2 * y + 0 * z + 0.1, 0.2, 0.0, lambda x: np.maximum(x, 0))
    model = LatticeModel(1, 3)
    a, _ = picard_interacting(spec, model.drivers())
    b, _, _ = picard_meanfield(spec, model.drivers())
    np.testing.assert_allclose(a.Y, b.Y, atol=1e-12)


def test_meanfield_deterministic_reduction():
    spec = _spec(lambda y, z: 0.3 * z + 0 * y, 0.0, 0.3, 1.0)
    dr = sample_drivers(make_time_grid(1.0, 3), 1, 500, 4)
    surf, mean, _ = picard_meanfield(spec, dr)
    np.testing.assert_allclose(surf.Y[:, 0, 0], 1.0, atol=1e-6)


def test_meanfield_random_terminal():
    spec = _spec(lambda y, z: 0.3 * z + 0 * y, 0.0, 0.3, lambda x: 1.0 + x)
    M = 10000
    dr = sample_drivers(make_time_grid(1.0, 1), 1, M, 9)
    surf, _, _ = picard_meanfield(spec, dr)
    xi = 1.0 + dr.brownian_paths()[:, 0, 1]
    assert abs(surf.root()[0] - 1.0) <= 4 * xi.std() / np.sqrt(M)


def test_uniqueness_across_inits():
    spec = get_preset("recursive-linear").obstacle
    model = LatticeModel(2, 3)
    a, ta = picard_interacting(spec, model.drivers(), init="flat")
    b, tb = picard_interacting(spec, model.drivers(), init="zero")
    assert ta.converged and tb.converged
    np.testing.assert_allclose(a.Y, b.Y, atol=1e-7)


def test_gate_requires_override():
    spec = _spec(lambda y, z: 0.7 * y + 0.3 * z, 0.7, 0.3, 1.0)
    model = LatticeModel(1, 2)
    with pytest.raises(ConfigurationError):
        picard_interacting(spec, model.drivers())
    with pytest.warns(RuntimeWarning):
        picard_interacting(spec, model.drivers(), override=True)


def test_nonfinite_iterate_raises_with_trace():
    spec = ObstacleSpec(lambda y, z: np.exp(50 * y) + 0 * z, 0.0, 0.0, 5.0, lipschitz_flag=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(NonConvergenceError) as exc:
            picard_interacting(spec, LatticeModel(1, 2).drivers(), override=True)
    assert isinstance(exc.value.trace, FixedPointTrace)
    assert not exc.value.trace.converged


def test_budget_exhaustion_raises_with_trace():
    spec = get_preset("recursive-linear").obstacle
    with pytest.raises(NonConvergenceError) as exc:
        picard_interacting(spec, LatticeModel(2, 2).drivers(), max_iters=2, tol_fp=1e-300)
    assert exc.value.trace.iterations == 2


def test_bad_init_and_tol():
    spec = get_preset("recursive-linear").obstacle
    with pytest.raises(ConfigurationError):
        picard_interacting(spec, LatticeModel(1, 1).drivers(), init="random")
    with pytest.raises(ConfigurationError):
        picard_interacting(spec, LatticeModel(1, 1).drivers(), tol_fp=0.0)


def test_contraction_report():
    r = contraction_report((1, 0.4, 0.16, 0.064))
    assert r.max_tail_ratio == pytest.approx(0.4) and r.geometric
    assert not contraction_report((1, 1.1, 1.21)).geometric
    spec = _spec(lambda y, z: 0.5 + 0 * y, 0.0, 0.0, 1.0)
    _, trace = picard_interacting(spec, LatticeModel(1, 2).drivers())
    assert trace.distances[-1] == 0.0
    assert contraction_report(trace, spec).geometric


def test_mc_picard_converges_with_trace():
    pre = get_preset("recursive-linear")
    dr = sample_drivers(make_time_grid(1.0, 5), 4, 2000, 3)
    st_ = mfsde.simulate_interacting(dr, pre.coeffs, 0.0)
    surf, trace = picard_interacting(pre.obstacle, st_)
    assert trace.converged and trace.iterations <= 50
    assert np.all(np.isfinite(surf.Y))
    assert np.all(surf.Y >= surf.L - 1e-12)


@given(st.floats(0.0, 0.45), st.floats(0.0, 0.45), st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_lattice_fixed_point_residual(g1, g2, N):
    # in-gate linear obstacles: the converged Y reproduces itself under one more sweep
    spec = _spec(lambda y, z: g1 * y + g2 * z, g1, g2, lambda x: np.abs(x))
    model = LatticeModel(2, N)
    surf, trace = picard_interacting(spec, model.drivers(), tol_fp=1e-12, max_iters=400)
    again, _ = picard_interacting(spec, model.drivers(), tol_fp=1e-12, max_iters=400, init="zero")
    np.testing.assert_allclose(surf.Y, again.Y, atol=1e-10)
    assert np.all(surf.Y >= surf.L - 1e-12)
