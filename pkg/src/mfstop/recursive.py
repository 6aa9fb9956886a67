"""Picard iteration for recursive value processes.

One sweep maps an iterate Y^(r) to the Snell envelope of the obstacle built
from it, L^(r) = E[h(Y^(r), z^(r)) | F^i], where z is the coupling value:

* ``"empirical"``: the scenario's particle average (interacting system);
* ``"mean"``: the cross-scenario average at each node (mean-field limit);
* ``"frozen"``: a given deterministic function phi(t_k).

In state-driven mode h is applied to the state X instead of Y, so the
obstacle does not move and the scheme settles after one correction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .core import RECURSIVE, DriverEnsemble, ObstacleSpec, validate_spec
from .errors import ConfigurationError, NonConvergenceError
from .mfsde import MeanFunction, StateEnsemble
from .snell import ExactBackend, RegressionBackend, snell_backward

EMPIRICAL = "empirical"
MEAN = "mean"
FROZEN = "frozen"

EXACT_TOL = 1e-8
MC_REL_TOL = 1e-4
DEFAULT_MAX_ITERS = 50


@dataclass(frozen=True)
class FixedPointTrace:
    distances: tuple
    converged: bool
    tol: float
    init: str = "flat"

    @property
    def iterations(self):
        return len(self.distances)

    @property
    def ratios(self):
        d = self.distances
        return tuple(d[r + 1] / d[r] for r in range(len(d) - 1) if d[r] > 0)


def as_states(obj) -> StateEnsemble:
    """Accept a StateEnsemble or bare drivers (then X = W, started at 0)."""
    if isinstance(obj, StateEnsemble):
        return obj
    if isinstance(obj, DriverEnsemble):
        X = obj.brownian_paths()
        if obj.lattice is not None:
            X = X + np.asarray(obj.lattice.initials)[None, :, None]
        return StateEnsemble(X, obj.grid, "brownian", obj, X[0, :, 0].copy())
    raise ConfigurationError(f"expected drivers or states, got {type(obj).__name__}")


def default_backend(states: StateEnsemble):
    d = states.drivers
    if d.exact:
        return ExactBackend(d.lattice)
    return RegressionBackend()


def _gate(spec, override):
    report = validate_spec(spec)
    if spec.mode == RECURSIVE and not report.wellposed:
        msg = "; ".join(report.messages)
        if not override:
            raise ConfigurationError(f"spec {spec.name!r} is outside the well-posedness gate ({msg}); pass override=True to run anyway")
        warnings.warn(f"running {spec.name!r} outside the well-posedness gate: {msg}", RuntimeWarning)
    return report


def coupling_values(u, coupling, exact=False, phi=None, pool=True):
    """Coupling values z broadcastable against u (M, n, N+1)."""
    if coupling == EMPIRICAL:
        if exact and u.shape[1] > 2:
            return np.sort(u, axis=1).sum(axis=1, keepdims=True) / u.shape[1]
        return u.sum(axis=1, keepdims=True) / u.shape[1]
    if coupling == MEAN:
        if pool:
            return u.mean(axis=(0, 1))[None, None, :]
        return u.mean(axis=0, keepdims=True)
    if coupling == FROZEN:
        if phi is None:
            raise ConfigurationError("frozen coupling needs phi")
        phi = np.asarray(phi, dtype=np.float64)
        if phi.shape[-1] != u.shape[2]:
            raise ConfigurationError(f"phi has {phi.shape[-1]} nodes, grid has {u.shape[2]}")
        return phi.reshape((1,) * (3 - phi.ndim) + phi.shape) if phi.ndim < 3 else phi
    raise ConfigurationError(f"unknown coupling {coupling!r}")


class _Problem:
    """Everything a sweep needs that does not change between iterations."""

    def __init__(self, spec: ObstacleSpec, states, backend, coupling, phi, pool):
        self.spec = spec
        self.states = as_states(states)
        self.backend = default_backend(self.states) if backend is None else backend
        self.coupling = coupling
        self.phi = phi
        self.pool = pool
        X = self.states.X
        self.M, self.n, N1 = X.shape
        self.N = N1 - 1
        self.xi = spec.terminal(X[:, :, self.N])
        if spec.mode == RECURSIVE and self.xi is None:
            raise ConfigurationError("recursive mode needs a terminal payoff xi")
        self.exact = bool(getattr(self.backend, "exact", False))
        self.x_feats = None if self.exact else self.states.adapted()[..., None]
        # targets only need projecting when they involve other particles' paths
        self.project = coupling == EMPIRICAL and self.n > 1
        # u must be own-measurable for the control variate: true for regression
        # iterates of Y and for uncoupled states, not for coupled particle states
        self.control_variate = (not self.exact and self.project and
                                (spec.mode == RECURSIVE or self.states.provenance != "interacting"))

    def features(self, Y):
        if self.exact:
            return None
        if self.spec.mode == RECURSIVE and self.backend.reg.value_feature and Y is not None:
            return np.concatenate([self.x_feats, Y[..., None]], axis=3)
        return self.x_feats

    def obstacle(self, Y):
        u = Y if self.spec.mode == RECURSIVE else self.states.X
        z = coupling_values(u, self.coupling, self.exact, self.phi, self.pool)
        target = np.asarray(self.spec.h(u, z), dtype=np.float64)
        target = np.broadcast_to(target, u.shape)
        if self.project:
            feats = self.features(Y)
            base = 0.0
            if self.control_variate:
                # h(u, E z) is own-measurable: keep it exact, regress only the remainder
                base = np.broadcast_to(np.asarray(self.spec.h(u, z.mean(axis=0, keepdims=True)), dtype=np.float64), u.shape)
            resid = target - base
            L = np.empty_like(target)
            for k in range(self.N + 1):
                fk = None if feats is None else feats[:, :, k, :]
                L[:, :, k], _ = self.backend.condexp(resid[:, :, k], k, fk)
            L += base
        else:
            L = np.array(target)
        xi = L[:, :, self.N] if self.xi is None else self.xi
        return L, xi, u, z

    def sweep(self, Y):
        L, xi, u, z = self.obstacle(Y)
        surf = snell_backward(L, xi, self.backend, self.features(Y))
        return replace(surf, state=u, mean=z)

    def initial(self, init):
        if init not in ("flat", "zero"):
            raise ConfigurationError(f"init must be 'flat' or 'zero', got {init!r}")
        xi = self.xi
        if xi is None:
            # state-driven with h collected at T: the terminal reward does not need Y
            _, xi, _, _ = self.obstacle(None)
        Y = np.zeros((self.M, self.n, self.N + 1))
        if init == "flat":
            Y[:, :, : self.N] = xi.mean(axis=0)[None, :, None]
        Y[:, :, self.N] = xi
        return Y, xi

    def default_tol(self, xi):
        if self.exact:
            return EXACT_TOL
        scale = float(np.sqrt(np.mean(xi**2)))
        return MC_REL_TOL * (scale if scale > 0 else 1.0)


def _iterate(problem: _Problem, tol_fp, max_iters, init):
    Y, xi = problem.initial(init)
    tol = problem.default_tol(xi) if tol_fp is None else float(tol_fp)
    if tol <= 0:
        raise ConfigurationError("tol_fp must be positive")
    dist = []
    surf = None
    for _ in range(max_iters):
        surf = problem.sweep(Y)
        d = float(np.max(np.abs(surf.Y - Y)))
        dist.append(d)
        if not np.isfinite(d) or not np.all(np.isfinite(surf.Y)):
            raise NonConvergenceError("Picard iterate became non-finite",
                                      trace=FixedPointTrace(tuple(dist), False, tol, init))
        Y = surf.Y
        if d < tol:
            return surf, FixedPointTrace(tuple(dist), True, tol, init)
    trace = FixedPointTrace(tuple(dist), False, tol, init)
    raise NonConvergenceError(
        f"Picard iteration did not reach tol={tol:.3g} in {max_iters} iterations "
        f"(last distance {dist[-1]:.3g})", trace=trace)


def picard_interacting(spec: ObstacleSpec, states, backend=None, tol_fp=None,
                       max_iters: int = DEFAULT_MAX_ITERS, init: str = "flat",
                       override: bool = False):
    """Value processes of the n interacting particles.

    ``states`` is a StateEnsemble or a DriverEnsemble (X = W). On lattice
    drivers the exact backend is used; otherwise regression Monte Carlo.
    Returns ``(ValueSurface, FixedPointTrace)``.
    """
    _gate(spec, override)
    problem = _Problem(spec, states, backend, EMPIRICAL, None, True)
    return _iterate(problem, tol_fp, max_iters, init)


def picard_meanfield(spec: ObstacleSpec, states, backend=None, tol_fp=None,
                     max_iters: int = DEFAULT_MAX_ITERS, init: str = "flat",
                     override: bool = False, coupling: str = MEAN, phi=None,
                     pool: bool = True):
    """Mean-field value process, one independent problem per particle column.

    The coupling is the deterministic mean function of the iterate (pooled
    over the i.i.d. columns when ``pool``), or a frozen ``phi``.
    Returns ``(ValueSurface, MeanFunction, FixedPointTrace)``.
    """
    if coupling == EMPIRICAL:
        raise ConfigurationError("use picard_interacting for the empirical coupling")
    _gate(spec, override)
    problem = _Problem(spec, states, backend, coupling, phi, pool)
    surf, trace = _iterate(problem, tol_fp, max_iters, init)
    mean = np.broadcast_to(surf.mean, (1, surf.n if not pool and coupling == MEAN else 1, surf.N + 1))
    values = mean[0, 0] if mean.shape[1] == 1 else mean[0]
    residual = trace.distances[-1]
    return surf, MeanFunction(np.array(values), trace.iterations, residual, trace.distances), trace


@dataclass(frozen=True)
class ContractionSummary:
    max_tail_ratio: float
    geometric: bool
    gamma1: float
    gamma2: float
    iterations: int


def contraction_report(trace: FixedPointTrace, spec: ObstacleSpec = None, tail: int = None) -> ContractionSummary:
    """Largest successive distance ratio over the tail of the trace.

    Trailing zero distances (exact convergence) count as geometric decay.
    """
    d = np.asarray(trace.distances if isinstance(trace, FixedPointTrace) else trace, dtype=float)
    g1 = spec.gamma1 if spec is not None else float("nan")
    g2 = spec.gamma2 if spec is not None else float("nan")
    pos = d[:-1] > 0
    ratios = d[1:][pos] / d[:-1][pos]
    if tail is not None:
        ratios = ratios[-tail:]
    if ratios.size == 0:
        return ContractionSummary(0.0, True, g1, g2, d.size)
    top = float(np.max(ratios))
    return ContractionSummary(top, bool(np.all(ratios < 1.0)), g1, g2, d.size)
