"""Named problem presets and the c-matching fixed point for variance stopping.

The c-matching construction replaces the variance reward (X_tau - E[X_tau])^2
by the standard problem with a fixed centre c, reward (X_tau - c)^2, and
looks for c* equal to the mean of the state stopped by the c*-rule. On a
finite horizon it is only a cross-check and results are labelled
exploratory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import mfsde
from .core import RECURSIVE, STATE, ObstacleSpec, validate_spec
from .errors import ConfigurationError, NonConvergenceError
from .oracle import EPS_OPT, enumerate_rules
from .snell import ExactBackend, RegressionBackend, snell_backward
from .stopping import compute_z_and_hit, stopped_values


@dataclass(frozen=True)
class ProblemPreset:
    name: str
    coeffs: mfsde.CoefficientSpec
    obstacle: ObstacleSpec
    initial: float = 0.0
    doc: str = ""
    delta: float = 0.0  # initial-sequence spread (Markov presets)
    params: dict = field(default_factory=dict)

    def validation(self):
        return validate_spec(self.obstacle)


def _recursive_linear(gamma1=0.2, gamma2=0.1, K=0.0, coeffs="driftless", initial=0.0, **cp):
    spec = ObstacleSpec(lambda y, z: gamma1 * y + gamma2 * z, gamma1, gamma2,
                        lambda x: np.maximum(x - K, 0.0), RECURSIVE, True, "recursive-linear")
    return ProblemPreset("recursive-linear", mfsde.coefficient_preset(coeffs, **cp), spec, initial,
                         "h(y, z) = gamma1 y + gamma2 z, xi = (X_T - K)^+",
                         params=dict(gamma1=gamma1, gamma2=gamma2, K=K))


def _state_call(scale=0.2, K=0.0, coeffs="driftless", initial=0.0, **cp):
    payoff = lambda x: scale * np.maximum(x - K, 0.0)
    spec = ObstacleSpec(lambda x, z: payoff(x) + 0.0 * z, abs(scale), 0.0, payoff, STATE, True, "state-call")
    return ProblemPreset("state-call", mfsde.coefficient_preset(coeffs, **cp), spec, initial,
                         "h(x, z) = scale (x - K)^+, no mean coupling",
                         params=dict(scale=scale, K=K))


def variance_obstacle(x, m):
    return (x - m) ** 2


def _variance(coeffs="driftless", initial=0.0, **cp):
    spec = ObstacleSpec(variance_obstacle, 0.0, 0.0, None, STATE, False, "variance")
    return ProblemPreset("variance", mfsde.coefficient_preset(coeffs, **cp), spec, initial,
                         "h(x, m) = (x - m)^2 collected at tau (or at T)")


def _markov_variance(coeffs="driftless", x=0.0, delta=0.0, **cp):
    spec = ObstacleSpec(variance_obstacle, 0.0, 0.0, None, STATE, False, "markov-variance")
    return ProblemPreset("markov-variance", mfsde.coefficient_preset(coeffs, **cp), spec, x,
                         "variance reward for independent diffusions started at x_1 = x, x_i = x + delta/i",
                         delta=delta, params=dict(delta=delta))


def _bellman_quadratic(gamma2=0.3, shift=-1.0, coeffs="driftless", initial=0.0, **cp):
    spec = ObstacleSpec(lambda y, z: gamma2 * z**2 + 0.0 * y, 0.0, gamma2,
                        lambda x: x + shift, RECURSIVE, False, "bellman-quadratic")
    return ProblemPreset("bellman-quadratic", mfsde.coefficient_preset(coeffs, **cp), spec, initial,
                         "h(y, z) = gamma2 z^2, xi = X_T + shift (mean-coupled, time-inconsistent)",
                         params=dict(gamma2=gamma2, shift=shift))


PRESETS = {
    "recursive-linear": _recursive_linear,
    "state-call": _state_call,
    "variance": _variance,
    "markov-variance": _markov_variance,
    "bellman-quadratic": _bellman_quadratic,
}


def get_preset(name: str, **params) -> ProblemPreset:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for preset {name!r}: {exc}")


def builtin_presets():
    return [factory() for factory in PRESETS.values()]


@dataclass(frozen=True)
class CMatchResult:
    c: float
    tau: np.ndarray = field(repr=False)  # (M,) hitting indices of the c*-problem
    residual: float = 0.0  # |E[X_tau(c*)] - c*|
    se: float = 0.0
    trace: tuple = ()
    exploratory: bool = True

    @property
    def iterations(self):
        return len(self.trace)


def _c_backend(states):
    d = states.drivers
    return ExactBackend(d.lattice) if d.exact else RegressionBackend()


def c_problem(states, c, backend=None):
    """Hitting rule of the standard problem with reward (X - c)^2 and the stopped mean."""
    X = states.X[:, :1, :]
    backend = backend or _c_backend(states)
    L = (X - c) ** 2
    surf = snell_backward(L, L[:, :, -1], backend, None if backend.exact else X)
    tau = compute_z_and_hit(surf).hit_index
    xs = stopped_values(X, tau)[:, 0]
    se = 0.0 if backend.exact else float(xs.std(ddof=1) / np.sqrt(xs.size))
    return tau[:, 0], float(xs.mean()), se


def pedersen_c_match(states, c0=None, tol_c=1e-10, max_iters=200, damping=0.5, backend=None) -> CMatchResult:
    """Damped iteration c <- (1 - damping) c + damping E[X_tau(c)].

    ``states`` holds the diffusion started at x in its first particle
    column (a Markov family or a lattice state ensemble).
    """
    if not 0 < damping <= 1:
        raise ConfigurationError("damping must lie in (0, 1]")
    x = float(states.X[0, 0, 0])
    c = x if c0 is None else float(c0)
    trace = [c]
    for _ in range(max_iters):
        tau, est, se = c_problem(states, c, backend)
        new = (1 - damping) * c + damping * est
        trace.append(new)
        if abs(new - c) < tol_c:
            tau, est, se = c_problem(states, new, backend)
            return CMatchResult(new, tau, abs(est - new), se, tuple(trace))
        c = new
    raise NonConvergenceError(f"c-iteration did not settle within {max_iters} iterations "
                              f"(last step {abs(trace[-1] - trace[-2]):.3g})", trace=tuple(trace))


def multi_start_c_match(states, starts, tol_c=1e-10, max_iters=200, damping=0.5, backend=None, merge_tol=1e-6):
    """All distinct fixed points reached from a grid of starting centres."""
    found = []
    for c0 in starts:
        try:
            res = pedersen_c_match(states, c0, tol_c, max_iters, damping, backend)
        except NonConvergenceError:
            continue
        if not any(abs(res.c - f.c) < merge_tol for f in found):
            found.append(res)
    return sorted(found, key=lambda r: r.c)


def enumerated_c_gap(model, states, c):
    """E[X_tau] - c for the earliest optimal rule of the c-problem, by rule enumeration."""
    X = states.X[:, 0, :]
    leaf = model.own_leaf()[:, 0]
    best = -np.inf
    rules = enumerate_rules(model.N)
    vals = []
    for rule in rules:
        tau = rule.on_paths(leaf)
        xs = X[np.arange(X.shape[0]), tau]
        vals.append((float(np.mean((xs - c) ** 2)), sum(rule.tau_leaf), float(xs.mean())))
    best = max(v[0] for v in vals)
    # earliest optimal rule: the hitting time is the smallest optimal stopping time
    cands = [v for v in vals if v[0] >= best - EPS_OPT]
    mean = min(cands, key=lambda v: v[1])[2]
    return mean - c


def bisect_c_star(model, states, lo, hi, tol=1e-12, max_iters=200):
    """Root of c -> E[X_tau(c)] - c by bisection, with the rule found by enumeration."""
    glo, ghi = enumerated_c_gap(model, states, lo), enumerated_c_gap(model, states, hi)
    if glo * ghi > 0:
        raise ConfigurationError(f"no sign change of the matching gap on [{lo}, {hi}]")
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        g = enumerated_c_gap(model, states, mid)
        if g == 0:
            return mid
        if (g > 0) == (glo > 0):
            lo, glo = mid, g
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)
