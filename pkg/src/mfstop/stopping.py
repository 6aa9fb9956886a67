"""Gap processes, hitting times and evaluation of stopping rules.

A rule is an integer array ``tau[m, i]`` of grid indices; index N means the
particle runs to the horizon and collects the terminal payoff.

The reward collected at tau < N is h(u_tau, z) where u is the argument of h
(Y in recursive mode, X in state-driven mode) and z depends on the coupling:

* ``"empirical"``: the scenario's particle average of u at particle i's tau;
* ``"stopped"``: the particle average of each particle's own stopped value,
  (1/n) sum_j u^j_{tau^j};
* ``"mean"``: E[u_tau], one scalar for the rule as a whole. This is what makes
  the mean-field problem time-inconsistent: the reward of a path depends on
  the rule's behaviour on every other path;
* ``"frozen"``: a deterministic function phi evaluated at tau.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .core import ObstacleSpec
from .errors import ConfigurationError, ShapeMismatchError
from .snell import ValueSurface

EXACT_TOL_HIT = 1e-10
MIN_TOL_HIT = 1e-6

EMPIRICAL = "empirical"
STOPPED = "stopped"
MEAN = "mean"
FROZEN = "frozen"


@dataclass(frozen=True)
class StoppingReport:
    Z: np.ndarray  # (M, n, N) gap Y - L before the horizon
    hit_index: np.ndarray  # (M, n)
    tol_hit: np.ndarray  # (n, N)
    grid_nodes: np.ndarray = field(default=None, repr=False)

    @property
    def tau(self):
        """Hitting times in time units (requires grid nodes)."""
        if self.grid_nodes is None:
            raise ConfigurationError("report carries no grid nodes")
        return self.grid_nodes[self.hit_index]


def default_tol_hit(values: ValueSurface) -> np.ndarray:
    n, N = values.n, values.N
    if values.exact or values.fit_scale is None:
        return np.full((n, N), EXACT_TOL_HIT)
    return np.maximum(MIN_TOL_HIT, 2.0 * np.asarray(values.fit_scale)[:, :N])


def first_hit(Z, tol):
    """First index k with Z[..., k] <= tol[..., k], else N (= Z.shape[-1])."""
    hit = Z <= tol
    any_hit = hit.any(axis=-1)
    return np.where(any_hit, np.argmax(hit, axis=-1), Z.shape[-1])


def compute_z_and_hit(values: ValueSurface, tol_hit=None, nodes=None) -> StoppingReport:
    if values.L is None:
        raise ConfigurationError("value surface has no obstacle")
    N = values.N
    Z = values.Y[:, :, :N] - values.L[:, :, :N]
    if tol_hit is None:
        tol = default_tol_hit(values)
    else:
        tol = np.broadcast_to(np.asarray(tol_hit, dtype=np.float64), (values.n, N))
    return StoppingReport(Z, first_hit(Z, tol[None, :, :]), np.array(tol), nodes)


@dataclass(frozen=True)
class RewardEstimate:
    value: np.ndarray  # (n,) expected reward per particle
    se: np.ndarray  # (n,) standard error (0 on exact lattices)
    rewards: np.ndarray = field(repr=False)  # (M, n) per-scenario rewards
    stopped: np.ndarray = field(repr=False)  # (M, n) stopped u
    coupling_value: np.ndarray = field(repr=False)


def stopped_values(u, tau):
    u = np.asarray(u)
    return np.take_along_axis(u, tau[:, :, None], axis=2)[:, :, 0]


def evaluate_rule(tau, u, spec: ObstacleSpec, xi=None, coupling=EMPIRICAL, phi=None,
                  exact=False, pool=True, X_T=None) -> RewardEstimate:
    """Expected reward E[h(u_tau, z) 1{tau<N} + xi 1{tau=N}] of a stopping rule.

    ``u``: (M, n, N+1) argument of h. ``xi``: terminal values (M, n); when None
    it is taken from ``spec.terminal(X_T)``, and if ``spec`` has no terminal
    payoff h itself is collected at the horizon.
    """
    u = np.asarray(u, dtype=np.float64)
    tau = np.asarray(tau)
    M, n, N1 = u.shape
    N = N1 - 1
    tau = np.broadcast_to(tau, (M, n)).astype(np.int64)
    if tau.min() < 0 or tau.max() > N:
        raise ConfigurationError(f"stopping indices must lie in [0, {N}]")
    us = stopped_values(u, tau)
    if coupling == EMPIRICAL:
        z = np.take_along_axis(u.mean(axis=1, keepdims=True).repeat(n, axis=1), tau[:, :, None], axis=2)[:, :, 0]
        if exact and n > 2:
            srt = np.sort(u, axis=1).sum(axis=1) / n
            z = np.take_along_axis(srt[:, None, :].repeat(n, axis=1), tau[:, :, None], axis=2)[:, :, 0]
    elif coupling == STOPPED:
        z = np.broadcast_to(us.mean(axis=1, keepdims=True), (M, n))
    elif coupling == MEAN:
        z = np.broadcast_to(us.mean() if pool else us.mean(axis=0, keepdims=True), (M, n))
    elif coupling == FROZEN:
        if phi is None:
            raise ConfigurationError("frozen coupling needs phi")
        z = np.asarray(phi, dtype=np.float64)[tau]
    else:
        raise ConfigurationError(f"unknown coupling {coupling!r}")
    if xi is None and X_T is not None:
        xi = spec.terminal(X_T)
    elif xi is None and spec.xi is not None and not callable(spec.xi):
        xi = spec.terminal(np.zeros((M, n)))
    if xi is None:
        if spec.xi is not None and X_T is None:
            raise ConfigurationError("terminal payoff needs xi or terminal states")
        xi = np.asarray(spec.h(us, z), dtype=np.float64)
    xi = np.broadcast_to(np.asarray(xi, dtype=np.float64), (M, n))
    r = np.where(tau < N, np.broadcast_to(spec.h(us, z), (M, n)), xi)
    value = r.mean(axis=0)
    se = np.zeros(n) if exact else r.std(axis=0, ddof=1) / np.sqrt(M) if M > 1 else np.full(n, np.nan)
    return RewardEstimate(value, se, r, us, np.asarray(z))


def report_csv(report: StoppingReport, u, rewards, X=None) -> str:
    """One row per scenario x particle: hit index, stopped state, stopped value, reward."""
    M, n = report.hit_index.shape
    us = stopped_values(u, report.hit_index)
    xs = stopped_values(X, report.hit_index) if X is not None else us
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "particle", "hit_index", "stopped_state", "stopped_value", "reward"])
    for m in range(M):
        for i in range(n):
            w.writerow([m, i, int(report.hit_index[m, i]), repr(float(xs[m, i])),
                        repr(float(us[m, i])), repr(float(rewards[m, i]))])
    return buf.getvalue()


def check_shapes(values: ValueSurface, tau):
    if tau.shape != values.Y.shape[:2]:
        raise ShapeMismatchError(f"rule shape {tau.shape} does not match {values.Y.shape[:2]}")
