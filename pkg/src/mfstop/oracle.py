"""Brute-force verification on small lattices.

A stopping rule for one particle is stored canonically as ``tau_leaf``: the
stopping index for each of its 2^N own leaves. Rules are generated from the
decision tree (stop here, or continue into both subtrees), so every tuple is
adapted by construction and every adapted rule appears exactly once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import RECURSIVE, ObstacleSpec
from .errors import ConfigurationError, InstanceTooLargeError
from .recursive import as_states
from .stopping import EMPIRICAL, FROZEN, MEAN, evaluate_rule

RULE_DEPTH_CAP = 3
EPS_OPT = 1e-12


@dataclass(frozen=True)
class StoppingRule:
    tau_leaf: tuple

    @property
    def depth(self):
        return int(np.log2(len(self.tau_leaf)))

    @property
    def ident(self):
        return "".join(str(t) for t in self.tau_leaf)

    def on_paths(self, leaf):
        """Stopping indices along paths with the given own-leaf indices."""
        return np.asarray(self.tau_leaf)[leaf]


@lru_cache(maxsize=None)
def _subtree_rules(d):
    if d == 0:
        return ((0,),)
    stop = (0,) * 2**d
    sub = _subtree_rules(d - 1)
    # first step is the most significant leaf bit: down-subtree leaves come first
    return (stop,) + tuple(tuple(1 + t for t in a + b) for a in sub for b in sub)


def rule_count(d: int) -> int:
    return 1 if d == 0 else 1 + rule_count(d - 1) ** 2


def enumerate_rules(N: int, cap: int = RULE_DEPTH_CAP):
    if N < 1:
        raise ConfigurationError("rule depth must be at least 1")
    if N > cap:
        raise InstanceTooLargeError(f"enumerating rules of depth {N} exceeds the depth cap {cap} "
                                    f"({rule_count(N)} rules)", required_cap=N)
    return [StoppingRule(t) for t in _subtree_rules(N)]


def rule_from_indices(tau, leaf, N):
    """Canonical rule from per-path indices, checking it only depends on the own path."""
    tau_leaf = np.full(2**N, -1)
    tau_leaf[leaf] = tau
    if np.any(tau_leaf < 0) or np.any(tau_leaf[leaf] != tau):
        raise ConfigurationError("indices are not a function of the particle's own path")
    # adaptedness: a stop at k must be shared by every leaf with the same k-prefix
    for ell in range(2**N):
        k = tau_leaf[ell]
        block = ell >> (N - k)
        sibs = tau_leaf[block << (N - k) : (block + 1) << (N - k)]
        if np.any(sibs != k):
            raise ConfigurationError("indices do not form a stopping rule (decision uses future information)")
    return StoppingRule(tuple(int(t) for t in tau_leaf))


def _default_coupling(model):
    return EMPIRICAL if model.n > 1 else MEAN


def _reward_inputs(model, spec, values, states):
    states = as_states(model.drivers() if states is None else states)
    if spec.mode == RECURSIVE:
        if values is None:
            raise ConfigurationError("recursive mode needs the converged value surface")
        u = values.Y
    else:
        u = states.X
    return states, u


def rule_value(rule, model, spec, u, X_T, particle=0, coupling=None, phi=None):
    """Exact expected reward of ``rule`` applied to one particle."""
    coupling = coupling or _default_coupling(model)
    leaf = model.own_leaf()[:, particle]
    tau = rule.on_paths(leaf)
    if coupling == EMPIRICAL:
        full = np.full((model.n_paths, model.n), model.N)
        full[:, particle] = tau
        est = evaluate_rule(full, u, spec, coupling=EMPIRICAL, exact=True, X_T=X_T)
        return float(est.value[particle]), est.rewards[:, particle]
    col = slice(particle, particle + 1)
    est = evaluate_rule(tau[:, None], u[:, col], spec, coupling=coupling, phi=phi, exact=True,
                        X_T=X_T[:, col])
    return float(est.value[0]), est.rewards[:, 0]


@dataclass(frozen=True)
class OracleResult:
    best: float
    optimal: tuple  # identifiers of eps-optimal rules
    values: dict = field(repr=False)
    particle: int = 0
    coupling: str = EMPIRICAL

    def to_json(self) -> str:
        return json.dumps({
            "best_value": repr(self.best),
            "optimal_rules": list(self.optimal),
            "particle": self.particle,
            "coupling": self.coupling,
            "rule_values": {k: repr(v) for k, v in self.values.items()},
        }, indent=2, sort_keys=True)


def brute_force_optimal(model, spec: ObstacleSpec, values=None, states=None, particle: int = 0,
                        coupling=None, phi=None, eps: float = EPS_OPT) -> OracleResult:
    """Maximize the exact reward over every adapted rule of one particle.

    In recursive mode the converged Y is frozen and rules are scored through
    the reward functional built on it.
    """
    states, u = _reward_inputs(model, spec, values, states)
    coupling = coupling or _default_coupling(model)
    X_T = states.X[:, :, -1]
    vals = {}
    for rule in enumerate_rules(model.N):
        vals[rule.ident] = rule_value(rule, model, spec, u, X_T, particle, coupling, phi)[0]
    best = max(vals.values())
    opt = tuple(k for k, v in vals.items() if v >= best - eps)
    return OracleResult(best, opt, vals, particle, coupling)


@dataclass(frozen=True)
class ProbeResult:
    violation: float
    lhs: np.ndarray
    rhs: np.ndarray
    best_rule: str


def bellman_probe(model, spec: ObstacleSpec, values=None, states=None, coupling=MEAN, phi=None) -> ProbeResult:
    """Both sides of the Bellman equation at sigma = tau = t_1 on a one-particle lattice.

    Candidates are the rules that continue at the root. The right side is the
    node-wise best conditional reward given F_1; the left side is the
    conditional reward of the rule that is best overall. With a rule-level
    mean in the reward the two can differ.
    """
    if model.n != 1:
        raise ConfigurationError("the Bellman probe works on one-particle lattices")
    if coupling not in (MEAN, FROZEN):
        raise ConfigurationError("the Bellman probe needs a mean-field or frozen coupling")
    states, u = _reward_inputs(model, spec, values, states)
    X_T = states.X[:, :, -1]
    node = model.own_leaf()[:, 0] >> (model.N - 1)
    cond, total, ids = [], [], []
    for rule in enumerate_rules(model.N):
        if rule.tau_leaf[0] == 0 and all(t == 0 for t in rule.tau_leaf):
            continue
        v, r = rule_value(rule, model, spec, u, X_T, 0, coupling, phi)
        cond.append(np.array([r[node == b].mean() for b in (0, 1)]))
        total.append(v)
        ids.append(rule.ident)
    cond = np.array(cond)
    rhs = cond.max(axis=0)
    j = int(np.argmax(total))
    lhs = cond[j]
    return ProbeResult(float(np.max(np.abs(rhs - lhs))), lhs, rhs, ids[j])
