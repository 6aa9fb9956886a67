"""Convergence diagnostics: coupled S^2 distances, hitting-time deviations,
exchangeability, law-of-large-numbers gaps and trend checks.

Every comparison between an n-particle system and its mean-field reference
must use the same driver streams; standard errors of sup-statistics come from
a scenario-level multinomial bootstrap keyed by the master seed.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .errors import ConfigurationError, ShapeMismatchError
from .snell import RegressionBackend, ValueSurface

N_BOOT = 200


def _surface(a):
    return a.Y if isinstance(a, ValueSurface) else np.asarray(a, dtype=np.float64)


def bootstrap_se(stat_rows, fn, seed=0, n_boot=N_BOOT):
    """SE of ``fn(weighted column means)`` under scenario resampling.

    ``stat_rows``: (M, c) per-scenario statistics; ``fn`` maps a (B, c) array
    of resampled means to (B,) values.
    """
    stat_rows = np.asarray(stat_rows, dtype=np.float64)
    M = stat_rows.shape[0]
    counts = rng.bootstrap_counts(seed, n_boot, M)
    means = counts @ stat_rows / M
    return float(np.std(fn(means), ddof=1))


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    per_particle: Optional[np.ndarray] = field(default=None, repr=False)


def s2_distance(A, B, drivers_a=None, drivers_b=None, seed=0, n_boot=N_BOOT) -> Estimate:
    """sup_i E[sup_k |A - B|^2] on coupled surfaces, bootstrap SE."""
    if drivers_a is not None and drivers_b is not None and not drivers_a.same_streams(drivers_b):
        raise ConfigurationError("surfaces were not simulated on the same driver streams")
    a, b = _surface(A), _surface(B)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"surface shapes differ: {a.shape} vs {b.shape}")
    d = np.max((a - b) ** 2, axis=2)
    per = d.mean(axis=0)
    se = bootstrap_se(d, lambda m: m.max(axis=1), seed, n_boot)
    return Estimate(float(per.max()), se, per)


def tau_deviation_prob(taus_n, taus_ref, eps, dt) -> Estimate:
    """Fraction of scenarios with |t_hit,n - t_hit,ref| > eps (binomial SE).

    With several particle columns the worst column is reported.
    """
    if eps <= 0 or eps < dt:
        raise ConfigurationError(f"eps={eps} is not resolvable on a grid with spacing {dt}")
    tn, tr = np.asarray(taus_n), np.asarray(taus_ref)
    if tn.shape != tr.shape:
        raise ShapeMismatchError(f"hitting-index arrays differ: {tn.shape} vs {tr.shape}")
    if tn.ndim == 1:
        tn, tr = tn[:, None], tr[:, None]
    dev = np.abs(tn - tr) * dt > eps
    p = dev.mean(axis=0)
    j = int(np.argmax(p))
    M = dev.shape[0]
    return Estimate(float(p[j]), float(np.sqrt(p[j] * (1 - p[j]) / M)), p)


@dataclass(frozen=True)
class ExchangeabilityResult:
    stat: float
    flagged: bool
    means: np.ndarray
    variances: np.ndarray


def _studentized(diff, se):
    if se > 0:
        return abs(diff) / se
    return 0.0 if diff == 0 else np.inf


def exchangeability_stat(samples, initials=None, exact=False) -> ExchangeabilityResult:
    """Max pairwise studentized gap of per-particle means and variances.

    ``samples``: (M, n) per-scenario quantities, one column per particle
    (for example realized rewards of each particle's hitting rule). On exact
    lattices the raw gaps are compared (SE zero). ``flagged`` is raised when
    the initial conditions are not all equal.
    """
    s = np.asarray(samples, dtype=np.float64)
    if exact:
        # column sums in sorted order: permuted columns give bit-identical moments
        s = np.sort(s, axis=0)
    M, n = s.shape
    mu = s.mean(axis=0)
    var = s.var(axis=0)
    if exact:
        se_mu = np.zeros(n)
        se_var = np.zeros(n)
    else:
        se_mu = np.sqrt(s.var(axis=0, ddof=1) / M)
        m4 = np.mean((s - mu) ** 4, axis=0)
        se_var = np.sqrt(np.maximum(m4 - var**2, 0.0) / M)
    stat = 0.0
    for i, j in itertools.combinations(range(n), 2):
        stat = max(stat,
                   _studentized(mu[i] - mu[j], np.hypot(se_mu[i], se_mu[j])),
                   _studentized(var[i] - var[j], np.hypot(se_var[i], se_var[j])))
    flagged = initials is not None and not np.all(np.asarray(initials) == np.asarray(initials).flat[0])
    return ExchangeabilityResult(float(stat), bool(flagged), mu, var)


def label_swap_gap(model, Y, i=0, j=1) -> float:
    """Max |Y - swap_ij(Y)| over all joint nodes of a lattice surface."""
    Y = _surface(Y)
    return float(np.max(np.abs(model.swap_labels(Y, i, j) - Y)))


@dataclass(frozen=True)
class LLNResult:
    ns: np.ndarray
    gaps: np.ndarray
    ses: np.ndarray
    slope: Optional[float]


def lln_gap(paths, reference, ns) -> LLNResult:
    """E[sup_k |(1/n) sum_{j<n} X_j - reference|^2] on a grid of n, with log-log slope.

    ``paths``: (M, n_max, K) independent particles; the first n columns are
    used for each n.
    """
    X = paths.X if hasattr(paths, "X") else np.asarray(paths, dtype=np.float64)
    if X.ndim == 2:
        X = X[:, :, None]
    ref = np.broadcast_to(np.asarray(reference, dtype=np.float64), (X.shape[2],))
    ns = np.asarray(ns, dtype=int)
    if ns.max() > X.shape[1]:
        raise ConfigurationError(f"n={ns.max()} exceeds the {X.shape[1]} available particles")
    csum = np.cumsum(X, axis=1)
    gaps, ses = [], []
    for n in ns:
        d = np.max((csum[:, n - 1, :] / n - ref) ** 2, axis=1)
        gaps.append(d.mean())
        ses.append(d.std(ddof=1) / np.sqrt(d.size))
    gaps, ses = np.array(gaps), np.array(ses)
    slope = None
    if ns.size >= 3 and np.all(gaps > 0):
        slope = float(np.polyfit(np.log(ns), np.log(gaps), 1)[0])
    return LLNResult(ns, gaps, ses, slope)


def variance_obstacle_gap(states, ref_mean, reg=None, particle=0) -> Estimate:
    """E[sup_k |E[(X^1 - Xbar)^2 | F^1_k] - (X^1 - m)^2|] with the regression backend."""
    X = states.X
    feats = states.adapted()
    backend = RegressionBackend() if reg is None else RegressionBackend(reg)
    M, n, N1 = X.shape
    target = (X[:, particle, :] - X.mean(axis=1)) ** 2
    limit = (X[:, particle, :] - np.asarray(ref_mean)) ** 2
    proj = np.empty_like(target)
    for k in range(N1):
        fit, _ = backend.condexp(target[:, k : k + 1], k, feats[:, particle : particle + 1, k, None])
        proj[:, k] = fit[:, 0]
    d = np.max(np.abs(proj - limit), axis=1)
    return Estimate(float(d.mean()), float(d.std(ddof=1) / np.sqrt(M)))


def reward_gap(rewards_n, rewards_ref, seed=0, n_boot=N_BOOT) -> Estimate:
    """|E r_n - E r_ref| on paired scenarios with a paired bootstrap SE."""
    rn, rr = np.ravel(rewards_n), np.ravel(rewards_ref)
    if rn.shape != rr.shape:
        raise ShapeMismatchError("reward arrays must be paired scenario by scenario")
    pair = np.stack([rn, rr], axis=1)
    se = bootstrap_se(pair, lambda m: m[:, 0] - m[:, 1], seed, n_boot)
    return Estimate(float(abs(rn.mean() - rr.mean())), se)


def trend_holds(values, ses) -> bool:
    """Each consecutive decrease is at least -2 SE (non-increasing up to noise).

    The bound is inclusive so that a run of exact zeros (zero binomial SE)
    counts as non-increasing.
    """
    v, s = np.asarray(values), np.asarray(ses)
    return bool(np.all(v[:-1] - v[1:] >= -2.0 * np.hypot(s[:-1], s[1:])))


def strictly_decreasing(values, ses, k=2.0) -> bool:
    """Each consecutive drop exceeds k standard errors of the difference."""
    v, s = np.asarray(values), np.asarray(ses)
    return bool(np.all(v[:-1] - v[1:] > k * np.hypot(s[:-1], s[1:])))


COLUMNS = ("n", "s2_estimate", "s2_se", "tau_deviation_prob", "tau_deviation_se", "reward_gap", "reward_gap_se")


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, n, s2: Estimate, tau: Estimate, reward: Estimate):
        row = dict(n=int(n), s2_estimate=s2.value, s2_se=s2.se, tau_deviation_prob=tau.value,
                   tau_deviation_se=tau.se, reward_gap=reward.value, reward_gap_se=reward.se)
        bad = [k for k, v in row.items() if not (np.isfinite(v) and v >= 0)]
        if bad:
            raise ConfigurationError(f"table entries must be finite and nonnegative: {bad}")
        self.rows.append(row)

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([r["n"]] + [repr(float(r[c])) for c in COLUMNS[1:]])
        return buf.getvalue()

    def sidecar(self) -> str:
        return json.dumps({"columns": list(COLUMNS), **self.metadata}, indent=2, sort_keys=True)
