"""Backward induction for discrete-time Snell envelopes.

Two conditional-expectation backends share one interface:

* ``RegressionBackend`` regresses across scenarios on basis functions of the
  particle's own features (regression Monte Carlo, fitted values used both
  for the max and for the stored continuation);
* ``ExactBackend`` averages exactly over the branches of a joint lattice.

Surfaces are ``(M, n, N+1)`` arrays: scenario, particle, grid node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConditioningError, ConfigurationError, ShapeMismatchError

RIDGE_FACTOR = 1e-8


@dataclass(frozen=True)
class RegressionSpec:
    degree: int = 3
    ridge: Optional[float] = None  # None: RIDGE_FACTOR * trace(G) / p
    min_scenarios: int = 50
    value_feature: bool = False  # add the current Picard iterate (linear) in recursive mode

    def __post_init__(self):
        if self.degree < 0:
            raise ConfigurationError(f"basis degree must be >= 0, got {self.degree}")
        if self.ridge is not None and self.ridge < 0:
            raise ConfigurationError("ridge must be nonnegative")


@dataclass(frozen=True)
class ValueSurface:
    """Y, obstacle L and continuation C on the grid.

    ``L[..., N]`` holds the terminal reward and ``C[..., N]`` equals it.
    ``fit_scale[i, k]`` is the regression noise scale of the continuation fit
    at step k (zero on the exact backend).
    """

    Y: np.ndarray
    L: np.ndarray
    C: np.ndarray
    backend: str
    fit_scale: np.ndarray = field(default=None, repr=False)
    # argument of h (Y in recursive mode, X in state-driven mode) and the
    # coupling values it was paired with, broadcastable against it
    state: Optional[np.ndarray] = field(default=None, repr=False)
    mean: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def M(self):
        return self.Y.shape[0]

    @property
    def n(self):
        return self.Y.shape[1]

    @property
    def N(self):
        return self.Y.shape[2] - 1

    @property
    def exact(self):
        return self.backend == "exact"

    def root(self):
        """Time-0 value per particle (mean over scenarios; constant on exact/deterministic roots)."""
        return self.Y[:, :, 0].mean(axis=0)


def _design(feats, degree):
    """Standardized polynomial design, batched. feats: (B, M, q) -> A: (B, M, p)."""
    B, M, q = feats.shape
    mu = feats.mean(axis=1, keepdims=True)
    sd = feats.std(axis=1, keepdims=True)
    const = sd <= 1e-12 * (1.0 + np.abs(mu))
    z = (feats - mu) * np.where(const, 0.0, 1.0 / np.where(const, 1.0, sd))
    degs = [degree] + [min(degree, 1)] * (q - 1)
    A = np.empty((B, M, 1 + sum(degs)))
    A[:, :, 0] = 1.0
    dropped = np.zeros((B, A.shape[2]), dtype=bool)
    c = 1
    for j, deg in enumerate(degs):
        zj = z[:, :, j]
        A[:, :, c] = zj
        dropped[:, c] = const[:, 0, j]
        for d in range(2, deg + 1):
            np.multiply(A[:, :, c + d - 2], zj, out=A[:, :, c + d - 1])
            dropped[:, c + d - 1] = const[:, 0, j]
        c += deg
    return A, dropped


def fit_batched(samples, feats, reg: RegressionSpec):
    """Least-squares projection of ``samples`` (B, M) on basis(feats (B, M, q)).

    Returns fitted values (B, M) and the fit noise scale (B,), the residual
    standard deviation times sqrt(p / M).
    """
    samples = np.asarray(samples, dtype=np.float64)
    feats = np.asarray(feats, dtype=np.float64)
    B, M = samples.shape
    if M < reg.min_scenarios:
        raise ConfigurationError(f"regression needs at least {reg.min_scenarios} scenarios, got {M}")
    A, dropped = _design(feats, reg.degree)
    p = A.shape[2]
    At = A.transpose(0, 2, 1)
    G = (At @ A) / M
    rhs = (At @ samples[:, :, None])[:, :, 0] / M
    # dropped (constant) columns are zero; give them a unit diagonal so they fit to 0
    di = np.arange(p)
    G[:, di, di] += dropped
    if reg.ridge is None:
        lam = RIDGE_FACTOR * np.trace(G, axis1=1, axis2=2) / p
        G[:, di, di] += lam[:, None]
    elif reg.ridge > 0:
        G[:, di, di] += reg.ridge
    else:
        s = np.linalg.svd(G, compute_uv=False)
        if np.any(s[:, -1] <= 1e-12 * s[:, 0]):
            raise ConditioningError("rank-deficient regression design with ridge=0; use ridge > 0")
    beta = np.linalg.solve(G, rhs[:, :, None])[:, :, 0]
    fitted = (A @ beta[:, :, None])[:, :, 0]
    resid = samples - fitted
    p_eff = p - dropped.sum(axis=1)
    scale = np.sqrt(np.mean(resid**2, axis=1)) * np.sqrt(p_eff / M)
    return fitted, scale


def estimate_condexp(samples, features, reg: RegressionSpec = RegressionSpec()):
    """Fitted E[samples | features] for one particle: samples (M,), features (M,) or (M, q)."""
    samples = np.asarray(samples, dtype=np.float64)
    f = np.asarray(features, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    if f.shape[0] != samples.shape[0]:
        raise ShapeMismatchError(f"features have {f.shape[0]} rows, samples {samples.shape[0]}")
    fitted, _ = fit_batched(samples[None, :], f[None, :, :], reg)
    return fitted[0]


class RegressionBackend:
    name = "regression"
    exact = False

    def __init__(self, reg: RegressionSpec = RegressionSpec()):
        self.reg = reg

    def condexp(self, values, k, feats):
        """values (M, n), feats (M, n, q) measurable at step k -> (fitted (M, n), scale (n,))."""
        if feats is None:
            raise ConfigurationError("regression backend needs features")
        v = np.ascontiguousarray(np.swapaxes(values, 0, 1))
        f = np.ascontiguousarray(np.swapaxes(feats, 0, 1))
        fitted, scale = fit_batched(v, f, self.reg)
        return fitted.T, scale

    def check(self, M):
        pass


class ExactBackend:
    name = "exact"
    exact = True

    def __init__(self, lattice):
        self.lattice = lattice

    def condexp(self, values, k, feats=None):
        return self.lattice.project_all(values, k), np.zeros(values.shape[1])

    def check(self, M):
        if M != self.lattice.n_paths:
            raise ShapeMismatchError(
                f"exact backend expects {self.lattice.n_paths} joint paths, got {M}")


def snell_backward(L, xi, backend, features=None, terminal_column=True) -> ValueSurface:
    """Y_N = xi, Y_k = max(L_k, E[Y_{k+1} | F^i_k]).

    L: (M, n, N+1) obstacle whose last column is replaced by xi, or (M, n, N)
    with ``terminal_column=False``. xi: (M, n). features: (M, n, N+1[, q]),
    required by the regression backend.
    """
    L = np.asarray(L, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if L.ndim != 3 or xi.shape != L.shape[:2]:
        raise ShapeMismatchError(f"obstacle {L.shape} and terminal {xi.shape} do not match")
    M, n = xi.shape
    N = L.shape[2] - 1 if terminal_column else L.shape[2]
    if N < 1:
        raise ShapeMismatchError("obstacle needs at least one decision time")
    backend.check(M)
    if features is not None:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 3:
            features = features[..., None]
        if features.shape[:3] != (M, n, N + 1):
            raise ShapeMismatchError(f"features {features.shape} do not match obstacle grid {(M, n, N + 1)}")
    Y = np.empty((M, n, N + 1))
    C = np.empty((M, n, N + 1))
    Lf = np.empty((M, n, N + 1))
    Lf[:, :, :N] = L[:, :, :N]
    Lf[:, :, N] = xi
    Y[:, :, N] = xi
    C[:, :, N] = xi
    scale = np.zeros((n, N + 1))
    for k in range(N - 1, -1, -1):
        fk = None if features is None else features[:, :, k, :]
        C[:, :, k], scale[:, k] = backend.condexp(Y[:, :, k + 1], k, fk)
        Y[:, :, k] = np.maximum(Lf[:, :, k], C[:, :, k])
    return ValueSurface(Y, Lf, C, backend.name, scale)


def exact_lattice_value(model, L, xi) -> ValueSurface:
    """Exact Snell envelope on every joint node of a lattice model."""
    L = np.asarray(L, dtype=np.float64)
    if L.shape[0] != model.n_paths:
        raise ShapeMismatchError(f"lattice has {model.n_paths} joint paths, obstacle has {L.shape[0]}")
    if L.shape[2] not in (model.N, model.N + 1):
        raise ShapeMismatchError(f"obstacle needs {model.N} or {model.N + 1} time columns, got {L.shape[2]}")
    return snell_backward(L, xi, ExactBackend(model), terminal_column=L.shape[2] == model.N + 1)
