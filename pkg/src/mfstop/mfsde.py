"""Euler-Maruyama simulation of interacting, mean-field and Markov diffusions.

Coefficients are vectorized callables ``b(t, x, z)`` and ``sigma(t, x, z)``
where ``z`` is the scalar mean the particle sees: the empirical mean of its
scenario (interacting system), the deterministic mean function (McKean-Vlasov
limit), or NaN for Markov diffusions, which must not depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rng
from .core import DriverEnsemble, TimeGrid
from .errors import ConfigurationError, NonConvergenceError, SimulationDivergedError

DIVERGENCE_BOUND = 1e12

INTERACTING = "interacting"
MCKEAN_VLASOV = "mckean-vlasov"
MARKOV = "markov"


@dataclass(frozen=True)
class CoefficientSpec:
    drift: Callable
    diffusion: Callable
    name: str = "custom"
    lipschitz: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.linspace(0.0, 1.0, 7)[:, None]
        x = np.linspace(-3.0, 3.0, 11)[None, :]
        for label, f in (("drift", self.drift), ("diffusion", self.diffusion)):
            vals = np.asarray(f(t, x, 0.5 * x), dtype=np.float64)
            if not np.all(np.isfinite(vals)):
                raise ConfigurationError(f"{label} of {self.name!r} is not finite on test points")
        if self.lipschitz is not None:
            _spot_check(self)


def _spot_check(c):
    u = [rng.uniforms(0xC0EF, np.arange(500), j, 0, stream=7)[0] for j in range(5)]
    t, x1, x2, z1, z2 = u[0], 8 * (u[1] - 0.5), 8 * (u[2] - 0.5), 8 * (u[3] - 0.5), 8 * (u[4] - 0.5)
    bound = c.lipschitz * (np.abs(x1 - x2) + np.abs(z1 - z2))
    for f in (c.drift, c.diffusion):
        gap = np.abs(np.asarray(f(t, x1, z1)) - np.asarray(f(t, x2, z2)))
        if np.any(gap > bound + 1e-9 * (1 + gap)):
            raise ConfigurationError(f"coefficients {c.name!r} violate their declared Lipschitz constant {c.lipschitz}")


def _zero(t, x, z):
    return np.zeros(np.broadcast(t, x, z).shape)


def _one(t, x, z):
    return np.ones(np.broadcast(t, x, z).shape)


def driftless(sigma=1.0):
    return CoefficientSpec(
        _zero, lambda t, x, z: sigma * _one(t, x, z) if sigma != 1.0 else _one(t, x, z),
        "driftless", abs(sigma) if sigma else 0.0, {"sigma": sigma})


def ou(theta=1.0, sigma=1.0):
    return CoefficientSpec(
        lambda t, x, z: -theta * x * _one(t, x, z),
        lambda t, x, z: sigma * _one(t, x, z),
        "ou", abs(theta), {"theta": theta, "sigma": sigma})


def mf_attract(kappa=1.0, sigma=1.0):
    return CoefficientSpec(
        lambda t, x, z: kappa * (z - x),
        lambda t, x, z: sigma * _one(t, x, z),
        "mf-attract", abs(kappa), {"kappa": kappa, "sigma": sigma})


def gbm(mu=0.05, sigma=0.2):
    return CoefficientSpec(
        lambda t, x, z: mu * x * _one(t, x, z),
        lambda t, x, z: sigma * x * _one(t, x, z),
        "gbm", max(abs(mu), abs(sigma)), {"mu": mu, "sigma": sigma})


COEFFICIENT_PRESETS = {"driftless": driftless, "ou": ou, "mf-attract": mf_attract, "gbm": gbm}


def coefficient_preset(name, **params) -> CoefficientSpec:
    try:
        factory = COEFFICIENT_PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown coefficient preset {name!r}; choose from {sorted(COEFFICIENT_PRESETS)}")
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name!r}: {exc}")


@dataclass(frozen=True)
class StateEnsemble:
    """Paths ``X[m, i, k]`` together with the drivers that produced them."""

    X: np.ndarray
    grid: TimeGrid
    provenance: str
    drivers: DriverEnsemble = field(repr=False)
    initials: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.initials is None:
            object.__setattr__(self, "initials", X[0, :, 0].copy())

    @property
    def M(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[1]

    def adapted(self) -> np.ndarray:
        """A state measurable w.r.t. each particle's own filtration.

        Coupled particles of the interacting system depend on every driver,
        so their own Brownian path (shifted by the start) stands in for them.
        """
        if self.provenance == INTERACTING and self.n > 1:
            return self.initials[None, :, None] + self.drivers.brownian_paths()
        return self.X

    def pooled(self) -> "StateEnsemble":
        X = self.X.reshape(self.M * self.n, 1, -1)
        return StateEnsemble(X, self.grid, self.provenance, self.drivers.pooled(),
                             np.array([self.initials[0]]))

    def particles(self, idx) -> "StateEnsemble":
        idx = np.atleast_1d(idx)
        return StateEnsemble(self.X[:, idx, :], self.grid, self.provenance,
                             self.drivers.particles(idx), self.initials[idx])


@dataclass(frozen=True)
class MeanFunction:
    values: np.ndarray
    iteration_count: int
    residual: float
    trace: tuple = ()


def _guard(Xk, k):
    bad = ~np.isfinite(Xk) | (np.abs(Xk) > DIVERGENCE_BOUND)
    if np.any(bad):
        m, i = (int(v) for v in np.argwhere(bad)[0])
        raise SimulationDivergedError(
            f"simulation diverged at scenario {m}, particle {i}, step {k}", index=(m, i, k))


def empirical_mean(Xk, exact=False):
    """Mean over the particle axis; ``exact`` sums in sorted order (label-invariant)."""
    if exact and Xk.shape[1] > 2:
        return np.sort(Xk, axis=1).sum(axis=1, keepdims=True) / Xk.shape[1]
    return Xk.sum(axis=1, keepdims=True) / Xk.shape[1]


def _initials(drivers, initials):
    x0 = np.broadcast_to(np.asarray(initials, dtype=np.float64), (drivers.n,)).copy()
    if not np.all(np.isfinite(x0)):
        raise ConfigurationError("initial conditions must be finite")
    return x0


def simulate_interacting(drivers: DriverEnsemble, coeffs: CoefficientSpec, initials) -> StateEnsemble:
    """n weakly interacting particles; each sees its own scenario's empirical mean."""
    x0 = _initials(drivers, initials)
    g = drivers.grid
    t = g.nodes
    X = np.empty((drivers.M, drivers.n, g.N + 1))
    X[:, :, 0] = x0
    dW = drivers.increments
    for k in range(g.N):
        Xk = X[:, :, k]
        z = empirical_mean(Xk, drivers.exact)
        X[:, :, k + 1] = Xk + coeffs.drift(t[k], Xk, z) * g.dt + coeffs.diffusion(t[k], Xk, z) * dW[:, :, k]
        _guard(X[:, :, k + 1], k + 1)
    return StateEnsemble(X, g, INTERACTING, drivers, x0)


def _simulate_frozen(drivers, coeffs, x0, mean):
    g = drivers.grid
    t = g.nodes
    X = np.empty((drivers.M, drivers.n, g.N + 1))
    X[:, :, 0] = x0
    dW = drivers.increments
    for k in range(g.N):
        Xk = X[:, :, k]
        X[:, :, k + 1] = Xk + coeffs.drift(t[k], Xk, mean[k]) * g.dt + coeffs.diffusion(t[k], Xk, mean[k]) * dW[:, :, k]
        _guard(X[:, :, k + 1], k + 1)
    return X


def simulate_mckean_vlasov(drivers: DriverEnsemble, coeffs: CoefficientSpec, initial: float,
                           tol: float = 1e-10, max_iters: int = 200):
    """Decoupled mean-field copies, one per particle column, via frozen-mean Picard.

    Given the current mean function, every path is simulated with the mean
    frozen; the new mean is the average over scenarios and particles. Each
    returned path depends on its own driver only.
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    x0 = _initials(drivers, initial)
    mean = np.full(drivers.grid.N + 1, float(np.mean(x0)))
    trace = []
    for it in range(1, max_iters + 1):
        X = _simulate_frozen(drivers, coeffs, x0, mean)
        new = X.mean(axis=(0, 1))
        residual = float(np.max(np.abs(new - mean)))
        trace.append(residual)
        mean = new
        if residual < tol:
            states = StateEnsemble(X, drivers.grid, MCKEAN_VLASOV, drivers, x0)
            return states, MeanFunction(mean, it, residual, tuple(trace))
    raise NonConvergenceError(
        f"mean-function iteration did not reach tol={tol} in {max_iters} iterations "
        f"(last residual {trace[-1]:.3g})", trace=tuple(trace))


def initial_sequence(n: int, x: float, delta: float = 0.0, rule=None, bound: float = 1e6) -> np.ndarray:
    """Starting points x_1 = x, x_i = x + delta / i (or ``rule(i)`` for i >= 2)."""
    i = np.arange(1, n + 1, dtype=np.float64)
    if rule is None:
        xs = x + delta / i
    else:
        xs = np.array([float(rule(int(j))) for j in range(1, n + 1)])
    xs[0] = x
    if not np.all(np.isfinite(xs)) or np.max(np.abs(xs)) > bound:
        raise ConfigurationError(f"initial-sequence rule leaves the bounded range |x_i| <= {bound}")
    return xs


def simulate_markov_family(drivers: DriverEnsemble, coeffs: CoefficientSpec, x: float,
                           delta: float = 0.0, rule=None, bound: float = 1e6) -> StateEnsemble:
    """Independent time-homogeneous diffusions; particle 1 starts exactly at x."""
    x0 = initial_sequence(drivers.n, x, delta, rule, bound)
    nan = np.full(drivers.grid.N + 1, np.nan)
    try:
        X = _simulate_frozen(drivers, coeffs, x0, nan)
    except SimulationDivergedError as exc:
        raise SimulationDivergedError(
            f"{exc} (Markov coefficients must not depend on the mean argument)", exc.index)
    return StateEnsemble(X, drivers.grid, MARKOV, drivers, x0)


def second_moment_profile(drivers: DriverEnsemble, coeffs: CoefficientSpec, xs):
    """E[sup_t |X^x_t|^2] for each start x, and the smallest C with est <= C (1 + x^2)."""
    est = []
    for x in xs:
        X = simulate_markov_family(drivers, coeffs, x).X
        est.append(float(np.mean(np.max(X**2, axis=2))))
    est = np.array(est)
    C = float(np.max(est / (1.0 + np.asarray(xs, dtype=float) ** 2)))
    return est, C
