"""Time grids, Brownian drivers, obstacle definitions and their validation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import rng
from .errors import ConfigurationError

RECURSIVE = "recursive"
STATE = "state-driven"
MODES = (RECURSIVE, STATE)

WELLPOSED_BOUND = 0.5
CONVERGENCE_BOUND = 1.0 / 16.0
LIPSCHITZ_SPOT_PAIRS = 1000


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        # k*T/N rather than cumulative sums; the endpoint is pinned to T
        t = np.arange(self.N + 1) * self.T / self.N
        t[-1] = self.T
        return t


def make_time_grid(T: float, N: int) -> TimeGrid:
    if not (isinstance(N, (int, np.integer)) and N >= 1):
        raise ConfigurationError(f"grid steps must be a positive integer, got {N!r}")
    if not (math.isfinite(T) and T > 0):
        raise ConfigurationError(f"horizon must be positive and finite, got {T!r}")
    return TimeGrid(float(T), int(N))


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DriverEnsemble:
    """Brownian increments ``dW[m, i, k]`` over scenarios, particles and steps.

    ``kind`` is ``"gaussian"`` for sampled Brownian increments, ``"lattice"``
    for the full enumeration of a binomial lattice (scenarios are equally
    weighted joint paths) and ``"lattice-sampled"`` for random lattice paths.
    """

    grid: TimeGrid
    increments: np.ndarray
    seed: Optional[int] = None
    kind: str = "gaussian"
    lattice: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=np.float64)
        if inc.ndim != 3 or inc.shape[2] != self.grid.N:
            raise ConfigurationError(
                f"increments must have shape (M, n, {self.grid.N}), got {inc.shape}"
            )
        object.__setattr__(self, "increments", _frozen(inc))

    @property
    def M(self) -> int:
        return self.increments.shape[0]

    @property
    def n(self) -> int:
        return self.increments.shape[1]

    @property
    def exact(self) -> bool:
        return self.kind == "lattice"

    def brownian_paths(self) -> np.ndarray:
        """W[m, i, k] with W[..., 0] = 0."""
        W = np.zeros((self.M, self.n, self.grid.N + 1))
        np.cumsum(self.increments, axis=2, out=W[:, :, 1:])
        return W

    def particles(self, idx) -> "DriverEnsemble":
        """Sub-ensemble restricted to the given particle columns (same streams)."""
        idx = np.atleast_1d(idx)
        return DriverEnsemble(self.grid, self.increments[:, idx, :], self.seed, self.kind)

    def pooled(self) -> "DriverEnsemble":
        """All (scenario, particle) columns as scenarios of a one-particle ensemble."""
        inc = self.increments.reshape(self.M * self.n, 1, self.grid.N)
        return DriverEnsemble(self.grid, inc, self.seed, self.kind)

    def same_streams(self, other: "DriverEnsemble") -> bool:
        return (
            self.grid == other.grid
            and self.seed == other.seed
            and self.kind == other.kind
            and self.M == other.M
        )


def _gaussian_block(grid, n, m0, m1, seed):
    m = np.arange(m0, m1, dtype=np.uint64)[:, None, None]
    i = np.arange(n, dtype=np.uint64)[None, :, None]
    k = np.arange(grid.N, dtype=np.uint64)[None, None, :]
    return rng.normals(seed, m, i, k, rng.STREAM_DRIVERS) * math.sqrt(grid.dt)


def sample_drivers(grid: TimeGrid, n: int, M: int, seed: int, threads: int = 1,
                   chunk: int = 4096) -> DriverEnsemble:
    """Sample ``dW ~ Normal(0, dt)`` keyed by ``(seed, m, i, k)``.

    The result does not depend on ``threads`` or ``chunk``: each increment is
    a function of its own counter only.
    """
    if n < 1 or M < 1:
        raise ConfigurationError(f"need n >= 1 and M >= 1, got n={n}, M={M}")
    if M >= 2**32 or n >= 2**32:
        raise ConfigurationError("scenario and particle counts must fit in 32 bits")
    seed = _check_seed(seed)
    bounds = [(a, min(a + chunk, M)) for a in range(0, M, chunk)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(lambda b: _gaussian_block(grid, n, b[0], b[1], seed), bounds))
    else:
        blocks = [_gaussian_block(grid, n, a, b, seed) for a, b in bounds]
    return DriverEnsemble(grid, np.concatenate(blocks, axis=0), seed, "gaussian")


def _check_seed(seed):
    if seed is None:
        raise ConfigurationError("a seed is mandatory")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


class PolynomialObstacle:
    """h(y, z) = sum of c * y**a * z**b over the given terms ``{(a, b): c}``."""

    def __init__(self, terms):
        self.terms = {(int(a), int(b)): float(c) for (a, b), c in dict(terms).items()}
        if any(a < 0 or b < 0 for a, b in self.terms):
            raise ConfigurationError("polynomial exponents must be nonnegative")

    @classmethod
    def from_config(cls, coeffs):
        """Accepts ``{"y1z0": 0.2, ...}`` or a list of ``[a, b, c]`` triples."""
        if isinstance(coeffs, dict):
            terms = {}
            for key, c in coeffs.items():
                try:
                    ys, zs = key.lower().lstrip("y").split("z")
                    terms[(int(ys), int(zs))] = c
                except ValueError:
                    raise ConfigurationError(f"bad polynomial term key {key!r}; use 'y<a>z<b>'")
            return cls(terms)
        return cls({(a, b): c for a, b, c in coeffs})

    @property
    def degree(self):
        return max((a + b for (a, b), c in self.terms.items() if c != 0.0), default=0)

    def lipschitz(self):
        """Global Lipschitz constants when the polynomial is affine, else None."""
        if self.degree > 1:
            return None
        return abs(self.terms.get((1, 0), 0.0)), abs(self.terms.get((0, 1), 0.0))

    def __call__(self, y, z):
        y = np.asarray(y, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        out = np.zeros(np.broadcast(y, z).shape)
        for (a, b), c in self.terms.items():
            out = out + c * y**a * z**b
        return out

    def __repr__(self):
        return f"PolynomialObstacle({self.terms})"


Terminal = Union[Callable[[np.ndarray], np.ndarray], float, None]


@dataclass(frozen=True)
class ObstacleSpec:
    """Performance function h(y, z), terminal payoff and mode.

    ``xi`` is a function of the terminal state, a constant, or ``None``. With
    ``None`` the terminal reward is h itself evaluated at the horizon, as in
    the variance problems where stopping at T collects the terminal variance.
    """

    h: Callable[[np.ndarray, np.ndarray], np.ndarray]
    gamma1: float
    gamma2: float
    xi: Terminal = None
    mode: str = RECURSIVE
    lipschitz_flag: bool = True
    name: str = "custom"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.lipschitz_flag and self.gamma1 >= 0 and self.gamma2 >= 0:
            _spot_check_lipschitz(self)

    def terminal(self, x_T):
        """Terminal payoff for terminal states, or None when h is collected at T."""
        if self.xi is None:
            return None
        if callable(self.xi):
            return np.asarray(self.xi(x_T), dtype=np.float64) * np.ones_like(x_T)
        return np.full(np.shape(x_T), float(self.xi))


def _spot_check_lipschitz(spec):
    u, v = rng.uniforms(0x5EED, np.arange(LIPSCHITZ_SPOT_PAIRS), 0, 0, stream=7)
    w, s = rng.uniforms(0x5EED, np.arange(LIPSCHITZ_SPOT_PAIRS), 1, 0, stream=7)
    y1, z1, y2, z2 = (8.0 * (a - 0.5) for a in (u, v, w, s))
    h1 = np.asarray(spec.h(y1, z1), dtype=np.float64)
    h2 = np.asarray(spec.h(y2, z2), dtype=np.float64)
    bound = spec.gamma1 * np.abs(y1 - y2) + spec.gamma2 * np.abs(z1 - z2)
    slack = 1e-9 * (1.0 + np.abs(h1) + np.abs(h2))
    bad = np.abs(h1 - h2) > bound + slack
    if np.any(bad):
        j = int(np.argmax(bad))
        raise ConfigurationError(
            f"obstacle {spec.name!r} violates its declared Lipschitz constants "
            f"(gamma1={spec.gamma1}, gamma2={spec.gamma2}) at "
            f"(y,z)=({y1[j]:.4g},{z1[j]:.4g}) vs ({y2[j]:.4g},{z2[j]:.4g})"
        )


@dataclass(frozen=True)
class ValidationReport:
    wellposed: bool
    convergence_ok: bool
    messages: tuple = ()


def validate_spec(spec: ObstacleSpec) -> ValidationReport:
    if spec.gamma1 < 0 or spec.gamma2 < 0:
        raise ConfigurationError(
            f"Lipschitz constants must be nonnegative, got ({spec.gamma1}, {spec.gamma2})"
        )
    s = spec.gamma1**2 + spec.gamma2**2
    if not spec.lipschitz_flag:
        if spec.mode == STATE:
            return ValidationReport(True, True, (
                "h is not Lipschitz; state-driven problems need no contraction, "
                "so the gamma gates do not apply",
            ))
        return ValidationReport(False, False, (
            "h is not Lipschitz; the recursive value process has no contraction "
            "guarantee (an explicit override is required)",
        ))
    wellposed = s < WELLPOSED_BOUND
    convergence_ok = s < CONVERGENCE_BOUND
    messages = [f"gamma1^2 + gamma2^2 = {s:.6g}"]
    if not wellposed:
        messages.append(f"not below {WELLPOSED_BOUND}: uniqueness of the value process is not guaranteed")
    elif not convergence_ok:
        messages.append("not below 1/16: particle convergence is not guaranteed")
    return ValidationReport(wellposed, convergence_ok, tuple(messages))
