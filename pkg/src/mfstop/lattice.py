"""Joint binomial lattice over n particles and N steps.

Joint paths are enumerated lexicographically: scenario ``w`` is the C-order
flat index of ``(p_1, ..., p_n)`` where ``p_i`` is particle i's own leaf (its
N up/down bits, first step most significant). All joint paths carry the same
probability, so plain means over scenarios are exact expectations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .core import DriverEnsemble, TimeGrid, make_time_grid
from .errors import ConfigurationError, InstanceTooLargeError

DEFAULT_CAP = 2**20


@dataclass(frozen=True)
class LatticeModel:
    n: int
    N: int
    T: float = 1.0
    initials: tuple = None
    cap: int = DEFAULT_CAP
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ConfigurationError(f"lattice needs n >= 1 and N >= 1, got n={self.n}, N={self.N}")
        need = 2 ** (self.n * self.N)
        if need > self.cap:
            raise InstanceTooLargeError(
                f"lattice with n={self.n}, N={self.N} has {need} joint paths, above the cap {self.cap}",
                required_cap=need,
            )
        init = (0.0,) * self.n if self.initials is None else tuple(float(x) for x in np.broadcast_to(self.initials, (self.n,)))
        object.__setattr__(self, "initials", init)

    @property
    def grid(self) -> TimeGrid:
        return make_time_grid(self.T, self.N)

    @property
    def n_paths(self) -> int:
        return 2 ** (self.n * self.N)

    @property
    def leaves(self) -> int:
        return 2**self.N

    def own_leaf(self) -> np.ndarray:
        """(M, n) own-leaf index of every particle along every joint path."""
        if "leaf" not in self._cache:
            idx = np.indices((self.leaves,) * self.n).reshape(self.n, -1).T
            idx.setflags(write=False)
            self._cache["leaf"] = idx
        return self._cache["leaf"]

    def own_bits(self) -> np.ndarray:
        """(M, n, N) up (1) / down (0) bits."""
        leaf = self.own_leaf()
        shifts = np.arange(self.N - 1, -1, -1)
        return (leaf[:, :, None] >> shifts[None, None, :]) & 1

    def drivers(self) -> DriverEnsemble:
        inc = (2.0 * self.own_bits() - 1.0) * math.sqrt(self.grid.dt)
        return DriverEnsemble(self.grid, inc, None, "lattice", lattice=self)

    def sample(self, M: int, seed: int) -> DriverEnsemble:
        """M joint paths drawn uniformly from the lattice (with replacement)."""
        m = np.arange(M, dtype=np.uint64)[:, None, None]
        i = np.arange(self.n, dtype=np.uint64)[None, :, None]
        k = np.arange(self.N, dtype=np.uint64)[None, None, :]
        b = rng.bits(seed, m, i, k, rng.STREAM_LATTICE)
        inc = (2.0 * b - 1.0) * math.sqrt(self.grid.dt)
        return DriverEnsemble(self.grid, inc, seed, "lattice-sampled")

    def project(self, values, i: int, k: int) -> np.ndarray:
        """E[values | F^i_k] for a (M,) array over joint paths, returned per path.

        Averages over the other particles' branches and over particle i's own
        future below depth k.
        """
        v = np.asarray(values, dtype=np.float64).reshape((self.leaves,) * self.n)
        v = np.ascontiguousarray(np.moveaxis(v, i, 0)).reshape(2**k, -1)
        g = v.mean(axis=1)
        return g[self.own_leaf()[:, i] >> (self.N - k)]

    def project_all(self, values, k: int) -> np.ndarray:
        """Column-wise projection of a (M, n) array onto each particle's F^i_k."""
        return np.stack([self.project(values[:, i], i, k) for i in range(self.n)], axis=1)

    def swap_labels(self, a, i: int, j: int) -> np.ndarray:
        """Re-index a per-path array (M, n, ...) as if particles i and j were swapped."""
        a = np.asarray(a)
        shaped = a.reshape((self.leaves,) * self.n + a.shape[1:])
        shaped = np.swapaxes(shaped, i, j)
        cols = list(range(self.n))
        cols[i], cols[j] = cols[j], cols[i]
        return shaped.reshape(a.shape)[:, cols]
