"""Pheromone trails: initialization, AS/ACS updates, MAX-MIN bounds."""

from __future__ import annotations

import io

import numpy as np
from numba import njit

from .tour import Tour


@njit(cache=True)
def local_update_kernel(tau, r, s, rho, tau0):
    v = (1.0 - rho) * tau[r, s] + rho * tau0
    tau[r, s] = v
    tau[s, r] = v


@njit(cache=True)
def deposit_kernel(tau, order, amount):
    n = order.shape[0]
    for k in range(n):
        r = order[k]
        s = order[(k + 1) % n]
        v = tau[r, s] + amount
        tau[r, s] = v
        tau[s, r] = v


@njit(cache=True)
def reinforce_kernel(tau, order, rho, target, lo, hi):
    """tau <- (1 - rho) tau + rho * target on the edges of ``order``, clamped."""
    n = order.shape[0]
    for k in range(n):
        r = order[k]
        s = order[(k + 1) % n]
        v = (1.0 - rho) * tau[r, s] + rho * target
        if v < lo:
            v = lo
        elif v > hi:
            v = hi
        tau[r, s] = v
        tau[s, r] = v


class PheromoneStore:
    """Dense symmetric matrix of trail intensities.

    ``tau`` is exposed for the construction kernels, which read it and apply
    local updates in place. All other mutation goes through the methods.
    """

    def __init__(self, n: int, tau0: float):
        if not tau0 > 0:
            raise ValueError(f"tau0 must be positive, got {tau0}")
        self.n = n
        self.tau0 = float(tau0)
        self.tau = np.full((n, n), self.tau0, dtype=np.float64)
        self.tau_min: float | None = None
        self.tau_max: float | None = None

    @property
    def bounds(self) -> tuple[float, float] | None:
        if self.tau_min is None:
            return None
        return self.tau_min, self.tau_max

    def __getitem__(self, rs) -> float:
        return float(self.tau[rs])

    def set(self, r: int, s: int, value: float) -> None:
        self.tau[r, s] = self.tau[s, r] = value

    def fill(self, value: float) -> None:
        self.tau.fill(value)

    def as_global_update(self, ants: list[Tour], evaporation: float) -> None:
        """Evaporate every trail, then each ant deposits 1/length on its edges."""
        if not 0 < evaporation < 1:
            raise ValueError(f"evaporation must lie in (0, 1), got {evaporation}")
        self.tau *= 1.0 - evaporation
        for t in ants:
            deposit_kernel(self.tau, t.order, 1.0 / t.length)
        self.clamp()

    def local_update(self, r: int, s: int, rho: float, tau0: float | None = None) -> None:
        if r == s:
            raise ValueError("local update needs two distinct cities")
        local_update_kernel(self.tau, r, s, rho, self.tau0 if tau0 is None else tau0)
        if self.tau_min is not None:
            self.set(r, s, min(max(self.tau[r, s], self.tau_min), self.tau_max))

    def best_tour_update(self, best: Tour, rho: float, strict: bool = False) -> None:
        """Reinforce the edges of ``best`` only.

        The default deposits 1/length(best); ``strict`` pulls the same edges
        toward tau0 with the local rule instead.
        """
        target = self.tau0 if strict else 1.0 / best.length
        lo, hi = self.bounds or (0.0, np.inf)
        reinforce_kernel(self.tau, best.order, rho, target, lo, hi)

    def set_mmas_bounds(self, best_length: int, rho: float, n: int | None = None) -> None:
        if best_length <= 0:
            raise ValueError("best_length must be positive")
        n = self.n if n is None else n
        self.tau_max = 1.0 / (rho * best_length)
        self.tau_min = self.tau_max / (2 * n)
        self.clamp()

    def clamp(self) -> None:
        if self.tau_min is not None:
            np.clip(self.tau, self.tau_min, self.tau_max, out=self.tau)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.tau, self.tau.T))

    def to_csv(self) -> str:
        """Debug dump of the full matrix; not a stable format."""
        buf = io.StringIO()
        np.savetxt(buf, self.tau, delimiter=",", fmt="%.10g")
        return buf.getvalue()
