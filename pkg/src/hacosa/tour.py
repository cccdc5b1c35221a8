"""Tours, cyclic length, 2-opt local search, and the double-bridge kick."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .instance import Instance

#: Above this size 2-opt only scans each city's nearest neighbours.
TWO_OPT_FULL_LIMIT = 100
TWO_OPT_NEIGHBORS = 20


class InvalidTourError(ValueError):
    pass


class PerturbationUnavailable(ValueError):
    pass


@njit(cache=True)
def cycle_length(order, dist):
    n = order.shape[0]
    total = 0
    for k in range(n - 1):
        total += dist[order[k], order[k + 1]]
    total += dist[order[n - 1], order[0]]
    return total


def check_permutation(order, n: int, labels=None) -> np.ndarray:
    arr = np.asarray(order, dtype=np.int64)
    if arr.ndim != 1:
        raise InvalidTourError("tour must be a flat sequence of cities")
    name = (lambda c: labels[c]) if labels else (lambda c: c)
    out_of_range = arr[(arr < 0) | (arr >= n)]
    if out_of_range.size:
        raise InvalidTourError(f"city index {int(out_of_range[0])} out of range for n={n}")
    counts = np.bincount(arr, minlength=n)
    dup = np.flatnonzero(counts > 1)
    if dup.size:
        raise InvalidTourError(f"city {name(int(dup[0]))} visited more than once")
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise InvalidTourError(f"city {name(int(missing[0]))} missing from tour")
    return arr


def tour_length(inst: Instance, order) -> int:
    """Length of the closed tour, including the edge back to the start."""
    arr = check_permutation(order, inst.n, inst.labels)
    return int(cycle_length(arr, inst.matrix))


@dataclass(frozen=True, eq=False)
class Tour:
    order: np.ndarray
    length: int

    @classmethod
    def from_order(cls, inst: Instance, order) -> "Tour":
        arr = check_permutation(order, inst.n, inst.labels).copy()
        arr.setflags(write=False)
        return cls(arr, int(cycle_length(arr, inst.matrix)))

    @classmethod
    def _trusted(cls, inst: Instance, order: np.ndarray, length: int | None = None) -> "Tour":
        # Skips validation; callers are kernels that always emit permutations.
        order.setflags(write=False)
        if length is None:
            length = int(cycle_length(order, inst.matrix))
        return cls(order, int(length))

    def __len__(self) -> int:
        return self.order.shape[0]

    def successors(self) -> np.ndarray:
        succ = np.empty_like(self.order)
        succ[self.order] = np.roll(self.order, -1)
        return succ

    def predecessors(self) -> np.ndarray:
        pred = np.empty_like(self.order)
        pred[self.order] = np.roll(self.order, 1)
        return pred

    def edges(self) -> set[tuple[int, int]]:
        a = self.order
        b = np.roll(a, -1)
        return {(int(min(x, y)), int(max(x, y))) for x, y in zip(a, b)}

    def same_cycle(self, other: "Tour") -> bool:
        """True when both tours traverse the same undirected cycle."""
        if self.length != other.length or len(self) != len(other):
            return False
        s, p = self.successors(), self.predecessors()
        o = other.successors()
        return bool(np.all(s == o) or np.all(p == o))

    def to_line(self, inst: Instance) -> str:
        return ",".join(str(inst.labels[c]) for c in self.order)

    @classmethod
    def from_line(cls, inst: Instance, line: str) -> "Tour":
        index = {label: i for i, label in enumerate(inst.labels)}
        try:
            order = [index[int(tok)] for tok in line.strip().split(",") if tok.strip()]
        except KeyError as exc:
            raise InvalidTourError(f"unknown city label {exc.args[0]}") from None
        return cls.from_order(inst, order)


# --- 2-opt -----------------------------------------------------------------

@njit(cache=True)
def _reverse(order, pos, i, j):
    """Reverse the cyclic segment order[i..j]; flips the complement if shorter."""
    n = order.shape[0]
    seg = (j - i) % n + 1
    if 2 * seg > n:
        i, j = (j + 1) % n, (i - 1) % n
        seg = n - seg
    for _ in range(seg // 2):
        a = order[i]
        b = order[j]
        order[i] = b
        pos[b] = i
        order[j] = a
        pos[a] = j
        i = (i + 1) % n
        j = (j - 1) % n


@njit(cache=True)
def _improve_city(a, order, pos, dist, nbrs, out):
    """Apply the first improving 2-opt move touching city ``a``.

    The four cities whose edges changed are written to ``out``.
    """
    n = order.shape[0]
    k = nbrs.shape[1]
    ia = pos[a]
    # successor direction: (a, b) + (c, d) -> (a, c) + (b, d)
    b = order[(ia + 1) % n]
    dab = dist[a, b]
    for t in range(k):
        c = nbrs[a, t]
        g1 = dab - dist[a, c]
        if g1 <= 0:
            break
        d = order[(pos[c] + 1) % n]
        if c == b or d == a:
            continue
        if g1 + dist[c, d] - dist[b, d] > 0:
            _reverse(order, pos, (ia + 1) % n, pos[c])
            out[0], out[1], out[2], out[3] = a, b, c, d
            return True
    # predecessor direction: (b, a) + (d, c) -> (c, a) + (d, b)
    b = order[(ia - 1) % n]
    dab = dist[a, b]
    for t in range(k):
        c = nbrs[a, t]
        g1 = dab - dist[a, c]
        if g1 <= 0:
            break
        d = order[(pos[c] - 1) % n]
        if c == b or d == a:
            continue
        if g1 + dist[c, d] - dist[b, d] > 0:
            _reverse(order, pos, ia, pos[d])
            out[0], out[1], out[2], out[3] = a, b, c, d
            return True
    return False


@njit(cache=True)
def two_opt_kernel(order, dist, nbrs):
    """In-place first-improvement 2-opt with don't-look bits.

    When the work queue drains, a full sweep over every city confirms the
    local optimum; any move it finds re-seeds the queue. Returns the number
    of moves applied.
    """
    n = order.shape[0]
    if n < 4:
        return 0
    pos = np.empty(n, dtype=np.int64)
    for i in range(n):
        pos[order[i]] = i
    queue = np.empty(n, dtype=np.int64)
    queued = np.zeros(n, dtype=np.bool_)
    head = 0
    size = 0
    moves = 0
    touched = np.empty(4, dtype=np.int64)
    while True:
        for i in range(n):
            c = order[i]
            if not queued[c]:
                queue[(head + size) % n] = c
                queued[c] = True
                size += 1
        found_in_sweep = False
        while size > 0:
            a = queue[head]
            head = (head + 1) % n
            size -= 1
            queued[a] = False
            if not _improve_city(a, order, pos, dist, nbrs, touched):
                continue
            moves += 1
            found_in_sweep = True
            for t in range(4):
                c = touched[t]
                if not queued[c]:
                    queue[(head + size) % n] = c
                    queued[c] = True
                    size += 1
        if not found_in_sweep:
            return moves


def two_opt_neighbors(inst: Instance, k: int | None = None) -> np.ndarray:
    if k is None:
        k = inst.n - 1 if inst.n <= TWO_OPT_FULL_LIMIT else TWO_OPT_NEIGHBORS
    return inst.neighbor_lists(k)


def two_opt(inst: Instance, tour: Tour, neighbors: np.ndarray | None = None) -> Tour:
    """Return a 2-opt local optimum reached from ``tour``.

    ``neighbors`` restricts the partner cities scanned for each city; by
    default every city for n <= 100 and the 20 nearest otherwise.
    """
    if inst.n < 4:
        return tour
    if neighbors is None:
        neighbors = two_opt_neighbors(inst)
    order = np.array(tour.order, dtype=np.int64)
    if two_opt_kernel(order, inst.matrix, neighbors) == 0:
        return tour
    return Tour._trusted(inst, order)


def improving_reversal(inst: Instance, order) -> tuple[int, int] | None:
    """Brute-force O(n^2) scan for any length-reducing segment reversal."""
    order = np.asarray(order)
    d = inst.matrix
    n = order.shape[0]
    for i in range(n - 1):
        a, b = order[i], order[i + 1]
        for j in range(i + 2, n):
            c, e = order[j], order[(j + 1) % n]
            if e == a:
                continue
            if d[a, c] + d[b, e] < d[a, b] + d[c, e]:
                return i, j
    return None


# --- double bridge ---------------------------------------------------------

def random_cuts(n: int, rng: np.random.Generator) -> tuple[int, int, int]:
    cuts = np.sort(rng.choice(np.arange(1, n), size=3, replace=False))
    return int(cuts[0]), int(cuts[1]), int(cuts[2])


def inverse_cuts(cuts: tuple[int, int, int]) -> tuple[int, int, int]:
    """Cuts that undo :func:`double_bridge` applied with ``cuts``."""
    i, j, k = cuts
    return i, i + (k - j), k


def double_bridge(
    inst: Instance,
    tour: Tour,
    cuts: tuple[int, int, int] | None = None,
    rng: np.random.Generator | None = None,
) -> Tour:
    """Split the tour as A|B|C|D at ``cuts`` and reconnect as A+C+B+D."""
    n = len(tour)
    if n < 8:
        raise PerturbationUnavailable(f"double bridge needs n >= 8, got {n}")
    if cuts is None:
        cuts = random_cuts(n, rng if rng is not None else np.random.default_rng())
    i, j, k = cuts
    if not 0 < i < j < k < n:
        raise ValueError(f"cuts must satisfy 0 < i < j < k < n, got {cuts}")
    o = tour.order
    order = np.concatenate((o[:i], o[j:k], o[i:j], o[k:]))
    return Tour._trusted(inst, order)


# --- nearest neighbour -----------------------------------------------------

@njit(cache=True)
def nearest_unvisited(r, visited, nn, dist):
    """Closest unvisited city to ``r``: the neighbour list first, then a full scan."""
    for t in range(nn.shape[1]):
        c = nn[r, t]
        if not visited[c]:
            return c
    best = -1
    best_d = 0
    for c in range(visited.shape[0]):
        if not visited[c] and (best < 0 or dist[r, c] < best_d):
            best = c
            best_d = dist[r, c]
    return best


@njit(cache=True)
def nearest_neighbor_kernel(dist, nn, start):
    n = dist.shape[0]
    order = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    order[0] = start
    visited[start] = True
    for k in range(1, n):
        c = nearest_unvisited(order[k - 1], visited, nn, dist)
        order[k] = c
        visited[c] = True
    return order


def nearest_neighbor_tour(inst: Instance, start: int = 0, nn: np.ndarray | None = None) -> Tour:
    if nn is None:
        nn = inst.neighbor_lists(TWO_OPT_NEIGHBORS)
    return Tour._trusted(inst, nearest_neighbor_kernel(inst.matrix, nn, start))
