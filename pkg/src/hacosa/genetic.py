"""Parent-neighbour candidate sets, greedy crossover, steady-state population."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .instance import Instance
from .tour import (
    TWO_OPT_NEIGHBORS,
    Tour,
    nearest_neighbor_kernel,
    nearest_unvisited,
    two_opt_kernel,
    two_opt_neighbors,
)


@dataclass(eq=False)
class ParentPair:
    """Two parents plus, per city, its (pred, succ) in each parent.

    ``slots`` are the population positions the parents were drawn from.
    """

    p1: Tour
    p2: Tour
    slots: tuple[int, int] = (-1, -1)
    table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.p1) != len(self.p2):
            raise ValueError("parents cover different instances")
        self.table = np.ascontiguousarray(np.stack(
            (self.p1.predecessors(), self.p1.successors(),
             self.p2.predecessors(), self.p2.successors()),
            axis=1,
        ))

    @property
    def n(self) -> int:
        return len(self.p1)


@njit(cache=True)
def gather_candidates(table, r, visited, out):
    """Distinct unvisited parent-neighbours of ``r`` in table order; returns the count."""
    count = 0
    for t in range(4):
        c = table[r, t]
        if visited[c] or c == r:
            continue
        dup = False
        for i in range(count):
            if out[i] == c:
                dup = True
                break
        if not dup:
            out[count] = c
            count += 1
    return count


def candidate_set(pair: ParentPair, r: int, visited) -> list[int]:
    """The unvisited members of {pred/succ of r in p1, pred/succ of r in p2}."""
    visited = np.asarray(visited, dtype=np.bool_)
    out = np.empty(4, dtype=np.int64)
    k = gather_candidates(pair.table, r, visited, out)
    return [int(c) for c in out[:k]]


@njit(cache=True)
def igx_kernel(dist, table, nn, start):
    """Greedy child: cheapest parent-neighbour edge, nearest unvisited city as fallback."""
    n = dist.shape[0]
    order = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    cands = np.empty(4, dtype=np.int64)
    order[0] = start
    visited[start] = True
    for k in range(1, n):
        r = order[k - 1]
        count = gather_candidates(table, r, visited, cands)
        if count == 0:
            s = nearest_unvisited(r, visited, nn, dist)
        else:
            s = cands[0]
            for i in range(1, count):
                if dist[r, cands[i]] < dist[r, s]:
                    s = cands[i]
        order[k] = s
        visited[s] = True
    return order


def igx_crossover(
    inst: Instance,
    pair: ParentPair,
    rng: np.random.Generator,
    start: int | None = None,
    nn: np.ndarray | None = None,
) -> Tour:
    if start is None:
        start = int(rng.integers(inst.n))
    if nn is None:
        nn = inst.neighbor_lists(TWO_OPT_NEIGHBORS)
    return Tour._trusted(inst, igx_kernel(inst.matrix, pair.table, nn, start))


class Population:
    def __init__(self, members: list[Tour], capacity: int | None = None):
        self.capacity = len(members) if capacity is None else capacity
        if self.capacity < 2:
            raise ValueError("population capacity must be at least 2")
        if len(members) > self.capacity:
            raise ValueError("more members than capacity")
        self.members = list(members)

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> Tour:
        return self.members[i]

    def best(self) -> Tour:
        return min(self.members, key=lambda t: t.length)

    def lengths(self) -> list[int]:
        return [t.length for t in self.members]

    def contains_cycle(self, tour: Tour) -> bool:
        return any(m.same_cycle(tour) for m in self.members)


def assign_parents(pop: Population, m: int, rng: np.random.Generator) -> list[ParentPair]:
    """One uniformly drawn pair of distinct members per ant."""
    if len(pop) < 2:
        raise ValueError("need at least two members to form a parent pair")
    pairs = []
    for _ in range(m):
        i, j = rng.choice(len(pop), size=2, replace=False)
        pairs.append(ParentPair(pop[int(i)], pop[int(j)], (int(i), int(j))))
    return pairs


def steady_state_replace(pop: Population, child: Tour, pair: ParentPair) -> bool:
    """Put ``child`` in place of the longer of the pair's two slots if it is shorter.

    The slots are read at replacement time, so a slot already overwritten earlier
    in the same generation competes with its current occupant. Children that
    repeat an existing member's cycle are dropped. Returns True on replacement.
    """
    i, j = pair.slots
    if i < 0:
        i = next(k for k, t in enumerate(pop.members) if t is pair.p1)
        j = next(k for k, t in enumerate(pop.members) if t is pair.p2)
    worse = i if pop[i].length > pop[j].length else j
    if child.length >= pop[worse].length:
        return False
    if pop.contains_cycle(child):
        return False
    pop.members[worse] = child
    return True


def init_population(
    inst: Instance, capacity: int, rng: np.random.Generator, ls_neighbors: np.ndarray | None = None
) -> Population:
    """Nearest-neighbour tours from random starts, each taken to a 2-opt optimum."""
    n = inst.n
    nn = inst.neighbor_lists(TWO_OPT_NEIGHBORS)
    if ls_neighbors is None:
        ls_neighbors = two_opt_neighbors(inst)
    starts = rng.choice(n, size=capacity, replace=False) if capacity <= n else rng.integers(0, n, capacity)
    members = []
    for s in starts:
        order = nearest_neighbor_kernel(inst.matrix, nn, int(s))
        two_opt_kernel(order, inst.matrix, ls_neighbors)
        members.append(Tour._trusted(inst, order))
    return Population(members, capacity)
