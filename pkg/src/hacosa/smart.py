"""Smart ants: pheromone-guided crossover over the parents' neighbour sets.

Each ant receives two parent tours. At the current city it only looks at the
(at most four) cities adjacent to it in either parent, and picks among the
unvisited ones with the pseudo-random-proportional rule of ACS. When none is
left it takes the nearest unvisited city, exactly as greedy crossover does.
Every traversed edge gets the ACS local update. The hybrid loop then 2-opts
the child, reinforces the best-so-far tour, and lets the child replace the
worse of its parents.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .aco import AntState, SolverParams, choose, edge_weight, heuristic, initial_tau0
from .genetic import (
    ParentPair,
    assign_parents,
    candidate_set,
    gather_candidates,
    init_population,
    steady_state_replace,
)
from .instance import Instance
from .pheromone import PheromoneStore, local_update_kernel
from .report import RunReport
from .tour import TWO_OPT_NEIGHBORS, Tour, nearest_unvisited, two_opt_kernel, two_opt_neighbors


@dataclass
class SmartAnt:
    ant: AntState
    pair: ParentPair


@njit(cache=True)
def smart_step(tau, etab, dist, alpha, q0, table, nn, r, visited, q, v, cands, weights, stats):
    """Choose the city after ``r``; stats[0] counts evaluations, stats[1] fallbacks."""
    count = gather_candidates(table, r, visited, cands)
    if count == 0:
        stats[1] += 1
        return nearest_unvisited(r, visited, nn, dist)
    for i in range(count):
        weights[i] = edge_weight(tau, etab, alpha, r, cands[i])
    stats[0] += count
    return choose(cands, weights, count, q < q0, v)


@njit(cache=True)
def smart_construct_kernel(tau, etab, dist, alpha, q0, rho, tau0, table, nn, start, u, stats):
    n = dist.shape[0]
    order = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    cands = np.empty(4, dtype=np.int64)
    weights = np.empty(4, dtype=np.float64)
    order[0] = start
    visited[start] = True
    for k in range(1, n):
        r = order[k - 1]
        s = smart_step(tau, etab, dist, alpha, q0, table, nn, r, visited,
                       u[2 * k], u[2 * k + 1], cands, weights, stats)
        order[k] = s
        visited[s] = True
        local_update_kernel(tau, r, s, rho, tau0)
    if n > 1:
        local_update_kernel(tau, order[n - 1], order[0], rho, tau0)
    return order


def smart_probabilities(
    store: PheromoneStore, inst: Instance, smart: SmartAnt, alpha: float, beta: float
) -> dict[int, float]:
    """Random-proportional probabilities restricted to the unvisited parent-neighbours."""
    r = smart.ant.current
    cands = candidate_set(smart.pair, r, smart.ant.visited)
    if not cands:
        return {}
    d = inst.matrix[r, cands]
    w = store.tau[r, cands] ** alpha * (1.0 / np.maximum(d, 1)) ** beta
    return {c: float(p) for c, p in zip(cands, w / w.sum())}


def smart_select_next(
    store: PheromoneStore,
    inst: Instance,
    smart: SmartAnt,
    params: SolverParams,
    rng: np.random.Generator,
    stats: np.ndarray | None = None,
) -> int:
    if smart.ant.complete:
        raise ValueError("construction already complete")
    q, v = rng.random(2)
    if stats is None:
        stats = np.zeros(2, dtype=np.int64)
    return int(smart_step(
        store.tau, heuristic(inst, params.beta), inst.matrix, params.alpha, params.q0,
        smart.pair.table, inst.neighbor_lists(TWO_OPT_NEIGHBORS), smart.ant.current,
        smart.ant.visited, q, v, np.empty(4, dtype=np.int64), np.empty(4), stats,
    ))


def construct_child(
    store: PheromoneStore,
    inst: Instance,
    smart: SmartAnt,
    params: SolverParams,
    rng: np.random.Generator,
    stats: np.ndarray | None = None,
) -> Tour:
    """Complete the ant's tour from its current (start) city, updating trails locally."""
    if len(smart.ant.partial) != 1:
        raise ValueError("construct_child expects an ant placed on its start city only")
    n = inst.n
    if stats is None:
        stats = np.zeros(2, dtype=np.int64)
    u = rng.random(2 * n)
    order = smart_construct_kernel(
        store.tau, heuristic(inst, params.beta), inst.matrix, params.alpha, params.q0,
        params.rho_local, store.tau0, smart.pair.table, inst.neighbor_lists(TWO_OPT_NEIGHBORS),
        smart.ant.current, u, stats,
    )
    smart.ant.visited[:] = True
    smart.ant.partial = [int(c) for c in order]
    smart.ant.current = int(order[-1])
    return Tour._trusted(inst, order)


def run_hacosa(inst: Instance, params: SolverParams, observer=None) -> RunReport:
    """Population + smart-ant construction + 2-opt + steady-state replacement."""
    started = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    n = inst.n
    dist = inst.matrix
    etab = heuristic(inst, params.beta)
    nn = inst.neighbor_lists(TWO_OPT_NEIGHBORS)
    ls_nbrs = two_opt_neighbors(inst)
    tau0, _ = initial_tau0(inst)
    if params.tau0 is not None:
        tau0 = params.tau0
    store = PheromoneStore(n, tau0)

    pop = init_population(inst, params.population, rng, ls_nbrs)
    built = len(pop)
    best = pop.best()
    stats = np.zeros(2, dtype=np.int64)
    trace: list[tuple[int, int]] = []
    last_gain = 0
    gen = 0
    for gen in range(1, params.iterations + 1):
        for pair in assign_parents(pop, params.m, rng):
            start = int(rng.integers(n))
            u = rng.random(2 * n)
            order = smart_construct_kernel(store.tau, etab, dist, params.alpha, params.q0,
                                           params.rho_local, tau0, pair.table, nn, start, u, stats)
            if params.local_search:
                two_opt_kernel(order, dist, ls_nbrs)
            child = Tour._trusted(inst, order)
            if child.length < best.length:
                best = child
                last_gain = gen
            store.best_tour_update(best, params.rho_global, strict=params.strict_global)
            steady_state_replace(pop, child, pair)
        built += params.m
        trace.append((gen, best.length))
        if observer is not None:
            observer(gen, store, best, pop)

        if params.stall is not None and gen - last_gain >= params.stall:
            break
        if params.time_limit is not None and time.perf_counter() - started >= params.time_limit:
            break

    return RunReport(
        engine="HACO-SA",
        instance=inst.name,
        seed=params.seed,
        best_length=best.length,
        wall_time=time.perf_counter() - started,
        best_order=tuple(int(c) for c in best.order),
        trace=trace,
        iterations=gen,
        tours_built=built,
    )
