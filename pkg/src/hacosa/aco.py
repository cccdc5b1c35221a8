"""Classic constructive engines: Ant System, Ant Colony System, MAX-MIN AS."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .instance import Instance
from .pheromone import PheromoneStore, local_update_kernel
from .report import RunReport
from .tour import Tour, nearest_neighbor_tour, two_opt_kernel, two_opt_neighbors

ENGINES = ("AS", "ACS", "MMAS", "HACO-SA")

_ENGINE_DEFAULTS = {
    "AS": dict(q0=0.0, evaporation=0.5, local_search=False),
    "ACS": dict(q0=0.9, local_search=False),
    "MMAS": dict(q0=0.0, evaporation=0.02, local_search=True),
    "HACO-SA": dict(q0=0.9, m=10, local_search=True, stall=200),
}


@dataclass
class SolverParams:
    engine: str = "MMAS"
    alpha: float = 1.0
    beta: float = 2.0
    q0: float = 0.0
    rho_local: float = 0.1
    rho_global: float = 0.1
    evaporation: float = 0.02
    m: int = 25
    iterations: int = 1000
    seed: int = 0
    tau0: float | None = None
    local_search: bool = True
    candidate_lists: bool = True
    candidates: int = 20
    population: int = 20
    stall: int | None = None
    strict_global: bool = False
    time_limit: float | None = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; choose from {', '.join(ENGINES)}")
        for name in ("rho_local", "rho_global", "evaporation"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not 0 <= self.q0 <= 1:
            raise ValueError(f"q0 must lie in [0, 1], got {self.q0}")
        if self.m < 1 or self.iterations < 1:
            raise ValueError("m and iterations must be at least 1")
        if self.population < 2:
            raise ValueError("population must hold at least 2 tours")
        if self.tau0 is not None and not self.tau0 > 0:
            raise ValueError("tau0 must be positive")

    @classmethod
    def defaults(cls, engine: str, **overrides) -> "SolverParams":
        if engine not in ENGINES:
            raise ValueError(f"unknown engine {engine!r}; choose from {', '.join(ENGINES)}")
        return cls(engine=engine, **{**_ENGINE_DEFAULTS[engine], **overrides})

    def replace(self, **changes) -> "SolverParams":
        return dataclasses.replace(self, **changes)

    def with_overrides(self, pairs: dict[str, str]) -> "SolverParams":
        """Apply ``key=value`` strings (from a CLI or config file)."""
        fields = {f.name: f for f in dataclasses.fields(self)}
        changes = {}
        for key, raw in pairs.items():
            key = key.strip().replace("-", "_")
            if key not in fields:
                raise ValueError(f"unknown parameter {key!r}")
            changes[key] = _coerce(getattr(self, key), key, raw)
        return self.replace(**changes)


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}
_OPTIONAL_INT = {"stall"}
_OPTIONAL_FLOAT = {"tau0", "time_limit"}


def _coerce(current, key: str, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if key in _OPTIONAL_INT | _OPTIONAL_FLOAT and raw.lower() in ("none", ""):
        return None
    try:
        if key in _OPTIONAL_INT:
            return int(raw)
        if key in _OPTIONAL_FLOAT:
            return float(raw)
        if isinstance(current, bool):
            return _BOOL[raw.lower()]
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
    except (KeyError, ValueError):
        raise ValueError(f"bad value for {key}: {raw!r}") from None
    return raw


@dataclass
class AntState:
    current: int
    visited: np.ndarray
    partial: list[int] = field(default_factory=list)

    @classmethod
    def at(cls, n: int, start: int) -> "AntState":
        visited = np.zeros(n, dtype=np.bool_)
        visited[start] = True
        return cls(start, visited, [start])

    def move_to(self, city: int) -> None:
        if self.visited[city]:
            raise ValueError(f"city {city} already visited")
        self.visited[city] = True
        self.partial.append(city)
        self.current = city

    @property
    def complete(self) -> bool:
        return len(self.partial) == self.visited.shape[0]

    def unvisited(self) -> np.ndarray:
        return np.flatnonzero(~self.visited)


def heuristic(inst: Instance, beta: float) -> np.ndarray:
    """eta^beta with eta = 1/max(d, 1)."""
    return _heuristic(inst, float(beta))


@lru_cache(maxsize=8)
def _heuristic(inst: Instance, beta: float) -> np.ndarray:
    eta = 1.0 / np.maximum(inst.matrix, 1).astype(np.float64)
    out = eta**beta
    out.setflags(write=False)
    return out


def transition_probabilities(
    store: PheromoneStore, inst: Instance, ant: AntState, alpha: float, beta: float
) -> np.ndarray:
    """Random-proportional probabilities over all cities (zero for visited ones)."""
    if ant.complete:
        raise ValueError("ant has no unvisited city left")
    r = ant.current
    eta = 1.0 / np.maximum(inst.matrix[r], 1).astype(np.float64)
    w = store.tau[r] ** alpha * eta**beta
    w[ant.visited] = 0.0
    return w / w.sum()


# --- construction kernels --------------------------------------------------

@njit(cache=True)
def edge_weight(tau, etab, alpha, r, s):
    if alpha == 1.0:
        return tau[r, s] * etab[r, s]
    return tau[r, s] ** alpha * etab[r, s]


@njit(cache=True)
def choose(cities, weights, count, exploit, v):
    """Argmax (first on ties) when ``exploit``, else roulette draw with ``v`` in [0, 1)."""
    if count == 1:
        return cities[0]
    if exploit:
        best = 0
        for i in range(1, count):
            if weights[i] > weights[best]:
                best = i
        return cities[best]
    total = 0.0
    for i in range(count):
        total += weights[i]
    if not (total > 0.0) or not np.isfinite(total):
        return cities[min(int(v * count), count - 1)]
    target = v * total
    acc = 0.0
    for i in range(count):
        acc += weights[i]
        if acc > target:
            return cities[i]
    for i in range(count - 1, -1, -1):
        if weights[i] > 0.0:
            return cities[i]
    return cities[count - 1]


@njit(cache=True)
def select_next_kernel(tau, etab, alpha, q0, r, visited, cand, q, v, buf_c, buf_w):
    count = 0
    for t in range(cand.shape[1]):
        c = cand[r, t]
        if not visited[c]:
            buf_c[count] = c
            buf_w[count] = edge_weight(tau, etab, alpha, r, c)
            count += 1
    if count == 0:
        for c in range(visited.shape[0]):
            if not visited[c]:
                buf_c[count] = c
                buf_w[count] = edge_weight(tau, etab, alpha, r, c)
                count += 1
    return choose(buf_c, buf_w, count, q < q0, v)


@njit(cache=True)
def construct_kernel(tau, etab, alpha, q0, cand, local, rho, tau0, start, u):
    """Build one tour; ``u`` supplies two uniforms per step. Local updates when ``local``."""
    n = tau.shape[0]
    order = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    buf_c = np.empty(n, dtype=np.int64)
    buf_w = np.empty(n, dtype=np.float64)
    order[0] = start
    visited[start] = True
    for k in range(1, n):
        r = order[k - 1]
        s = select_next_kernel(tau, etab, alpha, q0, r, visited, cand, u[2 * k], u[2 * k + 1],
                               buf_c, buf_w)
        order[k] = s
        visited[s] = True
        if local:
            local_update_kernel(tau, r, s, rho, tau0)
    if local and n > 1:
        local_update_kernel(tau, order[n - 1], order[0], rho, tau0)
    return order


def candidate_lists(inst: Instance, params: SolverParams) -> np.ndarray:
    if not params.candidate_lists:
        return np.zeros((inst.n, 0), dtype=np.int64)
    return inst.neighbor_lists(params.candidates)


def acs_select_next(
    store: PheromoneStore,
    inst: Instance,
    ant: AntState,
    params: SolverParams,
    rng: np.random.Generator,
) -> int:
    """Pseudo-random-proportional choice of the ant's next city."""
    if ant.complete:
        raise ValueError("ant has no unvisited city left")
    q, v = rng.random(2)
    buf_c = np.empty(inst.n, dtype=np.int64)
    buf_w = np.empty(inst.n, dtype=np.float64)
    return int(select_next_kernel(
        store.tau, heuristic(inst, params.beta), params.alpha, params.q0, ant.current,
        ant.visited, candidate_lists(inst, params), q, v, buf_c, buf_w,
    ))


def start_cities(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    if m <= n:
        return rng.choice(n, size=m, replace=False)
    return rng.integers(0, n, size=m)


def initial_tau0(inst: Instance) -> tuple[float, int]:
    """1 / (n * L_nn) for a nearest-neighbour tour from city 0."""
    l_nn = nearest_neighbor_tour(inst, 0).length
    return 1.0 / (inst.n * max(l_nn, 1)), l_nn


def run_engine(inst: Instance, params: SolverParams, observer=None) -> RunReport:
    """Run one seeded solver and report its best tour and best-so-far trace.

    ``observer(iteration, store, best, population)`` is called after every
    iteration; ``population`` is None for the classic engines.
    """
    if params.engine == "HACO-SA":
        from .smart import run_hacosa

        return run_hacosa(inst, params, observer)

    started = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    n = inst.n
    dist = inst.matrix
    etab = heuristic(inst, params.beta)
    cand = candidate_lists(inst, params)
    ls_nbrs = two_opt_neighbors(inst)
    tau0, l_nn = initial_tau0(inst)
    if params.tau0 is not None:
        tau0 = params.tau0

    engine = params.engine
    if engine == "MMAS":
        store = PheromoneStore(n, 1.0 / (params.evaporation * max(l_nn, 1)))
        store.set_mmas_bounds(max(l_nn, 1), params.evaporation, n)
    else:
        store = PheromoneStore(n, tau0)
    local = engine == "ACS"

    best: Tour | None = None
    trace: list[tuple[int, int]] = []
    built = 0
    last_gain = 0
    it = 0
    for it in range(1, params.iterations + 1):
        ants = []
        for start in start_cities(n, params.m, rng):
            u = rng.random(2 * n)
            order = construct_kernel(store.tau, etab, params.alpha, params.q0, cand, local,
                                     params.rho_local, tau0, int(start), u)
            if params.local_search:
                two_opt_kernel(order, dist, ls_nbrs)
            ants.append(Tour._trusted(inst, order))
        built += len(ants)
        it_best = min(ants, key=lambda t: t.length)
        if best is None or it_best.length < best.length:
            best = it_best
            last_gain = it
            if engine == "MMAS":
                store.set_mmas_bounds(best.length, params.evaporation, n)

        if engine == "AS":
            store.as_global_update(ants, params.evaporation)
        elif engine == "ACS":
            store.best_tour_update(best, params.rho_global, strict=params.strict_global)
        else:
            store.as_global_update([it_best], params.evaporation)
        trace.append((it, best.length))
        if observer is not None:
            observer(it, store, best, None)

        if params.stall is not None and it - last_gain >= params.stall:
            break
        if params.time_limit is not None and time.perf_counter() - started >= params.time_limit:
            break

    return RunReport(
        engine=engine,
        instance=inst.name,
        seed=params.seed,
        best_length=best.length,
        wall_time=time.perf_counter() - started,
        best_order=tuple(int(c) for c in best.order),
        trace=trace,
        iterations=it,
        tours_built=built,
    )
