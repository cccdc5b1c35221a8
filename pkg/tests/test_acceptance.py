"""End-to-end acceptance checks, one log line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also repeated in the terminal summary. The benchmark
criteria need the TSPLIB files under data/tsplib and take several minutes.
"""

import numpy as np
import pytest

from hacosa.aco import AntState, SolverParams, acs_select_next, run_engine, transition_probabilities
from hacosa.bench import ExperimentConfig, aggregate, render_runs_csv, run_experiment
from hacosa.genetic import ParentPair, igx_crossover
from hacosa.instance import fig4_fixture, random_instance
from hacosa.oracle import brute_force
from hacosa.pheromone import PheromoneStore
from hacosa.smart import SmartAnt, construct_child, smart_probabilities
from hacosa.tour import Tour, improving_reversal, tour_length, two_opt

from .conftest import DATA, held_karp, tsplib

pytestmark = pytest.mark.slow

LARGE = ("lin318", "pcb442", "att532", "rat783")
# literature means for the hybrid, informational only
REFERENCE_MEAN = {"lin318": 42219.33, "pcb442": 50907.15, "att532": 27761.3, "rat783": 8851.21}


def record(log, ok, label, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    log.append(line)
    print(line)
    return ok


def random_pair(inst, rng):
    n = inst.n
    return ParentPair(Tour.from_order(inst, rng.permutation(n)), Tour.from_order(inst, rng.permutation(n)))


def test_c1_small_instances_reach_exhaustive_optimum(acceptance_log):
    cases = [fig4_fixture()] + [
        random_instance(int(n), seed=1000 + k, scale=100)
        for k, n in enumerate(np.random.default_rng(0).integers(5, 11, 50))
    ]
    hits = total = 0
    misses = []
    for inst in cases:
        optimum, order = brute_force(inst)
        assert optimum == held_karp(inst.matrix) == tour_length(inst, order)
        for engine in ("MMAS", "HACO-SA"):
            for seed in range(3):
                rep = run_engine(inst, SolverParams.defaults(engine, iterations=200, seed=seed))
                total += 1
                if rep.best_length == optimum:
                    hits += 1
                else:
                    misses.append((inst.name, engine, seed, rep.best_length, optimum))
    rate = hits / total
    ok = record(acceptance_log, rate >= 0.95, "C1 oracle equivalence",
                f"{hits}/{total} runs optimal ({rate:.1%}, need >= 95%)")
    assert ok, misses


def _quality(name, runs=30):
    inst = tsplib(name)
    return [run_engine(inst, SolverParams.defaults("HACO-SA", seed=s)).best_length
            for s in range(runs)]


def test_c2_eil51_quality(acceptance_log):
    lengths = _quality("eil51")
    mean = float(np.mean(lengths))
    ok = record(acceptance_log, mean <= 432 and min(lengths) == 426, "C2 eil51",
                f"mean {mean:.2f} (<= 432), best {min(lengths)} (== 426)")
    assert ok


def test_c3_kroa100_quality(acceptance_log):
    lengths = _quality("kroA100")
    mean = float(np.mean(lengths))
    ok = record(acceptance_log, mean <= 21600, "C3 kroA100",
                f"mean {mean:.2f} (<= 21600), best {min(lengths)}")
    assert ok


@pytest.fixture(scope="module")
def large_experiment():
    missing = [n for n in LARGE if not (DATA / f"{n}.tsp").exists()]
    if missing:
        pytest.skip(f"missing instances {missing}")
    cfg = ExperimentConfig(instances=[str(DATA / f"{n}.tsp") for n in LARGE],
                           engines=["MMAS", "HACO-SA"], runs=30, budget="equal-tours")
    return {(a.instance, a.engine): a for a in aggregate(run_experiment(cfg))}


def test_c4_large_instance_ordering(acceptance_log, large_experiment):
    cells = large_experiment
    ok_all = True
    for name in ("pcb442", "att532"):
        m, h = cells[(name, "MMAS")].mean_cost, cells[(name, "HACO-SA")].mean_cost
        gap = (h - REFERENCE_MEAN[name]) / REFERENCE_MEAN[name]
        ok_all &= record(acceptance_log, h <= m, f"C4 {name}",
                         f"HACO-SA {h:.1f} <= MMAS {m:.1f} (gap to literature {gap:+.2%})")
    assert ok_all


def test_c5_speed_ratio(acceptance_log, large_experiment):
    cells = large_experiment
    ok_all = True
    for name in LARGE:
        m, h = cells[(name, "MMAS")].mean_time_s, cells[(name, "HACO-SA")].mean_time_s
        ok_all &= record(acceptance_log, h / m < 1.0, f"C5 {name}",
                         f"time ratio {h / m:.3f} ({h:.3f}s / {m:.3f}s, need < 1)")
    assert ok_all


def test_c6_normalization(acceptance_log):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(2000):
        n = int(rng.integers(3, 30))
        inst = random_instance(n, seed=int(rng.integers(10**6)))
        store = PheromoneStore(n, 1.0)
        store.tau[:] = rng.uniform(1e-3, 10, (n, n))
        store.tau[:] = (store.tau + store.tau.T) / 2
        path = rng.permutation(n)[: int(rng.integers(1, n))]
        ant = AntState.at(n, int(path[0]))
        for c in path[1:]:
            ant.move_to(int(c))
        alpha, beta = float(rng.uniform(0, 3)), float(rng.uniform(0, 5))
        worst = max(worst, abs(transition_probabilities(store, inst, ant, alpha, beta).sum() - 1))
        probs = smart_probabilities(store, inst, SmartAnt(ant, random_pair(inst, rng)), alpha, beta)
        if probs:
            worst = max(worst, abs(sum(probs.values()) - 1))
    ok = record(acceptance_log, worst <= 1e-12, "C6 probability normalization",
                f"max |sum - 1| = {worst:.2e} over 2000 states")
    assert ok


def test_c6_pheromone_invariants(acceptance_log):
    rng = np.random.default_rng(2)
    n = 12
    inst = random_instance(n, seed=5)
    tours = [Tour.from_order(inst, rng.permutation(n)) for _ in range(64)]
    store = PheromoneStore(n, 1.0 / (n * 5000))
    store.set_mmas_bounds(tours[0].length, 0.02)
    violations = 0
    ops = 100_000
    kinds = rng.integers(0, 4, ops)
    picks = rng.integers(0, len(tours), ops)
    rhos = rng.uniform(0.01, 0.9, ops)
    for k, t, rho in zip(kinds, picks, rhos):
        tour = tours[t]
        if k == 0:
            store.as_global_update([tour], rho)
        elif k == 1:
            r, s = rng.choice(n, 2, replace=False)
            store.local_update(int(r), int(s), rho)
        elif k == 2:
            store.best_tour_update(tour, rho)
        else:
            store.set_mmas_bounds(tour.length, 0.02)
        tau = store.tau
        if not (np.array_equal(tau, tau.T) and tau.min() >= store.tau_min and tau.max() <= store.tau_max):
            violations += 1
    ok = record(acceptance_log, violations == 0, "C6 pheromone symmetry and bounds",
                f"{violations} violations in {ops} operations")
    assert ok


def test_c6_two_opt(acceptance_log):
    rng = np.random.default_rng(3)
    bad = 0
    for k in range(1000):
        n = int(rng.integers(4, 80))
        inst = random_instance(n, seed=k)
        t = Tour.from_order(inst, rng.permutation(n))
        out = two_opt(inst, t)
        if out.length > t.length or improving_reversal(inst, out.order) is not None:
            bad += 1
    ok = record(acceptance_log, bad == 0, "C6 2-opt monotone and locally optimal",
                f"{bad} failures over 1000 random tours")
    assert ok


def test_c6_children_are_permutations(acceptance_log):
    rng = np.random.default_rng(4)
    params = SolverParams.defaults("HACO-SA")
    bad = 0
    insts = [random_instance(n, seed=n) for n in range(3, 61)]
    for _ in range(10_000):
        inst = insts[int(rng.integers(len(insts)))]
        pair = random_pair(inst, rng)
        children = [
            igx_crossover(inst, pair, rng),
            construct_child(PheromoneStore(inst.n, 0.01), inst,
                            SmartAnt(AntState.at(inst.n, int(rng.integers(inst.n))), pair), params, rng),
        ]
        for c in children:
            if sorted(c.order) != list(range(inst.n)) or c.length != tour_length(inst, c.order):
                bad += 1
    ok = record(acceptance_log, bad == 0, "C6 children are permutations",
                f"{bad} invalid children from 10000 parent pairs")
    assert ok


def test_c6_greedy_smart_ant_equals_igx(acceptance_log, parents):
    inst = fig4_fixture()
    rng = np.random.default_rng(5)
    params = SolverParams.defaults("HACO-SA", q0=1.0, beta=1.0)
    pairs = [parents] + [random_pair(inst, rng) for _ in range(200)]
    mismatches = 0
    for pair in pairs:
        for start in range(inst.n):
            store = PheromoneStore(inst.n, 0.05)
            smart = SmartAnt(AntState.at(inst.n, start), pair)
            child = construct_child(store, inst, smart, params, rng)
            greedy = igx_crossover(inst, pair, None, start=start)
            if not np.array_equal(child.order, greedy.order):
                mismatches += 1
    ok = record(acceptance_log, mismatches == 0, "C6 greedy smart ant == IGX",
                f"{mismatches} mismatches over {len(pairs) * inst.n} constructions")
    assert ok


def test_c6_sampling_frequencies(acceptance_log):
    inst = random_instance(9, seed=6, scale=100)
    rng = np.random.default_rng(7)
    store = PheromoneStore(9, 1.0)
    store.tau[:] = rng.uniform(0.2, 3.0, (9, 9))
    store.tau[:] = (store.tau + store.tau.T) / 2
    ant = AntState.at(9, 0)
    ant.move_to(3)
    draws = 100_000
    worst = 0.0
    for q0 in (0.0, 0.5):
        params = SolverParams.defaults("ACS", q0=q0, candidate_lists=False)
        p = transition_probabilities(store, inst, ant, params.alpha, params.beta)
        expect = (1 - q0) * p
        expect[int(np.argmax(p))] += q0
        counts = np.bincount([acs_select_next(store, inst, ant, params, rng) for _ in range(draws)],
                             minlength=9)
        sigma = np.sqrt(draws * expect * (1 - expect))
        z = np.abs(counts - draws * expect) / np.where(sigma > 0, sigma, 1)
        worst = max(worst, float(z.max()))
        if np.any(counts[expect == 0] > 0):
            worst = np.inf
    ok = record(acceptance_log, worst <= 3.0, "C6 sampling frequencies",
                f"max |z| = {worst:.2f} over {draws} draws per q0 (need <= 3)")
    assert ok


def test_c7_determinism(acceptance_log, tmp_path):
    path = tmp_path / "r30.tsp"
    path.write_text(random_instance(30, seed=8).to_tsplib())
    instances = ["fig4", str(path)]
    if (DATA / "eil51.tsp").exists():
        instances.append(str(DATA / "eil51.tsp"))
    cfg = ExperimentConfig(instances=instances, engines=["AS", "ACS", "MMAS", "HACO-SA"], runs=2,
                           budget="fixed-iterations", overrides={"*": {"iterations": "40"}})
    a, b = run_experiment(cfg), run_experiment(cfg)
    same_traces = all(x.trace == y.trace and x.best_order == y.best_order for x, y in zip(a, b))
    same_csv = render_runs_csv(a, with_time=False).encode() == render_runs_csv(b, with_time=False).encode()
    ok = record(acceptance_log, same_traces and same_csv, "C7 determinism",
                f"{len(a)} run pairs, traces equal: {same_traces}, csv byte-equal: {same_csv}")
    assert ok
