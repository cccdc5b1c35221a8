import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hacosa.genetic import (
    ParentPair,
    Population,
    assign_parents,
    candidate_set,
    igx_crossover,
    init_population,
    steady_state_replace,
)
from hacosa.instance import random_instance
from hacosa.tour import Tour, tour_length

from .conftest import PARENT1, PARENT2


def labels(cities):
    return {c + 1 for c in cities}


def visited_mask(n, labels_):
    v = np.zeros(n, dtype=bool)
    for c in labels_:
        v[c - 1] = True
    return v


def greedy_by_hand(dist, p1, p2, start):
    """Plain re-execution of the min-cost parent-neighbour rule, no shared code."""
    n = len(p1)
    adj = {c: [] for c in range(n)}
    for p in (p1, p2):
        for k, c in enumerate(p):
            adj[c] += [p[k - 1], p[(k + 1) % n]]
    order, seen = [start], {start}
    while len(order) < n:
        r = order[-1]
        options = [c for c in dict.fromkeys(adj[r]) if c not in seen]
        if not options:
            options = sorted((c for c in range(n) if c not in seen), key=lambda c: dist[r][c])[:1]
        s = min(options, key=lambda c: dist[r][c])
        order.append(s)
        seen.add(s)
    return order


def test_pair_table_matches_cyclic_orders(parents):
    pair = parents
    p1 = [c - 1 for c in PARENT1]
    for k, c in enumerate(p1):
        assert pair.table[c, 0] == p1[k - 1]
        assert pair.table[c, 1] == p1[(k + 1) % 8]


def test_candidate_set_examples(fig4, parents):
    assert labels(candidate_set(parents, 0, np.zeros(8, bool))) == {6, 2, 5, 7}
    assert candidate_set(parents, 0, visited_mask(8, [1, 6, 2, 5, 7])) == []
    same = ParentPair(parents.p1, parents.p1)
    for r in range(8):
        assert len(candidate_set(same, r, np.zeros(8, bool))) <= 2


def test_igx_first_step_picks_cheapest(fig4, parents):
    child = igx_crossover(fig4, parents, np.random.default_rng(0), start=0)
    assert child.order[1] + 1 == 2


def test_igx_full_trace_from_city_one(fig4, parents):
    child = igx_crossover(fig4, parents, np.random.default_rng(0), start=0)
    # 1 -> 2 (12) -> 3 (15) -> 7 (35, tie with 6 broken by table order) -> 5 -> 4 -> 8 -> 6
    assert [c + 1 for c in child.order] == [1, 2, 3, 7, 5, 4, 8, 6]
    assert child.length == 195
    for start in range(8):
        got = igx_crossover(fig4, parents, None, start=start)
        expect = greedy_by_hand(fig4.matrix.tolist(), parents.p1.order.tolist(),
                                parents.p2.order.tolist(), start)
        assert got.order.tolist() == expect


def test_igx_identical_parents_reproduce_parent(fig4, parents):
    same = ParentPair(parents.p1, parents.p1)
    for start in range(8):
        child = igx_crossover(fig4, same, None, start=start)
        assert child.edges() == parents.p1.edges()
        assert child.length == parents.p1.length == 195


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 70), st.integers(0, 10**6))
def test_igx_children_are_permutations(n, seed):
    inst = random_instance(n, seed)
    rng = np.random.default_rng(seed)
    pair = ParentPair(Tour.from_order(inst, rng.permutation(n)),
                      Tour.from_order(inst, rng.permutation(n)))
    child = igx_crossover(inst, pair, rng)
    assert sorted(child.order) == list(range(n))
    assert child.length == tour_length(inst, child.order)


def _tour_in(inst, lo, hi, rng):
    while True:
        t = Tour.from_order(inst, rng.permutation(inst.n))
        if lo < t.length < hi:
            return t


@pytest.fixture
def trio(fig4, parents):
    rng = np.random.default_rng(1)
    third = _tour_in(fig4, 0, 10**6, rng)
    pop = Population([parents.p1, parents.p2, third])
    return pop, ParentPair(pop[0], pop[1], (0, 1)), rng


def test_replace_child_better_than_both(fig4, trio):
    pop, pair, rng = trio
    child = _tour_in(fig4, 0, 195, rng)
    assert steady_state_replace(pop, child, pair)
    assert pop[1] is child and pop[0] is pair.p1


def test_replace_child_between_parents(fig4, trio):
    pop, pair, rng = trio
    child = _tour_in(fig4, 195, 251, rng)
    assert steady_state_replace(pop, child, pair)
    assert pop[1] is child


def test_replace_child_worse_than_both(fig4, trio):
    pop, pair, rng = trio
    before = list(pop.members)
    child = _tour_in(fig4, 251, 10**6, rng)
    assert not steady_state_replace(pop, child, pair)
    assert pop.members == before


def test_replace_drops_duplicate_cycle(fig4, trio):
    pop, pair, _ = trio
    twin = Tour.from_order(fig4, pop[0].order[::-1])
    assert not steady_state_replace(pop, twin, pair)
    assert pop[1] is pair.p2


def test_replace_uses_current_slot_occupants(fig4, trio):
    pop, pair, rng = trio
    first = _tour_in(fig4, 0, 160, rng)
    assert steady_state_replace(pop, first, pair)
    # slot 1 now holds `first`, so the longer occupant is slot 0 (195)
    second = _tour_in(fig4, 160, 195, rng)
    assert steady_state_replace(pop, second, pair)
    assert pop[0] is second and pop[1] is first


def test_replace_locates_slots_by_identity(fig4, trio):
    pop, _, rng = trio
    pair = ParentPair(pop[0], pop[1])
    child = _tour_in(fig4, 0, 195, rng)
    assert steady_state_replace(pop, child, pair)
    assert pop[1] is child


def test_assign_parents_cardinality_and_distinctness(fig4, parents):
    rng = np.random.default_rng(2)
    pop = Population([parents.p1, parents.p2])
    pairs = assign_parents(pop, 7, rng)
    assert len(pairs) == 7
    for pr in pairs:
        assert {id(pr.p1), id(pr.p2)} == {id(pop[0]), id(pop[1])}


def test_assign_parents_rejects_tiny_population(parents):
    pop = Population([parents.p1, parents.p2])
    pop.members.pop()
    with pytest.raises(ValueError):
        assign_parents(pop, 1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        Population([parents.p1])


def test_assign_parents_uniform_frequencies():
    inst = random_instance(12, seed=3)
    rng = np.random.default_rng(4)
    pop = init_population(inst, 5, rng)
    draws = 20_000
    counts = np.zeros(5)
    for pr in assign_parents(pop, draws, rng):
        i, j = pr.slots
        assert i != j
        counts[i] += 1
        counts[j] += 1
    p = 2 / 5
    assert np.all(np.abs(counts - draws * p) <= 3 * np.sqrt(draws * p * (1 - p)))


def test_population_best_never_increases():
    inst = random_instance(40, seed=5)
    rng = np.random.default_rng(6)
    pop = init_population(inst, 10, rng)
    assert len(pop) == 10 and all(sorted(t.order) == list(range(40)) for t in pop.members)
    best = pop.best().length
    for _ in range(300):
        pair = assign_parents(pop, 1, rng)[0]
        steady_state_replace(pop, igx_crossover(inst, pair, rng), pair)
        assert len(pop) <= pop.capacity
        assert pop.best().length <= best
        best = pop.best().length
