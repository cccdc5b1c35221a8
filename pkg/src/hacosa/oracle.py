"""Exhaustive-search optimum for tiny instances."""

from __future__ import annotations

import itertools

import numpy as np

from .instance import Instance

MAX_ORACLE_CITIES = 12
_CHUNK = 200_000


class OracleTooLarge(ValueError):
    pass


def brute_force(inst: Instance, limit: int = MAX_ORACLE_CITIES) -> tuple[int, list[int]]:
    """Optimal length and one optimal order, enumerating every distinct tour.

    City 0 is fixed first and a tour is kept only when its second city is
    smaller than its last, so each cycle is evaluated once: (n-1)!/2 tours.
    """
    n = inst.n
    if n > limit:
        raise OracleTooLarge(f"brute force refuses n={n} (limit {limit})")
    d = inst.matrix
    if n <= 3:
        order = list(range(n))
        return int(sum(d[order[k], order[(k + 1) % n]] for k in range(n))), order
    best_len = None
    best_order = None
    perms = itertools.permutations(range(1, n))
    while True:
        chunk = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(perms, _CHUNK)), dtype=np.int64
        )
        if chunk.size == 0:
            break
        rest = chunk.reshape(-1, n - 1)
        rest = rest[rest[:, 0] < rest[:, -1]]
        if rest.shape[0] == 0:
            continue
        lengths = d[0, rest[:, 0]] + d[rest[:, -1], 0]
        for k in range(n - 2):
            lengths = lengths + d[rest[:, k], rest[:, k + 1]]
        i = int(np.argmin(lengths))
        if best_len is None or lengths[i] < best_len:
            best_len = int(lengths[i])
            best_order = [0] + [int(c) for c in rest[i]]
    return best_len, best_order


def count_distinct_tours(n: int) -> int:
    f = 1
    for k in range(2, n):
        f *= k
    return f // 2
