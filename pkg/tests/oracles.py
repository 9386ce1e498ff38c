"""Independent reference computations used by the tests."""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache


def brute_edit_distance(a, b) -> int:
    """Edit distance by plain recursion over suffixes (memoized, no DP table)."""
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        return min(go(i + 1, j + 1) + (a[i] != b[j]), go(i + 1, j) + 1, go(i, j + 1) + 1)

    return go(0, 0)


def optimal_count_triples(a, b) -> set[tuple[int, int, int]]:
    """Every (S, D, I) triple reachable by some minimum-cost edit script."""
    a, b = tuple(a), tuple(b)
    best = brute_edit_distance(a, b)

    @lru_cache(maxsize=None)
    def go(i, j):
        # all (S, D, I) of complete scripts for the suffixes
        if i == len(a):
            return frozenset({(0, 0, len(b) - j)})
        if j == len(b):
            return frozenset({(0, len(a) - i, 0)})
        out = set()
        for s, d, n in go(i + 1, j + 1):
            out.add((s + (a[i] != b[j]), d, n))
        for s, d, n in go(i + 1, j):
            out.add((s, d + 1, n))
        for s, d, n in go(i, j + 1):
            out.add((s, d, n + 1))
        return frozenset(out)

    return {t for t in go(0, 0) if sum(t) == best}


def mwu_null_by_enumeration(na: int, nb: int) -> dict[int, int]:
    """Count rank arrangements for each U of the first sample (no ties)."""
    n = na + nb
    counts: dict[int, int] = {}
    for pos in itertools.combinations(range(1, n + 1), na):
        u = sum(pos) - na * (na + 1) // 2
        counts[u] = counts.get(u, 0) + 1
    return counts


def mwu_exact_p(u: int, counts: dict[int, int]) -> float:
    total = sum(counts.values())
    le = sum(c for k, c in counts.items() if k <= u)
    ge = sum(c for k, c in counts.items() if k >= u)
    return float(min(Fraction(1), Fraction(2 * min(le, ge), total)))
