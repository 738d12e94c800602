"""Brute-force counting of distinct reduced classes projected onto test points.

For every dataset of at most ``l`` labeled points drawn from a candidate
pool, the reduced class is projected onto the test points as the set of
labelings it realizes there (a set of bitmasks). The number of distinct
projections is compared with closed-form upper bounds per class.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InputError
from .hypothesis import (ClassSpec, Halfspaces2D, Rectangles, SubsetsOfSize, Thresholds,
                         TreePaths, _distinct)

MAX_TEST_POINTS = 16
DEFAULT_BUDGET = 2_000_000


@dataclass
class ReductionCountReport:
    spec: str
    n: int
    l: int
    pool_size: int
    datasets: int
    count: int
    bound: float
    satisfied: bool
    exponent: float
    poly_bound: float | None = None
    projections: set = field(default_factory=set, repr=False)

    def as_row(self) -> dict:
        return {"spec": self.spec, "n": self.n, "l": self.l, "pool_size": self.pool_size,
                "datasets": self.datasets, "count": self.count, "bound": self.bound,
                "satisfied": self.satisfied, "exponent": self.exponent,
                "poly_bound": self.poly_bound}


def projection(spec: ClassSpec, state, test_points: Sequence) -> frozenset:
    """Bitmasks (bit i = label of test point i) of all realizable labelings."""
    out = []
    n = len(test_points)

    def walk(i, st, mask):
        if i == n:
            out.append(mask)
            return
        x = test_points[i]
        for y in (0, 1):
            nxt = spec.extend(st, x, y)
            if spec.is_feasible(nxt):
                walk(i + 1, nxt, mask | (y << i))

    if spec.is_feasible(state):
        walk(0, state, 0)
    return frozenset(out)


def explicit_bound(spec: ClassSpec, n: int, l: int) -> float:
    """Closed-form upper bound on the number of projections for ``spec``."""
    if isinstance(spec, Rectangles):
        return 1 + (n + 1) ** (4 * spec.p)
    if isinstance(spec, SubsetsOfSize):
        return 1 + math.e * spec.d * n ** l
    if isinstance(spec, (Thresholds, TreePaths)):
        return 1 + sum((2 * n) ** r + (2 * n) ** (r - 1) * 4 * n for r in range(l + 1))
    if isinstance(spec, Halfspaces2D):
        d = 2
        total = 1.0  # no extra points: a single configuration
        for lp in range(1, l + 1):
            total += (8 * math.e * (d + 1) / (d * lp) * math.comb(n + lp, d + 1)) ** (d * lp)
        return total
    raise InputError(f"no explicit bound for {spec!r}")


def default_pool(spec: ClassSpec, test_points: Sequence) -> list:
    """Test points plus midpoints and outer points (a grid refinement)."""
    if isinstance(spec, SubsetsOfSize):
        return list(spec.ground)
    if isinstance(spec, Thresholds) or (isinstance(spec, Rectangles) and spec.p == 1):
        vals = sorted({float(x if isinstance(spec, Thresholds) else x[0]) for x in test_points})
        mids = [(a + b) / 2 for a, b in zip(vals, vals[1:])]
        extra = [max(0.0, vals[0] / 2), min(1.0, (vals[-1] + 1) / 2)]
        pts = sorted(set(vals + mids + extra))
        return pts if isinstance(spec, Thresholds) else [(v,) for v in pts]
    if isinstance(spec, (Rectangles, Halfspaces2D)):
        pts = [tuple(map(float, x)) for x in test_points]
        arr = list(zip(*pts))
        lo = [min(a) - 0.5 for a in arr]
        hi = [max(a) + 0.5 for a in arr]
        grid = itertools.product(*[(lo[i], (lo[i] + hi[i]) / 2, hi[i]) for i in range(len(arr))])
        return _distinct(pts + [tuple(g) for g in grid])
    if isinstance(spec, TreePaths):
        return _distinct(list(test_points) + [x[:-1] for x in test_points if x])
    raise InputError(f"no default pool for {spec!r}")


def count_reductions(spec: ClassSpec, test_points: Sequence, l: int,
                     candidate_pool: Sequence | None = None, budget: int = DEFAULT_BUDGET,
                     poly_exponent: float | None = None) -> ReductionCountReport:
    """Count distinct projections of reductions by at most ``l`` labeled pool points."""
    test = [spec.check_point(x) for x in test_points]
    n = len(test)
    if n > MAX_TEST_POINTS:
        raise InputError(f"at most {MAX_TEST_POINTS} test points are supported")
    if len(_distinct(test)) != n:
        raise InputError("test points must be distinct")
    if l < 0:
        raise InputError("l must be >= 0")
    pool = default_pool(spec, test) if candidate_pool is None else \
        _distinct([spec.check_point(x) for x in candidate_pool])
    if len(pool) ** l * 2 ** l > budget:
        raise InputError(f"|pool|^l 2^l = {len(pool) ** l * 2 ** l} exceeds budget {budget}")
    seen = set()
    datasets = 0
    empty = spec.empty_state()
    for r in range(l + 1):
        for pts in itertools.combinations(pool, r):
            for labels in itertools.product((0, 1), repeat=r):
                st = empty
                for x, y in zip(pts, labels):
                    st = spec.extend(st, x, y)
                seen.add(projection(spec, st, test))
                datasets += 1
    count = len(seen)
    bound = explicit_bound(spec, n, l)
    exponent = math.log(count) / math.log(n) if n > 1 else 0.0
    poly = n ** poly_exponent if poly_exponent is not None else None
    return ReductionCountReport(spec.name, n, l, len(pool), datasets, count, bound,
                                count <= bound, exponent, poly, seen)


def default_test_points(spec: ClassSpec, n: int) -> list:
    """``n`` distinct test points: an even grid, or points on a convex arc in the plane."""
    if n < 1:
        raise InputError("need at least one test point")
    axis = [(i + 1) / (n + 1) for i in range(n)]
    if isinstance(spec, Thresholds):
        return axis
    if isinstance(spec, Rectangles):
        return [tuple([v] * spec.p) for v in axis]
    if isinstance(spec, Halfspaces2D):
        return [(v, (v - 0.5) ** 2) for v in axis]
    if isinstance(spec, SubsetsOfSize):
        if n > len(spec.ground):
            raise InputError("more test points than ground elements")
        return list(spec.ground[:n])
    if isinstance(spec, TreePaths):
        if n > spec.arity:
            raise InputError("more test points than children of the root")
        return [(i + 1,) for i in range(n)]
    raise InputError(f"no default test points for {spec!r}")
