"""Brute-force reference implementations used to derive frozen test values.

Every function here enumerates hypotheses directly (or solves a small LP for
halfspaces) and shares no code with the package's compiled summaries.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def _thr_candidates(points):
    vals = sorted({Fraction(p) for p in points} | {Fraction(0), Fraction(1)})
    mids = [(a + b) / 2 for a, b in zip(vals, vals[1:])]
    return [v for v in vals + mids if 0 <= v <= 1]


def thresholds_hypotheses(points):
    return [lambda x, t=t: int(Fraction(x) <= t) for t in _thr_candidates(points)]


def boxes_hypotheses(points, p):
    coords = [sorted({float(x[i]) for x in points}) for i in range(p)]
    hyps = [lambda x: 0]
    per_dim = [[(lo, hi) for lo in c for hi in c if lo <= hi] for c in coords]
    for box in itertools.product(*per_dim):
        hyps.append(lambda x, box=box: int(all(lo <= x[i] <= hi for i, (lo, hi) in enumerate(box))))
    return hyps


def tree_hypotheses(arity, depth):
    nodes = [()]
    for L in range(1, depth + 1):
        nodes += list(itertools.product(range(1, arity + 1), repeat=L))
    return [lambda x, n=n: int(tuple(x) == n[:len(x)]) for n in nodes]


def subset_hypotheses(d, ground):
    hyps = []
    for r in range(d + 1):
        for s in itertools.combinations(ground, r):
            hyps.append(lambda x, s=frozenset(s): int(x in s))
    return hyps


def halfspace_realizable(data):
    """LP feasibility of a.x >= b on positives and a.x <= b - 1 on negatives."""
    if not data:
        return True
    A, rhs = [], []
    for (x, y) in data:
        row = [float(x[0]), float(x[1]), -1.0]
        if y == 1:
            A.append([-v for v in row])
            rhs.append(0.0)
        else:
            A.append(row)
            rhs.append(-1.0)
    res = linprog(np.zeros(3), A_ub=A, b_ub=rhs, bounds=[(None, None)] * 3, method="highs")
    return res.status == 0


def realizable(kind, data, **kw):
    """Whether some hypothesis labels every (x, y) in ``data`` as given."""
    if kind == "halfspaces":
        return halfspace_realizable(data)
    pts = [x for x, _ in data]
    if kind == "thresholds":
        hyps = thresholds_hypotheses(pts + kw.get("extra", []))
    elif kind == "rectangles":
        if not pts:
            return True
        hyps = boxes_hypotheses(pts, kw["p"])
    elif kind == "tree":
        hyps = tree_hypotheses(kw["arity"], kw["depth"])
    elif kind == "subsets":
        hyps = subset_hypotheses(kw["d"], kw["ground"])
    else:
        raise ValueError(kind)
    return any(all(h(x) == y for x, y in data) for h in hyps)


def shatters(kind, constraints, points, **kw):
    return all(realizable(kind, list(constraints) + list(zip(points, labs)), **kw)
               for labs in itertools.product((0, 1), repeat=len(points)))


def in_disagreement(kind, constraints, x, **kw):
    return shatters(kind, constraints, [x], **kw)


def _distinct(pts):
    out = []
    for p in pts:
        if p not in out:
            out.append(p)
    return out


def exact_rho(kind, constraints, support, weights, k, **kw):
    """Sum over ordered k-tuples of weight products times 1[distinct set shattered]."""
    total = 0.0
    for idx in itertools.product(range(len(support)), repeat=k):
        pts = _distinct([support[i] for i in idx])
        if shatters(kind, constraints, pts, **kw):
            total += float(np.prod([weights[i] for i in idx]))
    return total


def u_stat(kind, constraints, block, k, **kw):
    subs = list(itertools.combinations(range(len(block)), k))
    hits = sum(shatters(kind, constraints, _distinct([block[i] for i in s]), **kw) for s in subs)
    return hits / len(subs)


def projections(kind, test_points, pool, l, **kw):
    """Distinct sets of realizable labelings of ``test_points`` over datasets of size <= l."""
    seen = set()
    for r in range(l + 1):
        for pts in itertools.combinations(pool, r):
            for labs in itertools.product((0, 1), repeat=r):
                cons = list(zip(pts, labs))
                proj = frozenset(
                    sum(y << i for i, y in enumerate(labs2))
                    for labs2 in itertools.product((0, 1), repeat=len(test_points))
                    if realizable(kind, cons + list(zip(test_points, labs2)), **kw))
                seen.add(proj)
    return len(seen)
