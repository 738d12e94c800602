"""Hypothesis classes with exact realizability oracles.

Every class is described by a :class:`ClassSpec`. A :class:`ReducedClass`
pairs a spec with a list of labeled constraints and answers shattering,
disagreement and consistency queries for the subclass that agrees with
those constraints.

Each spec compiles its constraints into a small summary ("state") that is
extended one example at a time, so reducing a class is cheap. Thresholds
and rectangles additionally provide vectorized disagreement and batch
shattering tests used by the estimators; the remaining specs fall back to
enumerating labelings through :meth:`ClassSpec.realizable`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from .errors import ContractError, InputError, StateError

DEFAULT_SHATTER_CAP = 12

Point = Any
LabeledExample = tuple  # (point, label)


def _check_label(y) -> int:
    if y not in (0, 1):
        raise InputError(f"label must be 0 or 1, got {y!r}")
    return int(y)


class ClassSpec:
    """Base class for hypothesis class descriptors.

    Subclasses implement point validation, a compiled constraint summary and
    an exact realizability test. The vectorized hooks have generic defaults.
    """

    vc_dim: int = 1
    name: str = "spec"

    # -- points -------------------------------------------------------------
    def check_point(self, x) -> Point:
        raise NotImplementedError

    def as_array(self, points: Sequence[Point]) -> np.ndarray:
        arr = np.empty(len(points), dtype=object)
        for i, p in enumerate(points):
            arr[i] = p
        return arr

    def encode(self, x) -> str:
        return str(x)

    def decode(self, s: str) -> Point:
        raise NotImplementedError

    # -- constraint summaries ----------------------------------------------
    def empty_state(self):
        raise NotImplementedError

    def extend(self, state, x, y):
        """Return the summary of the class after adding constraint (x, y)."""
        raise NotImplementedError

    def is_feasible(self, state) -> bool:
        raise NotImplementedError

    def realizable_with(self, state, dataset: Sequence[LabeledExample]) -> bool:
        for x, y in dataset:
            state = self.extend(state, x, y)
            if not self.is_feasible(state):
                return False
        return self.is_feasible(state)

    # -- vectorized hooks ---------------------------------------------------
    def disagreement_mask(self, state, arr: np.ndarray) -> np.ndarray:
        out = np.zeros(len(arr), dtype=bool)
        if not self.is_feasible(state):
            return out
        for i, x in enumerate(arr):
            out[i] = (self.realizable_with(state, [(x, 0)])
                      and self.realizable_with(state, [(x, 1)]))
        return out

    def shattered_batch(self, state, arr: np.ndarray, idx: np.ndarray) -> np.ndarray:
        """Shattering test for many small index tuples at once.

        ``idx`` has shape (B, k) and indexes into ``arr``. Repeated points in a
        tuple collapse to their distinct set.
        """
        out = np.zeros(len(idx), dtype=bool)
        for r, row in enumerate(idx):
            pts = _distinct([arr[i] for i in row])
            out[r] = _shatters_state(self, state, pts)
        return out


def _distinct(points: Iterable[Point]) -> list:
    seen = []
    for p in points:
        if not any(_same_point(p, q) for q in seen):
            seen.append(p)
    return seen


def _same_point(p, q) -> bool:
    if isinstance(p, np.ndarray) or isinstance(q, np.ndarray):
        return bool(np.array_equal(np.asarray(p), np.asarray(q)))
    return p == q


def _shatters_state(spec: ClassSpec, state, points: Sequence[Point]) -> bool:
    n = len(points)
    for bits in itertools.product((0, 1), repeat=n):
        if not spec.realizable_with(state, list(zip(points, bits))):
            return False
    return True


# ---------------------------------------------------------------------------
# Thresholds: x -> 1[x <= x0], x0 in [0, 1]
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Thresholds(ClassSpec):
    """Functions ``1[x <= x0]`` on [0, 1] with ``x0`` in the closed interval.

    The summary is ``(lo, hi)``: ``x0`` must satisfy ``lo <= x0 < hi``.
    """

    vc_dim = 1
    name = "thresholds"

    def check_point(self, x) -> float:
        try:
            v = float(x)
        except (TypeError, ValueError):
            raise InputError(f"threshold point must be a real number, got {x!r}")
        if not 0.0 <= v <= 1.0:
            raise InputError(f"threshold point {v} outside [0, 1]")
        return v

    def as_array(self, points):
        return np.asarray(points, dtype=float).reshape(-1)

    def encode(self, x):
        return format(float(x), ".17g")

    def decode(self, s):
        return float(s)

    def empty_state(self):
        return (0.0, math.inf)

    def extend(self, state, x, y):
        lo, hi = state
        return (max(lo, x), hi) if y == 1 else (lo, min(hi, x))

    def is_feasible(self, state):
        lo, hi = state
        return lo < hi and lo <= 1.0

    def disagreement_mask(self, state, arr):
        lo, hi = state
        if not self.is_feasible(state):
            return np.zeros(len(arr), dtype=bool)
        return (arr > lo) & (arr < hi)

    def shattered_batch(self, state, arr, idx):
        if idx.shape[1] == 0:
            return np.ones(len(idx), dtype=bool)
        vals = np.sort(arr[idx], axis=1)
        single = (vals[:, 0] == vals[:, -1])
        return single & self.disagreement_mask(state, vals[:, 0])


# ---------------------------------------------------------------------------
# Axis-aligned rectangles in R^p
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _BoxState:
    lo: np.ndarray | None
    hi: np.ndarray | None
    neg: np.ndarray  # (Q, p)
    feasible: bool


@dataclass(frozen=True)
class Rectangles(ClassSpec):
    """Indicators of closed axis-aligned boxes ``[a, b]`` in R^p (the empty box included)."""

    p: int = 2
    name = "rectangles"

    def __post_init__(self):
        if int(self.p) < 1:
            raise InputError("rectangle dimension p must be >= 1")

    @property
    def vc_dim(self) -> int:
        return 2 * self.p

    def check_point(self, x):
        v = np.asarray(x, dtype=float).reshape(-1)
        if v.shape != (self.p,) or not np.all(np.isfinite(v)):
            raise InputError(f"expected a finite point of dimension {self.p}, got {x!r}")
        return tuple(float(c) for c in v)

    def as_array(self, points):
        return np.asarray(points, dtype=float).reshape(-1, self.p)

    def encode(self, x):
        return ";".join(format(float(c), ".17g") for c in x)

    def decode(self, s):
        return tuple(float(c) for c in s.split(";"))

    def empty_state(self):
        return _BoxState(None, None, np.empty((0, self.p)), True)

    def extend(self, st: _BoxState, x, y):
        x = np.asarray(x, dtype=float)
        if y == 1:
            lo = x.copy() if st.lo is None else np.minimum(st.lo, x)
            hi = x.copy() if st.hi is None else np.maximum(st.hi, x)
            neg = st.neg
        else:
            lo, hi = st.lo, st.hi
            neg = np.vstack([st.neg, x[None, :]])
        feasible = st.feasible
        if feasible and lo is not None:
            if y == 1:
                feasible = not _any_inside(neg, lo, hi)
            else:
                feasible = not bool(np.all((x >= lo) & (x <= hi)))
        return _BoxState(lo, hi, neg, feasible)

    def is_feasible(self, st):
        return st.feasible

    def disagreement_mask(self, st: _BoxState, arr):
        arr = np.asarray(arr, dtype=float).reshape(-1, self.p)
        if not st.feasible:
            return np.zeros(len(arr), dtype=bool)
        if st.lo is None:
            if len(st.neg) == 0:
                return np.ones(len(arr), dtype=bool)
            hit = np.all(arr[:, None, :] == st.neg[None, :, :], axis=2).any(axis=1)
            return ~hit
        inside = np.all((arr >= st.lo) & (arr <= st.hi), axis=1)
        lo = np.minimum(arr, st.lo)
        hi = np.maximum(arr, st.hi)
        ok1 = ~_inside_batch(st.neg, lo, hi)
        return ~inside & ok1

    def shattered_batch(self, st: _BoxState, arr, idx):
        # A point q lies in the bounding box of a set S iff, on every axis, some
        # member of S is <= q and some member is >= q. Each point gets a bit code
        # per reference point; q is covered iff the OR over S has all bits set.
        arr = np.asarray(arr, dtype=float).reshape(-1, self.p)
        B, k = idx.shape
        if k == 0:
            return np.ones(B, dtype=bool)
        if not st.feasible or B == 0:
            return np.zeros(B, dtype=bool)
        used = np.unique(idx)
        sub = arr[used]
        local = np.searchsorted(used, idx)
        neg = st.neg
        if len(neg):
            glo, ghi = sub.min(axis=0), sub.max(axis=0)
            if st.lo is not None:
                glo, ghi = np.minimum(glo, st.lo), np.maximum(ghi, st.hi)
            neg = neg[np.all((neg >= glo) & (neg <= ghi), axis=1)]
        full = (1 << (2 * self.p)) - 1
        code_neg = _box_codes(sub, neg)            # (n, Q)
        code_pair = _box_codes(sub, sub)           # (n, n): member i vs reference j
        if st.lo is None:
            a_neg = np.zeros(len(neg), dtype=np.uint32)
            a_pair = np.zeros(len(sub), dtype=np.uint32)
        else:
            box = np.stack([st.lo, st.hi])
            a_neg = np.bitwise_or.reduce(_box_codes(box, neg), axis=0) if len(neg) else \
                np.zeros(0, dtype=np.uint32)
            a_pair = np.bitwise_or.reduce(_box_codes(box, sub), axis=0)
        same = np.all(sub[:, None, :] == sub[None, :, :], axis=2)
        ok = np.ones(B, dtype=bool)
        for bits in itertools.product((0, 1), repeat=k):
            pos_i = [i for i in range(k) if bits[i]]
            neg_i = [i for i in range(k) if not bits[i]]
            if not pos_i and st.lo is None:
                continue  # the empty box realizes the all-zero labeling
            rows = np.flatnonzero(ok)
            if len(rows) == 0:
                break
            li = local[rows]
            clash = np.zeros(len(rows), dtype=bool)
            for a in pos_i:
                for b in neg_i:
                    clash |= same[li[:, a], li[:, b]]
            if len(neg):
                acc = np.broadcast_to(a_neg, (len(rows), len(neg))).copy()
                for a in pos_i:
                    acc |= code_neg[li[:, a]]
                bad = (acc == full).any(axis=1)
            else:
                bad = np.zeros(len(rows), dtype=bool)
            for b in neg_i:
                acc = a_pair[li[:, b]].copy()
                for a in pos_i:
                    acc |= code_pair[li[:, a], li[:, b]]
                bad |= acc == full
            ok[rows[bad & ~clash]] = False
        return ok


def _box_codes(members: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """Bit 2d: member <= ref on axis d; bit 2d+1: member >= ref on axis d."""
    p = members.shape[1]
    out = np.zeros((len(members), len(refs)), dtype=np.uint32)
    if len(refs) == 0:
        return out
    for d in range(p):
        m = members[:, d][:, None]
        r = refs[:, d][None, :]
        out |= (m <= r).astype(np.uint32) << (2 * d)
        out |= (m >= r).astype(np.uint32) << (2 * d + 1)
    return out


def _any_inside(neg: np.ndarray, lo, hi) -> bool:
    if len(neg) == 0:
        return False
    return bool(np.all((neg >= lo) & (neg <= hi), axis=1).any())


def _inside_batch(neg: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """For each row box ``[lo[r], hi[r]]``, whether any point of ``neg`` lies in it."""
    if len(neg) == 0:
        return np.zeros(len(lo), dtype=bool)
    inside = (neg[None, :, :] >= lo[:, None, :]) & (neg[None, :, :] <= hi[:, None, :])
    return inside.all(axis=2).any(axis=1)


# ---------------------------------------------------------------------------
# Halfspaces in the plane: 1[a.x >= b]
# ---------------------------------------------------------------------------

def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull(points):
    """Monotone-chain convex hull in counter-clockwise order, collinear points dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _on_segment(p, q, r):
    return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))


def _segments_meet(p1, p2, q1, q2):
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    return ((d1 == 0 and _on_segment(q1, q2, p1)) or (d2 == 0 and _on_segment(q1, q2, p2))
            or (d3 == 0 and _on_segment(p1, p2, q1)) or (d4 == 0 and _on_segment(p1, p2, q2)))


def _in_hull(q, hull):
    if len(hull) == 1:
        return q == hull[0]
    if len(hull) == 2:
        return _cross(hull[0], hull[1], q) == 0 and _on_segment(hull[0], hull[1], q)
    n = len(hull)
    return all(_cross(hull[i], hull[(i + 1) % n], q) >= 0 for i in range(n))


def _edges(hull):
    if len(hull) < 2:
        return []
    if len(hull) == 2:
        return [(hull[0], hull[1])]
    return [(hull[i], hull[(i + 1) % len(hull)]) for i in range(len(hull))]


def hulls_intersect(pos, neg) -> bool:
    """Whether the closed convex hulls of two finite rational point sets meet."""
    hp, hn = _hull(pos), _hull(neg)
    if any(_in_hull(q, hn) for q in hp) or any(_in_hull(q, hp) for q in hn):
        return True
    return any(_segments_meet(a, b, c, d) for a, b in _edges(hp) for c, d in _edges(hn))


@dataclass(frozen=True)
class Halfspaces2D(ClassSpec):
    """Functions ``1[a.x >= b]`` on R^2, decided with exact rational arithmetic.

    Labels are realizable iff the convex hulls of the positive and the negative
    points are disjoint (with ``a = 0`` covering the one-sided labelings).
    """

    vc_dim = 3
    name = "halfspaces2d"

    def check_point(self, x):
        v = tuple(x)
        if len(v) != 2 or not all(math.isfinite(float(c)) for c in v):
            raise InputError(f"expected a finite point in R^2, got {x!r}")
        return tuple(float(c) for c in v)

    def encode(self, x):
        return ";".join(format(float(c), ".17g") for c in x)

    def decode(self, s):
        return tuple(float(c) for c in s.split(";"))

    def empty_state(self):
        return (frozenset(), frozenset(), True)

    def extend(self, state, x, y):
        pos, neg, feasible = state
        q = (Fraction(x[0]), Fraction(x[1]))
        if y == 1:
            pos = pos | {q}
        else:
            neg = neg | {q}
        if feasible and pos and neg:
            feasible = not hulls_intersect(pos, neg)
        return (pos, neg, feasible)

    def is_feasible(self, state):
        return state[2]

    def realizable_with(self, state, dataset):
        pos, neg, feasible = state
        if not feasible:
            return False
        pos, neg = set(pos), set(neg)
        for x, y in dataset:
            (pos if y == 1 else neg).add((Fraction(x[0]), Fraction(x[1])))
        return not (pos and neg and hulls_intersect(pos, neg))


# ---------------------------------------------------------------------------
# Root-to-node paths of a tree: 1[x is a prefix of x0]
# ---------------------------------------------------------------------------

def is_prefix(a: tuple, b: tuple) -> bool:
    """Tree order: ``a`` is an ancestor of (or equal to) ``b``."""
    return len(a) <= len(b) and b[:len(a)] == a


@dataclass(frozen=True)
class TreePaths(ClassSpec):
    """Indicators ``1[x is a prefix of x0]`` on a rooted tree of given arity and depth.

    Nodes are tuples of child indices in ``[1, arity]``; the root is ``()``
    and is labeled 1 by every function of the class.
    """

    arity: int = 2
    depth: int = 1
    vc_dim = 1
    name = "treepaths"

    def __post_init__(self):
        if int(self.arity) < 1 or int(self.depth) < 1:
            raise InputError("tree arity and depth must be >= 1")

    def check_point(self, x):
        try:
            node = tuple(int(c) for c in x)
        except TypeError:
            raise InputError(f"tree node must be a sequence of integers, got {x!r}")
        if len(node) > self.depth or any(c < 1 or c > self.arity for c in node):
            raise InputError(f"invalid tree node {node!r} for arity {self.arity}, depth {self.depth}")
        return node

    def encode(self, x):
        return ".".join(str(c) for c in x)

    def decode(self, s):
        return tuple(int(c) for c in s.split(".")) if s else ()

    def empty_state(self):
        # deepest positive, negatives, feasible
        return ((), frozenset(), True)

    def extend(self, state, x, y):
        deep, neg, feasible = state
        if y == 1:
            if is_prefix(x, deep):
                pass
            elif is_prefix(deep, x):
                deep = x
            else:
                feasible = False
        else:
            neg = neg | {x}
        if feasible:
            feasible = not any(is_prefix(n, deep) for n in ((x,) if y == 0 else neg))
        return (deep, neg, feasible)

    def is_feasible(self, state):
        return state[2]

    def disagreement_mask(self, state, arr):
        deep, neg, feasible = state
        out = np.zeros(len(arr), dtype=bool)
        if not feasible:
            return out
        for i, x in enumerate(arr):
            if is_prefix(x, deep):
                continue  # forced to 1
            if is_prefix(deep, x):
                out[i] = not any(is_prefix(n, x) for n in neg)
        return out


# ---------------------------------------------------------------------------
# Subsets of bounded size of a finite ground set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubsetsOfSize(ClassSpec):
    """Indicators ``1[x in S]`` for subsets ``S`` of a finite ground set with ``|S| <= d``."""

    d: int = 1
    ground: tuple = ()
    name = "subsets"

    def __post_init__(self):
        if int(self.d) < 1:
            raise InputError("subset size d must be >= 1")
        if len(self.ground) == 0:
            raise InputError("ground set must be nonempty")
        object.__setattr__(self, "ground", tuple(self.ground))

    @property
    def vc_dim(self) -> int:
        return min(self.d, len(self.ground))

    def check_point(self, x: Hashable):
        if x not in self.ground:
            raise InputError(f"{x!r} is not in the ground set")
        return x

    def decode(self, s):
        for g in self.ground:
            if str(g) == s:
                return g
        raise InputError(f"{s!r} is not in the ground set")

    def empty_state(self):
        return (frozenset(), frozenset(), True)

    def extend(self, state, x, y):
        pos, neg, feasible = state
        if y == 1:
            pos = pos | {x}
        else:
            neg = neg | {x}
        feasible = feasible and len(pos) <= self.d and x not in (neg if y == 1 else pos)
        return (pos, neg, feasible)

    def is_feasible(self, state):
        return state[2]

    def disagreement_mask(self, state, arr):
        pos, neg, feasible = state
        out = np.zeros(len(arr), dtype=bool)
        if not feasible:
            return out
        for i, x in enumerate(arr):
            out[i] = x not in pos and x not in neg and len(pos) < self.d
        return out


# ---------------------------------------------------------------------------
# Reduced classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReducedClass:
    """The subclass of ``spec`` consistent with every constraint.

    Instances are immutable; :meth:`reduce` returns a new instance that shares
    the compiled summary of its parent.
    """

    spec: ClassSpec
    constraints: tuple = ()
    _state: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self._state is None:
            checked = tuple((self.spec.check_point(x), _check_label(y)) for x, y in self.constraints)
            state = self.spec.empty_state()
            for x, y in checked:
                state = self.spec.extend(state, x, y)
            object.__setattr__(self, "constraints", checked)
            object.__setattr__(self, "_state", state)

    @property
    def state(self):
        return self._state

    @property
    def version(self) -> int:
        return len(self.constraints)

    def is_empty(self) -> bool:
        return not self.spec.is_feasible(self._state)

    def reduce(self, x, y) -> "ReducedClass":
        x = self.spec.check_point(x)
        y = _check_label(y)
        return ReducedClass(self.spec, self.constraints + ((x, y),),
                            self.spec.extend(self._state, x, y))


def full_class(spec: ClassSpec) -> ReducedClass:
    return ReducedClass(spec)


def _checked(cls: ReducedClass, dataset) -> list:
    return [(cls.spec.check_point(x), _check_label(y)) for x, y in dataset]


def realizable(cls: ReducedClass, dataset: Sequence[LabeledExample] = ()) -> bool:
    """Whether some function of the class labels every example as given."""
    return cls.spec.realizable_with(cls.state, _checked(cls, dataset))


def shatters(cls: ReducedClass, points: Sequence[Point], cap: int = DEFAULT_SHATTER_CAP) -> bool:
    """Whether every labeling of ``points`` is realizable, by enumeration."""
    if len(points) > cap:
        raise InputError(f"{len(points)} points exceed the shattering cap {cap}")
    pts = [cls.spec.check_point(x) for x in points]
    if len(_distinct(pts)) != len(pts):
        raise InputError("points passed to shatters must be distinct")
    return _shatters_state(cls.spec, cls.state, pts)


def in_disagreement(cls: ReducedClass, x: Point) -> bool:
    """Whether both labels of ``x`` are realizable."""
    if cls.is_empty():
        raise StateError("disagreement query on an empty class")
    x = cls.spec.check_point(x)
    st = cls.state
    return cls.spec.realizable_with(st, [(x, 0)]) and cls.spec.realizable_with(st, [(x, 1)])


def consistent_label(cls: ReducedClass, x: Point) -> int:
    """The unique realizable label of a point outside the disagreement region."""
    if cls.is_empty():
        raise StateError("consistency query on an empty class")
    x = cls.spec.check_point(x)
    ok0 = cls.spec.realizable_with(cls.state, [(x, 0)])
    ok1 = cls.spec.realizable_with(cls.state, [(x, 1)])
    if ok0 and ok1:
        raise ContractError(f"point {x!r} is in the disagreement region")
    return 1 if ok1 else 0


def reduce(cls: ReducedClass, example: LabeledExample) -> ReducedClass:
    """Return the class with ``example`` appended to its constraints."""
    x, y = example
    return cls.reduce(x, y)


def make_spec(name: str, **params) -> ClassSpec:
    """Build a spec from a short name and keyword parameters."""
    name = name.lower()
    if name == "thresholds":
        return Thresholds()
    if name in ("rectangles", "intervals"):
        return Rectangles(int(params.get("p", 1 if name == "intervals" else 2)))
    if name == "halfspaces2d":
        return Halfspaces2D()
    if name == "treepaths":
        return TreePaths(int(params.get("arity", 2)), int(params.get("depth", 1)))
    if name == "subsets":
        ground = params.get("ground")
        if ground is None:
            ground = tuple(range(int(params.get("ground_size", 6))))
        return SubsetsOfSize(int(params.get("d", 1)), tuple(ground))
    raise InputError(f"unknown hypothesis class {name!r}")
