"""Shattering probabilities: exact values, U-statistics and median estimates.

A k-tuple with repeated points is evaluated as its distinct-point set, so a
tuple drawn twice from the same support point counts as a shattered
1-set whenever that point lies in the disagreement region.

Monte Carlo subset plans depend only on ``(N, k, budget, seed)``. Reusing a
plan across classes makes the estimates monotone under reduction, which the
weak learner's progress argument relies on.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import InputError
from .hypothesis import ReducedClass

DEFAULT_BUDGET = 200_000
EXACT_BUDGET = 1_000_000


@dataclass(frozen=True)
class FiniteDistribution:
    """Probability weights over a finite list of distinct support points."""

    support: tuple
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.support) == 0 or len(w) != len(self.support):
            raise InputError("support and weights must be nonempty and of equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InputError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    @classmethod
    def uniform(cls, support: Sequence) -> "FiniteDistribution":
        n = len(support)
        w = np.full(n, 1.0 / n)
        w[-1] = 1.0 - w[:-1].sum()
        return cls(tuple(support), tuple(w))

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice(len(self.support), size=n, p=np.asarray(self.weights))

    def sample(self, rng: np.random.Generator, n: int) -> list:
        return [self.support[i] for i in self.sample_indices(rng, n)]


@dataclass(frozen=True)
class RhoEstimate:
    value: float
    k: int
    method: str
    budget_used: int


@dataclass
class PartitionedSamples:
    """Equal-size blocks cut from one sample sequence; leftovers are dropped."""

    blocks: list

    @classmethod
    def partition(cls, points: Sequence, m: int) -> "PartitionedSamples":
        if m < 1:
            raise InputError("block count m must be >= 1")
        size = len(points) // m
        if size < 1:
            raise InputError(f"{len(points)} samples cannot fill {m} blocks")
        return cls([list(points[i * size:(i + 1) * size]) for i in range(m)])

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def block_size(self) -> int:
        return len(self.blocks[0])


@lru_cache(maxsize=256)
def _combinations(n: int, k: int) -> np.ndarray:
    if k == 0 or n < k:
        return np.empty((0, k), dtype=np.int64)
    return np.array(list(itertools.combinations(range(n), k)), dtype=np.int64).reshape(-1, k)


@lru_cache(maxsize=512)
def subset_plan(n: int, k: int, budget: int, seed: int) -> np.ndarray:
    """``budget`` uniformly random k-subsets of ``range(n)`` (sampled with replacement over subsets)."""
    rng = np.random.default_rng([seed, n, k, budget])
    plan = rng.integers(0, n, size=(budget, k))
    while True:
        srt = np.sort(plan, axis=1)
        dup = (np.diff(srt, axis=1) == 0).any(axis=1)
        if not dup.any():
            break
        plan[dup] = rng.integers(0, n, size=(int(dup.sum()), k))
    plan.setflags(write=False)
    return plan


def _block_array(cls: ReducedClass, block) -> np.ndarray:
    if isinstance(block, np.ndarray):
        return block
    return cls.spec.as_array(list(block))


def _ustat(cls: ReducedClass, arr: np.ndarray, k: int, budget: int, seed: int):
    n = len(arr)
    if k > n:
        raise InputError(f"order k={k} exceeds block size {n}")
    if k == 0:
        return 1.0, "u_stat", 0
    if cls.is_empty():
        total = math.comb(n, k)
        return 0.0, "u_stat", min(total, budget)
    spec, state = cls.spec, cls.state
    mask = spec.disagreement_mask(state, arr)
    total = math.comb(n, k)
    if total <= budget:
        live = np.flatnonzero(mask)
        if len(live) < k:
            return 0.0, "u_stat", total
        if k == 1:
            return len(live) / n, "u_stat", total
        idx = live[_combinations(len(live), k)]
        hits = int(spec.shattered_batch(state, arr, idx).sum())
        return hits / total, "u_stat", total
    plan = subset_plan(n, k, budget, seed)
    keep = plan[mask[plan].all(axis=1)]
    hits = int(spec.shattered_batch(state, arr, keep).sum()) if len(keep) else 0
    return hits / budget, "u_stat", budget


def u_stat_rho(cls: ReducedClass, block, k: int, budget: int = DEFAULT_BUDGET,
               rng_seed: int = 0) -> RhoEstimate:
    """Fraction of k-subsets of ``block`` shattered by ``cls``.

    Exact when all C(N, k) subsets fit in ``budget``; otherwise a seeded Monte
    Carlo average over ``budget`` random subsets.
    """
    value, method, used = _ustat(cls, _block_array(cls, block), int(k), int(budget), int(rng_seed))
    return RhoEstimate(value, int(k), method, used)


def lower_median(values: Sequence[float]) -> float:
    vals = sorted(values)
    return vals[(len(vals) - 1) // 2]


def median_rho(cls: ReducedClass, samples, k: int, budget: int = DEFAULT_BUDGET,
               rng_seed: int = 0) -> RhoEstimate:
    """Lower median of the per-block U-statistics.

    ``samples`` is a :class:`PartitionedSamples` or a list of block arrays.
    Block ``i`` uses subset-plan seed ``(rng_seed, i)``.
    """
    blocks = samples.blocks if isinstance(samples, PartitionedSamples) else samples
    vals, used = [], 0
    for i, block in enumerate(blocks):
        v, _, u = _ustat(cls, _block_array(cls, block), int(k), int(budget),
                         _mix(rng_seed, i))
        vals.append(v)
        used += u
    return RhoEstimate(lower_median(vals), int(k), "median", used)


def _mix(seed: int, i: int) -> int:
    return (int(seed) * 1_000_003 + i) % (2 ** 63)


def exact_rho(cls: ReducedClass, dist: FiniteDistribution, k: int,
              budget: int = EXACT_BUDGET) -> float:
    """Probability that k i.i.d. draws from ``dist`` form a shattered set."""
    k = int(k)
    if k < 0:
        raise InputError("order k must be >= 0")
    if k == 0:
        return 1.0
    s = len(dist.support)
    if s ** k > budget:
        raise InputError(f"{s}^{k} tuples exceed the enumeration budget {budget}; "
                         "use the Monte Carlo estimators instead")
    if cls.is_empty():
        return 0.0
    arr = cls.spec.as_array(list(dist.support))
    w = np.asarray(dist.weights)
    live = np.flatnonzero(cls.spec.disagreement_mask(cls.state, arr))
    if len(live) == 0:
        return 0.0
    if k == 1:
        return float(w[live].sum())
    grids = np.meshgrid(*([live] * k), indexing="ij")
    idx = np.stack([g.reshape(-1) for g in grids], axis=1)
    shattered = cls.spec.shattered_batch(cls.state, arr, idx)
    probs = np.prod(w[idx], axis=1)
    return float(min(1.0, probs[shattered].sum()))


def empirical_sigma(cls: ReducedClass, dist: FiniteDistribution, k: int, N: int,
                    trials: int, rng_seed: int = 0, budget: int = DEFAULT_BUDGET) -> float:
    """Sample standard deviation of the U-statistic over fresh blocks of size N."""
    return float(np.std(ustat_trials(cls, dist, k, N, trials, rng_seed, budget), ddof=1))


def ustat_trials(cls: ReducedClass, dist: FiniteDistribution, k: int, N: int,
                 trials: int, rng_seed: int = 0, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """U-statistic values on ``trials`` independent blocks; trial i uses seed ``(rng_seed, i)``."""
    if trials < 2:
        raise InputError("need at least 2 trials")
    support = cls.spec.as_array(list(dist.support))
    out = np.empty(trials)
    for i in range(trials):
        rng = np.random.default_rng([int(rng_seed), i])
        block = support[dist.sample_indices(rng, N)]
        out[i] = _ustat(cls, block, int(k), int(budget), _mix(rng_seed, i))[0]
    return out


def sigma_standard_error(values: np.ndarray) -> float:
    """Delta-method standard error of the sample standard deviation."""
    n = len(values)
    s2 = np.var(values, ddof=1)
    if s2 == 0:
        return 0.0
    m4 = np.mean((values - values.mean()) ** 4)
    var_s2 = max((m4 - s2 ** 2 * (n - 3) / (n - 1)) / n, 0.0)
    return float(math.sqrt(var_s2) / (2 * math.sqrt(s2)))
