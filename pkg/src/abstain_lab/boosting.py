"""Expert aggregation with abstentions: Delete, Aggregate and layered Boosting.

All algorithms consume one recommendation frame per round, an integer array
with entries 0, 1 or ``ABSTAIN``. Prediction and label feedback are split
into ``predict(frame)`` and ``update(y)`` so the same objects drive both the
synthetic expert streams and full protocol runs.

Weighted-majority weights are stored as integer halving exponents
(``w_s = 2**-e_s``), which keeps them exact over arbitrarily long runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractError, InputError
from .labels import ABSTAIN


def _as_frame(preds, L: int) -> np.ndarray:
    frame = np.asarray(preds, dtype=np.int64).reshape(-1)
    if len(frame) != L:
        raise InputError(f"expected {L} expert outputs, got {len(frame)}")
    return frame


def _majority(ones: int, total: int) -> int:
    return 1 if 2 * ones >= total else 0


def num_layers(L: int) -> int:
    """Layer count ``max(1, ceil(log2 L))``; the last layer also takes single survivors."""
    return max(1, math.ceil(math.log2(L))) if L > 1 else 1


class Delete:
    """Majority vote that ignores each expert's first ``s`` predictions.

    Predicts only when at least ``ceil(C)`` predictions survive.
    """

    def __init__(self, L: int, s: int, C: float):
        self.L, self.s, self.C = int(L), int(s), float(C)
        self.counts = np.zeros(self.L, dtype=np.int64)

    def predict(self, preds) -> int:
        frame = _as_frame(preds, self.L)
        active = frame != ABSTAIN
        keep = active & (self.counts >= self.s)
        self.counts += active
        total = int(keep.sum())
        if total < math.ceil(self.C):
            return ABSTAIN
        return _majority(int((frame[keep] == 1).sum()), total)

    def update(self, y) -> None:
        pass


class Aggregate:
    """Weighted majority over ``Delete_s`` for ``s = 0..s_max``; abstains if any of them does."""

    def __init__(self, L: int, s_max: int, C: float):
        self.L, self.s_max, self.C = int(L), int(s_max), float(C)
        self.counts = np.zeros(self.L, dtype=np.int64)
        self.exponents = np.zeros(self.s_max + 1, dtype=np.int64)
        self.sub_predictions = np.full(self.s_max + 1, ABSTAIN, dtype=np.int64)
        self.sub_mistakes = np.zeros(self.s_max + 1, dtype=np.int64)
        self.last = ABSTAIN
        self._levels = np.arange(self.s_max + 1)

    @property
    def weights(self) -> np.ndarray:
        return np.ldexp(1.0, -self.exponents)

    def predict(self, preds) -> int:
        frame = _as_frame(preds, self.L)
        active = frame != ABSTAIN
        keep = active[None, :] & (self.counts[None, :] >= self._levels[:, None])
        total = keep.sum(axis=1)
        ones = (keep & (frame == 1)[None, :]).sum(axis=1)
        self.counts += active
        thr = math.ceil(self.C)
        sub = np.where(total >= thr, np.where(2 * ones >= total, 1, 0), ABSTAIN)
        self.sub_predictions = sub
        if (sub == ABSTAIN).any():
            self.last = ABSTAIN
            return ABSTAIN
        self.last = self._vote(sub)
        return self.last

    def _vote(self, sub: np.ndarray) -> int:
        top = int(self.exponents.max())
        w1 = sum(1 << (top - int(e)) for e in self.exponents[sub == 1])
        w0 = sum(1 << (top - int(e)) for e in self.exponents[sub == 0])
        return 1 if w1 >= w0 else 0

    def update(self, y) -> None:
        if self.last == ABSTAIN:
            return
        if y is None:
            raise ContractError("label missing on a round where Aggregate predicted")
        wrong = self.sub_predictions != y
        self.exponents[wrong] += 1
        self.sub_mistakes[wrong] += 1


class Boosting:
    """Layered aggregation with per-layer deletion budgets and mistake tolerance.

    Experts with at least ``M`` counted mistakes are ignored. With
    ``censored=True`` mistakes are only counted on rounds whose label was
    supplied to :meth:`update`; with every label supplied it coincides with
    the uncensored rule.
    """

    def __init__(self, L: int, s_max: int, M: float, censored: bool = False):
        if L < 1:
            raise InputError("Boosting needs at least one expert")
        self.L, self.s_max, self.M = int(L), int(s_max), float(M)
        self.censored = censored
        self.J = num_layers(self.L)
        self.layers = [Aggregate(self.L, self.s_max, self.L / 2 ** j) for j in range(1, self.J + 1)]
        self.budgets = np.full((self.J, self.L), self.s_max, dtype=np.int64)
        self.mistakes = np.zeros(self.L, dtype=np.int64)
        self.rounds: list[list[int]] = [[] for _ in range(self.J)]
        self.t = 0
        self.last = ABSTAIN
        self.last_layer = 0
        self.consulted: list[int] = []
        self._frame = None

    def _layer_for(self, n: int) -> int:
        j = 1
        while n * 2 ** j <= self.L:
            j += 1
        return min(j, self.J)

    def predict(self, preds) -> int:
        frame = _as_frame(preds, self.L)
        self.t += 1
        self._frame = frame
        z = frame.copy()
        z[self.mistakes >= self.M] = ABSTAIN
        n = int((z != ABSTAIN).sum())
        self.consulted = []
        self.last, self.last_layer = ABSTAIN, 0
        while n > 0:
            j = self._layer_for(n)
            if self.consulted and j <= self.consulted[-1]:
                raise RuntimeError(f"layer index did not increase ({self.consulted[-1]} -> {j})")
            out = self.layers[j - 1].predict(z)
            self.consulted.append(j)
            self.rounds[j - 1].append(self.t)
            budget = self.budgets[j - 1]
            spend = (z != ABSTAIN) & (budget > 0)
            z[spend] = ABSTAIN
            budget[spend] -= 1
            if out != ABSTAIN:
                self.last, self.last_layer = out, j
                break
            n = int((z != ABSTAIN).sum())
        return self.last

    def update(self, y) -> None:
        if y is None:
            if not self.censored:
                raise InputError("label missing in full-feedback mode")
            if self.last != ABSTAIN:
                raise ContractError("label missing on a round where Boosting predicted")
            return
        frame = self._frame
        self.mistakes += (frame != ABSTAIN) & (frame != y)
        if self.last_layer:
            self.layers[self.last_layer - 1].update(y)


# ---------------------------------------------------------------------------
# Synthetic structured expert streams
# ---------------------------------------------------------------------------

@dataclass
class StreamConfig:
    """Structured expert stream: at most ``C`` predictions per round and at most
    ``M`` mistakes per expert on the designated rounds ``U``.

    ``pattern`` chooses who predicts: ``uniform`` (random subsets), ``graded``
    (geometrically decreasing activity) or ``bursty`` (experts active in runs).
    Mistakes outside ``U`` are unrestricted.
    """

    L: int
    T: int
    C: int
    M: int
    pattern: str = "uniform"
    u_fraction: float = 1.0
    clean_fraction: float = 1.0
    attack_rate: float = 0.3
    error_rate: float = 0.1


@dataclass
class SyntheticStream:
    preds: np.ndarray      # (T, L)
    labels: np.ndarray     # (T,)
    clean: np.ndarray      # (T,) bool
    in_u: np.ndarray       # (T,) bool
    mistakes: np.ndarray   # (L,) mistakes on all rounds
    mistakes_u: np.ndarray  # (L,) mistakes on U
    abstentions: np.ndarray  # (L,) abstentions on clean rounds
    config: StreamConfig = field(repr=False, default=None)


def synthetic_stream(config: StreamConfig, seed: int) -> SyntheticStream:
    """Generate a seeded stream satisfying the structured-adversary constraints."""
    L, T, C, M = config.L, config.T, config.C, config.M
    if L < 1 or T < 1 or not 0 <= C <= L or not 0 <= M <= T:
        raise InputError("stream parameters must satisfy L, T >= 1, 0 <= C <= L, 0 <= M <= T")
    if config.pattern not in ("uniform", "graded", "bursty"):
        raise InputError(f"unknown stream pattern {config.pattern!r}")
    rng = np.random.default_rng([seed, L, T, C, M])
    labels = rng.integers(0, 2, size=T)
    clean = rng.random(T) < config.clean_fraction
    in_u = rng.random(T) < config.u_fraction
    preds = np.full((T, L), ABSTAIN, dtype=np.int64)
    budget = np.full(L, M, dtype=np.int64)
    activity = 2.0 ** -(np.arange(L) % 6)
    burst_until = np.zeros(L, dtype=np.int64)
    for t in range(T):
        k = int(rng.integers(0, C + 1))
        if k == 0:
            continue
        if config.pattern == "uniform":
            who = rng.choice(L, size=k, replace=False)
        elif config.pattern == "graded":
            who = rng.choice(L, size=k, replace=False, p=activity / activity.sum())
        else:
            live = np.flatnonzero(burst_until > t)
            if len(live) < k:
                fresh = rng.permutation(np.setdiff1d(np.arange(L), live))[:k - len(live)]
                burst_until[fresh] = t + rng.integers(5, 40, size=len(fresh))
                live = np.concatenate([live, fresh])
            who = rng.permutation(live)[:k]
        y = labels[t]
        attack = rng.random() < config.attack_rate
        for i in who:
            err = attack or rng.random() < config.error_rate
            if in_u[t]:
                err = err and budget[i] > 0
                budget[i] -= err
            preds[t, i] = 1 - y if err else y
    wrong = (preds != ABSTAIN) & (preds != labels[:, None])
    return SyntheticStream(
        preds=preds, labels=labels, clean=clean, in_u=in_u,
        mistakes=wrong.sum(axis=0), mistakes_u=wrong[in_u].sum(axis=0),
        abstentions=((preds == ABSTAIN) & clean[:, None]).sum(axis=0), config=config)


@dataclass
class StreamRun:
    outputs: np.ndarray
    mistakes: int
    abstentions: int
    mistakes_on: int = 0   # mistakes restricted to a round mask, when given


def run_stream(algo, stream: SyntheticStream, reveal: str = "full",
               mask: np.ndarray | None = None) -> StreamRun:
    """Feed every frame of ``stream`` to ``algo``.

    ``reveal='full'`` passes every label; ``'predicted'`` passes a label only
    on rounds where ``algo`` predicted (the censored protocol).
    """
    T = len(stream.labels)
    out = np.empty(T, dtype=np.int64)
    for t in range(T):
        yhat = algo.predict(stream.preds[t])
        out[t] = yhat
        y = int(stream.labels[t])
        algo.update(y if reveal == "full" or yhat != ABSTAIN else None)
    wrong = (out != ABSTAIN) & (out != stream.labels)
    abst = int(((out == ABSTAIN) & stream.clean).sum())
    on = int(wrong[mask].sum()) if mask is not None else int(wrong.sum())
    return StreamRun(out, int(wrong.sum()), abst, on)


# ---------------------------------------------------------------------------
# Explicit bounds
# ---------------------------------------------------------------------------

def delete_bound(M: float, L: int, u_size: int, s_max: int) -> float:
    return 8 * M * num_layers(L) * u_size / (s_max + 1)


def aggregate_bound(M: float, L: int, u_size: int, s_max: int) -> float:
    # log2 is the larger of the two candidate bases for the weighted-majority term.
    return 24 * M * num_layers(L) * u_size / (s_max + 1) + 3 * math.log2(s_max + 1)


def wma_bound(best_mistakes: int, n_experts: int) -> float:
    return 3 * (best_mistakes + math.log2(n_experts))


def boosting_mistake_bound(M: float, T: int, L: int, s_max: int) -> float:
    J = num_layers(L)
    return 24 * M * T * J ** 2 / (s_max + 1) + 3 * math.log2(s_max + 1) * J


def boosting_abstention_bound(s_max: int, L: int, mistakes: Sequence[int],
                              abstentions: Sequence[int], M: float) -> float:
    eligible = [a for m_i, a in zip(mistakes, abstentions) if m_i < M]
    return s_max * num_layers(L) + (min(eligible) if eligible else math.inf)


# ---------------------------------------------------------------------------
# Boosting over online learners
# ---------------------------------------------------------------------------

class AbstainBoost:
    """Online learner that boosts a pool of online learners through :class:`Boosting`."""

    def __init__(self, experts: Sequence, s_max: int, M: float, censored: bool = False):
        if len(experts) == 0:
            raise InputError("the learner pool is empty")
        self.experts = list(experts)
        self.booster = Boosting(len(self.experts), s_max, M, censored=censored)
        self.last_frame = None

    def predict(self, t: int, x) -> int:
        frame = np.fromiter((e.predict(t, x) for e in self.experts), dtype=np.int64,
                            count=len(self.experts))
        self.last_frame = frame
        return self.booster.predict(frame)

    def feedback(self, t: int, x, y) -> None:
        self.booster.update(y)
        for e in self.experts:
            e.feedback(t, x, y)



class AggregateLearner:
    """Online learner that runs :class:`Aggregate` over a fixed list of online learners."""

    def __init__(self, experts: Sequence, s_max: int, C: float = 1):
        if len(experts) == 0:
            raise InputError("the learner pool is empty")
        self.experts = list(experts)
        self.agg = Aggregate(len(self.experts), s_max, C)

    def predict(self, t: int, x) -> int:
        frame = np.fromiter((e.predict(t, x) for e in self.experts), dtype=np.int64,
                            count=len(self.experts))
        return self.agg.predict(frame)

    def feedback(self, t: int, x, y) -> None:
        if y is not None:
            self.agg.update(y)
        for e in self.experts:
            e.feedback(t, x, y)

# ---------------------------------------------------------------------------
# Weak-learner pools
# ---------------------------------------------------------------------------

@dataclass
class BoostParams:
    epsilon: float
    m: int
    N: int
    s_max: int
    M: float
    update_policy: str = "always"
    subset_budget: int = 200_000


@dataclass
class PoolSpec:
    """Which weak learners to boost.

    ``prefix-sweep``: learners whose warmup rounds are the first ``m*N``
    rounds of a window ``{offset + 1, offset + 1 + stride, ...}``, for a grid
    of offsets and strides, with warmup labels read from the environment.
    ``oracle-assisted``: the sweep plus the learner warmed up on the true
    first ``m*N`` clean rounds. ``explicit``: ``members`` as given (learner
    objects with ``predict``/``feedback``).
    """

    strategy: str = "prefix-sweep"
    size: int = 16
    members: list = field(default_factory=list)


def sweep_windows(T: int, warm: int, size: int) -> list[tuple[int, int]]:
    """(offset, stride) pairs for the prefix sweep, keeping windows that fit in ``T`` rounds."""
    strides = (1, 2, 3, 4)[:max(1, min(4, size))]
    step = max(1, warm // 2)
    out = []
    j = 0
    while len(out) < size and j * step < T:
        for q in strides:
            o = j * step
            if o + 1 + (warm - 1) * q <= T and len(out) < size:
                out.append((o, q))
        j += 1
    return out


def build_pool(pool: PoolSpec, spec, params: BoostParams, context, T: int, seed: int,
               censored: bool = False) -> list:
    from .weak_learner import WarmupOracle, WeakLearner, WeakLearnerConfig

    if pool.strategy == "explicit":
        return list(pool.members)
    if pool.strategy not in ("prefix-sweep", "oracle-assisted"):
        raise InputError(f"unknown pool strategy {pool.strategy!r}")
    warm = params.m * params.N

    def harvest(t, x, pred):
        y = context.label(t)
        return y if pred != ABSTAIN and pred != y else None

    def make(designate, i):
        cfg = WeakLearnerConfig(epsilon=params.epsilon, m=params.m, d=spec.vc_dim,
                                update_policy=params.update_policy,
                                censored_updates=harvest if censored else None,
                                subset_budget=params.subset_budget, seed=seed * 1009 + i)
        return WeakLearner(spec, cfg, WarmupOracle(warm, designate, context.label))

    size = pool.size - (1 if pool.strategy == "oracle-assisted" else 0)
    members = []
    for i, (o, q) in enumerate(sweep_windows(T, warm, size)):
        rounds = frozenset(o + 1 + q * r for r in range(warm))
        members.append(make(rounds.__contains__, i))
    if pool.strategy == "oracle-assisted":
        members.append(make(context.is_clean, len(members)))
    if not members:
        raise InputError("no weak learner fits in the horizon; reduce m*N or raise T")
    return members


def abstain_boost_run(pool: PoolSpec, params: BoostParams, scenario, seed: int,
                      config: dict | None = None):
    """Boost a weak-learner pool through one seeded protocol run."""
    from .environment import ProtocolContext

    context = ProtocolContext()
    censored = scenario.feedback == "censored"
    experts = build_pool(pool, scenario.spec, params, context, scenario.T, seed, censored)
    learner = AbstainBoost(experts, params.s_max, params.M, censored=censored)
    result = scenario.run(learner, seed, context=context, config=config)
    result.config.setdefault("pool_size", len(experts))
    return result
