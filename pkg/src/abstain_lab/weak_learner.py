"""The estimate-driven weak learner and the known-distribution baseline.

:class:`WeakLearner` runs in three phases. During warmup it replays the
labels ``z`` on its designated rounds and abstains elsewhere while collecting
the designated instances as calibration samples. It then predicts with the
shattering-based rule until the order-1 median estimate drops to ``epsilon``,
after which it abstains exactly on the disagreement region of its class.

:class:`KnownMuLearner` is the same idea with exact shattering
probabilities of a finite distribution in place of the estimates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

from .errors import ContractError, InputError, StateError
from .estimators import (DEFAULT_BUDGET, FiniteDistribution, PartitionedSamples,
                         exact_rho, median_rho)
from .hypothesis import ClassSpec, ReducedClass, consistent_label, full_class, in_disagreement
from .labels import ABSTAIN

WARMUP, ACTIVE, FINAL = "warmup", "active", "final"
ABSTAIN_RATIO = 0.9
KNOWN_MU_RATIO = 0.6


@dataclass
class WeakLearnerConfig:
    """Parameters of one weak learner.

    ``censored_updates`` switches the learner to censored mode. It is either a
    mapping from update rounds to labels, or a callable ``(t, x, prediction)``
    returning the update label for round ``t`` (or ``None`` for no update).
    """

    epsilon: float
    m: int
    d: int
    warmup_times: tuple = ()
    warmup_labels: tuple = ()
    update_policy: str = "always"
    censored_updates: Mapping[int, int] | Callable | None = None
    subset_budget: int = DEFAULT_BUDGET
    seed: int = 0

    def validate(self, lazy_warmup: bool = False) -> None:
        if not 0 < self.epsilon <= 1:
            raise InputError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.d < 1 or self.m < 1:
            raise InputError("d and m must be >= 1")
        if self.update_policy not in ("always", "restricted"):
            raise InputError(f"unknown update policy {self.update_policy!r}")
        if lazy_warmup:
            return
        times = tuple(self.warmup_times)
        if not times:
            raise InputError("warmup time set must be nonempty")
        if len(times) != len(self.warmup_labels):
            raise InputError("warmup labels must match warmup times")
        if any(b <= a for a, b in zip(times, times[1:])) or times[0] < 1:
            raise InputError("warmup times must be sorted, distinct and >= 1")
        if len(times) < self.m:
            raise InputError(f"{len(times)} warmup rounds cannot fill {self.m} blocks")


class WarmupOracle:
    """Warmup source that picks the warmup rounds online.

    The first ``size`` rounds for which ``designate(t)`` holds become the
    warmup set, with labels ``label(t)``. Both callables are supplied by the
    environment running the protocol and are only asked about the current
    round. Designating clean rounds yields the clean-prefix learner.
    """

    def __init__(self, size: int, designate: Callable[[int], bool], label: Callable[[int], int]):
        self.size = int(size)
        self.designate = designate
        self.label = label


@dataclass
class StepRecord:
    """Diagnostics of one active-phase prediction."""

    t: int
    k: int
    rho: float
    branch: tuple | None
    prediction: int


class WeakLearner:
    """Online weak learner with a warmup, an active and a final phase."""

    def __init__(self, spec: ClassSpec, config: WeakLearnerConfig,
                 warmup_oracle: WarmupOracle | None = None):
        config.validate(lazy_warmup=warmup_oracle is not None)
        self.spec = spec
        self.config = config
        self.oracle = warmup_oracle
        self.phase = WARMUP
        self.current_class: ReducedClass = full_class(spec)
        self.samples: PartitionedSamples | None = None
        self.last_k = 0
        self.mistake_times: list[int] = []
        self.history: list[StepRecord] = []
        self._warm_points: list = []
        self._warm_times: list[int] = []
        if warmup_oracle is None:
            self._z = dict(zip(config.warmup_times, config.warmup_labels))
            self._warmup_end = max(config.warmup_times)
        else:
            self._z = {}
            self._warmup_end = None
        self._last_t = 0
        self._pending = None
        self._cache: dict[int, float] = {}
        self._branch: tuple | None = None

    @property
    def censored(self) -> bool:
        return self.config.censored_updates is not None

    # -- estimates ----------------------------------------------------------
    def _rho(self, cls: ReducedClass, k: int) -> float:
        return median_rho(cls, self._blocks, k, self.config.subset_budget, self.config.seed).value

    def _rho_current(self, k: int) -> float:
        if k not in self._cache:
            self._cache[k] = self._rho(self.current_class, k)
        return self._cache[k]

    # -- protocol -----------------------------------------------------------
    def predict(self, t: int, x) -> int:
        if t <= self._last_t or self._pending is not None:
            raise ContractError(f"round {t} presented out of order")
        x = self.spec.check_point(x)
        self._last_t = t
        if self.phase == WARMUP:
            pred = self._warmup_predict(t)
        elif self.current_class.is_empty():
            raise StateError("weak learner class became empty")
        elif self.phase == ACTIVE:
            pred = self._active_predict(t, x)
        else:
            if in_disagreement(self.current_class, x):
                pred = ABSTAIN
            else:
                pred = consistent_label(self.current_class, x)
        self._pending = (t, x, pred)
        return pred

    def _warmup_predict(self, t: int) -> int:
        oracle = self.oracle
        if oracle is not None and len(self._warm_times) < oracle.size and oracle.designate(t):
            self._z[t] = int(oracle.label(t))
        return self._z.get(t, ABSTAIN)

    def _active_predict(self, t: int, x) -> int:
        eps = self.config.epsilon
        prev, k = 1.0, 0
        for order in range(1, self.config.d + 1):
            r = self._rho_current(order)
            if r > eps * prev:
                prev, k = r, order
            else:
                break
        if k == 0:
            raise StateError("active phase reached with order-1 estimate below epsilon")
        r = self._cache[k]
        self.last_k = k
        cls = self.current_class
        if not in_disagreement(cls, x):
            # One restriction is empty and the other equals the current class.
            pred = consistent_label(cls, x)
            self._branch = ("same", pred)
            self.history.append(StepRecord(t, k, r, None, pred))
            return pred
        a = self._rho(cls.reduce(x, 0), k)
        b = self._rho(cls.reduce(x, 1), k)
        self._branch = ("split", k, a, b)
        if min(a, b) >= ABSTAIN_RATIO * r:
            pred = ABSTAIN
        else:
            pred = 1 if b >= a else 0
        self.history.append(StepRecord(t, k, r, (a, b), pred))
        return pred

    def feedback(self, t: int, x, y=None) -> None:
        if self._pending is None or self._pending[0] != t:
            raise ContractError(f"feedback for round {t} without a matching prediction")
        _, x, pred = self._pending
        self._pending = None
        if y is None and not self.censored:
            raise InputError(f"label missing at round {t} in full-feedback mode")
        if y is not None and pred != ABSTAIN and pred != y:
            self.mistake_times.append(t)

        if self.phase == WARMUP:
            if t in self._z:
                self._warm_times.append(t)
                self._warm_points.append(x)
            done = (len(self._warm_times) >= self.oracle.size if self.oracle is not None
                    else t >= self._warmup_end)
            if done:
                self._start_active()
        elif self.phase == ACTIVE:
            label = self._update_label(t, x, pred, y)
            if label is not None:
                self._apply_update(x, label)
            self._check_final()
        self._branch = None

    def _update_label(self, t, x, pred, y):
        cu = self.config.censored_updates
        if cu is not None:
            if callable(cu):
                return cu(t, x, pred)
            return cu.get(t)
        if self.config.update_policy == "always":
            return y
        return y if pred != ABSTAIN and pred != y else None

    def _apply_update(self, x, y: int) -> None:
        branch = self._branch
        self.current_class = self.current_class.reduce(x, y)
        if branch is not None and branch[0] == "same" and branch[1] == y:
            return  # query-equivalent class: cached estimates stay valid
        self._cache = {}
        if branch is not None and branch[0] == "split":
            _, k, a, b = branch
            self._cache[k] = b if y == 1 else a

    def _start_active(self) -> None:
        if not self._warm_points or len(self._warm_points) < self.config.m:
            raise InputError("not enough warmup samples to fill the blocks")
        self.samples = PartitionedSamples.partition(self._warm_points, self.config.m)
        self._blocks = [self.spec.as_array(b) for b in self.samples.blocks]
        self.phase = ACTIVE
        self._cache = {}
        self._check_final()

    def _check_final(self) -> None:
        if self.phase == ACTIVE and self._rho_current(1) <= self.config.epsilon:
            self.phase = FINAL

    @property
    def warmup_times(self) -> tuple:
        return tuple(self._warm_times)


def mistake_bound(d: int, epsilon: float) -> float:
    """Deterministic mistake bound ``5 d^2 ln(1/epsilon)`` of the weak learner."""
    return 5 * d * d * math.log(1 / epsilon)


class KnownMuLearner:
    """Baseline learner that knows a finite instance distribution exactly."""

    def __init__(self, spec: ClassSpec, dist: FiniteDistribution, T: int, d: int | None = None):
        if not isinstance(dist, FiniteDistribution):
            raise InputError("the known-distribution learner needs a finite distribution")
        self.spec = spec
        self.dist = dist
        self.T = int(T)
        self.k = int(d if d is not None else spec.vc_dim)
        self.current_class = full_class(spec)
        self.mistake_times: list[int] = []
        self._pending = None

    def _rho(self, cls, k):
        return exact_rho(cls, self.dist, k)

    def predict(self, t: int, x) -> int:
        x = self.spec.check_point(x)
        cls = self.current_class
        if cls.is_empty():
            raise StateError("class became empty")
        if not in_disagreement(cls, x):
            pred = consistent_label(cls, x)
        elif self.k <= 1:
            pred = ABSTAIN
        else:
            r = self._rho(cls, self.k)
            a = self._rho(cls.reduce(x, 0), self.k)
            b = self._rho(cls.reduce(x, 1), self.k)
            if min(a, b) >= KNOWN_MU_RATIO * r:
                pred = ABSTAIN
            else:
                pred = 1 if b >= a else 0
        self._pending = (t, x, pred)
        return pred

    def feedback(self, t: int, x, y) -> None:
        if self._pending is None or self._pending[0] != t:
            raise ContractError(f"feedback for round {t} without a matching prediction")
        _, x, pred = self._pending
        self._pending = None
        if y is None:
            raise InputError("the known-distribution learner needs every label")
        if pred != ABSTAIN and pred != y:
            self.mistake_times.append(t)
        if self.k < 1:
            return
        self.current_class = self.current_class.reduce(x, y)
        while self.k >= 1 and self._rho(self.current_class, self.k) <= self.T ** (-self.k):
            self.k -= 1
