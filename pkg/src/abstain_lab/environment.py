"""Protocol execution, instance distributions, labelers and adversaries.

Each round the adversary decides whether to corrupt; clean rounds draw the
instance from the distribution, corrupted rounds use the adversary's
instance. The label is always the target's label of the shown instance.
In censored mode the learner only receives the label after predicting.
"""
from __future__ import annotations

import copy
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InputError
from .estimators import FiniteDistribution
from .hypothesis import (ClassSpec, Halfspaces2D, Rectangles, SubsetsOfSize, Thresholds,
                         TreePaths, full_class, in_disagreement, is_prefix)
from .labels import ABSTAIN, label_str, parse_label

TRACE_VERSION = 1
TRACE_FIELDS = ("t", "c", "x", "yhat", "y", "observed")


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformBox:
    """Continuous uniform distribution on the natural domain of a spec."""

    spec: ClassSpec

    def sample(self, rng: np.random.Generator, n: int) -> list:
        spec = self.spec
        if isinstance(spec, Thresholds):
            return [float(v) for v in rng.random(n)]
        if isinstance(spec, Rectangles):
            return [tuple(float(c) for c in row) for row in rng.random((n, spec.p))]
        if isinstance(spec, Halfspaces2D):
            return [tuple(float(c) for c in row) for row in rng.random((n, 2))]
        if isinstance(spec, SubsetsOfSize):
            return [spec.ground[i] for i in rng.integers(0, len(spec.ground), n)]
        if isinstance(spec, TreePaths):
            return [tuple(int(c) for c in rng.integers(1, spec.arity + 1, size=1)) for _ in range(n)]
        raise InputError(f"no uniform distribution for {spec!r}")


def grid_distribution(spec: ClassSpec, n: int) -> FiniteDistribution:
    """Uniform distribution on ``n`` interior grid points per axis."""
    axis = [(i + 1) / (n + 1) for i in range(n)]
    if isinstance(spec, Thresholds):
        return FiniteDistribution.uniform(axis)
    if isinstance(spec, (Rectangles, Halfspaces2D)):
        p = spec.p if isinstance(spec, Rectangles) else 2
        pts = [tuple(c) for c in np.array(np.meshgrid(*([axis] * p), indexing="ij")).reshape(p, -1).T]
        return FiniteDistribution.uniform(pts)
    if isinstance(spec, SubsetsOfSize):
        return FiniteDistribution.uniform(list(spec.ground))
    raise InputError(f"no grid distribution for {spec!r}")


def sample_points(dist, rng: np.random.Generator, n: int) -> list:
    return dist.sample(rng, n)


# ---------------------------------------------------------------------------
# Labelers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Labeler:
    """Target function of a spec, given by its parameters.

    ``params`` per spec: thresholds ``x0``; rectangles ``lo``/``hi`` corners
    (``lo > hi`` encodes the empty box); halfspaces ``a``/``b``; tree paths
    ``node``; subsets ``members``.
    """

    spec: ClassSpec
    params: dict = field(hash=False)

    def __post_init__(self):
        spec, p = self.spec, self.params
        try:
            if isinstance(spec, Thresholds):
                if not 0 <= float(p["x0"]) <= 1:
                    raise InputError("threshold target must lie in [0, 1]")
            elif isinstance(spec, Rectangles):
                if len(p["lo"]) != spec.p or len(p["hi"]) != spec.p:
                    raise InputError("box corners must match the dimension")
            elif isinstance(spec, Halfspaces2D):
                if len(p["a"]) != 2:
                    raise InputError("halfspace normal must be 2-dimensional")
                float(p["b"])
            elif isinstance(spec, TreePaths):
                spec.check_point(p["node"])
            elif isinstance(spec, SubsetsOfSize):
                members = set(p["members"])
                if len(members) > spec.d or not members <= set(spec.ground):
                    raise InputError("target subset too large or outside the ground set")
        except KeyError as exc:
            raise InputError(f"labeler for {spec.name} needs parameter {exc}")

    def __call__(self, x) -> int:
        spec, p = self.spec, self.params
        if isinstance(spec, Thresholds):
            return int(x <= p["x0"])
        if isinstance(spec, Rectangles):
            return int(all(lo <= c <= hi for c, lo, hi in zip(x, p["lo"], p["hi"])))
        if isinstance(spec, Halfspaces2D):
            return int(p["a"][0] * x[0] + p["a"][1] * x[1] >= p["b"])
        if isinstance(spec, TreePaths):
            return int(is_prefix(tuple(x), tuple(p["node"])))
        if isinstance(spec, SubsetsOfSize):
            return int(x in set(p["members"]))
        raise InputError(f"no labeler for {spec!r}")


def default_labeler(spec: ClassSpec, rng: np.random.Generator | None = None) -> Labeler:
    """A fixed target per spec; with ``rng`` the parameters are randomized."""
    if isinstance(spec, Thresholds):
        x0 = 0.5 if rng is None else float(rng.uniform(0.2, 0.8))
        return Labeler(spec, {"x0": x0})
    if isinstance(spec, Rectangles):
        if rng is None:
            return Labeler(spec, {"lo": [0.25] * spec.p, "hi": [0.75] * spec.p})
        a = rng.uniform(0.05, 0.5, spec.p)
        b = a + rng.uniform(0.2, 0.45, spec.p)
        return Labeler(spec, {"lo": list(a), "hi": list(b)})
    if isinstance(spec, Halfspaces2D):
        return Labeler(spec, {"a": [1.0, 1.0], "b": 1.0})
    if isinstance(spec, SubsetsOfSize):
        return Labeler(spec, {"members": list(spec.ground[:spec.d])})
    if isinstance(spec, TreePaths):
        return Labeler(spec, {"node": (1,)})
    raise InputError(f"no default labeler for {spec!r}")


# ---------------------------------------------------------------------------
# Adversaries
# ---------------------------------------------------------------------------

@dataclass
class HistoryItem:
    x: object
    c: int
    yhat: int
    y: int


@dataclass
class AdversaryScript:
    """Oblivious adversary: corruption flags and instances fixed in advance.

    ``instances`` holds the corrupted instances; it may also hold pre-drawn
    clean instances, which the protocol then uses instead of sampling.
    """

    T: int
    corrupt: np.ndarray
    instances: dict

    def decide(self, t: int, history) -> tuple[int, object]:
        return int(self.corrupt[t - 1]), self.instances.get(t)


class AdaptivePolicy:
    """History-driven adversary. Subclasses implement :meth:`decide`."""

    def decide(self, t: int, history: Sequence[HistoryItem]) -> tuple[int, object]:
        raise NotImplementedError


class DisagreementTargeting(AdaptivePolicy):
    """Corrupts a fixed fraction of rounds with points in the disagreement region
    of a shadow class built from the learner's visible mistakes."""

    def __init__(self, spec: ClassSpec, fraction: float, seed: int, candidates: int = 64):
        self.spec = spec
        self.fraction = fraction
        self.rng = np.random.default_rng([seed, 7])
        self.box = UniformBox(spec)
        self.candidates = candidates
        self.shadow = full_class(spec)
        self._seen = 0

    def decide(self, t, history):
        for item in history[self._seen:]:
            if item.yhat != ABSTAIN and item.yhat != item.y:
                self.shadow = self.shadow.reduce(item.x, item.y)
        self._seen = len(history)
        if self.rng.random() >= self.fraction:
            return 0, None
        pts = self.box.sample(self.rng, self.candidates)
        for x in pts:
            if in_disagreement(self.shadow, x):
                return 1, x
        return 1, pts[0]


def builtin_adversary(kind: str, spec: ClassSpec, T: int, params: dict | None = None,
                      seed: int = 0, dist=None):
    """Build one of the stock adversaries.

    ``none``; ``fixed_fraction_replay`` (``fraction``, ``pool``: size of the
    replayed instance list); ``burst`` (``start``, ``length``);
    ``disagreement_targeting`` (``fraction``).
    """
    params = dict(params or {})
    fraction = float(params.get("fraction", 0.0))
    if not 0.0 <= fraction <= 1.0:
        raise InputError(f"corruption fraction {fraction} outside [0, 1]")
    rng = np.random.default_rng([seed, 3])
    corrupt = np.zeros(T, dtype=bool)
    if kind == "none":
        return AdversaryScript(T, corrupt, {})
    if kind == "fixed_fraction_replay":
        n_bad = int(round(fraction * T))
        corrupt[rng.choice(T, size=n_bad, replace=False)] = True
        source = dist if dist is not None else UniformBox(spec)
        pool = source.sample(rng, max(1, int(params.get("pool", 5))))
        times = np.flatnonzero(corrupt) + 1
        return AdversaryScript(T, corrupt, {int(t): pool[i % len(pool)] for i, t in enumerate(times)})
    if kind == "burst":
        start = int(params.get("start", 1))
        length = int(params.get("length", round(fraction * T)))
        corrupt[max(0, start - 1):min(T, start - 1 + length)] = True
        source = dist if dist is not None else UniformBox(spec)
        pool = source.sample(rng, max(1, int(params.get("pool", 5))))
        times = np.flatnonzero(corrupt) + 1
        return AdversaryScript(T, corrupt, {int(t): pool[i % len(pool)] for i, t in enumerate(times)})
    if kind == "disagreement_targeting":
        return DisagreementTargeting(spec, fraction, seed)
    raise InputError(f"unknown adversary kind {kind!r}")


# ---------------------------------------------------------------------------
# Simple learners
# ---------------------------------------------------------------------------

class OracleLearner:
    """Predicts the target's label every round."""

    def __init__(self, labeler: Labeler):
        self.labeler = labeler

    def predict(self, t, x):
        return self.labeler(x)

    def feedback(self, t, x, y):
        pass


class AbstainingLearner:
    def predict(self, t, x):
        return ABSTAIN

    def feedback(self, t, x, y):
        pass


class ConstantLearner:
    def __init__(self, label: int):
        self.label = int(label)

    def predict(self, t, x):
        return self.label

    def feedback(self, t, x, y):
        pass


class MajorityLearner:
    """Predicts the majority of the labels observed so far (ties toward 1)."""

    def __init__(self):
        self.ones = 0
        self.total = 0

    def predict(self, t, x):
        return 1 if 2 * self.ones >= self.total else 0

    def feedback(self, t, x, y):
        if y is not None:
            self.ones += int(y)
            self.total += 1


class ConsistentLearner:
    """Predicts the forced label outside the disagreement region of the labels seen, else abstains."""

    def __init__(self, spec: ClassSpec):
        self.cls = full_class(spec)

    def predict(self, t, x):
        from .hypothesis import consistent_label
        if in_disagreement(self.cls, x):
            return ABSTAIN
        return consistent_label(self.cls, x)

    def feedback(self, t, x, y):
        if y is not None:
            self.cls = self.cls.reduce(x, y)


# ---------------------------------------------------------------------------
# Protocol
# ---------------------------------------------------------------------------

@dataclass
class TraceRecord:
    t: int
    c: int
    x: object
    yhat: int
    y: int
    observed: bool


@dataclass
class RunResult:
    trace: list
    mis_err: int
    abs_err: int
    seed: int
    config: dict = field(default_factory=dict)

    def recount(self) -> tuple[int, int]:
        mis = sum(1 for r in self.trace if r.yhat != ABSTAIN and r.yhat != r.y)
        ab = sum(1 for r in self.trace if r.c == 0 and r.yhat == ABSTAIN)
        return mis, ab

    def predictions(self) -> list[int]:
        return [r.yhat for r in self.trace]


class ProtocolContext:
    """Current-round view of a running protocol for oracle-assisted learners.

    Oracles may only ask about the round being played.
    """

    def __init__(self):
        self.t = 0
        self.c = 0
        self.y = None

    def _check(self, t):
        if t != self.t:
            raise RuntimeError(f"oracle queried for round {t} during round {self.t}")

    def is_clean(self, t: int) -> bool:
        self._check(t)
        return self.c == 0

    def label(self, t: int) -> int:
        self._check(t)
        return self.y


def run_protocol(learner, adversary, dist, labeler: Labeler, T: int, feedback: str = "full",
                 seed: int = 0, context: ProtocolContext | None = None,
                 config: dict | None = None) -> RunResult:
    """Play ``T`` rounds between ``learner`` and ``adversary``."""
    if feedback not in ("full", "censored"):
        raise InputError(f"unknown feedback mode {feedback!r}")
    if not isinstance(labeler, Labeler):
        raise InputError("labeler must be a Labeler")
    spec = labeler.spec
    rng = np.random.default_rng([int(seed), 11])
    history: list[HistoryItem] = []
    trace: list[TraceRecord] = []
    mis = ab = 0
    for t in range(1, T + 1):
        c, x = adversary.decide(t, history)
        if x is None:
            if c:
                raise InputError(f"adversary corrupted round {t} without an instance")
            x = dist.sample(rng, 1)[0]
        x = spec.check_point(x)
        y = labeler(x)
        if context is not None:
            context.t, context.c, context.y = t, c, y
        yhat = learner.predict(t, x)
        observed = feedback == "full" or yhat != ABSTAIN
        learner.feedback(t, x, y if observed else None)
        mis += yhat != ABSTAIN and yhat != y
        ab += c == 0 and yhat == ABSTAIN
        history.append(HistoryItem(x, c, yhat, y))
        trace.append(TraceRecord(t, c, x, int(yhat), y, observed))
    return RunResult(trace, int(mis), int(ab), int(seed), dict(config or {}))


# ---------------------------------------------------------------------------
# Trace serialization
# ---------------------------------------------------------------------------

def write_trace(result: RunResult, spec: ClassSpec, fh) -> None:
    """Tab-separated records ``t c x yhat y observed`` after a ``#`` header line."""
    header = {"format": "abstain_lab.trace", "version": TRACE_VERSION, "fields": TRACE_FIELDS,
              "seed": result.seed, "mis_err": result.mis_err, "abs_err": result.abs_err,
              "config": result.config}
    fh.write("# " + json.dumps(header, sort_keys=True, default=str) + "\n")
    for r in result.trace:
        fh.write("\t".join([str(r.t), str(r.c), spec.encode(r.x), label_str(r.yhat),
                            label_str(r.y), "1" if r.observed else "0"]) + "\n")


def read_trace(spec: ClassSpec, fh) -> RunResult:
    header, trace = {}, []
    for line in fh:
        line = line.rstrip("\n")
        if line.startswith("# "):
            header = json.loads(line[2:])
            continue
        if not line:
            continue
        t, c, x, yhat, y, obs = line.split("\t")
        trace.append(TraceRecord(int(t), int(c), spec.decode(x), parse_label(yhat),
                                 parse_label(y), obs == "1"))
    return RunResult(trace, header.get("mis_err", 0), header.get("abs_err", 0),
                     header.get("seed", 0), header.get("config", {}))


def trace_text(result: RunResult, spec: ClassSpec) -> str:
    buf = io.StringIO()
    write_trace(result, spec, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Tree lower-bound construction
# ---------------------------------------------------------------------------

@dataclass
class LayerInfo:
    index: int
    k: int
    start: int
    target: tuple
    case: str
    p_abstain: float
    p_zero: float


@dataclass
class LowerBoundResult:
    ok: bool
    i_max: int
    script: AdversaryScript | None
    target: tuple
    layers: list
    mis_err: float
    abs_err: float
    diagnostics: dict
    construction_labels: dict = field(default_factory=dict)


def _feed(learner, t, x, y):
    yhat = learner.predict(t, x)
    learner.feedback(t, x, y)
    return yhat


def lowerbound_adversary(learner_factory: Callable[[int], object], T: int, A: float,
                         trials: int = 8, seed: int = 0, arity: int | None = None,
                         slack: float = 0.05, deterministic: bool = True) -> LowerBoundResult:
    """Build the layered tree script that forces mistakes on any learner with abstention budget ``A``.

    Each layer draws i.i.d. children of the current target node, finds a
    round whose estimated abstention probability is at most one half, and
    moves the target there or to a fresh sibling depending on which label the
    learner is more likely to predict. ``trials`` continuation draws estimate
    each probability; with ``deterministic=False`` each estimate also averages
    over ``trials`` learner seeds.
    """
    if not 0.5 <= A <= T / 2:
        raise InputError("abstention budget A must lie in [1/2, T/2]")
    arity = int(arity or 4 * T)
    i_max = int(math.floor(T / (2 * A)))
    spec = TreePaths(arity, i_max + 1)
    rng = np.random.default_rng([int(seed), 5])
    learner_seeds = [0] if deterministic else list(range(trials))
    bases = [learner_factory(s) for s in learner_seeds]
    xs: list[tuple] = []
    given: dict[int, int] = {}
    target: tuple = ()
    layers: list[LayerInfo] = []
    k_prev = 0
    width = int(math.floor(2 * A))
    diag = {"probes": trials, "slack": slack, "arity": arity, "learner_seeds": len(learner_seeds)}

    def child(node):
        return node + (int(rng.integers(1, arity + 1)),)

    for i in range(1, i_max + 1):
        w = min(width, T - k_prev)
        if w <= 0:
            diag["failure"] = f"horizon exhausted at layer {i}"
            return LowerBoundResult(False, i_max, None, target, layers, math.nan, math.nan, diag)
        probes = [[child(target) for _ in range(w)] for _ in range(trials)]
        outs = np.empty((trials, len(bases), w), dtype=np.int64)
        for p, cont in enumerate(probes):
            for b, base in enumerate(bases):
                ln = copy.deepcopy(base)
                for s, x in enumerate(cont):
                    outs[p, b, s] = _feed(ln, k_prev + s + 1, x, 0)
        p_abs = (outs == ABSTAIN).mean(axis=(0, 1))
        ok = np.flatnonzero(p_abs <= 0.5 + slack)
        if len(ok) == 0:
            diag["failure"] = f"no round with abstention probability <= 1/2 in layer {i}"
            diag["p_abstain"] = p_abs.tolist()
            return LowerBoundResult(False, i_max, None, target, layers, math.nan, math.nan, diag)
        s_star = int(ok[0])
        chosen = None
        for p, cont in enumerate(probes):
            if cont[s_star] in cont[:s_star]:
                continue
            pred = outs[p, :, s_star]
            p_pred = float((pred != ABSTAIN).mean())
            if p_pred >= 0.25 - slack:
                chosen = (cont, float((pred == 0).mean()), p_pred)
                break
        if chosen is None:
            diag["failure"] = f"no distinct predicting instantiation in layer {i}"
            return LowerBoundResult(False, i_max, None, target, layers, math.nan, math.nan, diag)
        cont, p0, p_pred = chosen
        window = cont[:s_star + 1]
        if p0 >= 1 / 8:
            new_target, case = window[-1], "hit"
        else:
            used = {x[-1] for x in window}
            free = [c for c in range(1, arity + 1) if c not in used]
            new_target, case = target + (int(rng.choice(free)),), "fresh"
        for s, x in enumerate(window):
            y = int(is_prefix(x, new_target))
            given[k_prev + s + 1] = y
            for base in bases:
                _feed(base, k_prev + s + 1, x, y)
        xs.extend(window)
        layers.append(LayerInfo(i, k_prev + s_star + 1, k_prev + 1, new_target, case,
                                float(p_abs[s_star]), p0))
        target = new_target
        k_prev += s_star + 1

    corrupt = np.zeros(T, dtype=bool)
    corrupt[:k_prev] = True
    instances = {t + 1: x for t, x in enumerate(xs)}
    for t in range(k_prev + 1, T + 1):
        instances[t] = child(target) if len(target) < spec.depth else target
    script = AdversaryScript(T, corrupt, instances)
    labeler = Labeler(spec, {"node": target})
    mis, ab = [], []
    for s in learner_seeds:
        res = run_protocol(learner_factory(s), script, None, labeler, T, seed=s)
        mis.append(res.mis_err)
        ab.append(res.abs_err)
    return LowerBoundResult(True, i_max, script, target, layers, float(np.mean(mis)),
                            float(np.mean(ab)), diag, given)


def check_lowerbound_script(result: LowerBoundResult) -> list[str]:
    """Validity problems of an emitted script (empty when valid)."""
    problems = []
    script, target = result.script, result.target
    for t, y in result.construction_labels.items():
        if int(is_prefix(script.instances[t], target)) != y:
            problems.append(f"round {t}: label used during construction disagrees with the final target")
    prev_target: tuple = ()
    for layer in result.layers:
        pts = [script.instances[t] for t in range(layer.start, layer.k + 1)]
        if any(len(x) != len(prev_target) + 1 or not is_prefix(prev_target, x) for x in pts):
            problems.append(f"layer {layer.index} has instances outside the children of its root")
        if pts[-1] in pts[:-1]:
            problems.append(f"layer {layer.index} repeats its mistake-forcing instance")
        if not is_prefix(prev_target, layer.target) or len(layer.target) != len(prev_target) + 1:
            problems.append(f"layer {layer.index} target is not a child of the previous target")
        prev_target = layer.target
    if not is_prefix(prev_target, target):
        problems.append("final target does not extend the last layer target")
    return problems


@dataclass
class Scenario:
    """Everything except the learner needed to play seeded protocol runs."""

    spec: ClassSpec
    dist: object
    labeler: Labeler
    T: int
    adversary: str = "none"
    adversary_params: dict = field(default_factory=dict)
    feedback: str = "full"

    def make_adversary(self, seed: int):
        return builtin_adversary(self.adversary, self.spec, self.T, self.adversary_params,
                                 seed, self.dist)

    def run(self, learner, seed: int, context: ProtocolContext | None = None,
            config: dict | None = None) -> RunResult:
        return run_protocol(learner, self.make_adversary(seed), self.dist, self.labeler, self.T,
                            self.feedback, seed, context, config)
