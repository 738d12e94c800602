"""Parameter schedules, experiment configuration, seeded sweeps and structured output.

Configuration files are flat ``key = value`` lines. Values are parsed as
JSON when possible (numbers, ``true``/``false``, ``null``, lists, objects)
and kept as plain strings otherwise. ``#`` starts a comment line. Dotted keys
address parameters of a component (``adversary.fraction = 0.5``) and keys
under ``grid.`` list the values of a sweep axis (``grid.T = [250, 500]``).
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InputError
from .estimators import (FiniteDistribution, exact_rho, median_rho, sigma_standard_error,
                         ustat_trials)
from .hypothesis import ClassSpec, full_class, make_spec
from .labels import ABSTAIN

FORMAT_VERSION = 1
RUN_COLUMNS = ("format_version", "cell", "point", "seed_index", "seed", "spec", "learner",
               "adversary", "feedback", "T", "alpha", "mis_err", "abs_err", "status", "note",
               "error")
CELL_COLUMNS = ("format_version", "cell", "point", "runs", "failed", "mis_mean", "mis_std",
                "mis_min", "mis_max", "abs_mean", "abs_std", "abs_min", "abs_max")
REGIMES = ("oblivious", "adaptive", "censored_oblivious", "desk")
THREADS_ENV = "ABSTAIN_LAB_THREADS"

# Desk-scale regime: same exponents in T, small constants, no log factors.
DESK_M = 3
DESK_CN = 5.0


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    regime: str
    d: int
    T: int
    alpha: float
    D: float | None
    epsilon: float
    m: int
    N: int
    s_max: int
    M: float
    update_policy: str
    flags: tuple = ()

    @property
    def vacuous(self) -> bool:
        return self.M == 0

    def as_dict(self) -> dict:
        out = asdict(self)
        out["flags"] = list(self.flags)
        return out


def schedule_params(regime: str, d: int, T: int, alpha: float, D: float | None = None,
                    c0: float = 1.0) -> Schedule:
    """Parameters of the boosted learner for one regime, with ``ln`` for every log.

    When ``epsilon >= 1`` or ``s_max > T`` the abstention guarantee is vacuous
    and the schedule sets ``M = 0`` (never predict), flagging the case.
    ``s_max`` is capped at ``T``.
    """
    if regime not in REGIMES:
        raise InputError(f"unknown regime {regime!r}; choose from {', '.join(REGIMES)}")
    d, T, alpha = int(d), int(T), float(alpha)
    if d < 1 or T < 2:
        raise InputError("need d >= 1 and T >= 2")
    hi = 0.5 if regime == "desk" else 1 / 3
    if not 0 <= alpha <= hi:
        raise InputError(f"alpha must lie in [0, {hi:.4g}] for the {regime} regime")
    lnT = math.log(T)
    policy = "always"
    if regime == "oblivious":
        eps = d * d * lnT ** (5 / 3) * T ** -alpha
        m = math.ceil(8 * math.log(d * T / eps))
        s_raw = d * d * lnT ** (4 / 3) * T ** (1 - 2 * alpha)
    elif regime == "adaptive":
        if D is None:
            raise InputError("the adaptive regime needs the reduction dimension D")
        D = float(D)
        if D < 1:
            raise InputError("D must be >= 1")
        g = D * math.log(D) + lnT
        eps = d * d * g ** (2 / 3) * lnT * T ** -alpha
        m = math.ceil(c0 * (D * math.log(D) + 8 * D + 3 * math.log(d / eps)))
        s_raw = d * d * g ** (1 / 3) * lnT * T ** (1 - 2 * alpha)
        policy = "restricted"
    elif regime == "censored_oblivious":
        eps = d ** (10 / 3) * lnT ** (7 / 3) * T ** -alpha
        m = math.ceil(80 * d * d * math.log(1 / eps) * lnT)
        s_raw = d ** (8 / 3) * lnT ** (5 / 3) * T ** (1 - 2 * alpha)
    else:
        eps = T ** -alpha
        m = DESK_M
        s_raw = d * d * T ** (1 - 2 * alpha)
    N = math.ceil((DESK_CN if regime == "desk" else 2000) * d * d / eps)
    s_max = math.ceil(s_raw)
    flags = []
    M = 5 * d * d * math.log(1 / eps) if eps < 1 else 0.0
    if eps >= 1:
        flags.append("epsilon>=1")
    if s_max > T:
        flags.append("s_max>T")
        s_max = T
    if flags:
        M = 0.0
    return Schedule(regime, d, T, alpha, D, eps, max(1, m), N, s_max, M, policy, tuple(flags))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines to a dict; later keys win."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"config line {n}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise InputError(f"config line {n}: empty key")
        out[key] = parse_value(value)
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}")
    return parse_config_text(text)


def format_config(flat: dict) -> str:
    return "".join(f"{k} = {json.dumps(v, sort_keys=True)}\n" for k, v in sorted(flat.items()))


_SECTIONS = {"spec": "spec_params", "labeler": "labeler_params",
             "adversary": "adversary_params", "learner": "learner_params"}
_SCALARS = {"spec": str, "dist": str, "dist.n": int, "labeler": str, "adversary": str,
            "learner": str, "schedule": str, "alpha": float, "D": float, "T": int,
            "feedback": str, "seeds": None, "seed": int, "budget": int, "out": str,
            "format": str, "threads": int, "traces": bool}


@dataclass
class ExperimentConfig:
    """One experiment: a scenario, a learner, seeds and an optional sweep grid.

    ``learner`` is one of ``wl`` (clean-prefix weak learner), ``known_mu``,
    ``abstain_boost``, ``oracle``, ``majority``, ``consistent``, ``abstain``
    or ``constant``. Weak-learner and boosting parameters not given under
    ``learner.*`` come from ``schedule_params(schedule, d, T, alpha, D)``.
    """

    spec: str = "thresholds"
    spec_params: dict = field(default_factory=dict)
    dist: str = "uniform"
    dist_n: int = 20
    labeler: str = "default"
    labeler_params: dict = field(default_factory=dict)
    adversary: str = "none"
    adversary_params: dict = field(default_factory=dict)
    learner: str = "wl"
    learner_params: dict = field(default_factory=dict)
    schedule: str = "desk"
    alpha: float = 0.25
    D: float | None = None
    T: int = 500
    feedback: str = "full"
    seeds: int | list = 1
    seed: int = 0
    budget: int = 200_000
    out: str | None = None
    format: str = "csv"
    threads: int | None = None
    traces: bool = True
    grid: dict = field(default_factory=dict)

    @classmethod
    def from_flat(cls, flat: dict) -> "ExperimentConfig":
        cfg = cls()
        for key, value in flat.items():
            if key.startswith("grid."):
                axis = key[5:]
                if not isinstance(value, list) or not value:
                    raise InputError(f"grid axis {axis!r} needs a nonempty list")
                if axis.startswith("grid."):
                    raise InputError("nested grid keys are not allowed")
                cfg.grid[axis] = value
                continue
            head, _, rest = key.partition(".")
            if key in _SCALARS:
                typ = _SCALARS[key]
                attr = "dist_n" if key == "dist.n" else key
                try:
                    setattr(cfg, attr, value if typ is None or value is None else typ(value))
                except (TypeError, ValueError):
                    raise InputError(f"bad value for {key}: {value!r}")
            elif rest and head in _SECTIONS:
                getattr(cfg, _SECTIONS[head])[rest] = value
            else:
                raise InputError(f"unknown config key {key!r}")
        cfg.validate()
        return cfg

    def to_flat(self, with_grid: bool = True) -> dict:
        flat = {}
        for f in fields(self):
            name = f.name
            value = getattr(self, name)
            if name in _SECTIONS.values():
                prefix = name[:-len("_params")]
                flat.update({f"{prefix}.{k}": v for k, v in value.items()})
            elif name == "grid":
                if with_grid:
                    flat.update({f"grid.{k}": v for k, v in value.items()})
            elif name == "dist_n":
                flat["dist.n"] = value
            else:
                flat[name] = value
        return flat

    def validate(self) -> None:
        if not 0 <= self.alpha <= 1:
            raise InputError("alpha must lie in [0, 1]")
        if self.T < 1:
            raise InputError("T must be >= 1")
        if self.feedback not in ("full", "censored"):
            raise InputError(f"unknown feedback mode {self.feedback!r}")
        if self.format not in ("csv", "jsonl"):
            raise InputError(f"unknown output format {self.format!r}")
        if self.dist not in ("uniform", "grid"):
            raise InputError(f"unknown distribution {self.dist!r}")
        if self.labeler not in ("default", "random"):
            raise InputError(f"unknown labeler {self.labeler!r}")
        if self.learner not in LEARNERS:
            raise InputError(f"unknown learner {self.learner!r}")
        if self.schedule not in REGIMES:
            raise InputError(f"unknown schedule regime {self.schedule!r}")
        seed_list(self.seeds)
        self.make_spec()
        for axis in self.grid:
            ExperimentConfig.from_flat({**self.to_flat(False), axis: self.grid[axis][0]})

    def make_spec(self) -> ClassSpec:
        return make_spec(self.spec, **self.spec_params)

    def points(self) -> list[dict]:
        """Grid points in row-major order of the sorted axis names."""
        axes = sorted(self.grid)
        return [dict(zip(axes, combo)) for combo in itertools.product(*(self.grid[a] for a in axes))]

    def at(self, point: dict) -> "ExperimentConfig":
        return ExperimentConfig.from_flat({**self.to_flat(False), **point})


def seed_list(seeds) -> list[int]:
    if isinstance(seeds, bool):
        raise InputError("seeds must be a count or a list of integers")
    if isinstance(seeds, int):
        if seeds < 1:
            raise InputError("seed count must be >= 1")
        return list(range(seeds))
    if isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds):
        return list(seeds)
    raise InputError("seeds must be a count or a nonempty list of integers")


def derive_seed(master: int, point: dict, index: int) -> int:
    """Portable 63-bit run seed from the master seed, grid coordinates and seed index."""
    blob = json.dumps([int(master), sorted(point.items()), int(index)], sort_keys=True)
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "big") >> 1


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}")
        else:
            threads = 1
    if threads < 1:
        raise InputError("thread count must be >= 1")
    return threads


# ---------------------------------------------------------------------------
# Building runs
# ---------------------------------------------------------------------------

LEARNERS = ("wl", "known_mu", "abstain_boost", "oracle", "majority", "consistent", "abstain",
            "constant")


def build_scenario(cfg: ExperimentConfig, seed: int):
    from .environment import Labeler, Scenario, UniformBox, default_labeler, grid_distribution

    spec = cfg.make_spec()
    dist = UniformBox(spec) if cfg.dist == "uniform" else grid_distribution(spec, cfg.dist_n)
    if cfg.labeler_params:
        labeler = Labeler(spec, dict(cfg.labeler_params))
    elif cfg.labeler == "random":
        labeler = default_labeler(spec, np.random.default_rng([seed, 13]))
    else:
        labeler = default_labeler(spec)
    return Scenario(spec, dist, labeler, cfg.T, cfg.adversary, dict(cfg.adversary_params),
                    cfg.feedback)


def resolve_schedule(cfg: ExperimentConfig, spec: ClassSpec) -> Schedule:
    return schedule_params(cfg.schedule, spec.vc_dim, max(2, cfg.T), cfg.alpha, cfg.D)


def _learner_value(cfg, key, default):
    return cfg.learner_params.get(key, default)


def run_single(cfg: ExperimentConfig, seed: int):
    """One protocol run of ``cfg`` with run seed ``seed``; returns ``(RunResult, note)``."""
    from .boosting import BoostParams, PoolSpec, abstain_boost_run
    from .environment import (AbstainingLearner, ConsistentLearner, ConstantLearner,
                              MajorityLearner, OracleLearner, ProtocolContext)
    from .weak_learner import KnownMuLearner, WarmupOracle, WeakLearner, WeakLearnerConfig

    scenario = build_scenario(cfg, seed)
    spec = scenario.spec
    flat = cfg.to_flat(False)
    note = ""
    kind = cfg.learner
    if kind in ("wl", "abstain_boost"):
        sched = resolve_schedule(cfg, spec)
        eps = float(_learner_value(cfg, "epsilon", sched.epsilon))
        m = int(_learner_value(cfg, "m", sched.m))
        N = int(_learner_value(cfg, "N", sched.N))
        policy = str(_learner_value(cfg, "policy", sched.update_policy))
        s_max = int(_learner_value(cfg, "s_max", sched.s_max))
        M = float(_learner_value(cfg, "M", sched.M))
        vacuous = eps >= 1 or (kind == "abstain_boost" and M == 0)
        if vacuous:
            note = "vacuous schedule: never predicts"
            return scenario.run(AbstainingLearner(), seed, config=flat), note
        if kind == "abstain_boost":
            pool = PoolSpec(str(_learner_value(cfg, "pool", "prefix-sweep")),
                            int(_learner_value(cfg, "pool_size", 16)))
            params = BoostParams(eps, m, N, s_max, M, policy, cfg.budget)
            return abstain_boost_run(pool, params, scenario, seed, config=flat), note
        context = ProtocolContext()

        def harvest(t, x, pred):
            y = context.label(t)
            return y if pred != ABSTAIN and pred != y else None

        wcfg = WeakLearnerConfig(epsilon=eps, m=m, d=spec.vc_dim, update_policy=policy,
                                 censored_updates=harvest if cfg.feedback == "censored" else None,
                                 subset_budget=cfg.budget, seed=seed)
        learner = WeakLearner(spec, wcfg, WarmupOracle(m * N, context.is_clean, context.label))
        return scenario.run(learner, seed, context=context, config=flat), note
    if kind == "known_mu":
        if not isinstance(scenario.dist, FiniteDistribution):
            raise InputError("known_mu needs dist = grid")
        learner = KnownMuLearner(spec, scenario.dist, cfg.T)
    elif kind == "oracle":
        learner = OracleLearner(scenario.labeler)
    elif kind == "majority":
        learner = MajorityLearner()
    elif kind == "consistent":
        learner = ConsistentLearner(spec)
    elif kind == "abstain":
        learner = AbstainingLearner()
    else:
        learner = ConstantLearner(int(_learner_value(cfg, "label", 1)))
    return scenario.run(learner, seed, config=flat), note


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class CellStats:
    cell: int
    point: dict
    runs: int
    failed: int
    mis: tuple    # (mean, std, min, max); NaN when no run completed
    abs: tuple

    def as_row(self) -> dict:
        row = {"format_version": FORMAT_VERSION, "cell": self.cell,
               "point": json.dumps(self.point, sort_keys=True), "runs": self.runs,
               "failed": self.failed}
        for name, st in (("mis", self.mis), ("abs", self.abs)):
            row.update(dict(zip((f"{name}_mean", f"{name}_std", f"{name}_min", f"{name}_max"), st)))
        return row


@dataclass
class SweepResult:
    cells: list
    rows: list
    provenance: dict
    traces: dict = field(default_factory=dict, repr=False)

    def cell(self, point: dict) -> CellStats:
        for c in self.cells:
            if c.point == point:
                return c
        raise KeyError(point)


def _stats(values: list) -> tuple:
    if not values:
        return (math.nan,) * 4
    a = np.asarray(values, dtype=float)
    std = float(a.std(ddof=1)) if len(a) > 1 else 0.0
    return float(a.mean()), std, float(a.min()), float(a.max())


def _run_task(task):
    flat, cell, point, index, seed, want_trace = task
    cfg = ExperimentConfig.from_flat(flat)
    row = {"format_version": FORMAT_VERSION, "cell": cell,
           "point": json.dumps(point, sort_keys=True), "seed_index": index, "seed": seed,
           "spec": cfg.spec, "learner": cfg.learner, "adversary": cfg.adversary,
           "feedback": cfg.feedback, "T": cfg.T, "alpha": cfg.alpha}
    trace = None
    try:
        result, note = run_single(cfg, seed)
        mis, ab = result.recount()
        if (mis, ab) != (result.mis_err, result.abs_err):
            raise RuntimeError("counters disagree with the trace")
        row.update(mis_err=mis, abs_err=ab, status="ok", note=note, error="")
        if want_trace:
            from .environment import trace_text
            trace = trace_text(result, cfg.make_spec())
    except Exception as exc:  # a failing run is recorded, the sweep continues
        row.update(mis_err="", abs_err="", status="failed", note="",
                   error=f"{type(exc).__name__}: {exc}")
    return row, trace


def run_experiment(cfg: ExperimentConfig, threads: int | None = None,
                   keep_traces: bool = False) -> SweepResult:
    """Run every (grid point, seed) pair; aggregation is keyed by grid coordinates."""
    cfg.validate()
    seeds = seed_list(cfg.seeds)
    points = cfg.points()
    want = keep_traces or (cfg.out is not None and cfg.traces)
    tasks = []
    for c, point in enumerate(points):
        flat = cfg.at(point).to_flat(False)
        for i, s in enumerate(seeds):
            tasks.append((flat, c, point, i, derive_seed(cfg.seed, point, s), want))
    n = resolve_threads(threads if threads is not None else cfg.threads)
    if n == 1 or len(tasks) == 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=1))
    results.sort(key=lambda r: (r[0]["cell"], r[0]["seed_index"]))
    rows = [r for r, _ in results]
    traces = {(r["cell"], r["seed_index"]): tr for r, tr in results if tr is not None}
    cells = []
    for c, point in enumerate(points):
        mine = [r for r in rows if r["cell"] == c]
        ok = [r for r in mine if r["status"] == "ok"]
        cells.append(CellStats(c, point, len(ok), len(mine) - len(ok),
                               _stats([r["mis_err"] for r in ok]),
                               _stats([r["abs_err"] for r in ok])))
    prov = {"format_version": FORMAT_VERSION, "code_version": __version__,
            "master_seed": cfg.seed, "seeds": seeds, "budget": cfg.budget,
            "config": {k: v for k, v in cfg.to_flat().items() if k != "threads"}}
    result = SweepResult(cells, rows, prov, traces)
    if cfg.out is not None:
        write_sweep(result, cfg.out, cfg.format)
    return result


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _header(provenance: dict) -> str:
    return json.dumps(provenance, sort_keys=True, default=str)


def table_text(rows: list, columns: tuple, fmt: str, provenance: dict) -> str:
    """Rows as CSV (``#`` provenance line first) or JSONL (provenance object first)."""
    buf = io.StringIO()
    if fmt == "csv":
        buf.write("# " + _header(provenance) + "\n")
        w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n",
                           extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
    elif fmt == "jsonl":
        buf.write(json.dumps({"provenance": json.loads(_header(provenance))}, sort_keys=True) + "\n")
        for row in rows:
            buf.write(json.dumps({k: _jsonable(row.get(k)) for k in columns}) + "\n")
    else:
        raise InputError(f"unknown output format {fmt!r}")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def write_sweep(result: SweepResult, out_dir, fmt: str = "csv") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prov = result.provenance
    paths = [out / f"runs.{fmt}", out / f"cells.{fmt}", out / "config.txt"]
    paths[0].write_text(table_text(result.rows, RUN_COLUMNS, fmt, prov))
    paths[1].write_text(table_text([c.as_row() for c in result.cells], CELL_COLUMNS, fmt, prov))
    paths[2].write_text(format_config(prov["config"]))
    if result.traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for (c, i), text in sorted(result.traces.items()):
            p = tdir / f"cell{c:03d}_seed{i:03d}.trace"
            p.write_text(text)
            paths.append(p)
    return paths


def read_table(text: str) -> tuple[dict, list[dict]]:
    """Inverse of :func:`table_text` (values come back as strings for CSV)."""
    lines = text.splitlines()
    if not lines:
        raise InputError("empty table")
    if lines[0].startswith("# "):
        prov = json.loads(lines[0][2:])
        rows = list(csv.DictReader(lines[1:]))
    else:
        prov = json.loads(lines[0])["provenance"]
        rows = [json.loads(line) for line in lines[1:] if line]
    return prov, rows


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x`` (``y`` floored at 0.5)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.maximum(np.asarray(ys, dtype=float), 0.5))
    return float(np.polyfit(lx, ly, 1)[0])


# ---------------------------------------------------------------------------
# Probes used by the command line
# ---------------------------------------------------------------------------

def estimate_probe(spec: ClassSpec, dist: FiniteDistribution, constraints: list, k: int, N: int,
                   m: int, trials: int, seed: int = 0, budget: int = 200_000) -> dict:
    """Exact shattering probability next to its U-statistic and median estimates."""
    cls = full_class(spec)
    for x, y in constraints:
        cls = cls.reduce(x, y)
    exact = exact_rho(cls, dist, k)
    vals = ustat_trials(cls, dist, k, N, trials, seed, budget)
    rng = np.random.default_rng([seed, 17])
    blocks = [spec.as_array(dist.sample(rng, N)) for _ in range(m)]
    med = median_rho(cls, blocks, k, budget, seed)
    return {"spec": spec.name, "k": k, "N": N, "m": m, "trials": trials, "exact_rho": exact,
            "ustat_mean": float(vals.mean()), "ustat_sigma": float(vals.std(ddof=1)),
            "sigma_se": sigma_standard_error(vals), "median_rho": med.value,
            "budget_used": med.budget_used}


def lowerbound_learner(name: str, T: int, A: float, s_max: int = 2):
    """Learner factory ``seed -> learner`` for the tree lower-bound construction."""
    from .boosting import AggregateLearner
    from .environment import ConsistentLearner, ConstantLearner, MajorityLearner
    from .hypothesis import TreePaths

    if name == "majority":
        return lambda seed: MajorityLearner()
    if name == "aggregate":
        spec = TreePaths(4 * T, int(math.floor(T / (2 * A))) + 1)
        return lambda seed: AggregateLearner(
            [ConstantLearner(0), ConstantLearner(1), MajorityLearner(), ConsistentLearner(spec)],
            s_max, 1)
    raise InputError(f"unknown lower-bound learner {name!r}; choose majority or aggregate")


def measured_abstention(factory, T: int, runs: int = 5, seed: int = 0) -> float:
    """Mean abstention error of ``factory(seed)`` on clean tree streams, floored at 1/2."""
    from .environment import Labeler, Scenario, UniformBox
    from .hypothesis import TreePaths

    spec = TreePaths(4 * T, 1)
    scen = Scenario(spec, UniformBox(spec), Labeler(spec, {"node": (1,)}), T)
    vals = [scen.run(factory(s), seed * 1000 + s).abs_err for s in range(runs)]
    return max(0.5, float(np.mean(vals)))


def lowerbound_probe(name: str, T: int, A: float | None = None, trials: int = 8, seed: int = 0,
                     s_max: int = 2) -> dict:
    """Run the construction against a named learner; ``A=None`` measures the budget first."""
    from .environment import check_lowerbound_script, lowerbound_adversary

    if A is None:
        A = measured_abstention(lowerbound_learner(name, T, 0.5, s_max), T, seed=seed)
    res = lowerbound_adversary(lowerbound_learner(name, T, A, s_max), T, A, trials, seed)
    problems = check_lowerbound_script(res) if res.ok else []
    return {"learner": name, "T": T, "A": A, "seed": seed, "ok": res.ok, "i_max": res.i_max,
            "mis_err": res.mis_err, "abs_err": res.abs_err, "target_bound": res.i_max / 8,
            "layers_hit": sum(1 for lay in res.layers if lay.case == "hit"),
            "problems": len(problems), "failure": res.diagnostics.get("failure", "")}
