"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (also collected into the pytest
terminal summary). Run standalone with ``python tests/test_acceptance.py``.
"""
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from abstain_lab.boosting import (Aggregate, Boosting, Delete, StreamConfig, aggregate_bound,
                                  boosting_abstention_bound, boosting_mistake_bound,
                                  delete_bound, run_stream, synthetic_stream)
from abstain_lab.complexity import count_reductions, default_test_points
from abstain_lab.environment import (ProtocolContext, Scenario, UniformBox, check_lowerbound_script,
                                     default_labeler, grid_distribution, lowerbound_adversary)
from abstain_lab.estimators import (FiniteDistribution, exact_rho, lower_median,
                                    sigma_standard_error, ustat_trials)
from abstain_lab.harness import (ExperimentConfig, lowerbound_learner, loglog_slope,
                                 measured_abstention, run_experiment)
from abstain_lab.hypothesis import Halfspaces2D, Rectangles, SubsetsOfSize, Thresholds, full_class
from abstain_lab.labels import ABSTAIN
from abstain_lab.weak_learner import WarmupOracle, WeakLearner, WeakLearnerConfig, mistake_bound

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:
    ACCEPTANCE_LINES = []

WORKERS = 4


def report(number: int, name: str, ok: bool, detail: str, started: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{number}] {name}: {detail} ({time.time() - started:.1f}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _pmap(fn, items):
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        return list(pool.map(fn, items, chunksize=4))


def _wl_run(spec, eps, adversary, seed, N, m, T, policy, dist=None, feedback="full",
            updates=None, fraction=0.5):
    ctx = ProtocolContext()
    if feedback == "censored" and updates is None:
        def updates(t, x, pred):
            y = ctx.label(t)
            return y if pred != ABSTAIN and pred != y else None
    cfg = WeakLearnerConfig(epsilon=eps, m=m, d=spec.vc_dim, update_policy=policy,
                            censored_updates=updates, seed=seed)
    wl = WeakLearner(spec, cfg, WarmupOracle(m * N, ctx.is_clean, ctx.label))
    scen = Scenario(spec, dist or UniformBox(spec),
                    default_labeler(spec, np.random.default_rng(seed)), T, adversary,
                    {"fraction": fraction}, feedback)
    return scen.run(wl, seed, context=ctx), wl


# -- 1 -------------------------------------------------------------------------

def _mistake_case(args):
    name, eps, adversary, seed = args
    spec = Thresholds() if name == "thresholds" else Rectangles(2)
    policy = "restricted" if adversary == "disagreement_targeting" else "always"
    res, _ = _wl_run(spec, eps, adversary, seed, N=16, m=3, T=200, policy=policy)
    return res.mis_err / mistake_bound(spec.vc_dim, eps)


def test_1_weak_learner_mistake_bound():
    t0 = time.time()
    cases = [(s, e, a, seed) for s in ("thresholds", "rectangles") for e in (0.2, 0.1, 0.05)
             for a in ("none", "fixed_fraction_replay", "disagreement_targeting")
             for seed in range(100)]
    ratios = _pmap(_mistake_case, cases)
    worst = max(ratios)
    report(1, "weak-learner mistake bound", worst < 1,
           f"{len(cases)} runs, max MisErr/(5d^2 ln(1/eps)) = {worst:.3f}", t0)


# -- 2 -------------------------------------------------------------------------

def _abstention_case(seed):
    spec = Thresholds()
    res, _ = _wl_run(spec, 0.1, "fixed_fraction_replay", seed, N=20, m=5, T=500,
                     policy="always", dist=grid_distribution(spec, 20))
    return res.abs_err


def test_2_weak_learner_abstention_bound():
    t0 = time.time()
    vals = _pmap(_abstention_case, range(500))
    mean = float(np.mean(vals))
    limit = 18 * 0.1 * 500 * 1.15
    report(2, "weak-learner abstention bound", mean <= limit,
           f"mean AbsErr {mean:.1f} <= {limit:.0f} over 500 seeds", t0)


# -- 3 -------------------------------------------------------------------------

def _variance_cases():
    pts = [(i + 0.5) / 50 for i in range(50)]
    thr = full_class(Thresholds()).reduce(0.3, 1).reduce(0.5, 0)
    iv = full_class(Rectangles(1)).reduce((0.4,), 1).reduce((0.05,), 0).reduce((0.95,), 0)
    return [("thresholds", thr, FiniteDistribution.uniform(pts)),
            ("intervals", iv, FiniteDistribution.uniform([(p,) for p in pts]))]


def test_3_variance_lemma():
    t0 = time.time()
    bad = []
    n = 0
    for name, cls, dist in _variance_cases():
        for N in (25, 100):
            for k in (1, 2):
                eta = k * k / N
                rho = [exact_rho(cls, dist, l) for l in range(k + 1)]
                # smallest c >= 1 with rho_l <= c eta^l for every l < k
                c = max([1.0] + [rho[l] / eta ** l for l in range(k)])
                bound = math.sqrt(3 * c * eta ** k * rho[k])
                vals = ustat_trials(cls, dist, k, N, 2000, rng_seed=7)
                sigma = float(vals.std(ddof=1))
                n += 1
                if sigma > bound + 4 * sigma_standard_error(vals):
                    bad.append(f"{name} N={N} k={k}: {sigma:.4g} > {bound:.4g}")
    report(3, "variance lemma", not bad, f"{n} cases" + (f"; {bad}" if bad else " within bound"),
           t0)


# -- 4 -------------------------------------------------------------------------

def test_4_median_concentration():
    t0 = time.time()
    cls = full_class(Thresholds()).reduce(0.3, 1).reduce(0.6, 0)
    dist = FiniteDistribution.uniform([(i + 0.5) / 40 for i in range(40)])
    N = 20
    rho = exact_rho(cls, dist, 1)
    sigma = math.sqrt(rho * (1 - rho) / N)
    details, ok = [], True
    for delta in (0.1, 0.05):
        m = math.ceil(8 * math.log(1 / delta))
        vals = ustat_trials(cls, dist, 1, N, 1000 * m, rng_seed=int(1 / delta)).reshape(1000, m)
        meds = np.array([lower_median(row) for row in vals])
        rate = float(np.mean(np.abs(meds - rho) > 2 * sigma))
        limit = delta + 3 * math.sqrt(delta * (1 - delta) / 1000)
        ok &= rate <= limit
        details.append(f"delta={delta} m={m} failure {rate:.3f} <= {limit:.3f}")
    report(4, "median concentration", ok, "; ".join(details), t0)


# -- 5 and 6 -----------------------------------------------------------------------

def _battery():
    rng = np.random.default_rng(2024)
    out = []
    for i in range(200):
        L = (4, 16, 64)[i % 3]
        cfg = StreamConfig(L=L, T=400, C=int(rng.integers(1, L + 1)), M=int(rng.integers(0, 6)),
                           pattern=("uniform", "graded", "bursty")[i % 3 if L != 4 else 0],
                           clean_fraction=float(rng.choice([1.0, 0.7])),
                           attack_rate=float(rng.choice([0.1, 0.3, 0.5])))
        out.append((cfg, i, int(rng.integers(0, 9))))
    return out


def _delete_case(args):
    cfg, seed, s_max = args
    s = synthetic_stream(cfg, seed)
    half = -(-cfg.C // 2)
    bound = delete_bound(cfg.M, cfg.L, len(s.labels), s_max)
    return any(run_stream(Delete(cfg.L, k, half), s).mistakes <= bound
               for k in range(s_max + 1))


def test_5_delete_existence():
    t0 = time.time()
    found = _pmap(_delete_case, _battery())
    report(5, "Delete existence bound", all(found),
           f"{sum(found)}/{len(found)} streams have a bound-satisfying deletion number", t0)


def _boost_case(args):
    cfg, seed, s_max = args
    s = synthetic_stream(cfg, seed)
    half = -(-cfg.C // 2)
    problems = []
    agg = run_stream(Aggregate(cfg.L, s_max, half), s)
    if agg.mistakes > aggregate_bound(cfg.M, cfg.L, len(s.labels), s_max):
        problems.append("aggregate mistakes")
    M = cfg.M + 1   # every expert has fewer than M mistakes
    full = run_stream(Boosting(cfg.L, s_max, M), s)
    if full.mistakes > boosting_mistake_bound(M, cfg.T, cfg.L, s_max):
        problems.append("boosting mistakes")
    if full.abstentions > boosting_abstention_bound(s_max, cfg.L, s.mistakes, s.abstentions, M):
        problems.append("boosting abstentions")
    cens = run_stream(Boosting(cfg.L, s_max, M, censored=True), s)
    if not np.array_equal(cens.outputs, full.outputs):
        problems.append("censored differs")
    return problems


def test_6_aggregate_and_boosting_bounds():
    t0 = time.time()
    problems = [p for ps in _pmap(_boost_case, _battery()) for p in ps]
    report(6, "Aggregate/Boosting explicit bounds", not problems,
           f"200 streams, violations: {problems or 'none'}; censored output bit-identical", t0)


# -- 7 -------------------------------------------------------------------------

def test_7_tradeoff_sublinearity():
    t0 = time.time()
    Ts = [250, 500, 1000, 2000]
    cfg = ExperimentConfig.from_flat({
        "spec": "thresholds", "learner": "abstain_boost", "learner.pool": "prefix-sweep",
        "learner.pool_size": 32, "schedule": "desk", "alpha": 0.25,
        "adversary": "fixed_fraction_replay", "adversary.fraction": 0.25, "seeds": 20,
        "grid.T": Ts})
    sweep = run_experiment(cfg, threads=WORKERS)
    failed = sum(c.failed for c in sweep.cells)
    mis = [c.mis[0] for c in sweep.cells]
    ab = [c.abs[0] for c in sweep.cells]
    s_mis, s_abs = loglog_slope(Ts, mis), loglog_slope(Ts, ab)
    ok = failed == 0 and s_mis < 0.95 and s_abs < 0.95 and ab[-1] < 0.5 * Ts[-1]
    report(7, "end-to-end tradeoff sublinearity", ok,
           f"slopes MisErr {s_mis:.2f}, AbsErr {s_abs:.2f}; AbsErr(2000) = {ab[-1]:.1f}; "
           f"mean MisErr {[round(v, 2) for v in mis]}", t0)


# -- 8 -------------------------------------------------------------------------

def test_8_lower_bound_construction():
    t0 = time.time()
    T = 200
    details, ok = [], True
    for name in ("majority", "aggregate"):
        A = measured_abstention(lowerbound_learner(name, T, 0.5), T)
        res = lowerbound_adversary(lowerbound_learner(name, T, A), T, A, trials=50, seed=0)
        problems = check_lowerbound_script(res) if res.ok else ["construction failed"]
        target = 0.8 * res.i_max / 8
        ok &= res.ok and not problems and res.mis_err >= target
        details.append(f"{name}: A={A:g} i_max={res.i_max} MisErr {res.mis_err:g} >= {target:g}"
                       f", script problems {len(problems)}")
    report(8, "lower-bound construction", ok, "; ".join(details), t0)


# -- 9 -------------------------------------------------------------------------

def test_9_reduction_counts():
    t0 = time.time()
    cases = [(Rectangles(1), 6, (0, 1, 2)), (Thresholds(), 8, (0, 1, 2)),
             (SubsetsOfSize(2, tuple(range(6))), 4, (0, 1, 2)), (Halfspaces2D(), 5, (0, 1))]
    details, ok = [], True
    for spec, n, ls in cases:
        pts = default_test_points(spec, n)
        for l in ls:
            rep = count_reductions(spec, pts, l)
            ok &= rep.satisfied
            # pool refinement: test points only, then the default refined pool
            small = count_reductions(spec, pts, l, candidate_pool=pts[: max(1, n // 2)]).count
            ok &= small <= rep.count
        details.append(f"{spec.name} n={n} l={l}: {rep.count} <= {rep.bound:.4g}")
    report(9, "reduction-dimension bounds", ok, "; ".join(details), t0)


# -- 10 ------------------------------------------------------------------------

def _censored_case(seed):
    spec = Thresholds()
    full, wl = _wl_run(spec, 0.1, "disagreement_targeting", seed, 16, 3, 200, "restricted")
    updates = {t: full.trace[t - 1].y for t in wl.mistake_times}
    replay, _ = _wl_run(spec, 0.1, "disagreement_targeting", seed, 16, 3, 200, "restricted",
                        feedback="censored", updates=updates)
    live, _ = _wl_run(spec, 0.1, "fixed_fraction_replay", seed, 16, 3, 200, "restricted",
                       feedback="censored")
    return (replay.predictions() == full.predictions(),
            max(full.mis_err, replay.mis_err, live.mis_err) / mistake_bound(1, 0.1))


def test_10_censored_weak_learner():
    t0 = time.time()
    out = _pmap(_censored_case, range(100))
    same = sum(a for a, _ in out)
    worst = max(r for _, r in out)
    report(10, "censored weak learner", same == 100 and worst < 1,
           f"replay identical {same}/100; max MisErr/(5 ln 10) = {worst:.3f}", t0)


if __name__ == "__main__":
    tests = sorted((int(k.split("_")[1]), f) for k, f in globals().items() if k.startswith("test_"))
    failures = 0
    for _, fn in tests:
        try:
            fn()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
