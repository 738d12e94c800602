"""Command-line front end: ``abstain-lab <command> [options]``.

Exit codes: 0 on success, 1 on input errors (including unknown flags or
commands), 2 on internal failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import InputError
from .harness import (ExperimentConfig, RUN_COLUMNS, CELL_COLUMNS, estimate_probe, format_config,
                      load_config, lowerbound_probe, parse_value, run_experiment, run_single,
                      schedule_params, table_text)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "jsonl"), help="table format (default csv)")
    p.add_argument("--threads", type=int, help="worker processes (default 1 or $ABSTAIN_LAB_THREADS)")
    p.add_argument("--budget", type=int, help="Monte Carlo subset budget")


def build_parser() -> Parser:
    parser = Parser(prog="abstain-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="one protocol run")
    _common(p)

    p = sub.add_parser("sweep", help="grid of runs over seeds")
    _common(p)

    p = sub.add_parser("estimate", help="shattering-probability estimator probe")
    _common(p)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--N", type=int, default=25)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--constraint", action="append", default=[], metavar="X:Y",
                   help="labeled constraint, point in trace encoding (repeatable)")

    p = sub.add_parser("lowerbound", help="tree lower-bound construction")
    _common(p)
    p.add_argument("--learner", default="majority", choices=("majority", "aggregate"))
    p.add_argument("--T", type=int, default=200)
    p.add_argument("--A", type=float, help="abstention budget (default: measured)")
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--s-max", type=int, default=2, dest="s_max")

    p = sub.add_parser("complexity", help="reduction counts on test points")
    _common(p)
    p.add_argument("--n", type=int, default=6, help="number of test points")
    p.add_argument("--l", type=int, default=2, help="constraint budget")
    p.add_argument("--D", type=float, help="exponent for the n^D comparison")

    p = sub.add_parser("schedule", help="print a parameter schedule")
    _common(p)
    p.add_argument("--regime", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--D", type=float)
    p.add_argument("--c0", type=float, default=1.0)
    return parser


def _config(args) -> ExperimentConfig:
    flat = load_config(args.config) if args.config else {}
    for item in args.set:
        if "=" not in item:
            raise InputError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        flat[key.strip()] = parse_value(value)
    for key in ("seed", "out", "format", "threads", "budget"):
        value = getattr(args, key)
        if value is not None:
            flat[key] = value
    return ExperimentConfig.from_flat(flat)


def _emit(rows: list, columns: tuple, fmt: str, provenance: dict, out: str | None, name: str):
    text = table_text(rows, columns, fmt, provenance)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{name}.{fmt}").write_text(text)
    sys.stdout.write(text)


def cmd_simulate(args) -> int:
    from .environment import write_trace

    cfg = _config(args)
    seed = cfg.seed
    result, note = run_single(cfg, seed)
    row = {"format_version": 1, "cell": 0, "point": "{}", "seed_index": 0, "seed": seed,
           "spec": cfg.spec, "learner": cfg.learner, "adversary": cfg.adversary,
           "feedback": cfg.feedback, "T": cfg.T, "alpha": cfg.alpha, "mis_err": result.mis_err,
           "abs_err": result.abs_err, "status": "ok", "note": note, "error": ""}
    prov = {"config": cfg.to_flat(), "seed": seed}
    if cfg.out:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        with open(Path(cfg.out) / "run.trace", "w") as fh:
            write_trace(result, cfg.make_spec(), fh)
    _emit([row], RUN_COLUMNS, cfg.format, prov, cfg.out, "run")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    res = run_experiment(cfg)
    sys.stdout.write(table_text([c.as_row() for c in res.cells], CELL_COLUMNS, cfg.format,
                                res.provenance))
    return 0


def cmd_estimate(args) -> int:
    from .environment import grid_distribution

    cfg = _config(args)
    spec = cfg.make_spec()
    dist = grid_distribution(spec, cfg.dist_n)
    constraints = []
    for item in args.constraint:
        x, sep, y = item.rpartition(":")
        if not sep or y not in ("0", "1"):
            raise InputError(f"constraint must look like X:0 or X:1, got {item!r}")
        constraints.append((spec.decode(x), int(y)))
    row = estimate_probe(spec, dist, constraints, args.k, args.N, args.m, args.trials, cfg.seed,
                         cfg.budget)
    _emit([row], tuple(row), cfg.format, {"config": cfg.to_flat()}, cfg.out, "estimate")
    return 0


def cmd_lowerbound(args) -> int:
    cfg = _config(args)
    row = lowerbound_probe(args.learner, args.T, args.A, args.trials, cfg.seed, args.s_max)
    _emit([row], tuple(row), cfg.format, {"seed": cfg.seed}, cfg.out, "lowerbound")
    return 0 if row["ok"] else 2


def cmd_complexity(args) -> int:
    from .complexity import count_reductions, default_test_points

    cfg = _config(args)
    spec = cfg.make_spec()
    rep = count_reductions(spec, default_test_points(spec, args.n), args.l, budget=cfg.budget,
                           poly_exponent=args.D)
    row = rep.as_row()
    _emit([row], tuple(row), cfg.format, {"config": cfg.to_flat()}, cfg.out, "complexity")
    return 0


def cmd_schedule(args) -> int:
    s = schedule_params(args.regime, args.d, args.T, args.alpha, args.D, args.c0)
    if args.format == "jsonl":
        print(json.dumps(s.as_dict(), sort_keys=True))
    else:
        sys.stdout.write(format_config(s.as_dict()))
    for flag in s.flags:
        print(f"warning: {flag}: guarantee is vacuous, schedule uses M = 0", file=sys.stderr)
    return 0


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "estimate": cmd_estimate,
            "lowerbound": cmd_lowerbound, "complexity": cmd_complexity, "schedule": cmd_schedule}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
