"""Command-line entry point: run, sweep, simulate, potential, check, fetch-cars."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .data import DataError, data_dir, fetch_cars, prepare_cars
from .report import emit_results, emit_simulation
from .runner import resolve_dataset, run_all, simulate_lower_bound


EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3


def _parse_list(text: str, cast):
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad list {text!r}") from None


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return _execute(cfg, args.out)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.gamma:
        gammas = _parse_list(args.gamma, float)
        algos = cfg.algorithm if "online_mbbm" in cfg.algorithm else cfg.algorithm + ["online_mbbm"]
        cfg = cfg.replace(gamma=gammas, algorithm=algos)
    Ns = _parse_list(args.N, int) if args.N else [cfg.N]
    results = []
    ds = resolve_dataset(cfg.validate())
    for N in Ns:
        sub = cfg.replace(N=N).validate()
        results.extend(run_all(sub, ds, audit_dir=_audit_dir(sub, args.out)))
    return _finish(results, args.out)


def _audit_dir(cfg, out):
    if not cfg.audit:
        return None
    d = Path(out) / "audit"
    d.mkdir(parents=True, exist_ok=True)
    return str(d)


def _execute(cfg, out) -> int:
    ds = resolve_dataset(cfg)
    results = run_all(cfg, ds, audit_dir=_audit_dir(cfg, out))
    return _finish(results, out)


def _finish(results, out) -> int:
    csv_path, md_path = emit_results(results, out)
    print(md_path.read_text(), end="")
    print(f"wrote {csv_path} and {md_path}")
    bad = [r for r in results if r.partial]
    for r in bad:
        print(f"run {r.column} aborted: {r.error}", file=sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


def cmd_simulate(args) -> int:
    seeds = list(range(args.seed, args.seed + args.seeds))
    S = args.S
    if S is None:
        # smallest excess loss the configured delta allows
        S = args.k * math.log(1.0 / args.delta) / args.gamma if 0 < args.delta < 1 and args.gamma > 0 else 0.0
    try:
        rep = simulate_lower_bound(args.k, args.gamma, S, args.N, args.T, seeds,
                                   mode=args.mode, delta=args.delta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    csv_path, md_path = emit_simulation(rep, args.out)
    print(md_path.read_text(), end="")
    print(f"wrote {csv_path} and {md_path}")
    return EXIT_OK


def cmd_potential(args) -> int:
    from ..potential import PotentialTable, export_table
    if not 0.0 <= args.gamma < 0.5:
        raise ConfigError("gamma must lie in [0, 0.5)")
    table = PotentialTable(args.k, args.gamma, max_states=args.max_states)
    # the root query memoises every state a run with N learners can visit
    table.value(0, args.N, [0] * args.k)
    for i in range(args.N):
        for r in range(args.k):
            table.value(r, i, [0] * args.k)
    n = export_table(table, args.out)
    print(f"wrote {n} rows to {args.out}")
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import run_checks
    ok = run_checks(seed=args.seed, n=args.n)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_fetch_cars(args) -> int:
    dest = Path(args.dest) if args.dest else data_dir() / "cars.csv"
    if args.raw:
        path = prepare_cars(args.raw, dest)
    else:
        path = fetch_cars(dest)
    print(f"car data ready at {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="omboost", description="Streaming multiclass boosting experiments")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config")
    r.add_argument("--out", default="results")
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a config over grids of gamma and/or N")
    s.add_argument("config")
    s.add_argument("--gamma", help="comma list, e.g. 0.3,0.1,0.05,0.01,0.001")
    s.add_argument("--N", help="comma list of learner counts")
    s.add_argument("--out", default="results")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("simulate", help="majority vote against the lower-bound adversary")
    m.add_argument("--k", type=int, default=3)
    m.add_argument("--gamma", type=float, default=0.1)
    m.add_argument("--S", type=float, help="excess loss; default k ln(1/delta)/gamma")
    m.add_argument("--N", type=int, default=20)
    m.add_argument("--T", type=int, default=10000)
    m.add_argument("--seeds", type=int, default=10, help="number of seeds")
    m.add_argument("--seed", type=int, default=0, help="first seed")
    m.add_argument("--delta", type=float, default=0.01)
    m.add_argument("--mode", choices=["constant_edge", "two_phase"], default="constant_edge")
    m.add_argument("--out", default="results")
    m.set_defaults(func=cmd_simulate)

    t = sub.add_parser("potential", help="export an exact potential table as CSV")
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--gamma", type=float, required=True)
    t.add_argument("--N", type=int, required=True)
    t.add_argument("--max-states", type=int, default=10**7)
    t.add_argument("--out", default="potential.csv")
    t.set_defaults(func=cmd_potential)

    c = sub.add_parser("check", help="run the randomised invariant suites")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--n", type=int, default=200, help="cases per suite")
    c.set_defaults(func=cmd_check)

    f = sub.add_parser("fetch-cars", help="download (or import with --raw) the car evaluation data")
    f.add_argument("--raw", help="existing headerless car.data file")
    f.add_argument("--dest")
    f.set_defaults(func=cmd_fetch_cars)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
