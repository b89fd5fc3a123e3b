"""Command-line entry point: run / sweep / verify / bounds."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from .baselines import initial_policy
from .harness import ConfigError, load_config, run_experiment, sweep, _fmt
from .linalg import optimal_controller
from .verify import SUITES, bounds_table, run_suite


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=None, help="output directory (default: config output_path or ./results)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers over seeds")
    parser.add_argument("--seed-offset", type=int, default=0, help="added to every configured seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mflq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config over its seeds")
    p_run.add_argument("config")
    _common(p_run)

    p_sweep = sub.add_parser("sweep", help="run a config across a horizon grid")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--T", required=True, help="comma-separated ascending horizons, e.g. 16384,32768")
    _common(p_sweep)

    p_verify = sub.add_parser("verify", help="run a Monte-Carlo verification suite")
    p_verify.add_argument("suite", choices=SUITES)
    p_verify.add_argument("--fast", action="store_true", help="smaller sample sizes")
    p_verify.add_argument("--inject-failure", action="store_true", help="flip verdicts to test reporting")
    p_verify.add_argument("--out", default=None)

    p_bounds = sub.add_parser("bounds", help="print bound constants for a config's closed loop")
    p_bounds.add_argument("config")
    p_bounds.add_argument("--alpha", type=float, required=True)
    p_bounds.add_argument("--delta", type=float, required=True)
    p_bounds.add_argument("--policy", choices=("initial", "optimal"), default="initial")
    p_bounds.add_argument("--out", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            res = run_experiment(config, out_dir=args.out, jobs=args.jobs, seed_offset=args.seed_offset)
            print(f"wrote {res['results']}")
            print(f"wrote {res['summary']}")
            return 0

        if args.command == "sweep":
            config = load_config(args.config)
            try:
                grid = [int(t) for t in args.T.split(",") if t]
            except ValueError as exc:
                raise ConfigError(f"bad --T grid: {exc}") from exc
            res = sweep(config, grid, out_dir=args.out, jobs=args.jobs, seed_offset=args.seed_offset)
            print(f"wrote {res['sweep']}")
            slope = res["slope"]
            print(f"log-log regret slope: {_fmt(slope) if slope is not None else 'undefined'}")
            return 0

        if args.command == "verify":
            results = run_suite(args.suite, fast=args.fast, inject_failure=args.inject_failure)
            width = max(len(r.name) for r in results)
            failed = 0
            for r in results:
                verdict = "PASS" if r.passed else "FAIL"
                failed += not r.passed
                print(f"[{r.suite:>12}] {r.name:<{width}}  stat={_fmt(r.statistic):>14} {r.comparison} bound={_fmt(r.bound):>14}  {verdict}")
            print(f"{len(results) - failed}/{len(results)} checks passed")
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                buf = io.StringIO()
                w = csv.writer(buf, lineterminator="\n")
                w.writerow(["suite", "name", "statistic", "comparison", "bound", "passed"])
                for r in results:
                    w.writerow([r.suite, r.name, _fmt(r.statistic), r.comparison, _fmt(r.bound), int(r.passed)])
                (out / f"verify_{args.suite}.csv").write_text(buf.getvalue(), encoding="utf-8")
            return 1 if failed else 0

        if args.command == "bounds":
            config = load_config(args.config)
            sys_ = config.system
            if args.policy == "initial":
                K = initial_policy(sys_, config.initial_policy_scale)
            else:
                K, _ = optimal_controller(sys_.A, sys_.B, sys_.M, sys_.N)
            rows = bounds_table(sys_, K, alpha=args.alpha, delta=args.delta, T=config.T)
            width = max(len(name) for name, _ in rows)
            for name, value in rows:
                print(f"{name:<{width}}  {_fmt(value)}")
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                buf = io.StringIO()
                w = csv.writer(buf, lineterminator="\n")
                w.writerow(["constant", "value"])
                for name, value in rows:
                    w.writerow([name, _fmt(value)])
                (out / "bounds.csv").write_text(buf.getvalue(), encoding="utf-8")
            return 0
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
