"""Command-line front end.

    mpps example N --out DIR [overrides]
    mpps simulate --config PATH --out DIR [overrides] [--force]
    mpps verify TRAJ.csv SEQ.csv --interval A B --eps E --out DIR

Exit codes: 0 success, 2 configuration error, 3 condition failure,
4 solver failure, 5 coverage or verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .analysis import verify_poisson
from .config import load_config, load_example
from .errors import ConfigError, CoverageError, MppsError
from .pipeline import (EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, EXIT_VERIFY, RunOptions, run)
from .recurrence import PoissonSequence
from .solutions import Trajectory

log = logging.getLogger("mpps")


def _options(args):
    return RunOptions(tol=args.tol, burn_in=args.burn_in, grid=args.grid, eps=args.eps,
                      force=getattr(args, "force", False), plots=not args.no_plots)


def _overrides(args):
    return {"seed": args.seed, "tol": args.tol}


def _report(res):
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for a in res.artifacts:
        print(res.out_dir / a)
    return res.exit_code


def cmd_example(n, out_dir, options=None, overrides=None):
    """Run bundled example ``n`` (1, 2 or 3); returns the exit code.

    Examples always run to completion: a hypothesis that fails for the
    system as stated is flagged in the reports instead of stopping the run.
    """
    if n not in (1, 2, 3):
        print(f"error: no bundled example {n}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = load_example(n, overrides)
    opts = options or RunOptions()
    opts = RunOptions(**{**vars(opts), "force": True})
    return _report(run(cfg, out_dir, opts))


def cmd_simulate(config_path, out_dir, options=None, overrides=None):
    """Run the pipeline on a user configuration; returns the exit code."""
    try:
        cfg = load_config(config_path, overrides)
    except ConfigError as exc:
        print(f"error: {config_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _report(run(cfg, out_dir, options))


def cmd_verify(traj_csv, seq_csv, interval, eps, out_dir=None, grid=1000):
    """Check the recurrence of a stored trajectory along a stored sequence."""
    try:
        traj = Trajectory.from_csv(traj_csv)
        seq = PoissonSequence.from_csv(seq_csv)
        rep = verify_poisson(traj, seq, interval, eps, grid=grid)
    except CoverageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (OSError, ValueError, KeyError, StopIteration) as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for line in rep.summary_lines():
        print(line)
    if out_dir is not None:
        out = Path(out_dir)
        rep.to_json(out / "verification.json")
        rep.to_csv(out / "verification.csv")
    return EXIT_OK if rep.passed else EXIT_VERIFY


def _common(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=float, help="logistic orbit seed in [0, 1]")
    p.add_argument("--tol", type=float, help="relative integration tolerance")
    p.add_argument("--burn-in", type=float, help="burn-in length before the solution window")
    p.add_argument("--grid", type=int, help="minimum samples per period")
    p.add_argument("--eps", type=float, help="recurrence tolerance (default 2x final precision)")
    p.add_argument("--no-plots", action="store_true", help="skip SVG output")


def build_parser():
    parser = argparse.ArgumentParser(prog="mpps", description=__doc__.splitlines()[0] if
                                     __doc__ else None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("example", help="run a bundled example system")
    p.add_argument("n", type=int, choices=(1, 2, 3))
    _common(p)

    p = sub.add_parser("simulate", help="run a system from a JSON configuration")
    p.add_argument("--config", required=True, help="path to the configuration document")
    p.add_argument("--force", action="store_true", help="solve even if conditions fail")
    _common(p)

    p = sub.add_parser("verify", help="check recurrence of a stored trajectory")
    p.add_argument("trajectory")
    p.add_argument("sequence")
    p.add_argument("--interval", type=float, nargs=2, required=True, metavar=("A", "B"))
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--grid", type=int, default=1000)
    p.add_argument("--out", help="directory for the JSON and CSV reports")
    return parser


def _check_ranges(args):
    if getattr(args, "tol", None) is not None and not 0 < args.tol < 1:
        return "--tol must lie in (0, 1)"
    if getattr(args, "seed", None) is not None and not 0 <= args.seed <= 1:
        return "--seed must lie in [0, 1]"
    if getattr(args, "grid", None) is not None and args.grid < 4:
        return "--grid must be at least 4"
    for name in ("burn_in", "eps"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            return f"--{name.replace('_', '-')} must be positive"
    return None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    problem = _check_ranges(args)
    if problem:
        print(f"error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "example":
            return cmd_example(args.n, args.out, _options(args), _overrides(args))
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out, _options(args), _overrides(args))
        return cmd_verify(args.trajectory, args.sequence, tuple(args.interval), args.eps,
                          args.out, args.grid)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MppsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
