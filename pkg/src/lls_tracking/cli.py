"""Command-line front end: ``lls-track {simulate,sweep,validate}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from .errors import ConfigError, LLSError
from .harness import metrics, run_scenario, sweep_tables
from .output import write_summary, write_table, write_trace, write_trajectory
from .validation import SUITES, run_suite

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("lls_tracking")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lls-track", description="Curve tracking with the lateral leg-spring runner.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a scenario and write its trace")
    sim.add_argument("config", help="YAML scenario file or shipped scenario name")
    sim.add_argument("-o", "--out", default="out", help="output directory (default: out)")
    sim.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config entry, e.g. tracking.K=0.9")

    sw = sub.add_parser("sweep", help="write chord and spring tables over a leg-angle grid")
    sw.add_argument("config", help="YAML scenario file or shipped scenario name")
    sw.add_argument("-o", "--out", default="out", help="output directory (default: out)")
    sw.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    val = sub.add_parser("validate", help="run oracle and property suites")
    val.add_argument("suite", help=f"one of: {', '.join([*SUITES, 'all'])}")
    val.add_argument("-o", "--out", default=None, help="also write a JSON report here")
    return p


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    data = cfgmod.load(args.config, args.overrides)
    cfg = cfgmod.build_scenario(data)
    out = _outdir(args.out)
    samples = []

    def keep(rec, outcome):
        if outcome is not None and outcome.trajectory is not None:
            samples.append((rec.i, outcome.trajectory))

    trace = run_scenario(cfg, on_stance=keep)
    summary = {"config": str(args.config), "overrides": list(args.overrides),
               "curve": repr(cfg.curve), "strategy": cfg.strategy, "model": cfg.model,
               "first_side": cfg.initial.side_next.name.lower(), **metrics(trace, cfg)}
    summary["converged"] = summary["stances_to_converge"] is not None
    write_trace(out / "trace.csv", trace)
    write_summary(out / "summary.json", summary)
    if samples:
        write_trajectory(out / "trajectory.csv", samples)
    j = summary["stances_to_converge"]
    state = (f"converged at stance {j} (t = {summary['time_to_converge']:.3f} s)" if j is not None
             else "did not converge")
    print(f"{len(trace)} stances, {state}, final error {summary['final_error']:.3e} m; "
          f"wrote {out / 'trace.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = cfgmod.load(args.config, args.overrides)
    cfg = cfgmod.build_scenario(data)
    grid = cfgmod.sweep_grid(data)
    out = _outdir(args.out)
    tables = sweep_tables(cfg.params, grid["alphas"], cfg.initial.v, grid["b"],
                             grid["q_target"], cfg.eta_td)
    write_table(out / "chord_vectors.csv", ["alpha_rad", "qx_m", "qy_m"], tables["chord_vectors"])
    write_table(out / "chord_vs_alpha.csv", ["alpha_rad", "q_m"], tables["chord"])
    write_table(out / "spring_vs_alpha.csv", ["alpha_rad", "b_N/m"], tables["spring"])
    print(f"{len(grid['alphas'])} grid points; wrote tables to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.suite != "all" and args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join([*SUITES, 'all'])}")
    results = run_suite(args.suite)
    for r in results:
        print(r.line())
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_summary(path, {r.name: {"passed": r.passed, "summary": r.summary, **r.values}
                             for r in results})
    return EXIT_OK if all(r.passed for r in results) else EXIT_INPUT


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LLSError, OSError) as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
