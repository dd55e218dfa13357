"""Command-line entry point.

Verbs::

    heomcorr run <config>                 full pipeline, writes CSV + reports
    heomcorr sweep <config> --zeta LIST   one run per qubit-qubit coupling
    heomcorr validate <config>            oracle battery only
    heomcorr events <trajectory.csv>      re-run event detection offline

Exit codes: 0 success, 1 configuration error, 2 propagation failure,
3 oracle failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import SimulationConfig, parse_config
from .errors import ConfigError, HeomcorrError, OracleError, ParameterError
from .runner import detect_events, read_trajectory_csv, run, sweep, validation_suite

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PROPAGATION = 2
EXIT_ORACLE = 3


def _load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _print_oracles(reports, err=False):
    for rep in reports:
        status = "pass" if rep.passed else "FAIL"
        print(f"  [{status}] {rep.name}: deviation {rep.max_deviation:.3e} "
              f"(tolerance {rep.tolerance:g}; {rep.inputs})",
              file=sys.stderr if err else sys.stdout)


def _cmd_run(args):
    cfg = _load_config(args.config)
    report = run(cfg)
    tr = report.truncation
    print(f"truncation: K={tr['cutoff']} L={tr['depth']} "
          f"({tr['ado_count']} ADOs, {tr['n_rhs_evals']} derivative evaluations"
          + (", auto-converged" if tr.get("auto") else "") + ")")
    dg = report.diagnostics
    print(f"health: trace drift {dg['max_trace_drift']:.2e}, "
          f"hermiticity {dg['max_hermiticity_residual']:.2e}, "
          f"min eigenvalue {dg['min_eigenvalue']:.2e}, "
          f"wall time {dg['wall_time_s']:.1f}s")
    print("oracles:")
    _print_oracles(report.oracles)
    print(f"events ({len(report.events)}):")
    for e in report.events:
        print(f"  {e.kind} t={e.t:.4f} {e.detail}")
    for name, path in report.paths.items():
        print(f"wrote {name}: {path}")
    if report.oracle_failures():
        print("oracle failure", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


def _cmd_sweep(args):
    cfg = _load_config(args.config)
    zetas = [float(z) for z in args.zeta.split(",") if z.strip() != ""]
    if not zetas:
        raise ConfigError("--zeta needs at least one value")
    report = sweep(cfg, zetas)
    for row in report.comparison:
        if "failed" in row:
            print(f"zeta={row['zeta']:g}: FAILED ({row['failed']})")
        else:
            print(f"zeta={row['zeta']:g}: Q_min={row['q_min']:.4f} at "
                  f"t={row['t_q_min']:.2f}, max|dQ/dt| near minimum "
                  f"{row['max_dq_near_min']:.4f}, crossings {row['n_crossings']}")
    for name, path in report.paths.items():
        print(f"wrote {name}: {path}")
    failures = [r for rep in report.reports.values() for r in rep.oracle_failures()]
    if failures:
        _print_oracles(failures, err=True)
        return EXIT_ORACLE
    if report.failures:
        return EXIT_PROPAGATION
    return EXIT_OK


def _cmd_validate(args):
    cfg = _load_config(args.config)
    reports = validation_suite(cfg)
    _print_oracles(reports)
    if any(not r.passed for r in reports):
        return EXIT_ORACLE
    return EXIT_OK


def _cmd_events(args):
    points = read_trajectory_csv(args.trajectory)
    cfg = SimulationConfig()
    events = detect_events(points, cfg)
    for e in events:
        print(f"{e.kind} t={e.t:.6g} {e.detail}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="heomcorr",
        description="Two-qubit correlation dynamics in non-Markovian baths.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="propagate and analyze one configuration")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="repeat the run over qubit couplings")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--zeta", required=True,
                         help="comma-separated coupling values, e.g. 1.0,0.7,0.3,0")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="run the oracle battery only")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    p_ev = sub.add_parser("events", help="re-detect events from a trajectory CSV")
    p_ev.add_argument("trajectory", help="path to a trajectory.csv")
    p_ev.set_defaults(func=_cmd_events)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except HeomcorrError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PROPAGATION


if __name__ == "__main__":
    sys.exit(main())
