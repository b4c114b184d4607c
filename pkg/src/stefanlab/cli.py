"""Command line front end.

Subcommands: simulate (run a scenario and write artifacts), analyze (rebuild
derived quantities from artifacts on disk), compare (run both solvers and
report their distance), verify (run the invariant suite), sweep (run a batch
of scenario configs).  Exit codes: 0 pass, 1 invariant failure, 2 config
error, 3 numerical abort.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .boundary import classify_points, freezing_time, speed_formula_check
from .errors import ConfigError, NumericalAbort
from .exporters import (jsonify, read_frontier_csv, read_jumps_json,
                        read_json, read_matrix_csv, read_nu_csv, write_json)
from .fields import Field, FrontierPath
from .harness import (ScenarioConfig, apply_overrides, compare_methods,
                      run_scenario, scenario_from_dict, scenario_from_json,
                      verify_suite)
from .potential import compute_w, obstacle_residual

EXIT_PASS = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(path: str, overrides: list[str]) -> ScenarioConfig:
    cfg = scenario_from_json(path)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config, args.set or [])
    result = run_scenario(cfg, write=True)
    last = result.levels[-1]
    fr = last.frontier if last.frontier is not None else last.p_frontier
    print(f"{cfg.scenario_id}: {cfg.refinement_levels} level(s) ->"
          f" {result.outpath}")
    print(f"  frontier end {fr.lambda_end:.6f} of cap {cfg.alpha:.6f},"
          f" jumps detected {len(last.jumps or last.p_jumps)}")
    return EXIT_PASS


def _require(path: Path) -> Path:
    if not path.exists():
        raise ConfigError(f"missing artifact {path}")
    return path


def _cmd_analyze(args) -> int:
    root = Path(args.rundir)
    summary = read_json(_require(root / "summary.json"))
    raw_cfg = summary["config"]
    alpha = float(raw_cfg["alpha"])

    times, lam = read_frontier_csv(_require(root / "frontier.csv"))
    jumps = read_jumps_json(_require(root / "jumps.json"))
    frontier = FrontierPath(times=times, lam=lam, alpha=alpha, jumps=jumps)

    field_path = root / "field.csv"
    if not field_path.exists():
        raise ConfigError(f"missing artifact {field_path};"
                          " analysis needs a run with a sampled field")
    x, t, values = read_matrix_csv(field_path)
    fidx = np.searchsorted(x, lam + 1e-12, side="left")
    field = Field(x=x, t=t, values=values, frontier_index=fidx, lam=lam,
                  alpha=alpha)

    w = compute_w(field)
    prof = freezing_time(frontier, x)
    prof = classify_points(prof, field, jumps)
    report = {
        "scenario_id": summary["scenario_id"],
        "lambda_end": frontier.lambda_end,
        "n_jumps": len(jumps),
        "fraction_unresolved": prof.fraction_unresolved(),
        "speed": speed_formula_check(prof, field).to_dict(),
    }

    w_path = root / "w.csv"
    if w_path.exists():
        _, _, w_stored = read_matrix_csv(w_path)
        report["w_reconstruction_gap"] = float(np.max(np.abs(w_stored - w.w)))

    nu_path = root / "nu.csv"
    if nu_path.exists():
        nu = read_nu_csv(nu_path, alpha)
        try:
            report["obstacle"] = obstacle_residual(w, nu, 0.1).to_dict()
        except ConfigError as exc:
            report["obstacle"] = {"error": str(exc)}

    write_json(root / "analysis.json", jsonify(report))
    print(json.dumps(jsonify(report), indent=2, sort_keys=True))
    return EXIT_PASS


def _cmd_compare(args) -> int:
    cfg = _load_config(args.config, args.set or [])
    report = compare_methods(cfg)
    print(json.dumps(jsonify(report), indent=2, sort_keys=True))
    return EXIT_PASS


def _cmd_verify(args) -> int:
    cfg = _load_config(args.config, args.set or [])
    result = run_scenario(cfg, write=not args.no_write)
    ledger = verify_suite(cfg, result)
    for entry in ledger["invariants"]:
        print(f"{entry['verdict'].upper():4s} {entry['id']} -- {entry['detail']}")
    print(f"pass {ledger['n_pass']}  fail {ledger['n_fail']}"
          f"  skip {ledger['n_skip']}")
    if result.outpath:
        write_json(Path(result.outpath) / "verify.json", jsonify(ledger))
    return EXIT_INVARIANT if ledger["n_fail"] else EXIT_PASS


def _cmd_sweep(args) -> int:
    batch = read_json(args.batch)
    if not isinstance(batch, list):
        raise ConfigError("sweep batch must be a JSON array of scenario configs")
    worst = EXIT_PASS
    for raw in batch:
        cfg = scenario_from_dict(raw)
        if args.set:
            cfg = apply_overrides(cfg, args.set)
        code = EXIT_PASS
        try:
            result = run_scenario(cfg, write=True)
            detail = f"-> {result.outpath}"
            if args.verify:
                ledger = verify_suite(cfg, result)
                detail += (f" pass {ledger['n_pass']} fail {ledger['n_fail']}"
                           f" skip {ledger['n_skip']}")
                if result.outpath:
                    write_json(Path(result.outpath) / "verify.json",
                               jsonify(ledger))
                if ledger["n_fail"]:
                    code = EXIT_INVARIANT
        except NumericalAbort as exc:
            detail, code = f"numerical abort: {exc}", EXIT_NUMERICAL
        print(f"{cfg.scenario_id}: {detail}")
        worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stefanlab",
        description="Dual-method laboratory for supercooled freezing fronts")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("config", help="scenario config JSON file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field by dotted path"
                            " (e.g. thresholds.eps_u=0.01)")

    p = sub.add_parser("simulate", help="run a scenario and write artifacts")
    add_config_args(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze",
                       help="rebuild derived quantities from run artifacts")
    p.add_argument("rundir", help="scenario output directory"
                                  " (containing summary.json)")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("compare",
                       help="run both solvers and report frontier distance")
    add_config_args(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("verify", help="run the invariant suite on a scenario")
    add_config_args(p)
    p.add_argument("--no-write", action="store_true",
                   help="keep artifacts off disk")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sweep", help="run a JSON array of scenario configs")
    p.add_argument("batch", help="JSON file holding a list of configs")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override applied to every config in the batch")
    p.add_argument("--verify", action="store_true",
                   help="also run the invariant suite per scenario")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
