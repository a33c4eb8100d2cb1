import argparse
import json
import logging
import os
import sys

from shock_ad.config import load_case_file, settings
from shock_ad.core.errors import HarnessIOError, ShockADError
from shock_ad.core.harness import (
    BURGERS,
    EULER,
    CaseConfig,
    emit_calculus_csv,
    emit_csv,
    emit_shock_history_csv,
    emit_snapshot_csv,
    epsilon_sweep,
    grid_convergence,
    run_case,
)
from shock_ad.core.shock_tracker import MODES
from shock_ad.core.solver import SCHEMES

logger = logging.getLogger(__name__)

PROBLEM_NAMES = {"burgers": BURGERS, "euler": EULER}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="key=value case file; flags override it")
    common.add_argument("--grid-no", type=int, default=None, help="Burgers grid row 1..9")
    common.add_argument("--dx", type=float, default=None, help="Cell width (CFL time stepping unless dt is set)")
    common.add_argument("--mode", choices=MODES, default=None, help="Shock tangent mode")
    common.add_argument("--scheme", choices=SCHEMES, default=None, help="Scalar flux (Euler always uses rusanov)")
    common.add_argument("--c-coeff", type=float, default=None, help="C in delta = C * dx^alpha")
    common.add_argument("--alpha", type=float, default=None, help="alpha in delta = C * dx^alpha")
    common.add_argument("--t-final", type=float, default=None, help="End time")
    common.add_argument("--out", type=str, default=settings.OUTPUT_DIR, help="Output directory")
    common.add_argument("--jobs", type=int, default=settings.JOBS, help="Worker threads")
    common.add_argument("--log-level", type=str, default=settings.LOG_LEVEL, help="Logging level")

    parser = argparse.ArgumentParser(prog="shock_ad", description="Finite-volume shock AD experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    burgers = sub.add_parser("burgers", parents=[common], help="Run the Burgers ramp case")
    burgers.add_argument("--eps", type=float, default=None, help="eps of the tangential-shift detail table")

    euler = sub.add_parser("euler", parents=[common], help="Run the Euler moving-shock case")
    euler.add_argument("--eps", type=float, default=None, help="eps of the tangential-shift detail table")
    euler.add_argument("--long-domain", action="store_true", help="Domain [0, 210] up to t = 1000")

    sweep = sub.add_parser("sweep", parents=[common], help="Error over an eps sweep")
    sweep.add_argument("--problem", choices=sorted(PROBLEM_NAMES), default=None)
    sweep.add_argument("--long-domain", action="store_true", help="Domain [0, 210] up to t = 1000")

    gridconv = sub.add_parser("gridconv", parents=[common], help="Error at eps_max over grids")
    gridconv.add_argument("--problem", choices=sorted(PROBLEM_NAMES), default=None)
    gridconv.add_argument("--grids", type=float, nargs="+", default=None,
                          help="Burgers row numbers or Euler cell widths (default: Burgers rows 9..6)")

    validate = sub.add_parser("validate-oracles", parents=[common], help="Closure checks of oracles and algebra")
    validate.add_argument("--quick", action="store_true", help="Skip the simulation-based checks")
    return parser


def case_from_args(args, problem: str = None) -> CaseConfig:
    mapping = load_case_file(args.config) if args.config else {}
    if problem is not None:
        mapping["problem"] = problem
    elif getattr(args, "problem", None):
        mapping["problem"] = PROBLEM_NAMES[args.problem]
    if getattr(args, "long_domain", False):
        mapping["long_domain"] = "true"
    return CaseConfig.from_mapping(
        mapping,
        grid_no=args.grid_no,
        dx=args.dx,
        mode=args.mode,
        c_coeff=args.c_coeff,
        alpha=args.alpha,
        t_final=args.t_final,
        scheme=args.scheme,
    )


def write_json(payload, path: str):
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, default=float)
    except OSError as e:
        raise HarnessIOError(f"Cannot write {path}: {e}", path=path) from e
    logger.info(f"Wrote {path}")


def cmd_case(args, problem: str):
    cfg = case_from_args(args, problem)
    case = run_case(cfg)
    for snapshot in case.run.snapshots:
        emit_snapshot_csv(snapshot.field, os.path.join(args.out, f"{cfg.name}_snapshot_t{snapshot.t:g}.csv"))
    for i in range(len(case.trackers)):
        suffix = "" if len(case.trackers) == 1 else f"_shock{i + 1}"
        emit_shock_history_csv(case, os.path.join(args.out, f"{cfg.name}_shock{suffix}.csv"), shock=i)
    eps = args.eps if args.eps is not None else cfg.eps_max
    emit_calculus_csv(case, eps, os.path.join(args.out, f"{cfg.name}_calculus_eps{eps:g}.csv"))
    for tracker in case.trackers:
        print(f"shock {tracker.state.index}: x_s={tracker.position:.8g} xi={tracker.tangent:.8g} (t={cfg.t_final:g})")


def cmd_sweep(args):
    cfg = case_from_args(args)
    report = epsilon_sweep(cfg)
    emit_csv(report, os.path.join(args.out, f"{cfg.name}_sweep.csv"))
    write_json(report.metadata, os.path.join(args.out, f"{cfg.name}_sweep_meta.json"))
    print(report.to_frame().to_string(index=False))


def cmd_gridconv(args):
    cfg = case_from_args(args)
    if args.grids:
        grids = args.grids
    elif cfg.problem == BURGERS:
        grids = [9, 8, 7, 6]
    else:
        grids = [0.04, 0.02, 0.01]
    report = grid_convergence(cfg, grids, jobs=args.jobs)
    emit_csv(report, os.path.join(args.out, f"{cfg.problem}_gridconv.csv"))
    print(report.to_frame().to_string(index=False))


def cmd_validate(args) -> int:
    from shock_ad.scripts.validate_oracles import OracleRunner

    runner = OracleRunner(output_dir=args.out, quick=args.quick)
    runner.run_checks(max_workers=args.jobs)
    runner.save_results()
    return 0 if runner.all_passed else 3


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())

    try:
        if args.command == "burgers":
            cmd_case(args, BURGERS)
        elif args.command == "euler":
            cmd_case(args, EULER)
        elif args.command == "sweep":
            cmd_sweep(args)
        elif args.command == "gridconv":
            cmd_gridconv(args)
        elif args.command == "validate-oracles":
            return cmd_validate(args)
    except ShockADError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
