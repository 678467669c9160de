import argparse
import datetime
import json
import logging
import os
import sys
from typing import Dict, List, Optional

from entdesign.config import HarnessConfig, load_config
from entdesign.core.designs import (
    design_to_dict,
    load_design,
    save_design,
    verify_design,
)
from entdesign.core.errors import ConvergenceError, InvariantViolation
from entdesign.core.states import QUBIT_QUTRIT, QUBITS
from entdesign.harness.suite import CriterionSuite, build_design
from entdesign.harness.sweeps import chessboard_sweep, random_sweep
from entdesign.harness.thresholds import (
    bell_thresholds,
    horodecki_curves,
    upb_thresholds,
)
from entdesign.harness.verification import check_design_file, verify_all
from entdesign.utils.common_utils import (
    dump_json,
    results_frame,
    sweep_frame,
    write_output,
)

logger = logging.getLogger("entdesign.cli")

# local dimension whose design list --design-n replaces
PRIMARY_DIM = {
    "table1": 2,
    "table2": 2,
    "table3": 3,
    "table4": 2,
    "chessboard": 3,
    "horodecki": 3,
    "verify-all": 2,
}

# descriptive names accepted for the table commands
COMMAND_ALIASES = {
    "bell-thresholds": "table1",
    "sweep-2x2": "table2",
    "upb-thresholds": "table3",
    "sweep-2x3": "table4",
}


def setup_logging(log_dir: str, quiet: bool = False) -> None:
    """File logs under log_dir plus a coloured stdout stream for entdesign.*"""
    root = logging.getLogger()
    root.setLevel(logging.DEBUG)

    datetime_str: str = datetime.datetime.now().strftime("%Y%m%d@%H%M%S")
    os.makedirs(log_dir, exist_ok=True)

    file_handler = logging.FileHandler(
        os.path.join(log_dir, "normal-{:}.log".format(datetime_str)), encoding="utf-8"
    )
    debug_handler = logging.FileHandler(
        os.path.join(log_dir, "debug-{:}.log".format(datetime_str)), encoding="utf-8"
    )
    stdout_handler = logging.StreamHandler(sys.stdout)

    file_handler.setLevel(logging.INFO)
    debug_handler.setLevel(logging.DEBUG)
    stdout_handler.setLevel(logging.WARNING if quiet else logging.INFO)

    formatter = logging.Formatter(
        fmt="\x1b[1;33m[%(asctime)s \x1b[31m%(levelname)s \x1b[32m%(module)s/%(lineno)d-%(processName)s\x1b[1;33m] \x1b[0m%(message)s"
    )
    file_handler.setFormatter(formatter)
    debug_handler.setFormatter(formatter)
    stdout_handler.setFormatter(formatter)

    stdout_handler.addFilter(logging.Filter("entdesign"))

    root.addHandler(file_handler)
    root.addHandler(debug_handler)
    root.addHandler(stdout_handler)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="TOML file with a [harness] table")
    common.add_argument("--seed", type=int, help="Master seed of the random streams")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--tol", type=float, help="Threshold bracket width")
    common.add_argument(
        "--design-n",
        type=int,
        action="append",
        help="Design size N for E2D/L2D; repeat for several designs",
    )
    common.add_argument("--workers", type=int, help="Worker processes for sweeps")
    common.add_argument("--out", type=str, help="Output file; stdout when omitted")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--log-dir", type=str, help="Directory of the log files")
    common.add_argument(
        "--quiet", action="store_true", help="Only warnings on stdout, no progress"
    )

    parser = argparse.ArgumentParser(
        prog="entdesign",
        description="Entanglement criteria from SIC POVMs and quantum 2-designs.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    table_help = {
        "table1": "Thresholds for noisy Bell states",
        "table2": "Detected fractions, random 2x2 NPT states",
        "table3": "Thresholds for the noisy tiles-UPB state",
        "table4": "Detected fractions, random 2x3 NPT states",
    }
    aliases = {table: alias for alias, table in COMMAND_ALIASES.items()}
    for table, help_text in table_help.items():
        commands.add_parser(
            table, aliases=[aliases[table]], parents=[common], help=help_text
        )
    commands.add_parser(
        "chessboard", parents=[common], help="Detected fractions, chessboard states"
    )
    commands.add_parser(
        "horodecki", parents=[common], help="Threshold curves of the noisy 3x3 family"
    )

    verify = commands.add_parser(
        "verify-all", parents=[common], help="Run every self-check"
    )
    verify.add_argument(
        "--design",
        dest="design_paths",
        action="append",
        default=[],
        help="Extra design file to certify; may be repeated",
    )

    designs = commands.add_parser("designs", help="Export, import or verify designs")
    design_actions = designs.add_subparsers(dest="action", required=True)
    export = design_actions.add_parser(
        "export", parents=[common], help="Build a design and write it as JSON"
    )
    export.add_argument("--dim", type=int, required=True)
    export.add_argument("--n", type=int, required=True)
    export.add_argument("--design-seed", type=int, help="Seed of the optimizer")
    imp = design_actions.add_parser(
        "import", parents=[common], help="Load and certify a design file"
    )
    imp.add_argument("path")
    check = design_actions.add_parser(
        "verify", parents=[common], help="Certify one or more design files"
    )
    check.add_argument("paths", nargs="+")
    return parser


def resolve_config(args: argparse.Namespace) -> HarnessConfig:
    """Defaults, then the TOML file, then explicit flags."""
    overrides = {
        "seed": args.seed,
        "samples": args.samples,
        "tol": args.tol,
        "workers": args.workers,
        "log_dir": args.log_dir,
    }
    if getattr(args, "design_seed", None) is not None:
        overrides["design_seed"] = args.design_seed
    if args.quiet:
        overrides["progress"] = False
    config = load_config(args.config, overrides)
    if args.design_n and args.command in PRIMARY_DIM:
        design_n = dict(config.design_n)
        design_n[PRIMARY_DIM[args.command]] = list(args.design_n)
        config = HarnessConfig(**{**config.model_dump(), "design_n": design_n})
    return config


def _payload(args, config: HarnessConfig, suite: Optional[CriterionSuite]) -> Dict:
    payload = {
        "command": args.command,
        "seed": config.seed,
        "samples": config.samples,
        "tol": config.tol,
        "coarse_step": config.coarse_step,
        "design_seed": config.design_seed,
    }
    if suite is not None:
        payload["designs"] = [cert.model_dump() for cert in suite.certificates]
    return payload


def _emit(args, frame, payload: Dict) -> None:
    if args.format == "json":
        write_output(dump_json(payload), args.out)
    else:
        write_output(frame.to_csv(index=False), args.out)


def run_thresholds(args, config: HarnessConfig) -> int:
    suite = CriterionSuite.build(config.design_n, config.design_seed)
    if args.command == "table1":
        results = bell_thresholds(suite, config.tol, config.coarse_step)
    elif args.command == "table3":
        results = upb_thresholds(suite, config.tol, config.coarse_step)
    else:
        results = horodecki_curves(
            suite, config.x_grid, config.tol, config.coarse_step
        )
    payload = _payload(args, config, suite)
    payload["results"] = [r.model_dump() for r in results]
    _emit(args, results_frame(results), payload)
    return 0


def run_sweep(args, config: HarnessConfig) -> int:
    suite = CriterionSuite.build(config.design_n, config.design_seed)
    options = dict(
        workers=config.workers,
        chunk_size=config.chunk_size,
        progress=config.progress,
    )
    if args.command == "chessboard":
        summary = chessboard_sweep(suite, config.samples, config.seed, **options)
    else:
        dims = QUBITS if args.command == "table2" else QUBIT_QUTRIT
        summary = random_sweep(
            suite, dims, config.samples, config.seed, **options
        )
    payload = _payload(args, config, suite)
    payload["results"] = summary.model_dump()
    _emit(args, sweep_frame(summary), payload)
    return 0


def run_designs(args, config: HarnessConfig) -> int:
    if args.action == "export":
        p = build_design(args.dim, args.n, config.design_seed)
        if args.out:
            save_design(p, args.out)
        else:
            write_output(json.dumps(design_to_dict(p), indent=2), None)
        return 0

    if args.action == "import":
        p = load_design(args.path)
        cert = verify_design(p)
        payload = {"path": args.path, "certificate": cert.model_dump()}
        _emit(args, results_frame([cert]), payload)
        return 0

    checks = [check_design_file(path) for path in args.paths]
    payload = {"checks": [c.model_dump() for c in checks]}
    _emit(args, results_frame(checks), payload)
    return 0 if all(c.passed for c in checks) else 1


def run_verify_all(args, config: HarnessConfig) -> int:
    report = verify_all(config, design_paths=args.design_paths)
    payload = _payload(args, config, None)
    payload["passed"] = report.passed
    payload["checks"] = [c.model_dump() for c in report.checks]
    _emit(args, results_frame(report.checks), payload)
    return 0 if report.passed else 1


COMMANDS = {
    "table1": run_thresholds,
    "table3": run_thresholds,
    "horodecki": run_thresholds,
    "table2": run_sweep,
    "table4": run_sweep,
    "chessboard": run_sweep,
    "designs": run_designs,
    "verify-all": run_verify_all,
}


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    args.command = COMMAND_ALIASES.get(args.command, args.command)
    return args


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)

    try:
        config = resolve_config(args)
    except (ValueError, OSError) as e:
        print(f"entdesign: invalid configuration: {e}", file=sys.stderr)
        return 2

    setup_logging(config.log_dir, quiet=args.quiet)
    logger.info("entdesign %s (seed %d)", args.command, config.seed)

    try:
        return COMMANDS[args.command](args, config)
    except (InvariantViolation, ConvergenceError) as e:
        logger.error("%s", e)
        return 1
    except (ValueError, OSError) as e:
        logger.error("Bad argument: %s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
