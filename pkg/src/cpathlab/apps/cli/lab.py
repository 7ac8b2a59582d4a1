"""CLI for tracing central paths of degenerate NSDPs and verifying their limiting behavior.

Features:
- Check the derivative oracles of an instance against central differences.
- Check SC, NC, MFCQ and SSOSC at a KKT point.
- Trace the central path over a geometric schedule and write the per-point metrics as CSV.
- Compute the analytic center of the multiplier set and the limiting direction ξ*.
- Run the experiment suite on one builtin or on all of them (optionally in parallel) and write JSON reports.
- List the builtin instances.

Usage:
    cpathlab <command> --instance <name-or-file> [options]

Exit codes: 0 success or verification pass, 1 verification failure or solver failure, 2 usage or input error.
For more details, use the --help option.
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from typing import Iterator, List, Optional

import numpy as np
from rich.progress import BarColumn, TextColumn
from rich.progress import Progress as RichProgress

from cpathlab.analytic import analytic_center, xi_star
from cpathlab.barrier import BarrierSolver
from cpathlab.builtin_instances import CONTROL_BUILTINS, DEGENERATE_BUILTINS, BuiltinInstance, BuiltinOracle
from cpathlab.central_path import MODES, PathTracer
from cpathlab.config import Config
from cpathlab.exceptions import CpathLabError, ValidationError
from cpathlab.instance_registry import InstanceRegistry, default_registry
from cpathlab.kkt import ConditionOptions, condition_report, eigen_split
from cpathlab.nsdp_model import fd_check, load_instance
from cpathlab.progress import Progress, ProgressObserver, ProgressStatus
from cpathlab.report_printer import ReportPrinter
from cpathlab.report_store import JSONReportStore
from cpathlab.trace_store import CSVTraceStore
from cpathlab.verification import (
    VerificationReport,
    VerificationRunner,
    VerificationSchedule,
    compute_limits,
    run_verification,
    trace_columns,
    trace_metrics,
)

SEED_ENV = "CPATH_LAB_SEED"
CONFIG_ENV = "CPATHLAB_CONFIG"


class UsageError(Exception):
    """Invalid invocation detected after argument parsing."""


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: '{text}'")
    if not np.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got '{text}'")
    return value


def _unit_interval(text: str) -> float:
    value = _positive_float(text)
    if value >= 1:
        raise argparse.ArgumentTypeError(f"expected a number in (0, 1), got '{text}'")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid int value: '{text}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got '{text}'")
    return value


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(prog="cpathlab", description="Central path laboratory for degenerate NSDPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"Path to the configuration file (default: ${CONFIG_ENV} or user config)")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level")

    instance = argparse.ArgumentParser(add_help=False)
    instance.add_argument("--instance", required=True, help="Builtin name (see list-instances) or QMI JSON file")
    instance.add_argument("--xstar", type=_vector, help="KKT point x* as comma-separated values (file instances)")
    instance.add_argument("--x0", type=_vector, help="Interior start as comma-separated values (file instances)")

    schedule = argparse.ArgumentParser(add_help=False)
    schedule.add_argument("--mu0", type=_positive_float, default=1e-1, help="First barrier parameter")
    schedule.add_argument("--sigma", type=_unit_interval, default=0.1, help="Reduction factor in (0, 1)")
    schedule.add_argument("--mu-min", dest="mu_min", type=_positive_float, default=1e-7,
                          help="Smallest barrier parameter")
    schedule.add_argument("--tol", type=_positive_float, default=1e-9, help="Acceptance tolerance of path points")
    schedule.add_argument("--progress", action="store_true", help="Show a progress bar")

    p = sub.add_parser("check", parents=[common, instance], help="Finite-difference check of the oracles")
    p.add_argument("--seed", type=int, default=42, help="Seed of the random probes")

    p = sub.add_parser("conditions", parents=[common, instance], help="Check SC, NC, MFCQ and SSOSC at x*")
    p.add_argument("--seed", type=int, default=42, help="Seed of the random probes")

    p = sub.add_parser("trace", parents=[common, instance, schedule], help="Trace the central path to CSV")
    p.add_argument("--mode", choices=MODES, default="hybrid", help="Path tracing mode")
    p.add_argument("--out", help="CSV file to write (default: <cache_dir>/traces/<instance>.csv)")

    sub.add_parser("analytic-center", parents=[common, instance], help="Analytic center of the multiplier set")
    sub.add_parser("xistar", parents=[common, instance], help="Limiting direction and its block identities")

    p = sub.add_parser("verify", parents=[common, schedule], help="Run the experiment suite")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--instance", help="Builtin name or QMI JSON file")
    target.add_argument("--all", action="store_true", help="Verify every degenerate builtin and the control")
    p.add_argument("--xstar", type=_vector, help="KKT point x* as comma-separated values (file instances)")
    p.add_argument("--x0", type=_vector, help="Interior start as comma-separated values (file instances)")
    p.add_argument("--rho", type=_positive_float, default=0.25, help="Tube radius factor")
    p.add_argument("--seed", type=int, default=42, help=f"Seed of every random draw (overridden by ${SEED_ENV})")
    p.add_argument("--jobs", type=_positive_int, default=1, help="Worker processes for --all")
    p.add_argument("--out", help="JSON file to write (directory with --all; default: <cache_dir>/reports)")

    sub.add_parser("list-instances", parents=[common], help="List the builtin instances")
    return parser


def setup_logger(config: Config, verbose: bool = False) -> logging.Logger:
    """Set up the application logger on stderr with the level from config.

    Args:
        config (Config): Configuration object containing the log_level setting.
        verbose (bool): Force DEBUG level.

    Returns:
        logging.Logger: Configured logger instance.

    """
    logger = logging.getLogger("cpathlab")

    # Remove any existing handlers to avoid duplicates
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    log_level = logging.DEBUG if verbose else config.log_level
    logger.setLevel(log_level)
    console_handler.setLevel(log_level)

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)
    return logger


def _resolve(args: argparse.Namespace, registry: InstanceRegistry, logger: logging.Logger) -> BuiltinInstance:
    """Return the registry entry, or wrap a QMI file with the --xstar/--x0 points as its oracle."""
    source = args.instance
    if not os.path.isfile(source):
        builtin = registry[source]
        if args.xstar is not None or args.x0 is not None:
            logger.warning("--xstar/--x0 are ignored for builtin instances")
        return builtin
    try:
        inst = load_instance(source, registry)
    except RuntimeError as e:
        raise UsageError(str(e)) from e
    for flag in ("xstar", "x0"):
        value = getattr(args, flag)
        if value is not None and value.shape != (inst.n,):
            raise UsageError(f"--{flag} has {value.size} entries, the instance has n={inst.n}")
    return BuiltinInstance(inst.name, inst, BuiltinOracle(xstar=args.xstar, x0=args.x0))


def _require(builtin: BuiltinInstance, *fields: str) -> None:
    for name in fields:
        if getattr(builtin.oracle, name) is None:
            raise UsageError(f"{builtin.name}: --{name} is required for file instances")


def _seed(args: argparse.Namespace) -> int:
    text = os.getenv(SEED_ENV)
    if text is None or text == "":
        return args.seed
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"{SEED_ENV}='{text}' is not an integer")


def _schedule(args: argparse.Namespace) -> VerificationSchedule:
    if args.mu_min > args.mu0:
        raise UsageError(f"--mu-min ({args.mu_min:g}) must not exceed --mu0 ({args.mu0:g})")
    return VerificationSchedule(args.mu0, args.sigma, args.mu_min)


class RichProgressObserver(ProgressObserver):
    """Render progress events on a rich progress bar."""

    def __init__(self, bar: RichProgress, description: str):
        """Add a task to the bar.

        Args:
            bar (RichProgress): A started rich progress display.
            description (str): Label used for events without a status.

        """
        self.bar = bar
        self.description = description
        self.task = bar.add_task(description, total=100)

    def __call__(self, progress: Progress) -> None:
        """Update the bar; events with an unknown percentage keep the current completion."""
        label = progress.status.name.lower().replace("_", " ") if progress.status else self.description
        if progress.step is not None:
            label = f"[{progress.step}/{progress.total_steps}] {label}"
        if progress.percent >= 0:
            self.bar.update(self.task, description=label, completed=progress.percent)
        else:
            self.bar.update(self.task, description=label)


@contextmanager
def _progress_bar(enabled: bool, description: str) -> Iterator[Optional[ProgressObserver]]:
    """Yield a progress observer rendering events on a rich bar, or None when disabled."""
    if not enabled:
        yield None
        return
    columns = (TextColumn("{task.description}"), BarColumn(), TextColumn("{task.percentage:>3.0f}%"))
    with RichProgress(*columns, transient=True) as bar:
        yield RichProgressObserver(bar, description)


def _cmd_list(args, config, logger, printer) -> int:
    registry = default_registry()
    printer.print_instances(registry[name] for name in registry.names())
    return 0


def _cmd_check(args, config, logger, printer) -> int:
    builtin = _resolve(args, default_registry(), logger)
    inst = builtin.instance
    x = builtin.oracle.x0 if builtin.oracle.x0 is not None else builtin.oracle.xstar
    if x is None:
        x = np.zeros(inst.n)
    tol = config.tolerances
    report = fd_check(inst, x, step=tol["fd_step"], tol=tol["fd_tol"], seed=_seed(args))
    printer.print_fd_check(report, colorize=True)
    return 0 if report.all_passed else 1


def _cmd_conditions(args, config, logger, printer) -> int:
    builtin = _resolve(args, default_registry(), logger)
    _require(builtin, "xstar")
    seed = _seed(args)
    limits = compute_limits(builtin, rank_tol=config.tolerances["rank_tol"])
    samples = list(builtin.oracle.multipliers)
    if limits.center is not None:
        samples.append((limits.center.Y_a, limits.center.z_a))
    if not samples:
        raise ValidationError(f"{builtin.name}: no multiplier available at x* ({limits.errors.get('center')})")
    options = ConditionOptions(rank_tol=config.tolerances["rank_tol"], seed=seed)
    report = condition_report(builtin.instance, limits.xstar, samples, options, limits.split)
    printer.print_conditions(report)
    expected = builtin.oracle.expected_conditions
    return 0 if not expected or report.matches(expected) else 1


def _cmd_trace(args, config, logger, printer) -> int:
    builtin = _resolve(args, default_registry(), logger)
    _require(builtin, "x0")
    schedule = _schedule(args)
    tolerances = dict(config.tolerances, trace_tol=args.tol)
    path = args.out or os.path.join(config.cache_dir, "traces", f"{builtin.name}.csv")
    tracer = PathTracer(tolerances=tolerances, barrier_solver=BarrierSolver(tolerances=tolerances, logger=logger),
                        logger=logger)
    with _progress_bar(args.progress, "tracing") as observer:
        trace = tracer.trace(builtin.instance, builtin.oracle.x0, schedule.mu0, schedule.sigma, schedule.mu_min,
                             mode=args.mode, xstar=builtin.oracle.xstar, progress_observer=observer)
        rows = trace_metrics(builtin, trace)
        if observer is not None:
            observer(Progress(-1, status=ProgressStatus.SAVING_TRACE))
        CSVTraceStore(logger=logger).save(rows, path, trace_columns(builtin.instance.n))
    print(f"{builtin.name}: {len(rows)} points written to {path}")
    return 0


def _cmd_center(args, config, logger, printer) -> int:
    builtin = _resolve(args, default_registry(), logger)
    _require(builtin, "xstar")
    inst = builtin.instance
    xstar = inst.check_point(builtin.oracle.xstar)
    split = eigen_split(inst.eval_G(xstar), config.tolerances["rank_tol"])
    printer.print_center(analytic_center(inst, xstar, split))
    return 0


def _cmd_xistar(args, config, logger, printer) -> int:
    builtin = _resolve(args, default_registry(), logger)
    _require(builtin, "xstar")
    inst = builtin.instance
    xstar = inst.check_point(builtin.oracle.xstar)
    rank_tol = config.tolerances["rank_tol"]
    split = eigen_split(inst.eval_G(xstar), rank_tol)
    center = analytic_center(inst, xstar, split)
    printer.print_xi_star(xi_star(inst, xstar, split, center.Y_a, center.z_a, rank_tol))
    return 0


def _verify_all(args, config, schedule: VerificationSchedule, seed: int) -> List[VerificationReport]:
    names = list(DEGENERATE_BUILTINS + CONTROL_BUILTINS)
    tolerances = dict(config.tolerances, trace_tol=args.tol)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as executor:
            futures = [executor.submit(run_verification, name, schedule, args.rho, seed, tolerances)
                       for name in names]
            return [f.result() for f in futures]
    return [run_verification(name, schedule, args.rho, seed, tolerances) for name in names]


def _cmd_verify(args, config, logger, printer) -> int:
    schedule = _schedule(args)
    seed = _seed(args)
    store = JSONReportStore(logger=logger)
    if args.all:
        out_dir = args.out or os.path.join(config.cache_dir, "reports")
        reports = _verify_all(args, config, schedule, seed)
        for report in reports:
            store.save(report, os.path.join(out_dir, f"{report.instance}.json"))
            printer.print_verification(report, colorize=True)
        return 0 if all(r.overall for r in reports) else 1

    builtin = _resolve(args, default_registry(), logger)
    _require(builtin, "xstar", "x0")
    path = args.out or os.path.join(config.cache_dir, "reports", f"{builtin.name}.json")
    runner = VerificationRunner(tolerances=dict(config.tolerances, trace_tol=args.tol), logger=logger)
    with _progress_bar(args.progress, "verifying") as observer:
        report = runner.run(builtin, schedule, args.rho, seed, progress_observer=observer)
        if observer is not None:
            observer(Progress(-1, status=ProgressStatus.SAVING_REPORT))
        store.save(report, path)
    printer.print_verification(report, colorize=True)
    return 0 if report.overall else 1


COMMANDS = {
    "check": _cmd_check,
    "conditions": _cmd_conditions,
    "trace": _cmd_trace,
    "analytic-center": _cmd_center,
    "xistar": _cmd_xistar,
    "verify": _cmd_verify,
    "list-instances": _cmd_list,
}


def main(argv: Optional[List[str]] = None) -> int:
    """CLI for the central path laboratory.

    Every command resolves its instance from the builtin registry or from a QMI JSON file. Flags are
    validated before any computation; an invalid invocation exits with code 2 without writing files.
    Library errors are printed as a single line on stderr.

    Usage:
        cpathlab <command> [options]

    Example:
        cpathlab trace --instance deg-twin --mu0 1e-1 --sigma 0.1 --mu-min 1e-7 --out t.csv
        cpathlab verify --instance deg-mixed --out r.json
        cpathlab verify --all --jobs 4

    Returns:
        int: The process exit code.

    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    config_file = args.config or os.getenv(CONFIG_ENV, None)
    config = Config(app_name="cpathlab", config_file=config_file)
    logger = setup_logger(config, args.verbose)
    printer = ReportPrinter(logger=logger)

    try:
        return COMMANDS[args.command](args, config, logger, printer)
    except (UsageError, ValidationError) as e:
        print(f"cpathlab: error: {e}", file=sys.stderr)
        return 2
    except CpathLabError as e:
        print(f"cpathlab: {e.__class__.__name__}: {e}", file=sys.stderr)
        return 1
    except RuntimeError as e:
        print(f"cpathlab: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
