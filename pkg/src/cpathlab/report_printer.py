"""Printer class for cpathlab results.

Provides the ReportPrinter class for printing the instance registry, finite-difference checks,
condition reports, analytic centers, limiting directions and verification reports to standard output
as tables, using rich formatting.
"""
import logging
from typing import Iterable, Optional

import numpy as np
from rich.console import Console
from rich.table import Table, box

from cpathlab.analytic import AnalyticCenterResult, XiStarResult
from cpathlab.builtin_instances import BuiltinInstance
from cpathlab.kkt import ConditionReport
from cpathlab.nsdp_model import FdCheckReport
from cpathlab.verification import VerificationReport

STATUS_COLORS = {"pass": "green", "fail": "red", "skipped": "yellow", "reported": "cyan"}


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, (bool, np.bool_)):
        return "yes" if value else "no"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.3e}"
    return str(value)


def _matrix(M: np.ndarray) -> str:
    return np.array2string(np.asarray(M), precision=6, suppress_small=True)


class ReportPrinter:
    """Printer for cpathlab results.

    Every method prints one table; ``colorize`` styles pass/fail/skipped rows.
    """

    def __init__(self, logger: Optional[logging.Logger] = None, console: Optional[Console] = None) -> None:
        """Initialize the printer with an optional logger.

        Args:
            logger (Optional[logging.Logger]): Logger instance to use. If None, a default logger is created.
            console (Optional[Console]): Console to print to. If None, a console on standard output is created.

        """
        if logger is not None and not isinstance(logger, logging.Logger):
            raise TypeError("logger must be an instance of logging.Logger or None")
        self.logger = logger or logging.getLogger(self.__class__.__name__)

        self.console = console or Console(highlight=False)

    @staticmethod
    def _table(*headers: str) -> Table:
        table = Table(show_header=True, header_style="bold magenta", show_lines=True, box=box.ASCII_DOUBLE_HEAD)
        for header in headers:
            table.add_column(header)
        return table

    def print_instances(self, builtins: Iterable[BuiltinInstance]) -> None:
        """Print the registry as a table of names, dimensions and expected regime."""
        table = self._table("Name", "n", "m", "s", "Regime", "Description")
        for b in builtins:
            inst = b.instance
            regime = "degenerate" if b.degenerate else "nondegenerate"
            table.add_row(b.name, str(inst.n), str(inst.m), str(inst.s), regime, inst.description)
        self.console.print(table)

    def print_fd_check(self, report: FdCheckReport, colorize: bool = False) -> None:
        """Print the finite-difference check of each oracle."""
        table = self._table("Oracle", "Relative error", "Absolute error", "Passed")
        for entry in report.entries:
            style = (STATUS_COLORS["pass"] if entry.passed else STATUS_COLORS["fail"]) if colorize else None
            table.add_row(entry.oracle, _fmt(entry.max_error), _fmt(entry.max_abs_error), _fmt(entry.passed),
                          style=style)
        self.console.print(table)
        self.console.print(f"{report.instance}: step {report.step:g}, tolerance {report.tol:g}, "
                           f"{'all passed' if report.all_passed else 'FAILED'}")

    def print_conditions(self, report: ConditionReport) -> None:
        """Print the outcome and the numeric evidence of each condition."""
        table = self._table("Condition", "Holds", "Evidence")
        table.add_row("SC", _fmt(report.sc.holds),
                      f"rank G(x*) = {report.sc.rank_G}, rank Y = {report.sc.rank_Y}, "
                      f"lambda_min(G + Y) = {_fmt(report.sc.min_eig_sum)}")
        table.add_row("NC", _fmt(report.nc.holds), f"rank {report.nc.rank} of required {report.nc.required}")
        table.add_row("MFCQ", _fmt(report.mfcq.holds),
                      f"{report.mfcq.status}, witness lambda_min = {_fmt(report.mfcq.witness_min_eig)}")
        subspace = ", ".join(_fmt(v) for v in report.ssosc.subspace_min_eig) or "-"
        table.add_row("SSOSC", _fmt(report.ssosc.consistent),
                      f"subspace min eig [{subspace}] (dim {report.ssosc.subspace_dim}), "
                      f"cone min {_fmt(report.ssosc.cone_samples_min)} over {report.ssosc.cone_samples_accepted} "
                      f"samples, {report.ssosc.multipliers_tested} multipliers")
        self.console.print(table)
        for note in report.notes:
            self.console.print(f"note: {note}")

    def print_center(self, result: AnalyticCenterResult) -> None:
        """Print the analytic center with its certificate residual."""
        table = self._table("Quantity", "Value")
        table.add_row("Y_a", _matrix(result.Y_a))
        table.add_row("z_a", _matrix(result.z_a))
        table.add_row("log det Y^EE", _fmt(result.logdet))
        table.add_row("certificate residual", _fmt(result.cert_residual))
        table.add_row("Newton iterations", str(result.iterations))
        table.add_row("phase I", _fmt(result.phase_one))
        self.console.print(table)

    def print_xi_star(self, result: XiStarResult) -> None:
        """Print ξ* and the residuals of the block identities."""
        table = self._table("Quantity", "Value")
        table.add_row("xi*", _matrix(result.xi))
        table.add_row("p*", str(result.p_star))
        table.add_row("reduced matrix min eig", _fmt(result.structured_min_eig))
        for key, value in result.residuals.items():
            table.add_row(key, _fmt(value))
        self.console.print(table)

    def print_verification(self, report: VerificationReport, colorize: bool = False) -> None:
        """Print one row per experiment and the overall outcome."""
        table = self._table("Experiment", "Status", "Details")
        for e in report.experiments:
            details = e.message or ", ".join(
                f"{key}={_fmt(value)}" for key, value in e.bound.items() if not isinstance(value, (dict, list))
            )
            style = STATUS_COLORS.get(e.status) if colorize else None
            table.add_row(e.name, e.status, details, style=style)
        self.console.print(table)
        self.console.print(f"{report.instance}: overall {'PASS' if report.overall else 'FAIL'}")
