"""Tests for the ReportPrinter class in cpathlab.report_printer."""
from io import StringIO

import numpy as np
import pytest
from rich.console import Console

from cpathlab.analytic import analytic_center, xi_star
from cpathlab.builtin_instances import builtin_instance
from cpathlab.kkt import ConditionOptions, condition_report, eigen_split
from cpathlab.nsdp_model import fd_check
from cpathlab.report_printer import ReportPrinter
from cpathlab.verification import ExperimentRecord, VerificationReport, VerificationSchedule


@pytest.fixture
def printer():
    """Return a printer writing to an in-memory console."""
    return ReportPrinter(console=Console(file=StringIO(), width=200, highlight=False))


def _output(printer):
    return printer.console.file.getvalue()


def test_print_instances(printer):
    """Test that every builtin is listed with its regime."""
    printer.print_instances([builtin_instance("deg-twin"), builtin_instance("nondeg-control")])
    out = _output(printer)
    assert "deg-twin" in out and "nondeg-control" in out
    assert "degenerate" in out and "nondegenerate" in out


def test_print_fd_check(printer, curved_qmi):
    """Test the oracle rows and the summary line of a finite-difference check."""
    printer.print_fd_check(fd_check(curved_qmi, np.array([0.1, 0.2])), colorize=True)
    out = _output(printer)
    assert "hessG_contract[W]" in out
    assert "curved: step 1e-05, tolerance 1e-05, all passed" in out


def test_print_conditions(printer, deg_twin):
    """Test that the four conditions are printed with their evidence."""
    report = condition_report(deg_twin.instance, deg_twin.oracle.xstar, deg_twin.oracle.multipliers,
                              ConditionOptions(n_cone_samples=16, mfcq_restarts=3, mfcq_iters=30, seed=1))
    printer.print_conditions(report)
    out = _output(printer)
    for name in ("SC", "NC", "MFCQ", "SSOSC"):
        assert name in out
    assert "rank G(x*) = 0" in out


def test_print_center_and_xi_star(printer, deg_mixed):
    """Test the analytic center and ξ* tables."""
    inst, xstar = deg_mixed.instance, deg_mixed.oracle.xstar
    split = eigen_split(inst.eval_G(xstar))
    center = analytic_center(inst, xstar, split)
    printer.print_center(center)
    printer.print_xi_star(xi_star(inst, xstar, split, center.Y_a, center.z_a))
    out = _output(printer)
    assert "Y_a" in out and "certificate residual" in out
    assert "xi*" in out and "p*" in out


def test_print_verification(printer):
    """Test that skipped experiments show their reason and the overall line is printed."""
    report = VerificationReport("deg-twin", VerificationSchedule(), 0.25, 42, [
        ExperimentRecord("theta_ratio", True, bound={"measured_ratio": 1.0, "mu": [0.1]}),
        ExperimentRecord("uniqueness", None, status="skipped",
                         message="only 0 of 8 starts inside the tube are interior after 32 draws"),
    ])
    printer.print_verification(report, colorize=True)
    out = _output(printer)
    assert "measured_ratio=1.000e+00" in out
    assert "mu=" not in out
    assert "only 0 of 8 starts" in out
    assert "deg-twin: overall PASS" in out


def test_printer_rejects_non_logger():
    """Test that a non-logger argument is rejected."""
    with pytest.raises(TypeError):
        ReportPrinter(logger="printer")
