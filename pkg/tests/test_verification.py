"""Tests for the experiment suite in cpathlab.verification."""
import numpy as np
import pytest

from cpathlab import verification
from cpathlab.builtin_instances import BuiltinInstance, BuiltinOracle
from cpathlab.central_path import PathTracer
from cpathlab.exceptions import ConvergenceError, InstanceNotFoundError, ValidationError
from cpathlab.nsdp_model import qmi_instance
from cpathlab.progress import ProgressStatus
from cpathlab.verification import (
    EXPERIMENTS,
    ExperimentRecord,
    VerificationReport,
    VerificationRunner,
    VerificationSchedule,
    compute_limits,
    run_verification,
    trace_columns,
    trace_metrics,
)

SHORT = VerificationSchedule(1e-1, 0.1, 1e-3)
VERIFIED = ("deg-twin", "deg-cross", "deg-mixed", "nondeg-control")


@pytest.fixture(scope="module")
def reports():
    """Run the full suite once per verified builtin."""
    return {name: run_verification(name) for name in VERIFIED}


@pytest.mark.parametrize("name", VERIFIED)
def test_builtins_pass_the_suite(reports, name):
    """Test that every asserted experiment passes on the closed-form builtins."""
    report = reports[name]
    failed = [(e.name, e.bound, e.message) for e in report.experiments if e.passed is False]
    assert report.overall, failed
    assert [e.name for e in report.experiments] == [name for name, _ in EXPERIMENTS]


@pytest.mark.parametrize("name", VERIFIED)
def test_tangent_gap_is_reported_not_asserted(reports, name):
    """Test that the tangent-vs-ξ* gap is reported without a verdict."""
    record = reports[name].experiment("tangent_vs_xi")
    assert record.passed is None
    assert record.status == "reported"
    assert len(record.series["gap"]) == len(reports[name].trace.points)


def test_limit_singularity_separates_degenerate_and_control(reports):
    """Test that 𝒜 at the limit is singular for a degenerate instance and regular for the control."""
    assert reports["deg-mixed"].experiment("limit_singularity").bound["sigmin_A"] <= verification.LIMIT_SINGULAR_MAX
    assert reports["nondeg-control"].experiment("limit_singularity").bound["sigmin_A"] > \
        verification.LIMIT_REGULAR_MIN


def test_tangent_consistency_mode(reports):
    """Test that linear paths are recognized as exact."""
    bound = reports["deg-twin"].experiment("tangent_consistency").bound
    assert bound["mode"] == "exact"


def test_report_rows_follow_the_csv_header(reports):
    """Test that the trace rows carry exactly the columns of the trace header."""
    report = reports["deg-mixed"]
    assert len(report.rows) == len(report.trace.points) == 7
    for row in report.rows:
        assert list(row) == trace_columns(3)
    assert report.rows[-1]["dir_err"] <= verification.FINAL_DIST_MAX


def test_report_to_dict(reports):
    """Test the JSON document layout of a report."""
    doc = reports["deg-twin"].to_dict()
    assert set(doc) == {"instance", "schedule", "experiments", "overall"}
    assert doc["schedule"] == {"mu0": 1e-1, "sigma": 0.1, "mu_min": 1e-7, "rho": 0.25, "seed": 42}
    assert doc["overall"] is True
    first = doc["experiments"][0]
    assert set(first) == {"name", "pass", "status", "series", "bound"}


def test_trace_columns():
    """Test the header of the trace file."""
    columns = trace_columns(2)
    assert columns[:4] == ["step", "mu", "x_0", "x_1"]
    assert columns[-1] == "newton_iters"


def test_experiment_record_status():
    """Test the derived status and the optional message of a record."""
    assert ExperimentRecord("a", True).status == "pass"
    assert ExperimentRecord("a", False).status == "fail"
    assert ExperimentRecord("a", None).status == "reported"
    skipped = ExperimentRecord("a", None, status="skipped", message="no data")
    assert skipped.to_dict()["message"] == "no data"
    assert "message" not in ExperimentRecord("a", True).to_dict()


def test_report_overall_ignores_unasserted_records():
    """Test that skipped and reported records do not affect the verdict."""
    report = VerificationReport("x", SHORT, 0.25, 1, [ExperimentRecord("a", True), ExperimentRecord("b", None)])
    assert report.overall
    report.experiments.append(ExperimentRecord("c", False))
    assert not report.overall
    with pytest.raises(KeyError):
        report.experiment("missing")


MUS = np.logspace(-1, -7, 7)


def test_trend_treats_values_under_the_noise_floor_as_flat():
    """Test that rounding noise growing as mu shrinks is flat once a floor is given."""
    noise = np.logspace(-14, -11, 7)
    ok, tau = verification._trend(MUS, noise)
    assert not ok and tau == pytest.approx(-1.0)
    ok, tau = verification._trend(MUS, noise, np.full(7, 1e-10))
    assert ok and np.isnan(tau)


def test_trend_keeps_a_decrease_that_reaches_the_floor():
    """Test that a genuine decrease ending in noise still counts as decreasing."""
    values = np.array([1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 5e-12, 3e-12])
    ok, tau = verification._trend(MUS, values, np.full(7, 1e-11))
    assert ok
    assert tau > 0.9


@pytest.mark.parametrize("name", VERIFIED)
def test_scaled_inverse_records_its_noise_floor(reports, name):
    """Test that the scaled inverse check passes and reports one noise floor per point."""
    record = reports[name].experiment("scaled_inverse_bounded")
    assert record.passed
    assert len(record.series["noise_floor"]) == len(record.series["mu"])
    assert record.series["dist_to_center"][-1] <= verification.FINAL_DIST_MAX


def test_uniqueness_uses_every_start(reports):
    """Test that the uniqueness check solves from the full number of starts."""
    record = reports["deg-twin"].experiment("uniqueness")
    assert record.passed
    assert record.bound["starts"] == verification.UNIQUENESS_STARTS
    assert verification.UNIQUENESS_STARTS <= record.bound["attempts"] <= verification.UNIQUENESS_ATTEMPTS


def test_uniqueness_skips_without_enough_interior_starts(deg_twin, monkeypatch):
    """Test that too few interior starts skip the uniqueness check with the count."""
    monkeypatch.setattr(verification, "EXPERIMENTS", (("uniqueness", verification._uniqueness),))
    monkeypatch.setattr(verification, "is_interior", lambda inst, x: False)
    record = VerificationRunner().run(deg_twin, SHORT).experiment("uniqueness")
    assert record.status == "skipped"
    assert record.message == (f"only 0 of {verification.UNIQUENESS_STARTS} starts inside the tube are interior "
                              f"after {verification.UNIQUENESS_ATTEMPTS} draws")


def test_runner_emits_step_progress(deg_twin, monkeypatch):
    """Test the three progress steps of a run."""
    monkeypatch.setattr(verification, "EXPERIMENTS", EXPERIMENTS[:2])
    events = []
    VerificationRunner().run(deg_twin, SHORT, progress_observer=events.append)
    steps = [(e.step, e.status) for e in events]
    assert steps[0] == (1, ProgressStatus.TRACING_PATH)
    assert (2, ProgressStatus.COMPUTING_CENTER) in steps
    assert steps[-1] == (3, ProgressStatus.RUNNING_EXPERIMENTS)
    assert events[-1].percent == 100
    assert all(e.total_steps == 3 for e in events)


def test_solver_errors_fail_the_experiment(deg_twin, monkeypatch):
    """Test that a solver error inside an experiment is recorded as a failure with its message."""
    def broken(ctx):
        raise ConvergenceError("did not converge")

    monkeypatch.setattr(verification, "EXPERIMENTS", (("broken", broken), EXPERIMENTS[0]))
    report = VerificationRunner().run(deg_twin, SHORT)
    record = report.experiment("broken")
    assert record.passed is False
    assert record.message == "ConvergenceError: did not converge"
    assert report.experiment("path_oracle").passed
    assert not report.overall


def test_missing_closed_form_skips_the_path_oracle(deg_mixed, monkeypatch):
    """Test that experiments without their inputs are skipped."""
    deg_mixed.oracle.w_of_mu = None
    monkeypatch.setattr(verification, "EXPERIMENTS", EXPERIMENTS[:1])
    report = VerificationRunner().run(deg_mixed, SHORT)
    record = report.experiment("path_oracle")
    assert record.status == "skipped"
    assert record.message == "no closed-form path"
    assert report.overall


def test_run_requires_the_kkt_point(deg_twin):
    """Test that verification without x* is a validation error."""
    deg_twin.oracle.xstar = None
    with pytest.raises(ValidationError, match="needs the KKT point"):
        VerificationRunner().run(deg_twin, SHORT)


def test_compute_limits_records_center_failure():
    """Test that a failing analytic center is recorded in errors instead of raised."""
    inst = qmi_instance("no-sc", np.zeros((2, 2)), [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], [1.0, 0.0])
    builtin = BuiltinInstance("no-sc", inst, BuiltinOracle(xstar=np.zeros(2), x0=np.ones(2)))
    limits = compute_limits(builtin)
    assert limits.center is None and limits.xi is None
    assert "strict complementarity" in limits.errors["center"]
    assert limits.Y_a is None and limits.xi_star is None


def test_trace_metrics_without_kkt_point(deg_twin):
    """Test that limit columns are NaN when x* is unknown."""
    trace = PathTracer().trace(deg_twin.instance, [1.0], 1e-1, 0.1, 1e-2)
    builtin = BuiltinInstance("twin-file", deg_twin.instance, BuiltinOracle(xstar=None, x0=np.ones(1)))
    rows = trace_metrics(builtin, trace)
    assert len(rows) == 2
    for key in ("norm_d", "mu_over_normd", "dist_Y_Ya", "dir_err", "yEF_over_mu"):
        assert np.isnan(rows[0][key])
    assert rows[1]["x_0"] == pytest.approx(2e-2)
    assert rows[1]["redform_mineig"] > 0


def test_run_verification_unknown_name():
    """Test that an unknown name raises InstanceNotFoundError."""
    with pytest.raises(InstanceNotFoundError):
        run_verification("deg-unknown", SHORT)


def test_runner_rejects_non_logger():
    """Test that a non-logger argument is rejected."""
    with pytest.raises(TypeError):
        VerificationRunner(logger="runner")
