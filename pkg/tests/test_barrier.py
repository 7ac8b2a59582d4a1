"""Tests for the log-barrier solver in cpathlab.barrier."""
import logging

import numpy as np
import pytest

from cpathlab.barrier import BarrierSolver, barrier_solve, lift_to_triplet, psi_eval
from cpathlab.exceptions import ConvergenceError, DomainError, InconsistentSystemError, InteriorityError
from cpathlab.kkt import bkkt_residual
from cpathlab.nsdp_model import qmi_instance


def test_psi_eval_on_deg_twin(deg_twin):
    """Test ψ_μ(x) = x − 2μ log x with its derivatives."""
    psi = psi_eval(deg_twin.instance, [0.5], 0.1)
    assert psi.value == pytest.approx(0.5 - 0.2 * np.log(0.5))
    assert psi.gradient == pytest.approx([1.0 - 0.2 / 0.5])
    np.testing.assert_allclose(psi.hessian, [[0.2 / 0.25]])


def test_psi_eval_hessian_matches_finite_differences(curved_qmi):
    """Test the barrier Hessian of a curved QMI against differences of the gradient."""
    x, mu, h = np.array([0.1, 0.05]), 0.3, 1e-6
    psi = psi_eval(curved_qmi, x, mu)
    fd = np.stack([(psi_eval(curved_qmi, x + h * e, mu).gradient - psi_eval(curved_qmi, x - h * e, mu).gradient)
                   / (2 * h) for e in np.eye(2)])
    assert np.allclose(psi.hessian, fd, atol=1e-6)


def test_psi_eval_requires_interior_point(deg_twin):
    """Test that ψ_μ is undefined outside the interior."""
    with pytest.raises(InteriorityError):
        psi_eval(deg_twin.instance, [-0.1], 0.1)


@pytest.mark.parametrize(
    "name, x_of_mu",
    [
        ("deg-twin", lambda mu: [2 * mu]),
        ("deg-cross", lambda mu: [2 * mu, 0.0]),
        ("deg-mixed", lambda mu: [2 * mu, 0.0, 0.0]),
        ("nondeg-control", lambda mu: [mu, 0.0, mu]),
    ],
)
@pytest.mark.parametrize("mu", [1e-1, 1e-2])
def test_solve_reaches_closed_form_path(registry, name, x_of_mu, mu):
    """Test that the barrier solver converges to the closed-form path point."""
    builtin = registry[name]
    result = BarrierSolver().solve(builtin.instance, mu, builtin.oracle.x0, tol=1e-12)
    assert result.converged
    assert np.allclose(result.x, x_of_mu(mu), atol=1e-10)
    assert result.projected_grad_norm <= 1e-12
    assert result.history[-1] == result.projected_grad_norm


def test_solve_returns_equality_multiplier(deg_mixed):
    """Test that the least-squares multiplier equals z(μ) = μ on deg-mixed."""
    result = barrier_solve(deg_mixed.instance, 1e-2, deg_mixed.oracle.x0, tol=1e-12)
    assert result.z == pytest.approx([1e-2], abs=1e-10)


def test_solve_runs_feasibility_phase(deg_mixed, caplog):
    """Test that an infeasible start is repaired before the Newton iteration."""
    with caplog.at_level(logging.WARNING):
        result = BarrierSolver().solve(deg_mixed.instance, 1e-1, [1.0, 0.3, 0.0])
    assert "running the feasibility phase" in caplog.text
    assert result.feas_h_norm <= 1e-10
    assert np.allclose(result.x, [0.2, 0.0, 0.0], atol=1e-8)


def test_solve_logs_a_stop_at_the_rounding_floor(curved_qmi, monkeypatch, caplog):
    """Test that stopping on the gradient noise floor instead of the requested tolerance is logged."""
    monkeypatch.setattr(BarrierSolver, "_gradient_noise", staticmethod(lambda inst, x, mu, psi: 1e-6))
    solver = BarrierSolver(logger=logging.getLogger("barrier_floor"))
    with caplog.at_level(logging.DEBUG, logger="barrier_floor"):
        result = solver.solve(curved_qmi, 0.1, [0.05, 0.05], tol=0.0)
    assert result.converged
    assert result.tol == 1e-6
    assert "stopping at the rounding floor 1.000e-06" in caplog.text
    assert "requested tolerance 0.000e+00" in caplog.text


def test_solve_rejects_bad_inputs(deg_twin):
    """Test the barrier parameter and interior start checks."""
    solver = BarrierSolver()
    with pytest.raises(DomainError):
        solver.solve(deg_twin.instance, 0.0, [1.0])
    with pytest.raises(InteriorityError, match="not interior"):
        solver.solve(deg_twin.instance, 0.1, [0.0])


def test_solve_reports_iteration_cap(deg_twin):
    """Test that hitting the iteration cap raises ConvergenceError with the last residual."""
    with pytest.raises(ConvergenceError) as excinfo:
        BarrierSolver(max_iter=1).solve(deg_twin.instance, 1e-6, [1.0])
    assert excinfo.value.iterations == 1
    assert excinfo.value.residual > 0


def test_restore_feasibility_reports_inconsistent_constraints():
    """Test that an unsatisfiable h(x) = 0 raises InconsistentSystemError."""
    inst = qmi_instance("infeasible", [[1.0]], [[[1.0]]], [0.0], H=[[0.0]], b=[1.0])
    with pytest.raises(InconsistentSystemError) as excinfo:
        BarrierSolver().restore_feasibility(inst, [0.0])
    assert excinfo.value.residual == pytest.approx(1.0)


def test_lift_to_triplet_gives_path_multipliers(deg_mixed):
    """Test that lifting x(μ) gives Y(μ) = μG⁻¹ and z(μ) = μ."""
    mu = 1e-3
    w = lift_to_triplet(deg_mixed.instance, [2 * mu, 0.0, 0.0], mu)
    assert np.allclose(w.Y, np.diag([0.5, 0.5, mu]))
    assert w.z == pytest.approx([mu])
    assert bkkt_residual(deg_mixed.instance, w, mu).max <= 1e-14


def test_lift_to_triplet_rejects_rank_deficient_jacobian():
    """Test that a rank deficient ∇h(x) is a domain error."""
    inst = qmi_instance("flat", [[1.0]], [[[1.0]]], [0.0], H=[[0.0]], b=[0.0])
    with pytest.raises(DomainError, match="rank deficient"):
        lift_to_triplet(inst, [0.0], 0.1)


def test_solver_rejects_non_logger():
    """Test that a non-logger argument is rejected."""
    with pytest.raises(TypeError):
        BarrierSolver(logger=object())
