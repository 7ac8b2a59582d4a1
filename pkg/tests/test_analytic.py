"""Tests for the multiplier set, its analytic center and the limiting direction in cpathlab.analytic."""
import logging

import numpy as np
import pytest

from cpathlab.analytic import (
    analytic_center,
    parametrize_multiplier_set,
    sample_multipliers,
    u_basis,
    xi_star,
)
from cpathlab.builtin_instances import rand_qmi
from cpathlab.exceptions import AssumptionViolationError, InconsistentSystemError, ValidationError
from cpathlab.kkt import PrimalDualTriplet, block_of, eigen_split, kkt_residual
from cpathlab.nsdp_model import qmi_instance
from cpathlab.symlin import min_eig


def _split_at_xstar(builtin):
    inst = builtin.instance
    return eigen_split(inst.eval_G(builtin.oracle.xstar))


def test_parametrize_deg_twin(deg_twin):
    """Test that the multiplier set of deg-twin is {tr Y = 1} with least-norm point I/2."""
    param = parametrize_multiplier_set(deg_twin.instance, deg_twin.oracle.xstar, _split_at_xstar(deg_twin))
    assert param.dimension == 2
    assert np.allclose(param.particular_Y, 0.5 * np.eye(2))
    for N, _ in param.basis:
        assert np.trace(N) == pytest.approx(0.0, abs=1e-12)
    Yee, z = param.point([0.3, -0.2])
    assert np.trace(Yee) == pytest.approx(1.0)
    assert z.shape == (0,)
    with pytest.raises(ValidationError):
        param.point([1.0])


def test_parametrize_rejects_inconsistent_stationarity():
    """Test that an empty multiplier set raises InconsistentSystemError."""
    inst = qmi_instance("no-multiplier", np.zeros((2, 2)), [np.eye(2), np.zeros((2, 2))], [1.0, 1.0])
    with pytest.raises(InconsistentSystemError):
        parametrize_multiplier_set(inst, np.zeros(2), eigen_split(np.zeros((2, 2))))


@pytest.mark.parametrize("name", ["deg-twin", "deg-cross", "deg-mixed", "deg-curve", "nondeg-control"])
def test_analytic_center_matches_oracle(registry, name):
    """Test the analytic center and its certificate against the known centers."""
    builtin = registry[name]
    inst, oracle = builtin.instance, builtin.oracle
    center = analytic_center(inst, oracle.xstar, _split_at_xstar(builtin))
    assert np.allclose(center.Y_a, oracle.Y_a, atol=1e-9)
    assert np.allclose(center.z_a, oracle.z_a, atol=1e-9)
    assert center.cert_residual <= 1e-9
    assert kkt_residual(inst, PrimalDualTriplet(oracle.xstar, center.Y_a, center.z_a)).is_kkt()


def test_analytic_center_certificate_is_the_limit_direction(deg_twin):
    """Test that ΔG^EE(x*; v) = (Y^EE)⁻¹ gives v = ξ* = 2 on deg-twin."""
    center = analytic_center(deg_twin.instance, deg_twin.oracle.xstar, _split_at_xstar(deg_twin))
    assert center.certificate_v == pytest.approx([2.0])
    assert center.logdet == pytest.approx(np.log(0.25))
    assert not center.phase_one


def test_analytic_center_from_non_interior_warm_start(deg_twin, caplog):
    """Test that a warm start outside the cone falls back to phase I."""
    with caplog.at_level(logging.WARNING, logger="cpathlab.analytic"):
        center = analytic_center(deg_twin.instance, deg_twin.oracle.xstar, _split_at_xstar(deg_twin),
                                 warm_start=np.diag([1.0, -0.5]))
    assert "running phase I" in caplog.text
    assert center.phase_one
    assert np.allclose(center.Y_a, 0.5 * np.eye(2), atol=1e-9)


def test_analytic_center_accepts_interior_warm_start(deg_mixed):
    """Test that an interior warm start is projected and used directly."""
    center = analytic_center(deg_mixed.instance, deg_mixed.oracle.xstar, _split_at_xstar(deg_mixed),
                             warm_start=np.array([[0.7, 0.1], [0.1, 0.4]]))
    assert not center.phase_one
    assert np.allclose(center.Y_a, deg_mixed.oracle.Y_a, atol=1e-9)


def test_analytic_center_is_independent_of_the_warm_start(registry):
    """Test that ten seeded warm starts reach the same center on deg-cross."""
    builtin = registry["deg-cross"]
    split = _split_at_xstar(builtin)
    rng = np.random.default_rng(10)
    centers = []
    for _ in range(10):
        L = rng.standard_normal((2, 2))
        warm = L @ L.T + 0.1 * np.eye(2)
        centers.append(analytic_center(builtin.instance, builtin.oracle.xstar, split,
                                       warm_start=warm / np.trace(warm)).Y_a)
    for Y in centers:
        assert np.allclose(Y, centers[0], atol=1e-9)
    assert np.allclose(centers[0], 0.5 * np.eye(2), atol=1e-9)


@pytest.mark.parametrize("name", ["deg-twin", "deg-cross", "deg-mixed"])
def test_analytic_center_maximizes_logdet(registry, rng, name):
    """Test that no sampled multiplier has a larger log det Y^EE than the analytic center."""
    builtin = registry[name]
    inst, oracle = builtin.instance, builtin.oracle
    split = _split_at_xstar(builtin)
    center = analytic_center(inst, oracle.xstar, split)
    param = parametrize_multiplier_set(inst, oracle.xstar, split)
    for Y, _ in sample_multipliers(param, center.Y_ee, 100, rng):
        sign, logdet = np.linalg.slogdet(block_of(Y, split, "EE"))
        assert sign <= 0 or logdet <= center.logdet + 1e-12


@pytest.mark.parametrize("seed", range(50))
def test_xi_star_solvers_agree_on_rand_qmi(seed):
    """Test that the structured and the direct solve of ξ* agree on seeded random instances."""
    builtin = rand_qmi(seed, 2 + seed % 2)
    inst, xstar = builtin.instance, builtin.oracle.xstar
    split = _split_at_xstar(builtin)
    center = analytic_center(inst, xstar, split)
    result = xi_star(inst, xstar, split, center.Y_a, center.z_a)
    assert np.linalg.norm(result.xi - result.xi_structured) <= 1e-9 * max(1.0, float(np.linalg.norm(result.xi)))


def test_analytic_center_rejects_bad_warm_start_shape(deg_twin):
    """Test the warm start shape check."""
    with pytest.raises(ValidationError, match="warm start"):
        analytic_center(deg_twin.instance, deg_twin.oracle.xstar, _split_at_xstar(deg_twin), warm_start=np.eye(3))


def test_analytic_center_without_interior_multiplier():
    """Test that a multiplier set without Y^EE ≻ 0 violates strict complementarity."""
    inst = qmi_instance("no-sc", np.zeros((2, 2)), [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], [1.0, 0.0])
    with pytest.raises(AssumptionViolationError, match="strict complementarity"):
        analytic_center(inst, np.zeros(2), eigen_split(np.zeros((2, 2))))


def test_sample_multipliers_stay_in_the_set(deg_twin, rng):
    """Test that sampled multipliers are positive semidefinite KKT multipliers."""
    inst, oracle = deg_twin.instance, deg_twin.oracle
    split = _split_at_xstar(deg_twin)
    param = parametrize_multiplier_set(inst, oracle.xstar, split)
    samples = sample_multipliers(param, 0.5 * np.eye(2), 6, rng)
    assert len(samples) == 6
    for Y, z in samples:
        assert min_eig(Y) >= -1e-12
        assert kkt_residual(inst, PrimalDualTriplet(oracle.xstar, Y, z)).is_kkt()


def test_sample_multipliers_of_a_singleton(nondeg_control, rng):
    """Test that a zero-dimensional multiplier set always returns its only element."""
    inst, oracle = nondeg_control.instance, nondeg_control.oracle
    param = parametrize_multiplier_set(inst, oracle.xstar, _split_at_xstar(nondeg_control))
    assert param.dimension == 0
    samples = sample_multipliers(param, np.eye(2), 3, rng)
    assert all(np.allclose(Y, np.eye(2)) for Y, _ in samples)


@pytest.mark.parametrize("name", ["deg-twin", "deg-cross", "deg-mixed", "deg-curve", "nondeg-control"])
def test_xi_star_matches_oracle(registry, name):
    """Test ξ*, the agreement of both solves and the block identities."""
    builtin = registry[name]
    inst, oracle = builtin.instance, builtin.oracle
    split = _split_at_xstar(builtin)
    result = xi_star(inst, oracle.xstar, split, oracle.Y_a, oracle.z_a)
    assert np.allclose(result.xi, oracle.xi_star, atol=1e-9)
    assert np.allclose(result.xi_structured, oracle.xi_star, atol=1e-9)
    for key in ("full_system", "structured_vs_full", "identity_ff", "identity_ee", "identity_ef"):
        assert result.residuals[key] <= 1e-9, key
    assert result.structured_min_eig > 0


def test_xi_star_without_equality_multiplier(deg_mixed):
    """Test that z_a is recovered by least squares when omitted."""
    oracle = deg_mixed.oracle
    result = xi_star(deg_mixed.instance, oracle.xstar, _split_at_xstar(deg_mixed), oracle.Y_a)
    assert np.allclose(result.xi, [2.0, 0.0, 0.0], atol=1e-9)


def test_u_basis_of_deg_mixed(deg_mixed):
    """Test that U spans the x₃ axis on deg-mixed."""
    U = u_basis(deg_mixed.instance, deg_mixed.oracle.xstar, _split_at_xstar(deg_mixed))
    assert U.shape == (3, 1)
    assert abs(U[2, 0]) == pytest.approx(1.0)
