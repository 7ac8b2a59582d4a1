"""Tests for residuals, the eigen-split and the condition checks in cpathlab.kkt."""
import numpy as np
import pytest
from scipy.stats import ortho_group

from cpathlab.exceptions import DomainError, InteriorityError, ValidationError
from cpathlab.kkt import (
    ConditionOptions,
    PrimalDualTriplet,
    bkkt_residual,
    block_of,
    condition_report,
    eigen_split,
    grad_x_lagrangian,
    hess_xx_lagrangian,
    in_tangent_cone,
    kkt_residual,
    nc_matrix,
    sigma_quad,
    sigma_term,
)
from cpathlab.nsdp_model import qmi_instance
from cpathlab.symlin import sym

FAST = dict(n_cone_samples=32, mfcq_restarts=5, mfcq_iters=50, seed=7)


def test_triplet_shape_check(deg_twin):
    """Test that mismatched triplet shapes are rejected."""
    with pytest.raises(ValidationError, match="triplet shapes"):
        PrimalDualTriplet([0.0], np.eye(3), []).check(deg_twin.instance)


def test_lagrangian_derivatives_at_kkt_point(deg_mixed):
    """Test that the analytic center makes the Lagrangian gradient vanish at x*."""
    inst, oracle = deg_mixed.instance, deg_mixed.oracle
    w = PrimalDualTriplet(oracle.xstar, oracle.Y_a, oracle.z_a)
    assert np.allclose(grad_x_lagrangian(inst, w), 0.0)
    assert np.allclose(hess_xx_lagrangian(inst, w), np.diag([0.0, 0.0, 2.0]))


def test_kkt_residual_accepts_oracle_multipliers(deg_twin):
    """Test the KKT report for valid and invalid multipliers."""
    inst, oracle = deg_twin.instance, deg_twin.oracle
    for Y, z in oracle.multipliers:
        assert kkt_residual(inst, PrimalDualTriplet(oracle.xstar, Y, z)).is_kkt()
    report = kkt_residual(inst, PrimalDualTriplet(oracle.xstar, np.eye(2), np.zeros(0)))
    assert report.stationarity_norm == pytest.approx(1.0)
    assert not report.is_kkt()


@pytest.mark.parametrize("name", ["deg-twin", "deg-cross", "deg-mixed", "nondeg-control"])
@pytest.mark.parametrize("mu", [1e-1, 1e-3, 1e-6])
def test_closed_form_paths_solve_the_barrier_system(registry, name, mu):
    """Test that the closed-form central paths have zero barrier-KKT residual."""
    builtin = registry[name]
    w = builtin.oracle.w_of_mu(mu)
    for form in ("product", "symmetric"):
        assert bkkt_residual(builtin.instance, w, mu, form=form).max <= 1e-12


def test_bkkt_residual_rejects_bad_arguments(deg_twin):
    """Test the barrier parameter, form and interiority checks."""
    inst = deg_twin.instance
    w = deg_twin.oracle.w_of_mu(1e-2)
    with pytest.raises(ValidationError):
        bkkt_residual(inst, w, 0.0)
    with pytest.raises(ValidationError, match="unknown residual form"):
        bkkt_residual(inst, w, 1e-2, form="sym")
    with pytest.raises(InteriorityError):
        bkkt_residual(inst, PrimalDualTriplet([0.0], 0.5 * np.eye(2), []), 1e-2)
    with pytest.raises(InteriorityError, match="Y is not positive definite"):
        bkkt_residual(inst, PrimalDualTriplet([0.1], np.diag([1.0, 0.0]), []), 1e-2)


def test_eigen_split_of_rank_one_matrix():
    """Test rank, block sizes and the eigenvalue cutoff of the split."""
    split = eigen_split(np.diag([0.0, 1e-12, 3.0]))
    assert (split.rstar, split.k) == (1, 2)
    assert np.allclose(block_of(np.diag([0.0, 0.0, 3.0]), split, "FF"), [[3.0]])
    assert np.allclose(split.block_of(np.eye(3), "EE"), np.eye(2))
    assert block_of(np.eye(3), split, "EF").shape == (2, 1)


def test_eigen_split_rejects_indefinite_matrix():
    """Test that a materially indefinite G(x*) is a domain error."""
    with pytest.raises(DomainError):
        eigen_split(np.diag([-1e-3, 1.0]))


def test_block_of_validates_arguments():
    """Test shape and block-name checks."""
    split = eigen_split(np.diag([0.0, 1.0]))
    with pytest.raises(ValidationError):
        block_of(np.eye(3), split, "EE")
    with pytest.raises(ValidationError, match="unknown block"):
        block_of(np.eye(2), split, "EX")


def test_sigma_quad_forms_agree(deg_mixed, rng):
    """Test the three sigma forms on deg-mixed, where dᵀΩd = d₃²."""
    inst, oracle = deg_mixed.instance, deg_mixed.oracle
    split = eigen_split(inst.eval_G(oracle.xstar))
    for _ in range(5):
        d = rng.standard_normal(3)
        forms = sigma_quad(inst, oracle.xstar, oracle.Y_a, split, d)
        assert forms.definition == pytest.approx(d[2] ** 2, rel=1e-10)
        assert forms.trace_form == pytest.approx(forms.definition, rel=1e-10)
        assert forms.norm_form == pytest.approx(forms.definition, rel=1e-10)
        Omega = sigma_term(inst, oracle.xstar, oracle.Y_a, split)
        assert d @ Omega @ d == pytest.approx(forms.definition, rel=1e-10)


def _random_sigma_case(seed):
    """Build a seeded QMI with x* = 0, rank r* in 1..m-1, a PSD multiplier on E* and a direction."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    rstar = int(rng.integers(1, m))
    P = ortho_group.rvs(m, random_state=rng)
    Gstar = sym((P[:, :rstar] * rng.uniform(0.5, 2.0, size=rstar)) @ P[:, :rstar].T)
    A = [sym(rng.standard_normal((m, m))) for _ in range(3)]
    inst = qmi_instance(f"sigma-{seed}", Gstar, A, np.zeros(3))
    split = eigen_split(inst.eval_G(np.zeros(3)))
    W = rng.standard_normal((split.k, int(rng.integers(1, split.k + 1))))
    Y = sym(split.Estar @ (W @ W.T) @ split.Estar.T)
    return inst, split, Y, rng.standard_normal(3)


@pytest.mark.parametrize("seed", range(100))
def test_sigma_forms_agree_on_random_splits(seed):
    """Test the three sigma forms and Ω ⪰ 0 on seeded splits with 1 <= r* <= m-1."""
    inst, split, Y, d = _random_sigma_case(seed)
    assert 1 <= split.rstar < inst.m
    forms = sigma_quad(inst, np.zeros(3), Y, split, d)
    scale = max(1.0, abs(forms.definition))
    assert abs(forms.trace_form - forms.definition) <= 1e-10 * scale
    assert abs(forms.norm_form - forms.definition) <= 1e-10 * scale
    Omega = sigma_term(inst, np.zeros(3), Y, split)
    assert abs(d @ Omega @ d - forms.definition) <= 1e-10 * scale
    assert np.linalg.eigvalsh(Omega)[0] >= -1e-10 * max(1.0, float(np.linalg.norm(Omega)))


def test_sigma_term_vanishes_without_positive_eigenspace(deg_twin):
    """Test that Ω = 0 when G(x*) = 0."""
    inst, oracle = deg_twin.instance, deg_twin.oracle
    split = eigen_split(inst.eval_G(oracle.xstar))
    assert np.allclose(sigma_term(inst, oracle.xstar, oracle.Y_a, split), 0.0)
    assert sigma_quad(inst, oracle.xstar, oracle.Y_a, split, [1.0]).trace_form == 0.0


def test_sigma_term_rejects_split_from_another_point(deg_mixed):
    """Test that a split computed elsewhere is detected."""
    inst = deg_mixed.instance
    split = eigen_split(np.diag([1.0, 0.0, 0.0]))
    with pytest.raises(ValidationError, match="eigen-split does not match"):
        sigma_term(inst, np.zeros(3), deg_mixed.oracle.Y_a, split)


def test_sigma_quad_is_basis_invariant(deg_mixed, rng):
    """Test that rotating E* leaves the sigma values unchanged."""
    inst, oracle = deg_mixed.instance, deg_mixed.oracle
    split = eigen_split(inst.eval_G(oracle.xstar))
    rotated = split.rotated(ortho_group.rvs(split.k, random_state=11))
    d = rng.standard_normal(3)
    a = sigma_quad(inst, oracle.xstar, oracle.Y_a, split, d)
    b = sigma_quad(inst, oracle.xstar, oracle.Y_a, rotated, d)
    assert np.allclose(a, b, atol=1e-9)
    with pytest.raises(ValidationError):
        split.rotated(np.eye(3))


def test_in_tangent_cone():
    """Test the tangent cone membership of ΔG^EE."""
    split = eigen_split(np.zeros((2, 2)))
    assert in_tangent_cone(np.eye(2), split)
    assert not in_tangent_cone(np.diag([1.0, -1.0]), split)
    assert in_tangent_cone(-np.eye(1), eigen_split(np.eye(1)))


def test_nc_matrix_shape(deg_mixed):
    """Test that the nondegeneracy matrix has k(k+1)/2 + s columns."""
    inst = deg_mixed.instance
    split = eigen_split(inst.eval_G(np.zeros(3)))
    assert nc_matrix(inst, np.zeros(3), split).shape == (3, 4)


@pytest.mark.parametrize("name", ["deg-twin", "deg-cross", "deg-mixed", "nondeg-control"])
def test_condition_report_matches_expected_outcomes(registry, name):
    """Test SC, NC, MFCQ and SSOSC against the expected outcomes of each builtin."""
    builtin = registry[name]
    report = condition_report(builtin.instance, builtin.oracle.xstar, builtin.oracle.multipliers,
                              ConditionOptions(**FAST))
    assert report.matches(builtin.oracle.expected_conditions), report.outcomes()


def test_condition_report_is_basis_invariant(deg_mixed):
    """Test that the outcomes do not depend on the basis of the null eigenspace."""
    inst, oracle = deg_mixed.instance, deg_mixed.oracle
    split = eigen_split(inst.eval_G(oracle.xstar))
    rotated = split.rotated(ortho_group.rvs(split.k, random_state=5))
    options = ConditionOptions(**FAST)
    a = condition_report(inst, oracle.xstar, oracle.multipliers, options, split)
    b = condition_report(inst, oracle.xstar, oracle.multipliers, options, rotated)
    assert a.outcomes() == b.outcomes()
    assert a.nc.rank == b.nc.rank


def test_condition_report_drops_invalid_multipliers(deg_twin):
    """Test that invalid multipliers are noted and that none valid is an error."""
    inst, oracle = deg_twin.instance, deg_twin.oracle
    samples = list(oracle.multipliers) + [(np.eye(2), np.zeros(0))]
    report = condition_report(inst, oracle.xstar, samples, ConditionOptions(**FAST))
    assert report.notes == ["1 multiplier(s) rejected by the KKT check"]
    with pytest.raises(ValidationError, match="no supplied multiplier"):
        condition_report(inst, oracle.xstar, [(np.eye(2), np.zeros(0))], ConditionOptions(**FAST))


def test_mfcq_checks_a_supplied_witness(deg_twin):
    """Test that a supplied MFCQ witness is verified instead of searched."""
    inst, oracle = deg_twin.instance, deg_twin.oracle
    good = condition_report(inst, oracle.xstar, oracle.multipliers,
                            ConditionOptions(mfcq_witness=np.array([1.0]), **FAST))
    bad = condition_report(inst, oracle.xstar, oracle.multipliers,
                           ConditionOptions(mfcq_witness=np.array([-1.0]), **FAST))
    assert good.mfcq.status == "holds"
    assert bad.mfcq.status == "fails"
    assert bad.mfcq.holds is False
