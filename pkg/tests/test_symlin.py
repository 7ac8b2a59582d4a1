"""Tests for the symmetric-matrix helpers in cpathlab.symlin."""
import numpy as np
import pytest

from cpathlab.exceptions import ConvergenceError, DomainError, ValidationError
from cpathlab.symlin import (
    chol_psd_test,
    eigh_ascending,
    inv_sqrt_pd,
    lyap_apply,
    lyap_solve,
    max_psd_step,
    min_eig,
    min_singular_value,
    null_space_basis,
    numerical_rank,
    pinv_psd,
    smat,
    sqrt_psd,
    svec,
    svec_dim,
    sym_mat,
)


def _random_sym(rng, m):
    A = rng.standard_normal((m, m))
    return A + A.T


def _random_pd(rng, m):
    A = rng.standard_normal((m, m))
    return A @ A.T + m * np.eye(m)


N_CASES = 1000


def _seeded_cases(n=N_CASES):
    """Yield (rng, m) for n seeded cases with m drawn from 1..8."""
    for seed in range(n):
        rng = np.random.default_rng(seed)
        yield rng, int(rng.integers(1, 9))


def _random_psd(rng, m, rank):
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    values = np.zeros(m)
    values[:rank] = rng.uniform(0.1, 10.0, size=rank)
    return (Q * values) @ Q.T


def _rel(a, b, scale):
    return float(np.linalg.norm(a - b)) / max(1.0, scale)


def test_svec_isometry_over_seeded_cases():
    """Test <svec X, svec Y> = tr(XY) and smat(svec X) = X to 1e-12 over 1000 seeded cases."""
    worst = 0.0
    for rng, m in _seeded_cases():
        X, Y = _random_sym(rng, m), _random_sym(rng, m)
        scale = float(np.linalg.norm(X) * np.linalg.norm(Y))
        worst = max(worst, abs(svec(X) @ svec(Y) - np.trace(X @ Y)) / max(1.0, scale),
                    _rel(smat(svec(X)), X, float(np.linalg.norm(X))))
    assert worst <= 1e-12


def test_eigh_reconstruction_over_seeded_cases():
    """Test Q diag(λ) Qᵀ = X and QᵀQ = I to 1e-10 over 1000 seeded cases."""
    worst = 0.0
    for rng, m in _seeded_cases():
        X = _random_sym(rng, m)
        values, Q = eigh_ascending(X)
        assert np.all(np.diff(values) >= 0)
        worst = max(worst, _rel((Q * values) @ Q.T, X, float(np.linalg.norm(X))),
                    float(np.linalg.norm(Q.T @ Q - np.eye(m))))
    assert worst <= 1e-10


def test_jacobi_reconstruction_over_seeded_cases():
    """Test the Jacobi eigensolver reconstruction to 1e-10 over 100 seeded cases."""
    worst = 0.0
    for rng, m in _seeded_cases(100):
        X = _random_sym(rng, m)
        values, Q = eigh_ascending(X, method="jacobi")
        worst = max(worst, _rel((Q * values) @ Q.T, X, float(np.linalg.norm(X))))
    assert worst <= 1e-10


def test_lyap_solve_inverts_lyap_apply_over_seeded_cases():
    """Test lyap_solve(X, lyap_apply(X, V)) = V to 1e-11 over 1000 seeded cases."""
    worst = 0.0
    for rng, m in _seeded_cases():
        X = _random_pd(rng, m)
        V = _random_sym(rng, m)
        worst = max(worst, _rel(lyap_solve(X, lyap_apply(X, V)), V, float(np.linalg.norm(V))))
    assert worst <= 1e-11


def test_pinv_psd_penrose_identities_over_seeded_cases():
    """Test the four Penrose identities of pinv_psd to 1e-9 over 1000 seeded PSD matrices of any rank."""
    worst = 0.0
    for rng, m in _seeded_cases():
        X = _random_psd(rng, m, int(rng.integers(0, m + 1)))
        P = pinv_psd(X)
        nx, npx = float(np.linalg.norm(X)), float(np.linalg.norm(P))
        worst = max(worst, _rel(X @ P @ X, X, nx), _rel(P @ X @ P, P, npx),
                    _rel((X @ P).T, X @ P, 1.0), _rel((P @ X).T, P @ X, 1.0))
    assert worst <= 1e-9


def test_sym_mat_symmetrizes_tiny_asymmetry():
    """Test that asymmetry within tolerance is removed."""
    X = np.array([[1.0, 2.0], [2.0 + 1e-14, 3.0]])
    S = sym_mat(X)
    assert np.array_equal(S, S.T)


@pytest.mark.parametrize(
    "X",
    [np.array([[1.0, 2.0], [2.1, 3.0]]), np.ones((2, 3)), np.zeros((0, 0)), np.array([[np.nan]])],
)
def test_sym_mat_rejects_invalid_input(X):
    """Test that asymmetric, non-square, empty and non-finite inputs are rejected."""
    with pytest.raises(ValidationError):
        sym_mat(X, "X")


def test_svec_is_an_isometry(rng):
    """Test that svec preserves the trace inner product and smat inverts it."""
    X, Y = _random_sym(rng, 4), _random_sym(rng, 4)
    assert svec(X).shape == (svec_dim(4),)
    assert svec(X) @ svec(Y) == pytest.approx(np.trace(X @ Y), rel=1e-12)
    assert np.allclose(smat(svec(X)), X, atol=1e-14)


def test_smat_rejects_bad_length():
    """Test that smat rejects vectors whose length is not triangular."""
    with pytest.raises(ValidationError):
        smat(np.ones(4))
    with pytest.raises(ValidationError):
        smat(np.ones(3), m=3)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_eigh_ascending_reconstructs(rng, method):
    """Test ascending order, orthogonality, reconstruction and the sign convention."""
    X = _random_sym(rng, 5)
    values, Q = eigh_ascending(X, method=method)
    assert np.all(np.diff(values) >= 0)
    assert np.allclose(Q.T @ Q, np.eye(5), atol=1e-10)
    assert np.allclose((Q * values) @ Q.T, X, atol=1e-10)
    for k in range(5):
        first = np.flatnonzero(np.abs(Q[:, k]) > 1e-12)[0]
        assert Q[first, k] > 0


def test_eigh_methods_agree(rng):
    """Test that the Jacobi and LAPACK eigenvalues agree."""
    X = _random_sym(rng, 6)
    assert np.allclose(eigh_ascending(X, "jacobi").values, eigh_ascending(X).values, atol=1e-10)


def test_eigh_rejects_unknown_method_and_reports_sweep_cap():
    """Test the unknown method error and the Jacobi sweep cap."""
    X = np.array([[2.0, 1.0], [1.0, 2.0]])
    with pytest.raises(ValidationError, match="Unknown eigensolver"):
        eigh_ascending(X, method="qr")
    with pytest.raises(ConvergenceError) as excinfo:
        eigh_ascending(X, method="jacobi", max_sweeps=0)
    assert excinfo.value.iterations == 0


def test_min_eig_of_empty_matrix_is_infinite():
    """Test the 0-by-0 convention of min_eig."""
    assert min_eig(np.zeros((0, 0))) == float("inf")
    assert min_eig(np.diag([3.0, -1.0])) == pytest.approx(-1.0)


def test_lyap_solve_inverts_lyap_apply(rng):
    """Test that lyap_solve inverts the Lyapunov operator for a positive definite matrix."""
    X = _random_pd(rng, 4)
    V = _random_sym(rng, 4)
    W = lyap_apply(X, V)
    assert np.array_equal(W, W.T)
    assert np.allclose(lyap_solve(X, W), V, atol=1e-10)


def test_lyap_solve_rejects_indefinite_matrix():
    """Test that lyap_solve raises DomainError carrying the smallest eigenvalue."""
    with pytest.raises(DomainError) as excinfo:
        lyap_solve(np.diag([1.0, -2.0]), np.eye(2))
    assert excinfo.value.value == pytest.approx(-2.0)


def test_lyap_apply_rejects_dimension_mismatch():
    """Test the dimension check of the Lyapunov operator."""
    with pytest.raises(ValidationError):
        lyap_apply(np.eye(2), np.eye(3))


def test_pinv_and_sqrt_of_rank_deficient_psd(rng):
    """Test the pseudoinverse and square root of a rank-one PSD matrix."""
    u = rng.standard_normal(3)
    X = np.outer(u, u)
    P = pinv_psd(X)
    assert np.allclose(X @ P @ X, X, atol=1e-10)
    assert np.allclose(P @ X @ P, P, atol=1e-10)
    R = sqrt_psd(X)
    assert np.allclose(R @ R, X, atol=1e-8)


def test_pinv_rejects_indefinite_matrix():
    """Test that significantly indefinite inputs are rejected."""
    with pytest.raises(DomainError):
        pinv_psd(np.diag([1.0, -1e-3]))


def test_inv_sqrt_pd(rng):
    """Test that inv_sqrt_pd returns X^{-1/2} and rejects singular inputs."""
    X = _random_pd(rng, 3)
    S = inv_sqrt_pd(X)
    assert np.allclose(S @ X @ S, np.eye(3), atol=1e-10)
    with pytest.raises(DomainError):
        inv_sqrt_pd(np.diag([1.0, 0.0]))


def test_min_singular_value():
    """Test the smallest singular value and the square check."""
    assert min_singular_value(np.diag([3.0, -0.5])) == pytest.approx(0.5)
    assert min_singular_value(np.array([[1.0, 1.0], [1.0, 1.0]])) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValidationError):
        min_singular_value(np.ones((2, 3)))


def test_chol_psd_test():
    """Test the Cholesky positivity test on definite, singular and malformed inputs."""
    assert chol_psd_test(np.eye(3))
    assert not chol_psd_test(np.diag([1.0, -1.0]))
    assert not chol_psd_test(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not chol_psd_test(np.ones((2, 3)))
    assert chol_psd_test(np.zeros((0, 0)))


def test_max_psd_step():
    """Test the largest feasible step along a direction."""
    assert max_psd_step(np.eye(2), -2.0 * np.eye(2)) == pytest.approx(0.5)
    assert max_psd_step(np.eye(2), np.diag([1.0, 0.0])) == float("inf")
    assert max_psd_step(np.diag([4.0, 1.0]), np.diag([0.0, -1.0])) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        max_psd_step(np.diag([1.0, -1.0]), np.eye(2))


def test_numerical_rank_and_null_space():
    """Test rank counting and the orthonormal null space basis."""
    A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]])
    assert numerical_rank(A) == 1
    assert numerical_rank(np.zeros((2, 2))) == 0
    N = null_space_basis(A)
    assert N.shape == (3, 2)
    assert np.allclose(A @ N, 0.0, atol=1e-12)
    assert np.allclose(N.T @ N, np.eye(2), atol=1e-12)


def test_null_space_of_empty_and_zero_matrices():
    """Test that matrices without rows or with only zeros give the identity basis."""
    assert np.array_equal(null_space_basis(np.zeros((0, 3))), np.eye(3))
    assert np.array_equal(null_space_basis(np.zeros((2, 2))), np.eye(2))
    assert np.array_equal(null_space_basis(np.zeros(0), ncols=2), np.eye(2))
