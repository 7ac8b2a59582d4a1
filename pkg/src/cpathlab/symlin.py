"""Dense symmetric-matrix linear algebra for cpathlab.

Provides the svec/smat coordinates of the symmetric matrix space, spectral decompositions with a
deterministic sign convention, the Lyapunov operator X ↦ AX + XA and its inverse, PSD pseudoinverses
and square roots, and the rank and singular value utilities used on the Newton matrix.

Symmetric matrices are plain 2-D ``numpy.ndarray`` objects; ``sym_mat`` is the validating constructor.
"""

import logging
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from cpathlab.exceptions import ConvergenceError, DomainError, ValidationError

logger = logging.getLogger(__name__)

SYM_TOL = 1e-12
DEFAULT_RANK_TOL = 1e-8
JACOBI_MAX_SWEEPS = 100
_SIGN_TOL = 1e-12


class EigenDecomp(NamedTuple):
    """Eigen-decomposition X = Q diag(values) Qᵀ with ascending eigenvalues.

    Attributes:
        values (np.ndarray): Eigenvalues in nondecreasing order.
        vectors (np.ndarray): Orthogonal matrix whose columns are the matching eigenvectors.

    """

    values: np.ndarray
    vectors: np.ndarray


def sym(X: np.ndarray) -> np.ndarray:
    """Return the symmetric part (X + Xᵀ)/2."""
    X = np.asarray(X, dtype=float)
    return 0.5 * (X + X.T)


def sym_mat(X, name: str = "matrix") -> np.ndarray:
    """Build a validated symmetric matrix.

    Asymmetry up to 1e-12·max(1, max|X|) is removed by symmetrization, larger asymmetry is rejected.

    Args:
        X: Square array-like.
        name (str): Name used in error messages, e.g. "G.A[0]".

    Returns:
        np.ndarray: A float array equal to its transpose.

    Raises:
        ValidationError: If X is not a nonempty square matrix or is not symmetric within tolerance.

    """
    M = np.array(X, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValidationError(f"{name}: expected a nonempty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name}: entries must be finite")
    gap = float(np.max(np.abs(M - M.T)))
    scale = max(1.0, float(np.max(np.abs(M))))
    if gap > SYM_TOL * scale:
        raise ValidationError(f"{name}: not symmetric (max |M_ij - M_ji| = {gap:.3e})")
    return 0.5 * (M + M.T)


def svec_dim(m: int) -> int:
    """Return m(m+1)/2, the dimension of the symmetric m×m matrix space."""
    return m * (m + 1) // 2


def _svec_scale(m: int) -> np.ndarray:
    rows, cols = np.triu_indices(m)
    return np.where(rows == cols, 1.0, np.sqrt(2.0))


def svec(X: np.ndarray) -> np.ndarray:
    """Vectorize a symmetric matrix isometrically.

    The upper triangle is read row by row; off-diagonal entries carry a factor √2 so that
    ``svec(X) @ svec(Y) == trace(X @ Y)``.
    """
    X = np.asarray(X, dtype=float)
    m = X.shape[0]
    return X[np.triu_indices(m)] * _svec_scale(m)


def smat(v: np.ndarray, m: Optional[int] = None) -> np.ndarray:
    """Inverse of svec.

    Args:
        v (np.ndarray): Vector of length m(m+1)/2.
        m (Optional[int]): Matrix order, inferred from the length of v when omitted.

    Raises:
        ValidationError: If the length of v is not a triangular number (or does not match m).

    """
    v = np.asarray(v, dtype=float).ravel()
    if m is None:
        m = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    if svec_dim(m) != v.size:
        raise ValidationError(f"svec vector of length {v.size} does not match matrix order {m}")
    rows, cols = np.triu_indices(m)
    X = np.zeros((m, m))
    vals = v / _svec_scale(m)
    X[rows, cols] = vals
    X[cols, rows] = vals
    return X


def _apply_sign_convention(Q: np.ndarray) -> np.ndarray:
    Q = Q.copy()
    for k in range(Q.shape[1]):
        nonzero = np.flatnonzero(np.abs(Q[:, k]) > _SIGN_TOL)
        if nonzero.size and Q[nonzero[0], k] < 0:
            Q[:, k] = -Q[:, k]
    return Q


def _jacobi_eigh(A: np.ndarray, max_sweeps: int) -> EigenDecomp:
    """Cyclic threshold Jacobi eigenvalue iteration."""
    A = A.copy()
    m = A.shape[0]
    V = np.eye(m)
    scale = max(1.0, float(np.linalg.norm(A)))
    off = 0.0
    for sweep in range(max_sweeps):
        off = float(np.sqrt(np.sum(np.tril(A, -1) ** 2)))
        if off <= 1e-15 * scale:
            values = np.diag(A).copy()
            order = np.argsort(values, kind="stable")
            return EigenDecomp(values[order], V[:, order])
        thresh = 0.2 * off / (m * m) if sweep < 3 else 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if apq == 0.0 or abs(apq) <= thresh:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vec_p, vec_q = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q
    raise ConvergenceError(
        f"Jacobi eigensolver did not converge after {max_sweeps} sweeps (off-diagonal norm {off:.3e})",
        residual=off,
        iterations=max_sweeps,
    )


def eigh_ascending(X: np.ndarray, method: str = "lapack", max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomp:
    """Compute the ascending eigen-decomposition of a symmetric matrix.

    Each eigenvector is oriented so that its first nonzero component is nonnegative, which makes the
    output deterministic for distinct eigenvalues. Repeated eigenvalues get an arbitrary orthonormal
    basis of their eigenspace.

    Args:
        X (np.ndarray): Symmetric matrix.
        method (str): "lapack" (scipy.linalg.eigh) or "jacobi" (cyclic threshold Jacobi sweeps).
        max_sweeps (int): Sweep cap of the Jacobi method.

    Returns:
        EigenDecomp: Ascending eigenvalues and orthogonal eigenvectors.

    Raises:
        ValidationError: If X is not symmetric or method is unknown.
        ConvergenceError: If the Jacobi method hits its sweep cap.

    """
    X = sym_mat(X, "eigh input")
    if method == "lapack":
        values, vectors = scipy.linalg.eigh(X)
    elif method == "jacobi":
        values, vectors = _jacobi_eigh(X, max_sweeps)
    else:
        raise ValidationError(f"Unknown eigensolver method '{method}' (expected 'lapack' or 'jacobi')")
    return EigenDecomp(np.asarray(values, dtype=float), _apply_sign_convention(np.asarray(vectors, dtype=float)))


def min_eig(X: np.ndarray) -> float:
    """Return the smallest eigenvalue of a symmetric matrix (0-by-0 input gives +inf)."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return float("inf")
    return float(scipy.linalg.eigvalsh(sym(X))[0])


def _check_same_dim(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape != Y.shape or X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValidationError(f"dimension mismatch: {X.shape} vs {Y.shape}")


def lyap_apply(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Apply the Lyapunov operator, returning XY + YX.

    The result is exactly symmetric for symmetric X and Y.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _check_same_dim(X, Y)
    R = X @ Y
    return R + R.T


def lyap_solve(X: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Solve XV + VX = W for symmetric V, with X positive definite.

    Args:
        X (np.ndarray): Positive definite matrix.
        W (np.ndarray): Symmetric right-hand side.

    Returns:
        np.ndarray: The symmetric solution V.

    Raises:
        DomainError: If X is not positive definite; ``value`` carries λ_min(X).

    """
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    _check_same_dim(X, W)
    values, Q = eigh_ascending(X)
    if values[0] <= 0.0:
        raise DomainError(f"Lyapunov operator requires a positive definite matrix (lambda_min = {values[0]:.3e})",
                          value=float(values[0]))
    Wp = Q.T @ W @ Q
    Vp = Wp / (values[:, None] + values[None, :])
    return sym(Q @ Vp @ Q.T)


def _psd_spectrum(X: np.ndarray, rank_tol: float) -> tuple:
    values, Q = eigh_ascending(X)
    cutoff = rank_tol * max(1.0, float(values[-1]))
    if values[0] < -cutoff:
        raise DomainError(f"matrix is significantly indefinite (lambda_min = {values[0]:.3e})", value=float(values[0]))
    return values, Q, cutoff


def pinv_psd(X: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a positive semidefinite matrix.

    Eigenvalues below rank_tol·max(1, λ_max) are treated as zero.

    Raises:
        DomainError: If X has an eigenvalue below -rank_tol·max(1, λ_max).

    """
    values, Q, cutoff = _psd_spectrum(X, rank_tol)
    inv = np.zeros_like(values)
    keep = values >= cutoff
    inv[keep] = 1.0 / values[keep]
    return sym((Q * inv) @ Q.T)


def sqrt_psd(X: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Symmetric square root of a positive semidefinite matrix."""
    values, Q, _ = _psd_spectrum(X, rank_tol)
    return sym((Q * np.sqrt(np.clip(values, 0.0, None))) @ Q.T)


def inv_sqrt_pd(X: np.ndarray) -> np.ndarray:
    """Inverse symmetric square root of a positive definite matrix.

    Raises:
        DomainError: If X is not positive definite.

    """
    values, Q = eigh_ascending(X)
    if values[0] <= 0.0:
        raise DomainError(f"matrix is not positive definite (lambda_min = {values[0]:.3e})", value=float(values[0]))
    return sym((Q / np.sqrt(values)) @ Q.T)


def min_singular_value(A: np.ndarray) -> float:
    """Return the smallest singular value of a square matrix.

    Raises:
        ValidationError: If A is not square.

    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    if A.size == 0:
        return 0.0
    return float(max(scipy.linalg.svdvals(A)[-1], 0.0))


def chol_psd_test(X: np.ndarray) -> bool:
    """Return True iff the Cholesky factorization of X succeeds with positive pivots."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or not np.all(np.isfinite(X)):
        return False
    if X.size == 0:
        return True
    try:
        L = scipy.linalg.cholesky(X, lower=True)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.diag(L) > 0.0))


def max_psd_step(X: np.ndarray, D: np.ndarray) -> float:
    """Return the largest α with X + αD ⪰ 0 for a positive definite X (+inf when every α ≥ 0 works).

    Raises:
        DomainError: If X is not positive definite.

    """
    X = np.asarray(X, dtype=float)
    D = np.asarray(D, dtype=float)
    _check_same_dim(X, D)
    if X.size == 0:
        return float("inf")
    try:
        L = scipy.linalg.cholesky(X, lower=True)
    except np.linalg.LinAlgError as e:
        raise DomainError("step length requires a positive definite base point", value=min_eig(X)) from e
    half = scipy.linalg.solve_triangular(L, D, lower=True)
    lam = min_eig(scipy.linalg.solve_triangular(L, half.T, lower=True))
    return float("inf") if lam >= 0 else -1.0 / lam


def numerical_rank(A: np.ndarray, rtol: float = DEFAULT_RANK_TOL) -> int:
    """Count singular values at least rtol·σ_max (zero matrices have rank 0)."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0
    s = scipy.linalg.svdvals(A)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s >= rtol * s[0]))


def null_space_basis(A: np.ndarray, rtol: float = DEFAULT_RANK_TOL, ncols: Optional[int] = None) -> np.ndarray:
    """Orthonormal basis of the null space of A computed from its SVD.

    Args:
        A (np.ndarray): Matrix with ncols columns, possibly with zero rows.
        rtol (float): Relative singular value cutoff.
        ncols (Optional[int]): Number of columns when A has no rows.

    Returns:
        np.ndarray: Matrix whose orthonormal columns span null(A).

    """
    A = np.asarray(A, dtype=float)
    n = A.shape[1] if A.ndim == 2 else int(ncols or 0)
    if A.ndim != 2 or A.shape[0] == 0:
        return np.eye(n)
    if n == 0:
        return np.zeros((0, 0))
    if not np.any(A):
        return np.eye(n)
    return scipy.linalg.null_space(A, rcond=rtol)
