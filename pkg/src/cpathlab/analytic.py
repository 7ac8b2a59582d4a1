"""Analytic center of the multiplier set and the limiting direction of the central path.

At a KKT point x* with eigen-split P* = [E*, F*] of G(x*), every multiplier has the form
Y = E* Y^EE E*ᵀ with Y^EE ⪰ 0 and satisfies the stationarity equation
∇f(x*) − 𝒥G^EE(x*)*Y^EE + ∇h(x*) z = 0. The analytic center maximizes log det Y^EE over that set.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from cpathlab.exceptions import (
    AssumptionViolationError,
    ConvergenceError,
    InconsistentSystemError,
    ValidationError,
)
from cpathlab.kkt import EigenSplit, PrimalDualTriplet, block_of, dG_block_stack, hess_xx_lagrangian
from cpathlab.nsdp_model import NsdpInstance, delta_G
from cpathlab.symlin import (
    DEFAULT_RANK_TOL,
    chol_psd_test,
    lyap_apply,
    max_psd_step,
    min_eig,
    null_space_basis,
    smat,
    svec,
    svec_dim,
    sym,
)

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
CENTER_TOL = 1e-12
CONSISTENCY_TOL = 1e-8


@dataclass
class MultiplierSetParam:
    """Affine parametrization (Y^EE, z) = (Y0 + Σ t_j N_j, z0 + Σ t_j ζ_j) of the multiplier set.

    Attributes:
        particular_Y (np.ndarray): Least-norm Y^EE of order m − r*.
        particular_z (np.ndarray): Matching z.
        basis (List[Tuple[np.ndarray, np.ndarray]]): Directions (N_j, ζ_j) spanning the null space of the
            stationarity map.
        split (EigenSplit): Eigen-split of G(x*).
        residual (float): Residual of the particular solution.

    """

    particular_Y: np.ndarray
    particular_z: np.ndarray
    basis: List[Tuple[np.ndarray, np.ndarray]]
    split: EigenSplit
    residual: float = 0.0

    @property
    def dimension(self) -> int:
        """Return the number of free parameters."""
        return len(self.basis)

    def point(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """Return (Y^EE, z) at parameter t."""
        t = np.asarray(t, dtype=float).ravel()
        if t.size != self.dimension:
            raise ValidationError(f"expected {self.dimension} parameters, got {t.size}")
        Yee = self.particular_Y + sum((tj * N for tj, (N, _) in zip(t, self.basis)), np.zeros_like(self.particular_Y))
        z = self.particular_z + sum((tj * zeta for tj, (_, zeta) in zip(t, self.basis)),
                                    np.zeros_like(self.particular_z))
        return sym(Yee), z

    def full_Y(self, Yee: np.ndarray) -> np.ndarray:
        """Return E* Y^EE E*ᵀ."""
        E = self.split.Estar
        return sym(E @ Yee @ E.T)

    def coordinates(self, Yee: np.ndarray) -> np.ndarray:
        """Return the parameters whose Y^EE is closest to Yee in the Frobenius norm."""
        if not self.dimension:
            return np.zeros(0)
        B = np.stack([svec(N) for N, _ in self.basis], axis=1)
        t, *_ = scipy.linalg.lstsq(B, svec(sym(np.asarray(Yee, dtype=float))) - svec(self.particular_Y))
        return t


def _stationarity_matrix(inst: NsdpInstance, xstar: np.ndarray, split: EigenSplit) -> np.ndarray:
    """Return the n×(svec_dim(k) + s) matrix of (svec(Y^EE), z) ↦ −𝒥G^EE*Y^EE + ∇h z."""
    k = split.k
    if k:
        ee = dG_block_stack(inst, xstar, split, "EE")
        S = np.stack([svec(B) for B in ee])
    else:
        S = np.zeros((inst.n, 0))
    return np.hstack([-S, inst.jac_h(xstar)])


def parametrize_multiplier_set(
    inst: NsdpInstance, xstar, split: EigenSplit, rank_tol: float = DEFAULT_RANK_TOL
) -> MultiplierSetParam:
    """Parametrize the affine hull of the multiplier set at x*.

    Args:
        inst (NsdpInstance): The instance.
        xstar: The KKT point.
        split (EigenSplit): Eigen-split of G(x*).
        rank_tol (float): Relative cutoff for the null space.

    Returns:
        MultiplierSetParam: Least-norm particular solution and an orthonormal null space basis.

    Raises:
        InconsistentSystemError: If no multiplier satisfies the stationarity equation.

    """
    xstar = inst.check_point(xstar)
    k = split.k
    K = svec_dim(k)
    A = _stationarity_matrix(inst, xstar, split)
    rhs = -inst.grad_f(xstar)
    u, *_ = scipy.linalg.lstsq(A, rhs)
    residual = float(np.linalg.norm(A @ u - rhs))
    if residual > 1e-10 * max(1.0, float(np.linalg.norm(rhs))):
        raise InconsistentSystemError(f"{inst.name}: no multiplier satisfies stationarity at x* "
                                      f"(residual {residual:.3e})", residual=residual)
    N = null_space_basis(A, rank_tol, ncols=A.shape[1])
    basis = [(smat(N[:K, j], k), N[K:, j]) for j in range(N.shape[1])]
    logger.debug(f"{inst.name}: multiplier set has dimension {len(basis)}")
    return MultiplierSetParam(smat(u[:K], k), u[K:], basis, split, residual)


def _newton_logdet(
    base: np.ndarray,
    directions: Sequence[np.ndarray],
    c: np.ndarray,
    u0: np.ndarray,
    tol: float,
    max_iter: int,
    stop=None,
) -> Tuple[np.ndarray, int]:
    """Minimize cᵀu − log det(base + Σ u_j A_j) by damped Newton from an interior u0.

    ``stop(u)`` may end the iteration early. Returns the minimizer and the iteration count.
    """
    u = np.asarray(u0, dtype=float).copy()
    A = list(directions)

    def value(v):
        Z = base + sum((vj * Aj for vj, Aj in zip(v, A)), np.zeros_like(base))
        if not chol_psd_test(Z):
            return np.inf, None
        _, logdet = np.linalg.slogdet(Z)
        return float(c @ v - logdet), Z

    phi, Z = value(u)
    if Z is None:
        raise ValidationError("log-det Newton needs an interior start")
    for iteration in range(max_iter):
        if stop is not None and stop(u):
            return u, iteration
        if not A:
            return u, iteration
        Zinv = scipy.linalg.inv(Z)
        W = [Zinv @ Aj for Aj in A]
        g = c - np.array([np.trace(Wj) for Wj in W])
        H = sym(np.array([[np.sum(Wi * Wj.T) for Wj in W] for Wi in W]))
        try:
            step = scipy.linalg.solve(H, -g, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError):
            step = -scipy.linalg.lstsq(H, g)[0]
        decrement = float(np.sqrt(max(-g @ step, 0.0)))
        if decrement <= tol:
            return u, iteration
        alpha = 1.0 / (1.0 + decrement) if decrement > 0.25 else 1.0
        while True:
            trial = u + alpha * step
            phi_trial, Z_trial = value(trial)
            slack = 16 * np.finfo(float).eps * abs(phi)
            if Z_trial is not None and phi_trial <= phi + ARMIJO * alpha * float(g @ step) + slack:
                break
            alpha *= 0.5
            if alpha < 1e-16:
                return u, iteration
        u, phi, Z = trial, phi_trial, Z_trial
    raise ConvergenceError(f"log-det Newton hit {max_iter} iterations", iterations=max_iter)


def _phase_one(param: MultiplierSetParam, max_rounds: int = 12) -> np.ndarray:
    """Find parameters with Y^EE ≻ 0 by minimizing τ·s − log det(Y^EE(t) + sI) for growing τ.

    Raises:
        AssumptionViolationError: If no interior multiplier is found.

    """
    k = param.split.k
    t = np.zeros(param.dimension)
    s0 = max(0.0, -min_eig(param.particular_Y)) + 1.0
    u = np.concatenate([t, [s0]])
    directions = [N for N, _ in param.basis] + [np.eye(k)]
    scale = max(1.0, float(np.linalg.norm(param.particular_Y)))

    def interior(v):
        return min_eig(param.point(v[:-1])[0]) > 1e-12 * scale

    tau = 1.0
    for _ in range(max_rounds):
        c = np.zeros(u.size)
        c[-1] = tau
        u, _ = _newton_logdet(param.particular_Y, directions, c, u, 1e-10, 200, stop=interior)
        if interior(u):
            return u[:-1]
        tau *= 10.0
    raise AssumptionViolationError("no multiplier with positive definite Y^EE exists; strict complementarity fails")


@dataclass
class AnalyticCenterResult:
    """Analytic center (Y_a, z_a) of the multiplier set with its certificate.

    Attributes:
        Y_a (np.ndarray): The center, E* Y^EE E*ᵀ.
        z_a (np.ndarray): Equality multiplier of the center.
        Y_ee (np.ndarray): The EE block of the center.
        certificate_v (np.ndarray): Least-squares v with ΔG^EE(x*;v) = (Y^EE)⁻¹ and ∇h(x*)ᵀv = 0.
        cert_residual (float): Residual of that system.
        logdet (float): log det Y^EE.
        iterations (int): Newton iterations.
        phase_one (bool): Whether the start came from the phase-I problem.

    """

    Y_a: np.ndarray
    z_a: np.ndarray
    Y_ee: np.ndarray
    certificate_v: np.ndarray
    cert_residual: float
    logdet: float
    iterations: int = 0
    phase_one: bool = False


def _certificate(inst: NsdpInstance, xstar: np.ndarray, split: EigenSplit, Yee: np.ndarray) -> Tuple[np.ndarray, float]:
    ee = dG_block_stack(inst, xstar, split, "EE")
    rows = np.vstack([np.stack([svec(B) for B in ee], axis=1), inst.jac_h(xstar).T])
    rhs = np.concatenate([svec(scipy.linalg.inv(Yee)), np.zeros(inst.s)])
    v, *_ = scipy.linalg.lstsq(rows, rhs)
    return v, float(np.linalg.norm(rows @ v - rhs))


def analytic_center(
    inst: NsdpInstance,
    xstar,
    split: EigenSplit,
    warm_start: Optional[np.ndarray] = None,
    param: Optional[MultiplierSetParam] = None,
    tol: float = CENTER_TOL,
    max_iter: int = 100,
) -> AnalyticCenterResult:
    """Compute the analytic center of the multiplier set at x*.

    Args:
        inst (NsdpInstance): The instance.
        xstar: The KKT point.
        split (EigenSplit): Eigen-split of G(x*).
        warm_start (Optional[np.ndarray]): Y^EE guess of order m − r*, e.g. the EE block of μG(x)⁻¹ near x*;
            projected onto the affine set.
        param (Optional[MultiplierSetParam]): Precomputed parametrization.
        tol (float): Newton decrement tolerance.
        max_iter (int): Iteration cap.

    Returns:
        AnalyticCenterResult: The center with its certificate.

    Raises:
        InconsistentSystemError: If the multiplier set is empty.
        AssumptionViolationError: If the multiplier set has no element with Y^EE ≻ 0.
        ConvergenceError: If Newton does not converge.

    """
    xstar = inst.check_point(xstar)
    param = param or parametrize_multiplier_set(inst, xstar, split)
    k = split.k
    if k == 0:
        raise AssumptionViolationError(f"{inst.name}: G(x*) is nonsingular; the multiplier set is {{0}}")
    directions = [N for N, _ in param.basis]
    t0 = np.zeros(param.dimension)
    if warm_start is not None:
        W = np.asarray(warm_start, dtype=float)
        if W.shape != (k, k):
            raise ValidationError(f"warm start has shape {W.shape}, expected ({k}, {k})")
        t0 = param.coordinates(W)
    phase_one = False
    if not chol_psd_test(param.point(t0)[0]):
        if warm_start is not None:
            logger.warning(f"{inst.name}: warm start is not interior; running phase I")
        t0 = _phase_one(param)
        phase_one = True
    t, iterations = _newton_logdet(param.particular_Y, directions, np.zeros(param.dimension), t0, tol, max_iter)
    Yee, z = param.point(t)
    v, residual = _certificate(inst, xstar, split, Yee)
    _, logdet = np.linalg.slogdet(Yee)
    logger.info(f"{inst.name}: analytic center after {iterations} Newton iterations, "
                f"certificate residual {residual:.3e}")
    return AnalyticCenterResult(param.full_Y(Yee), z, Yee, v, residual, float(logdet), iterations, phase_one)


def sample_multipliers(
    param: MultiplierSetParam,
    center: np.ndarray,
    count: int,
    rng: np.random.Generator,
    fraction: float = 0.9,
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Draw multipliers (Y, z) from the multiplier set around its center.

    Each sample moves from the center along a random parameter direction by a uniform fraction of
    ``fraction`` times the largest step that keeps Y^EE positive semidefinite.
    """
    t_center = param.coordinates(center)
    Yc, _ = param.point(t_center)
    samples = []
    for _ in range(count):
        if not param.dimension:
            Yee, z = param.point(t_center)
            samples.append((param.full_Y(Yee), z))
            continue
        d = rng.standard_normal(param.dimension)
        d /= np.linalg.norm(d)
        D = sum((dj * N for dj, (N, _) in zip(d, param.basis)), np.zeros_like(Yc))
        step = min(max_psd_step(Yc, D), 1.0)
        Yee, z = param.point(t_center + fraction * rng.uniform() * step * d)
        samples.append((param.full_Y(Yee), z))
    return samples


def u_basis(inst: NsdpInstance, xstar, split: EigenSplit, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Return an orthonormal basis of {d : ΔG^EE(x*;d) = 0, ∇h(x*)ᵀd = 0} as an n×p* matrix."""
    xstar = inst.check_point(xstar)
    if split.k:
        ee = dG_block_stack(inst, xstar, split, "EE")
        rows = np.vstack([np.stack([svec(B) for B in ee], axis=1), inst.jac_h(xstar).T])
    else:
        rows = inst.jac_h(xstar).T
    return null_space_basis(rows, rank_tol, ncols=inst.n)


@dataclass
class XiStarResult:
    """Limiting direction ξ* with the matching dual direction.

    Attributes:
        xi (np.ndarray): ξ*, the unique Δx-component of the limit system.
        dY (np.ndarray): Least-norm ΔY of the direct solve (its EE block is free and set to zero).
        residuals (Dict[str, float]): full_system, structured_vs_full, identity_ff, identity_ee and identity_ef.
        p_star (int): Dimension of the subspace {d : ΔG^EE(x*;d) = 0, ∇h(x*)ᵀd = 0}.
        U (np.ndarray): Orthonormal basis of that subspace.
        structured_min_eig (float): Smallest eigenvalue of the reduced matrix of the structured solve.
        xi_structured (np.ndarray): ξ* from the structured solve.

    """

    xi: np.ndarray
    dY: np.ndarray
    residuals: Dict[str, float] = field(default_factory=dict)
    p_star: int = 0
    U: Optional[np.ndarray] = None
    structured_min_eig: float = float("inf")
    xi_structured: Optional[np.ndarray] = None


def _ff_inverse(Gstar: np.ndarray, split: EigenSplit) -> np.ndarray:
    Gff = block_of(Gstar, split, "FF")
    return scipy.linalg.inv(Gff) if Gff.size else Gff


def _xi_structured(inst, xstar, split, Gstar, Yee, H, U, rank_tol) -> Tuple[np.ndarray, float]:
    n = inst.n
    V = null_space_basis(U.T, rank_tol, ncols=n) if U.shape[1] else np.eye(n)
    Gff_inv = _ff_inverse(Gstar, split)
    J = inst.jac_h(xstar)
    k = split.k
    # η² from ΔG^EE(x*; Vη²) = (Y^EE)⁻¹ together with ∇hᵀVη² = 0
    ee_V = np.stack([svec(block_of(delta_G(inst, xstar, V[:, j]), split, "EE")) for j in range(V.shape[1])], axis=1) \
        if k else np.zeros((0, V.shape[1]))
    rows = np.vstack([ee_V, J.T @ V])
    rhs = np.concatenate([svec(scipy.linalg.inv(Yee)) if k else np.zeros(0), np.zeros(inst.s)])
    eta2, *_ = scipy.linalg.lstsq(rows, rhs)
    residual = float(np.linalg.norm(rows @ eta2 - rhs))
    if residual > CONSISTENCY_TOL * max(1.0, float(np.linalg.norm(rhs))):
        raise InconsistentSystemError(f"{inst.name}: limit system has no solution (residual {residual:.3e})",
                                      residual=residual)
    x2 = V @ eta2
    p = U.shape[1]
    if p == 0:
        return x2, float("inf")
    ef_U = [block_of(delta_G(inst, xstar, U[:, i]), split, "EF") for i in range(p)]
    ff_U = [block_of(delta_G(inst, xstar, U[:, i]), split, "FF") for i in range(p)]
    ef_x2 = block_of(delta_G(inst, xstar, x2), split, "EF")
    K = U.T @ H @ U + 2.0 * np.array([[np.trace(ef_U[i].T @ Yee @ ef_U[j] @ Gff_inv) for j in range(p)]
                                      for i in range(p)])
    K = sym(K)
    b = np.array([
        float(np.sum(ff_U[i] * Gff_inv)) - float(U[:, i] @ H @ x2)
        - 2.0 * float(np.trace(ef_U[i].T @ Yee @ ef_x2 @ Gff_inv))
        for i in range(p)
    ])
    lam = min_eig(K)
    if lam <= 0:
        raise AssumptionViolationError(f"{inst.name}: reduced second-order matrix is not positive definite "
                                       f"(lambda_min = {lam:.3e}); the second-order condition fails")
    eta1 = scipy.linalg.solve(K, b, assume_a="pos")
    return U @ eta1 + x2, lam


def _xi_direct(inst, xstar, split, Gstar, Y_a, H, U) -> Tuple[np.ndarray, np.ndarray, float]:
    n, m = inst.n, inst.m
    M = svec_dim(m)
    D = inst.dG_stack(xstar)
    S = np.stack([svec(Di) for Di in D])
    LY = np.stack([svec(lyap_apply(Y_a, Di)) for Di in D], axis=1)
    LG = np.stack([svec(lyap_apply(Gstar, smat(e, m))) for e in np.eye(M)], axis=1)
    p = U.shape[1]
    rows = np.vstack([
        np.hstack([U.T @ H, -U.T @ S]) if p else np.zeros((0, n + M)),
        np.hstack([LY, LG]),
        np.hstack([inst.jac_h(xstar).T, np.zeros((inst.s, M))]),
    ])
    rhs = np.concatenate([np.zeros(p), svec(2.0 * np.eye(m)), np.zeros(inst.s)])
    sol, *_ = scipy.linalg.lstsq(rows, rhs)
    residual = float(np.linalg.norm(rows @ sol - rhs))
    if residual > CONSISTENCY_TOL * max(1.0, float(np.linalg.norm(rhs))):
        raise InconsistentSystemError(f"{inst.name}: limit system has no solution (residual {residual:.3e})",
                                      residual=residual)
    return sol[:n], smat(sol[n:], m), residual


def xi_star(
    inst: NsdpInstance,
    xstar,
    split: EigenSplit,
    Y_a: np.ndarray,
    z_a: Optional[np.ndarray] = None,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> XiStarResult:
    """Compute the limiting direction ξ* by a structured solve and by a direct least-norm solve.

    The structured solve splits Δx = Uη¹ + Vη² with U spanning {d : ΔG^EE(x*;d) = 0, ∇h(x*)ᵀd = 0}
    and V its orthogonal complement; η² comes from ΔG^EE(x*;Vη²) = (Y_a^EE)⁻¹ and η¹ from a reduced
    system whose matrix is positive definite under the second-order condition. The direct solve treats
    the stacked linear system in (Δx, svec(ΔY)).

    Args:
        inst (NsdpInstance): The instance.
        xstar: The KKT point.
        split (EigenSplit): Eigen-split of G(x*).
        Y_a (np.ndarray): Analytic center of the multiplier set.
        z_a (Optional[np.ndarray]): Equality multiplier of the center; least squares from stationarity if omitted.
        rank_tol (float): Relative cutoff for null spaces.

    Returns:
        XiStarResult: ξ*, ΔY and the residuals of the block identities.

    Raises:
        AssumptionViolationError: If the reduced matrix is not positive definite.
        InconsistentSystemError: If the limit system has no solution.

    """
    xstar = inst.check_point(xstar)
    Y_a = sym(np.asarray(Y_a, dtype=float))
    if z_a is None:
        J = inst.jac_h(xstar)
        rhs = inst.grad_f(xstar) - np.array([np.sum(Di * Y_a) for Di in inst.dG_stack(xstar)])
        z_a = scipy.linalg.lstsq(J, -rhs)[0] if inst.s else np.zeros(0)
    Gstar = inst.eval_G(xstar)
    H = hess_xx_lagrangian(inst, PrimalDualTriplet(xstar, Y_a, z_a))
    U = u_basis(inst, xstar, split, rank_tol)
    Yee = block_of(Y_a, split, "EE")
    xi_s, lam = _xi_structured(inst, xstar, split, Gstar, Yee, H, U, rank_tol)
    xi_d, dY, full_residual = _xi_direct(inst, xstar, split, Gstar, Y_a, H, U)
    scale = max(1.0, float(np.linalg.norm(xi_d)))
    gap = float(np.linalg.norm(xi_s - xi_d))
    if gap > 1e-9 * scale:
        logger.warning(f"{inst.name}: structured and direct limiting directions differ by {gap:.3e}")
    Gff_inv = _ff_inverse(Gstar, split)
    dG_xi = delta_G(inst, xstar, xi_d)
    residuals = {
        "full_system": full_residual,
        "structured_vs_full": gap,
        "identity_ff": float(np.linalg.norm(block_of(dY, split, "FF") - Gff_inv)),
        "identity_ee": float(np.linalg.norm(block_of(dG_xi, split, "EE") - scipy.linalg.inv(Yee))) if split.k else 0.0,
        "identity_ef": float(np.linalg.norm(block_of(dY, split, "EF") + Yee @ block_of(dG_xi, split, "EF") @ Gff_inv)),
    }
    logger.info(f"{inst.name}: xi* = {np.array2string(xi_d, precision=6)} (p* = {U.shape[1]})")
    return XiStarResult(xi_d, dY, residuals, U.shape[1], U, lam, xi_s)
