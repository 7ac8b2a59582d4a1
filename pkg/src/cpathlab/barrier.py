"""Log-barrier subproblem solver for cpathlab.

For a barrier parameter μ > 0 the subproblem is: minimize ψ_μ(x) = f(x) − μ log det G(x) subject to
h(x) = 0 and G(x) ≻ 0. Its stationary points lift to barrier-KKT triplets (x, μG(x)⁻¹, z).

Provides ``psi_eval``, the ``BarrierSolver`` class (full-space Newton with regularization,
fraction-to-boundary and Armijo line search, Gauss-Newton feasibility phase) and ``lift_to_triplet``.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional

import numpy as np
import scipy.linalg

from cpathlab.config import DEFAULT_TOLERANCES
from cpathlab.exceptions import (
    ConvergenceError,
    DomainError,
    InconsistentSystemError,
    InteriorityError,
)
from cpathlab.kkt import PrimalDualTriplet, grad_x_lagrangian
from cpathlab.nsdp_model import NsdpInstance, adjoint_JG, is_interior
from cpathlab.symlin import chol_psd_test, min_eig, null_space_basis, numerical_rank, sym

ARMIJO = 1e-4
FRACTION_TO_BOUNDARY = 0.99
MIN_STEP = 1e-16
REG_START = 1e-12
REG_CAP = 1e-4
_EPS = np.finfo(float).eps


class PsiEval(NamedTuple):
    """Value, gradient and Hessian of the barrier function."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def _cholesky_or_raise(inst: NsdpInstance, G: np.ndarray) -> np.ndarray:
    try:
        L = scipy.linalg.cholesky(G, lower=True)
    except np.linalg.LinAlgError as e:
        value = min_eig(G)
        raise InteriorityError(f"{inst.name}: G(x) is not positive definite (lambda_min = {value:.3e})",
                               value=value) from e
    if not np.all(np.diag(L) > 0):
        value = min_eig(G)
        raise InteriorityError(f"{inst.name}: G(x) is not positive definite (lambda_min = {value:.3e})", value=value)
    return L


def psi_eval(inst: NsdpInstance, x, mu: float) -> PsiEval:
    """Evaluate ψ_μ(x) = f(x) − μ log det G(x) with its gradient and Hessian.

    The gradient is ∇f(x) − μ𝒥G(x)*G(x)⁻¹ and the Hessian
    ∇²f(x) + μ[tr(G⁻¹𝒢_iG⁻¹𝒢_j)] − μ[G⁻¹∙∂²G/∂x_i∂x_j].

    Raises:
        InteriorityError: If G(x) is not positive definite.

    """
    x = inst.check_point(x)
    G = inst.eval_G(x)
    L = _cholesky_or_raise(inst, G)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    Ginv = sym(scipy.linalg.cho_solve((L, True), np.eye(inst.m)))
    D = inst.dG_stack(x)
    T = np.einsum("ab,ibc->iac", Ginv, D)
    value = inst.eval_f(x) - mu * logdet
    gradient = inst.grad_f(x) - mu * np.einsum("ikk->i", T)
    hessian = inst.hess_f(x) + mu * np.einsum("iab,jba->ij", T, T) - mu * inst.hessG_contract(x, Ginv)
    return PsiEval(float(value), gradient, sym(hessian))


@dataclass
class BarrierSolveResult:
    """Outcome of one barrier subproblem solve.

    Attributes:
        x (np.ndarray): Final iterate.
        mu (float): Barrier parameter.
        iterations (int): Newton iterations performed.
        projected_grad_norm (float): ‖∇ψ_μ(x) + ∇h(x)z‖ for the least-squares multiplier z.
        feas_h_norm (float): ‖h(x)‖.
        min_eig_G (float): λ_min(G(x)).
        converged (bool): Whether the stopping test was met.
        z (np.ndarray): Least-squares equality multiplier.
        value (float): ψ_μ(x).
        tol (float): Gradient tolerance that was applied.
        history (List[float]): Projected gradient norm at every iteration.

    """

    x: np.ndarray
    mu: float
    iterations: int
    projected_grad_norm: float
    feas_h_norm: float
    min_eig_G: float
    converged: bool
    z: np.ndarray
    value: float
    tol: float
    history: List[float] = field(default_factory=list)


class BarrierSolver:
    """Newton solver for the equality-constrained log-barrier subproblem.

    Each iteration solves [∇²ψ_μ + δI, ∇h; ∇hᵀ, 0][dx; z] = −[∇ψ_μ; h], where δ ≥ 0 is the smallest value
    in {0, 1e-12, 1e-11, ..., 1e-4} making the reduced Hessian positive definite. The step is damped by
    backtracking until G stays positive definite (fraction-to-boundary 0.99) and then by an Armijo test on
    the merit function ψ_μ(x) + ν‖h(x)‖ with ν kept above ‖z‖ + 1.
    """

    def __init__(
        self,
        tolerances: Optional[Dict[str, float]] = None,
        max_iter: int = 100,
        logger: Optional[logging.Logger] = None,
    ):
        """Initialize the solver.

        Args:
            tolerances (Optional[Dict[str, float]]): Overrides of barrier_tol_abs, barrier_tol_rel and feas_tol.
            max_iter (int): Newton iteration cap.
            logger (Optional[logging.Logger]): Logger instance to use. If None, a default logger is created.

        """
        if logger is not None and not isinstance(logger, logging.Logger):
            raise TypeError("logger must be an instance of logging.Logger or None")
        self.logger = logger or logging.getLogger(self.__class__.__name__)
        self.tolerances = dict(DEFAULT_TOLERANCES)
        self.tolerances.update(tolerances or {})
        self.max_iter = max_iter

    def restore_feasibility(self, inst: NsdpInstance, x, max_iter: int = 50) -> np.ndarray:
        """Reduce ‖h(x)‖ below the feasibility tolerance by Gauss-Newton steps that keep G(x) ≻ 0.

        Raises:
            InconsistentSystemError: If the feasibility tolerance cannot be reached.

        """
        x = inst.check_point(x).copy()
        feas_tol = self.tolerances["feas_tol"]
        h = inst.eval_h(x)
        for _ in range(max_iter):
            hn = float(np.linalg.norm(h))
            if hn <= feas_tol:
                return x
            J = inst.jac_h(x)
            dx = scipy.linalg.lstsq(J.T, -h)[0]
            alpha = 1.0
            while alpha >= MIN_STEP:
                trial = x + alpha * dx
                if is_interior(inst, trial):
                    h_trial = inst.eval_h(trial)
                    if np.linalg.norm(h_trial) < hn:
                        break
                alpha *= 0.5
            else:
                break
            x, h = trial, h_trial
            self.logger.debug(f"{inst.name}: feasibility step alpha={alpha:.2e}, |h|={np.linalg.norm(h):.3e}")
        hn = float(np.linalg.norm(h))
        if hn <= feas_tol:
            return x
        raise InconsistentSystemError(f"{inst.name}: feasibility phase stalled at |h(x)| = {hn:.3e}", residual=hn)

    def _regularized_delta(self, H: np.ndarray, Z: np.ndarray) -> float:
        reduced = Z.T @ H @ Z
        if Z.shape[1] == 0 or chol_psd_test(reduced):
            return 0.0
        delta = REG_START
        eye = np.eye(Z.shape[1])
        while delta <= REG_CAP:
            if chol_psd_test(reduced + delta * eye):
                return delta
            delta *= 10.0
        delta = max(REG_CAP, 2.0 * abs(min_eig(reduced)))
        self.logger.warning(f"reduced barrier Hessian is indefinite beyond the regularization cap; using {delta:.2e}")
        return delta

    def solve(self, inst: NsdpInstance, mu: float, x0, tol: Optional[float] = None,
              max_iter: Optional[int] = None) -> BarrierSolveResult:
        """Minimize ψ_μ subject to h(x) = 0 from an interior start.

        Args:
            inst (NsdpInstance): The instance.
            mu (float): Positive barrier parameter.
            x0: Start with G(x0) ≻ 0; an infeasible h(x0) triggers the feasibility phase.
            tol (Optional[float]): Projected gradient tolerance; defaults to max(tol_abs, tol_rel·μ).
            max_iter (Optional[int]): Iteration cap; defaults to the solver's.

        Returns:
            BarrierSolveResult: The converged result.

        Raises:
            InteriorityError: If G(x0) is not positive definite.
            InconsistentSystemError: If the feasibility phase fails.
            ConvergenceError: On the iteration cap or a collapsed line search.

        """
        if not mu > 0:
            raise DomainError(f"barrier parameter must be positive, got {mu}", value=mu)
        x = inst.check_point(x0).copy()
        if not is_interior(inst, x):
            value = min_eig(inst.eval_G(x))
            raise InteriorityError(f"{inst.name}: barrier start is not interior (lambda_min = {value:.3e})",
                                   value=value)
        if tol is None:
            tol = max(self.tolerances["barrier_tol_abs"], self.tolerances["barrier_tol_rel"] * mu)
        feas_tol = self.tolerances["feas_tol"]
        max_iter = max_iter or self.max_iter
        if inst.s and np.linalg.norm(inst.eval_h(x)) > feas_tol:
            self.logger.warning(f"{inst.name}: start violates h(x) = 0, running the feasibility phase")
            x = self.restore_feasibility(inst, x)

        nu = 1.0
        history: List[float] = []
        for iteration in range(max_iter + 1):
            psi = psi_eval(inst, x, mu)
            h = inst.eval_h(x)
            J = inst.jac_h(x)
            z = -scipy.linalg.lstsq(J, psi.gradient)[0] if inst.s else np.zeros(0)
            pg = float(np.linalg.norm(psi.gradient + J @ z))
            hn = float(np.linalg.norm(h))
            history.append(pg)
            noise_tol = max(tol, self._gradient_noise(inst, x, mu, psi))
            self.logger.debug(f"{inst.name}: mu={mu:.1e} it={iteration} |pg|={pg:.3e} |h|={hn:.3e}")
            if pg <= tol and hn <= feas_tol:
                return self._result(inst, x, mu, iteration, pg, hn, True, z, psi.value, tol, history)
            if iteration == max_iter:
                break

            Z = null_space_basis(J.T, ncols=inst.n) if inst.s else np.eye(inst.n)
            H = psi.hessian + self._regularized_delta(psi.hessian, Z) * np.eye(inst.n)
            if inst.s:
                K = np.block([[H, J], [J.T, np.zeros((inst.s, inst.s))]])
                sol = scipy.linalg.solve(K, -np.concatenate([psi.gradient, h]))
                dx, z_new = sol[: inst.n], sol[inst.n:]
                nu = max(nu, float(np.linalg.norm(z_new)) + 1.0)
            else:
                dx = scipy.linalg.solve(H, -psi.gradient, assume_a="sym")

            if float(np.linalg.norm(dx)) <= 1e-15 * max(1.0, float(np.linalg.norm(x))) and hn <= feas_tol:
                if pg <= noise_tol:
                    return self._result(inst, x, mu, iteration, pg, hn, True, z, psi.value, noise_tol, history,
                                        requested_tol=tol)

            alpha = 1.0
            while not is_interior(inst, x + alpha * dx):
                alpha *= 0.5
                if alpha < MIN_STEP:
                    raise ConvergenceError(f"{inst.name}: fraction-to-boundary collapsed at mu={mu:.3e}",
                                           residual=pg, iterations=iteration)
            if alpha < 1.0:
                alpha *= FRACTION_TO_BOUNDARY

            merit = psi.value + nu * hn
            slope = float(psi.gradient @ dx) - nu * hn
            while True:
                trial = x + alpha * dx
                trial_merit = psi_eval(inst, trial, mu).value + nu * float(np.linalg.norm(inst.eval_h(trial)))
                if trial_merit <= merit + ARMIJO * alpha * min(slope, 0.0) + 16 * _EPS * abs(merit):
                    break
                alpha *= 0.5
                if alpha < MIN_STEP:
                    if pg <= noise_tol and hn <= feas_tol:
                        return self._result(inst, x, mu, iteration, pg, hn, True, z, psi.value, noise_tol, history,
                                            requested_tol=tol)
                    raise ConvergenceError(f"{inst.name}: line search collapsed at mu={mu:.3e} (|pg|={pg:.3e})",
                                           residual=pg, iterations=iteration)
            x = trial

        raise ConvergenceError(f"{inst.name}: barrier solve hit {max_iter} iterations at mu={mu:.3e} "
                               f"(|pg|={history[-1]:.3e})", residual=history[-1], iterations=max_iter)

    @staticmethod
    def _gradient_noise(inst: NsdpInstance, x: np.ndarray, mu: float, psi: PsiEval) -> float:
        """Estimate the rounding floor of the barrier gradient from the conditioning of G(x)."""
        values = np.linalg.eigvalsh(inst.eval_G(x))
        cond = float(values[-1] / values[0])
        jac_norm = float(np.linalg.norm(inst.dG_stack(x)))
        scale = max(1.0, float(np.linalg.norm(inst.grad_f(x))), mu * jac_norm / values[0])
        return 64.0 * _EPS * cond * scale

    def _result(self, inst, x, mu, iterations, pg, hn, converged, z, value, tol, history,
                requested_tol: Optional[float] = None) -> BarrierSolveResult:
        if requested_tol is not None and tol > requested_tol:
            self.logger.debug(f"{inst.name}: stopping at the rounding floor {tol:.3e} of the barrier gradient, "
                              f"above the requested tolerance {requested_tol:.3e}")
        self.logger.info(f"{inst.name}: barrier solve at mu={mu:.3e} converged in {iterations} iterations "
                         f"(|pg|={pg:.3e})")
        return BarrierSolveResult(
            x=x, mu=mu, iterations=iterations, projected_grad_norm=pg, feas_h_norm=hn,
            min_eig_G=min_eig(inst.eval_G(x)), converged=converged, z=z, value=value, tol=tol, history=history,
        )


def barrier_solve(inst: NsdpInstance, mu: float, x0, tol: Optional[float] = None, max_iter: int = 100,
                  tolerances: Optional[Dict[str, float]] = None) -> BarrierSolveResult:
    """Solve the barrier subproblem at mu with a default ``BarrierSolver``."""
    return BarrierSolver(tolerances=tolerances, max_iter=max_iter).solve(inst, mu, x0, tol=tol)


def lift_to_triplet(inst: NsdpInstance, x, mu: float) -> PrimalDualTriplet:
    """Lift a barrier point to the triplet (x, μG(x)⁻¹, z) with the least-squares equality multiplier.

    z = −(∇hᵀ∇h)⁻¹∇hᵀ(∇f − 𝒥G*Y).

    Raises:
        InteriorityError: If G(x) is not positive definite.
        DomainError: If ∇h(x) does not have full column rank.

    """
    x = inst.check_point(x)
    G = inst.eval_G(x)
    L = _cholesky_or_raise(inst, G)
    Y = sym(mu * scipy.linalg.cho_solve((L, True), np.eye(inst.m)))
    if inst.s:
        J = inst.jac_h(x)
        if numerical_rank(J) < inst.s:
            raise DomainError(f"{inst.name}: the equality constraint Jacobian is rank deficient at x")
        r = inst.grad_f(x) - adjoint_JG(inst, x, Y)
        z = -scipy.linalg.lstsq(J, r)[0]
    else:
        z = np.zeros(0)
    w = PrimalDualTriplet(x.copy(), Y, z)
    logging.getLogger(__name__).debug(
        f"{inst.name}: lifted triplet at mu={mu:.3e}, stationarity {np.linalg.norm(grad_x_lagrangian(inst, w)):.3e}"
    )
    return w
