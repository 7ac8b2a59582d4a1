"""Central path machinery for cpathlab.

The symmetric barrier-KKT system at barrier parameter μ reads

    ∇_xL(w) = 0,   G(x)Y + YG(x) = 2μI,   h(x) = 0,

and its Jacobian 𝒜(w) acts on (dx, svec(dY), dz). This module assembles 𝒜(w), solves for the path
tangent ẇ(μ), runs a primal-dual Newton corrector, traces the path over a geometric μ grid and
evaluates the tube membership test and the reduced quadratic form that certify nonsingularity of 𝒜.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, NamedTuple, Optional

import numpy as np
import scipy.linalg

from cpathlab.barrier import BarrierSolver, lift_to_triplet
from cpathlab.config import DEFAULT_TOLERANCES
from cpathlab.exceptions import (
    ConvergenceError,
    CpathLabError,
    InteriorityError,
    PathTracingError,
    SingularSystemError,
    ValidationError,
)
from cpathlab.kkt import (
    PrimalDualTriplet,
    bkkt_residual,
    check_interior,
    grad_x_lagrangian,
    hess_xx_lagrangian,
)
from cpathlab.nsdp_model import NsdpInstance, is_interior
from cpathlab.progress import Progress, ProgressStatus, calculate_percent
from cpathlab.symlin import (
    chol_psd_test,
    lyap_apply,
    lyap_solve,
    max_psd_step,
    min_eig,
    null_space_basis,
    smat,
    svec,
    svec_dim,
    sym,
)

logger = logging.getLogger(__name__)

MODES = ("barrier", "pdipm", "hybrid")
_EPS = np.finfo(float).eps


@dataclass
class AssembledSystem:
    """The Newton matrix 𝒜(w) in (dx, svec(dY), dz) coordinates.

    Attributes:
        matrix (np.ndarray): Square matrix of order n + M + s.
        n (int): Primal block size.
        M (int): svec block size m(m+1)/2.
        s (int): Equality block size.

    """

    matrix: np.ndarray
    n: int
    M: int
    s: int

    @property
    def order(self) -> int:
        """Return n + M + s."""
        return self.n + self.M + self.s

    def split(self, v: np.ndarray):
        """Split a vector of length n + M + s into its three blocks."""
        return v[: self.n], v[self.n: self.n + self.M], v[self.n + self.M:]

    def apply(self, dx, dY, dz) -> np.ndarray:
        """Return 𝒜(w)·(dx, svec(dY), dz)."""
        return self.matrix @ np.concatenate([np.asarray(dx, float), svec(dY), np.asarray(dz, float)])


def lyap_matrix(X: np.ndarray) -> np.ndarray:
    """Return the matrix of dY ↦ XdY + dYX in svec coordinates."""
    m = X.shape[0]
    M = svec_dim(m)
    cols = [svec(lyap_apply(X, smat(e, m))) for e in np.eye(M)]
    return np.stack(cols, axis=1)


def assemble_A(inst: NsdpInstance, w: PrimalDualTriplet) -> AssembledSystem:
    """Assemble the Jacobian of the symmetric barrier-KKT system at w.

    Block rows are [∇²L, −𝒥G*, ∇h], [ℒ_Y𝒢_i columns, ℒ_G, 0] and [∇hᵀ, 0, 0].
    """
    w.check(inst)
    n, m, s = inst.n, inst.m, inst.s
    M = svec_dim(m)
    D = inst.dG_stack(w.x)
    G = inst.eval_G(w.x)
    J = inst.jac_h(w.x)
    S = np.stack([svec(Di) for Di in D])
    LY = np.stack([svec(lyap_apply(w.Y, Di)) for Di in D], axis=1)
    A = np.zeros((n + M + s, n + M + s))
    A[:n, :n] = hess_xx_lagrangian(inst, w)
    A[:n, n:n + M] = -S
    A[:n, n + M:] = J
    A[n:n + M, :n] = LY
    A[n:n + M, n:n + M] = lyap_matrix(G)
    A[n + M:, :n] = J.T
    return AssembledSystem(A, n, M, s)


def bkkt_function(inst: NsdpInstance, w: PrimalDualTriplet, mu: float) -> np.ndarray:
    """Return the residual vector [∇_xL; svec(GY + YG − 2μI); h] of the symmetric system."""
    G = inst.eval_G(w.x)
    comp = lyap_apply(G, w.Y)
    return np.concatenate([
        grad_x_lagrangian(inst, w),
        svec(sym(comp) - 2.0 * mu * np.eye(inst.m)),
        inst.eval_h(w.x),
    ])


def _singular_values(A: np.ndarray) -> np.ndarray:
    return scipy.linalg.svdvals(A)


class Tangent(NamedTuple):
    """Path tangent ẇ = (ẋ, Ẏ, ż)."""

    dx: np.ndarray
    dY: np.ndarray
    dz: np.ndarray


def tangent(inst: NsdpInstance, w: PrimalDualTriplet) -> Tangent:
    """Solve 𝒜(w)ẇ = [0; svec(2I); 0] for the derivative of the path with respect to μ.

    Raises:
        SingularSystemError: If σ_min(𝒜(w)) ≤ 1e-12·‖𝒜(w)‖; carries σ_min.

    """
    system = assemble_A(inst, w)
    sv = _singular_values(system.matrix)
    if sv[-1] <= 1e-12 * sv[0]:
        raise SingularSystemError(f"{inst.name}: tangent system is singular (sigma_min = {sv[-1]:.3e})",
                                  sigma_min=float(sv[-1]))
    rhs = np.concatenate([np.zeros(system.n), svec(2.0 * np.eye(inst.m)), np.zeros(system.s)])
    sol = scipy.linalg.solve(system.matrix, rhs)
    residual = float(np.linalg.norm(system.matrix @ sol - rhs)) / max(1.0, float(np.linalg.norm(rhs)))
    if residual > 1e-10:
        logger.warning(f"{inst.name}: tangent solve residual {residual:.3e}")
    dx, dy, dz = system.split(sol)
    return Tangent(dx, smat(dy, inst.m), dz)


@dataclass
class PdipmResult:
    """Outcome of the primal-dual corrector.

    Attributes:
        w (PrimalDualTriplet): Final triplet.
        iterations (int): Newton iterations performed.
        residual_history (List[float]): Symmetric-form residual (max of the three norms) per iterate.
        sigmin_A (float): σ_min of the last Newton matrix used.

    """

    w: PrimalDualTriplet
    iterations: int
    residual_history: List[float] = field(default_factory=list)
    sigmin_A: float = float("nan")


def pdipm_corrector(
    inst: NsdpInstance,
    w0: PrimalDualTriplet,
    mu: float,
    tol: float = DEFAULT_TOLERANCES["corrector_tol"],
    max_iter: int = 50,
    tau: float = 0.99,
) -> PdipmResult:
    """Newton corrector on the symmetric barrier-KKT system with 𝒜(w) as Newton matrix.

    Steps are damped so that Y stays positive definite (fraction τ of the exact boundary step) and
    G(x) stays positive definite (backtracking with a Cholesky test).

    Args:
        inst (NsdpInstance): The instance.
        w0 (PrimalDualTriplet): Interior start.
        mu (float): Target barrier parameter.
        tol (float): Tolerance on the symmetric-form barrier-KKT residual.
        max_iter (int): Iteration cap.
        tau (float): Fraction-to-boundary factor.

    Returns:
        PdipmResult: The converged triplet and the residual sequence.

    Raises:
        InteriorityError: If w0 is not interior.
        SingularSystemError: If 𝒜(w) is singular along the iteration.
        ConvergenceError: On the iteration cap or a collapsed step.

    """
    w = w0.copy().check(inst)
    check_interior(inst, w)
    history: List[float] = []
    sigmin = float("nan")
    for iteration in range(max_iter + 1):
        res = bkkt_residual(inst, w, mu, form="symmetric").max
        history.append(res)
        logger.debug(f"{inst.name}: corrector mu={mu:.1e} it={iteration} residual={res:.3e}")
        if res <= tol:
            return PdipmResult(w, iteration, history, sigmin)
        if iteration == max_iter:
            break
        system = assemble_A(inst, w)
        sv = _singular_values(system.matrix)
        sigmin = float(sv[-1])
        if sigmin <= 1e-14 * sv[0]:
            raise SingularSystemError(f"{inst.name}: Newton matrix singular at mu={mu:.3e}", sigma_min=sigmin)
        step = scipy.linalg.solve(system.matrix, -bkkt_function(inst, w, mu))
        dx, dy, dz = system.split(step)
        dY = smat(dy, inst.m)
        alpha = min(1.0, tau * max_psd_step(w.Y, dY))
        while not is_interior(inst, w.x + alpha * dx):
            alpha *= 0.5
            if alpha < 1e-16:
                raise ConvergenceError(f"{inst.name}: corrector step collapsed at mu={mu:.3e}",
                                       residual=res, iterations=iteration)
        w = PrimalDualTriplet(w.x + alpha * dx, sym(w.Y + alpha * dY), w.z + alpha * dz)
    raise ConvergenceError(f"{inst.name}: corrector hit {max_iter} iterations at mu={mu:.3e} "
                           f"(residual {history[-1]:.3e})", residual=history[-1], iterations=max_iter)


def mu_grid(mu0: float, sigma: float, mu_min: float) -> List[float]:
    """Return the geometric schedule μ₀σᵏ, k = 0, 1, ..., down to μ_min inclusive.

    Raises:
        ValidationError: Unless 0 < μ_min ≤ μ₀ and 0 < σ < 1.

    """
    if not (0 < mu_min <= mu0) or not (0 < sigma < 1):
        raise ValidationError(f"invalid schedule mu0={mu0}, sigma={sigma}, mu_min={mu_min}")
    grid = []
    k = 0
    while True:
        mu = mu0 * sigma ** k
        if mu < mu_min * (1.0 - 1e-12):
            break
        grid.append(mu)
        k += 1
    return grid


@dataclass
class PathPoint:
    """One accepted point of a traced central path.

    ``diagnostics`` holds norm_d (‖x − x*‖ when x* is known), bkkt_res, sigmin_A, newton_iters and the
    solver used.
    """

    mu: float
    w: PrimalDualTriplet
    diagnostics: Dict[str, Any] = field(default_factory=dict)


@dataclass
class PathTrace:
    """Points of a central path ordered by decreasing μ, with the schedule that produced them."""

    instance: str
    points: List[PathPoint]
    mu0: float
    sigma: float
    mu_min: float
    mode: str

    @property
    def mus(self) -> np.ndarray:
        """Return the barrier parameters of the points."""
        return np.array([p.mu for p in self.points])

    @property
    def xs(self) -> np.ndarray:
        """Return the primal points stacked row-wise."""
        return np.stack([p.w.x for p in self.points])


def in_region(x, xstar, xi_star, rho: float, mu: float) -> bool:
    """Return True iff ‖x* + μξ* − x‖ < ρμ‖ξ*‖.

    Points within rounding distance of the tube boundary count as outside.

    Raises:
        ValidationError: If ξ* = 0.
    """
    x = np.asarray(x, dtype=float)
    center = np.asarray(xstar, dtype=float) + mu * np.asarray(xi_star, dtype=float)
    norm_xi = float(np.linalg.norm(xi_star))
    if norm_xi == 0.0:
        raise ValidationError("the tube is empty for a zero limiting direction")
    radius = rho * mu * norm_xi
    dist = float(np.linalg.norm(center - x))
    return dist < radius - 8.0 * _EPS * max(radius, float(np.linalg.norm(center)))


def reduced_form_min_eig(inst: NsdpInstance, w: PrimalDualTriplet) -> float:
    """Return the minimum over d ∈ null(∇hᵀ), ‖d‖ = 1 of dᵀ∇²L d + ΔG(x;d)∙ℒ_G⁻¹ℒ_Y(ΔG(x;d)).

    A positive value certifies that 𝒜(w) is nonsingular.

    Raises:
        InteriorityError: If G(x) is not positive definite.

    """
    w.check(inst)
    G = inst.eval_G(w.x)
    if not chol_psd_test(G):
        value = min_eig(G)
        raise InteriorityError(f"{inst.name}: G(x) is not positive definite (lambda_min = {value:.3e})", value=value)
    D = inst.dG_stack(w.x)
    T = np.stack([lyap_solve(G, lyap_apply(w.Y, Dj)) for Dj in D])
    K = hess_xx_lagrangian(inst, w) + np.einsum("ikl,jkl->ij", D, T)
    Z = null_space_basis(inst.jac_h(w.x).T, ncols=inst.n) if inst.s else np.eye(inst.n)
    if Z.shape[1] == 0:
        return float("inf")
    return min_eig(sym(Z.T @ K @ Z))


def triplet_distance(a: PrimalDualTriplet, b: PrimalDualTriplet) -> float:
    """Return the Euclidean distance of two triplets in (x, svec(Y), z) coordinates."""
    return float(np.sqrt(np.sum((a.x - b.x) ** 2) + np.sum((a.Y - b.Y) ** 2) + np.sum((a.z - b.z) ** 2)))


def predictor_error(
    inst: NsdpInstance,
    w_mu: PrimalDualTriplet,
    w_target: PrimalDualTriplet,
    dmu: float,
    wdot: Optional[Tangent] = None,
) -> float:
    """Return ‖w(μ − Δ) − (w(μ) − Δ·ẇ(μ))‖ for the first-order predictor.

    The tangent is computed at w_mu when not supplied.
    """
    wdot = wdot if wdot is not None else tangent(inst, w_mu)
    predicted = PrimalDualTriplet(w_mu.x - dmu * wdot.dx, w_mu.Y - dmu * wdot.dY, w_mu.z - dmu * wdot.dz)
    return triplet_distance(predicted, w_target)


@dataclass
class NewtonMatrixReport:
    """Nonsingularity evidence for 𝒜(w)."""

    sigma_min: float
    norm: float
    reduced_form_min_eig: float


def newton_matrix_report(inst: NsdpInstance, w: PrimalDualTriplet) -> NewtonMatrixReport:
    """Return σ_min(𝒜(w)), ‖𝒜(w)‖ and the reduced form minimum eigenvalue (NaN outside the interior)."""
    sv = _singular_values(assemble_A(inst, w).matrix)
    try:
        reduced = reduced_form_min_eig(inst, w)
    except InteriorityError:
        reduced = float("nan")
    return NewtonMatrixReport(float(sv[-1]), float(sv[0]), reduced)


class PathTracer:
    """Trace the central path over a geometric μ grid.

    Modes:
        - barrier: every point is a warm-started barrier solve lifted to a triplet.
        - pdipm: every point is the corrector started from the first-order predictor w − Δμ·ẇ.
        - hybrid: pdipm, falling back to the barrier solver when the corrector fails.

    The first point is always obtained by the barrier solver from x0.
    """

    def __init__(
        self,
        tolerances: Optional[Dict[str, float]] = None,
        barrier_solver: Optional[BarrierSolver] = None,
        logger: Optional[logging.Logger] = None,
    ):
        """Initialize the tracer.

        Args:
            tolerances (Optional[Dict[str, float]]): Overrides of trace_tol and corrector_tol (and the barrier
                tolerances when no solver is given).
            barrier_solver (Optional[BarrierSolver]): Solver for barrier steps.
            logger (Optional[logging.Logger]): Logger instance to use. If None, a default logger is created.

        """
        if logger is not None and not isinstance(logger, logging.Logger):
            raise TypeError("logger must be an instance of logging.Logger or None")
        self.logger = logger or logging.getLogger(self.__class__.__name__)
        self.tolerances = dict(DEFAULT_TOLERANCES)
        self.tolerances.update(tolerances or {})
        self.barrier_solver = barrier_solver or BarrierSolver(tolerances=self.tolerances)

    def _barrier_point(self, inst: NsdpInstance, mu: float, x_start: np.ndarray):
        result = self.barrier_solver.solve(inst, mu, x_start)
        return lift_to_triplet(inst, result.x, mu), result.iterations, "barrier"

    def _pdipm_point(self, inst: NsdpInstance, mu: float, prev: PathPoint):
        wdot = tangent(inst, prev.w)
        dmu = prev.mu - mu
        alpha = 1.0
        while alpha > 1e-8:
            pred = PrimalDualTriplet(prev.w.x - alpha * dmu * wdot.dx, sym(prev.w.Y - alpha * dmu * wdot.dY),
                                     prev.w.z - alpha * dmu * wdot.dz)
            if is_interior(inst, pred.x) and chol_psd_test(pred.Y):
                break
            alpha *= 0.5
        else:
            pred = prev.w.copy()
        result = pdipm_corrector(inst, pred, mu, tol=self.tolerances["corrector_tol"])
        return result.w, result.iterations, "pdipm"

    def _accept(self, inst: NsdpInstance, w: PrimalDualTriplet, mu: float) -> float:
        res = bkkt_residual(inst, w, mu, form="symmetric").max
        if res > self.tolerances["trace_tol"]:
            raise ConvergenceError(f"{inst.name}: point at mu={mu:.3e} has residual {res:.3e}", residual=res)
        return res

    def trace(
        self,
        inst: NsdpInstance,
        x0,
        mu0: float = 1e-1,
        sigma: float = 0.1,
        mu_min: float = 1e-7,
        mode: str = "hybrid",
        xstar=None,
        progress_observer: Optional[Callable[[Progress], None]] = None,
    ) -> PathTrace:
        """Trace the path from μ₀ down to μ_min.

        Args:
            inst (NsdpInstance): The instance.
            x0: Interior start for the first barrier solve.
            mu0 (float): First barrier parameter.
            sigma (float): Reduction factor in (0, 1).
            mu_min (float): Smallest barrier parameter.
            mode (str): "barrier", "pdipm" or "hybrid".
            xstar: Optional limit point, used for the norm_d diagnostic.
            progress_observer (Optional[Callable[[Progress], None]]): Receives one event per grid point.

        Returns:
            PathTrace: The accepted points.

        Raises:
            ValidationError: On an invalid schedule or mode.
            PathTracingError: When a point cannot be computed; carries μ.

        """
        if mode not in MODES:
            raise ValidationError(f"unknown tracing mode '{mode}' (expected one of {', '.join(MODES)})")
        grid = mu_grid(mu0, sigma, mu_min)
        points: List[PathPoint] = []
        xstar = None if xstar is None else inst.check_point(xstar)
        for k, mu in enumerate(grid):
            try:
                if not points:
                    w, iters, used = self._barrier_point(inst, mu, inst.check_point(x0))
                elif mode == "barrier":
                    w, iters, used = self._barrier_point(inst, mu, points[-1].w.x)
                else:
                    try:
                        w, iters, used = self._pdipm_point(inst, mu, points[-1])
                        self._accept(inst, w, mu)
                    except CpathLabError as e:
                        if mode == "pdipm":
                            raise
                        self.logger.warning(f"{inst.name}: corrector failed at mu={mu:.3e} ({e}); "
                                            "falling back to the barrier solver")
                        w, iters, used = self._barrier_point(inst, mu, points[-1].w.x)
                res = self._accept(inst, w, mu)
            except CpathLabError as e:
                raise PathTracingError(f"{inst.name}: tracing failed at mu={mu:.3e}: {e}", mu) from e
            sv = _singular_values(assemble_A(inst, w).matrix)
            diagnostics = {
                "norm_d": float(np.linalg.norm(w.x - xstar)) if xstar is not None else float("nan"),
                "bkkt_res": res,
                "sigmin_A": float(sv[-1]),
                "newton_iters": int(iters),
                "solver": used,
            }
            points.append(PathPoint(mu, w, diagnostics))
            self.logger.info(f"{inst.name}: accepted mu={mu:.3e} via {used} ({iters} iterations)")
            if progress_observer is not None:
                progress_observer(Progress(calculate_percent(k + 1, len(grid)), status=ProgressStatus.TRACING_PATH))
        return PathTrace(inst.name, points, mu0, sigma, mu_min, mode)


def trace_path(
    inst: NsdpInstance,
    mu0: float,
    sigma: float,
    mu_min: float,
    mode: str,
    x0,
    xstar=None,
    tolerances: Optional[Dict[str, float]] = None,
) -> PathTrace:
    """Trace the central path with a default ``PathTracer``."""
    return PathTracer(tolerances=tolerances).trace(inst, x0, mu0, sigma, mu_min, mode, xstar=xstar)
