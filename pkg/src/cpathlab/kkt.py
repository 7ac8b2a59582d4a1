"""KKT and barrier-KKT residuals, eigen-split and condition checks for cpathlab.

Provides the Lagrangian derivatives, the residuals of the KKT and barrier-KKT systems, the eigen-split
P* = [E*, F*] of G(x*) separating its null and positive eigenspaces, the sigma term Ω(x, Y) of the
semidefinite cone, and the ``condition_report`` that checks strict complementarity, nondegeneracy,
MFCQ and the strong second-order sufficient condition at a KKT point.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from cpathlab.exceptions import DomainError, InteriorityError, ValidationError
from cpathlab.nsdp_model import NsdpInstance, adjoint_JG, delta_G
from cpathlab.symlin import (
    DEFAULT_RANK_TOL,
    chol_psd_test,
    eigh_ascending,
    min_eig,
    null_space_basis,
    numerical_rank,
    pinv_psd,
    sqrt_psd,
    svec,
    svec_dim,
    sym,
)

logger = logging.getLogger(__name__)

KKT_TOL = 1e-8


@dataclass
class PrimalDualTriplet:
    """Primal-dual iterate w = (x, Y, z).

    No cone membership is implied; operations check it when they need it.
    """

    x: np.ndarray
    Y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        """Coerce the fields to float arrays."""
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.Y = np.asarray(self.Y, dtype=float)
        self.z = np.asarray(self.z, dtype=float).ravel()

    def check(self, inst: NsdpInstance) -> "PrimalDualTriplet":
        """Validate the shapes against an instance.

        Raises:
            ValidationError: If a component has the wrong shape.

        """
        if self.x.shape != (inst.n,) or self.Y.shape != (inst.m, inst.m) or self.z.shape != (inst.s,):
            raise ValidationError(
                f"{inst.name}: triplet shapes x{self.x.shape}, Y{self.Y.shape}, z{self.z.shape} do not match "
                f"n={inst.n}, m={inst.m}, s={inst.s}"
            )
        return self

    def copy(self) -> "PrimalDualTriplet":
        """Return a deep copy."""
        return PrimalDualTriplet(self.x.copy(), self.Y.copy(), self.z.copy())


def grad_x_lagrangian(inst: NsdpInstance, w: PrimalDualTriplet) -> np.ndarray:
    """Return ∇_x L(w) = ∇f(x) − 𝒥G(x)*Y + ∇h(x) z."""
    w.check(inst)
    return inst.grad_f(w.x) - adjoint_JG(inst, w.x, w.Y) + inst.jac_h(w.x) @ w.z


def hess_xx_lagrangian(inst: NsdpInstance, w: PrimalDualTriplet) -> np.ndarray:
    """Return ∇²_xx L(w) = ∇²f(x) − [Y∙∂²G/∂x_i∂x_j] + Σ z_k ∇²h_k(x)."""
    w.check(inst)
    return sym(inst.hess_f(w.x) - inst.hessG_contract(w.x, w.Y) + inst.hessh_contract(w.x, w.z))


@dataclass
class KktReport:
    """Residuals of the KKT conditions at a triplet."""

    stationarity_norm: float
    comp_norm: float
    feas_h_norm: float
    min_eig_G: float
    min_eig_Y: float

    def is_kkt(self, tol: float = KKT_TOL) -> bool:
        """Return True when all norms are at most tol and both minimum eigenvalues at least −tol."""
        return (
            max(self.stationarity_norm, self.comp_norm, self.feas_h_norm) <= tol
            and min(self.min_eig_G, self.min_eig_Y) >= -tol
        )


def kkt_residual(inst: NsdpInstance, w: PrimalDualTriplet) -> KktReport:
    """Evaluate the KKT residuals ‖∇_xL‖, ‖G(x)Y‖_F, ‖h(x)‖ and the cone eigenvalues."""
    w.check(inst)
    G = inst.eval_G(w.x)
    return KktReport(
        stationarity_norm=float(np.linalg.norm(grad_x_lagrangian(inst, w))),
        comp_norm=float(np.linalg.norm(G @ w.Y)),
        feas_h_norm=float(np.linalg.norm(inst.eval_h(w.x))),
        min_eig_G=min_eig(G),
        min_eig_Y=min_eig(w.Y),
    )


class BkktResidual(NamedTuple):
    """Stationarity, complementarity and feasibility residuals of the barrier-KKT system."""

    stationarity: float
    complementarity: float
    feasibility: float

    @property
    def max(self) -> float:
        """Return the largest of the three components."""
        return max(self.stationarity, self.complementarity, self.feasibility)


def check_interior(inst: NsdpInstance, w: PrimalDualTriplet, G: Optional[np.ndarray] = None) -> np.ndarray:
    """Return G(x) after checking that G(x) and Y are positive definite.

    Raises:
        InteriorityError: If G(x) or Y is not positive definite.

    """
    G = inst.eval_G(w.x) if G is None else G
    if not chol_psd_test(G):
        value = min_eig(G)
        raise InteriorityError(f"{inst.name}: G(x) is not positive definite (lambda_min = {value:.3e})", value=value)
    if not chol_psd_test(w.Y):
        value = min_eig(w.Y)
        raise InteriorityError(f"{inst.name}: Y is not positive definite (lambda_min = {value:.3e})", value=value)
    return G


def bkkt_residual(inst: NsdpInstance, w: PrimalDualTriplet, mu: float, form: str = "product") -> BkktResidual:
    """Evaluate the barrier-KKT residuals at barrier parameter mu.

    Args:
        inst (NsdpInstance): The instance.
        w (PrimalDualTriplet): Interior triplet.
        mu (float): Positive barrier parameter.
        form (str): "product" measures ‖G(x)Y − μI‖_F, "symmetric" measures ‖(G(x)Y + YG(x))/2 − μI‖_F.

    Returns:
        BkktResidual: The three residual norms.

    Raises:
        ValidationError: If mu is not positive or form is unknown.
        InteriorityError: If G(x) or Y is not positive definite.

    """
    if not mu > 0:
        raise ValidationError(f"barrier parameter must be positive, got {mu}")
    if form not in ("product", "symmetric"):
        raise ValidationError(f"unknown residual form '{form}' (expected 'product' or 'symmetric')")
    w.check(inst)
    G = check_interior(inst, w)
    GY = G @ w.Y
    if form == "symmetric":
        GY = sym(GY)
    return BkktResidual(
        stationarity=float(np.linalg.norm(grad_x_lagrangian(inst, w))),
        complementarity=float(np.linalg.norm(GY - mu * np.eye(inst.m))),
        feasibility=float(np.linalg.norm(inst.eval_h(w.x))),
    )


@dataclass
class EigenSplit:
    """Eigen-split P* = [E*, F*] of a positive semidefinite G(x*).

    Attributes:
        Pstar (np.ndarray): Orthogonal eigenvector matrix, ascending eigenvalues.
        Estar (np.ndarray): m×(m−r*) basis of the null eigenspace.
        Fstar (np.ndarray): m×r* basis of the positive eigenspace.
        rstar (int): Numerical rank of G(x*).
        eigvals (np.ndarray): Ascending eigenvalues.
        rank_tol_used (float): Relative rank tolerance used to split.

    """

    Pstar: np.ndarray
    Estar: np.ndarray
    Fstar: np.ndarray
    rstar: int
    eigvals: np.ndarray
    rank_tol_used: float

    @property
    def k(self) -> int:
        """Return m − r*, the dimension of the null eigenspace."""
        return self.Estar.shape[1]

    def block_of(self, M: np.ndarray, ind: str) -> np.ndarray:
        """Return the EE, EF, FE or FF block of M."""
        return block_of(M, self, ind)

    def rotated(self, R: np.ndarray) -> "EigenSplit":
        """Return the split with E* replaced by E*·R for an orthogonal R of order m − r*."""
        R = np.asarray(R, dtype=float)
        if R.shape != (self.k, self.k):
            raise ValidationError(f"rotation has shape {R.shape}, expected ({self.k}, {self.k})")
        Estar = self.Estar @ R
        return EigenSplit(np.hstack([Estar, self.Fstar]), Estar, self.Fstar.copy(), self.rstar,
                          self.eigvals.copy(), self.rank_tol_used)


def eigen_split(Gstar: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> EigenSplit:
    """Split the eigenvectors of G(x*) into null (E*) and positive (F*) parts.

    Eigenvalues at least rank_tol·max(1, λ_max) count toward the rank r*.

    Raises:
        DomainError: If Gstar is materially indefinite.

    """
    values, Q = eigh_ascending(Gstar)
    cutoff = rank_tol * max(1.0, float(values[-1]))
    if values[0] < -cutoff:
        raise DomainError(f"G(x*) is indefinite (lambda_min = {values[0]:.3e})", value=float(values[0]))
    rstar = int(np.sum(values >= cutoff))
    k = values.size - rstar
    return EigenSplit(Q, Q[:, :k], Q[:, k:], rstar, values, rank_tol)


def block_of(M: np.ndarray, split: EigenSplit, ind: str) -> np.ndarray:
    """Return a block of M in the basis of the split.

    Args:
        M (np.ndarray): m×m matrix.
        split (EigenSplit): The eigen-split.
        ind (str): One of "EE", "EF", "FE", "FF".

    Returns:
        np.ndarray: E*ᵀME*, E*ᵀMF*, F*ᵀME* or F*ᵀMF*.

    Raises:
        ValidationError: On a shape mismatch or unknown block name.

    """
    M = np.asarray(M, dtype=float)
    m = split.Pstar.shape[0]
    if M.shape != (m, m):
        raise ValidationError(f"matrix has shape {M.shape}, expected ({m}, {m})")
    bases = {"E": split.Estar, "F": split.Fstar}
    if len(ind) != 2 or ind[0] not in bases or ind[1] not in bases:
        raise ValidationError(f"unknown block '{ind}' (expected EE, EF, FE or FF)")
    return bases[ind[0]].T @ M @ bases[ind[1]]


def dG_block_stack(inst: NsdpInstance, x, split: EigenSplit, ind: str) -> np.ndarray:
    """Return the named block of every 𝒢_i(x) as an array of shape (n, ·, ·)."""
    return np.stack([block_of(D, split, ind) for D in inst.dG_stack(x)])


def in_tangent_cone(X: np.ndarray, split: EigenSplit, tol: float = 1e-10) -> bool:
    """Return True if the EE block of X is positive semidefinite within tol."""
    if split.k == 0:
        return True
    return min_eig(block_of(X, split, "EE")) >= -tol


def _check_split_at(inst: NsdpInstance, xstar: np.ndarray, split: EigenSplit) -> np.ndarray:
    Gstar = inst.eval_G(xstar)
    gap = float(np.linalg.norm(block_of(Gstar, split, "EE")))
    tol = max(split.rank_tol_used, 1e-10) * max(1.0, float(np.linalg.norm(Gstar)))
    if split.k and gap > tol:
        raise ValidationError(f"{inst.name}: eigen-split does not match the point (‖E*ᵀG(x*)E*‖ = {gap:.3e})")
    return Gstar


def sigma_term(inst: NsdpInstance, xstar, Y: np.ndarray, split: EigenSplit) -> np.ndarray:
    """Return the sigma term Ω(x*, Y) with entries 2 Y∙𝒢_i G(x*)† 𝒢_j.

    Args:
        inst (NsdpInstance): The instance.
        xstar: Point at which the split was computed.
        Y (np.ndarray): Positive semidefinite multiplier.
        split (EigenSplit): Eigen-split of G(x*).

    Returns:
        np.ndarray: Symmetric n×n matrix.

    Raises:
        ValidationError: If the split was not computed at xstar.
        DomainError: If Y is significantly indefinite.

    """
    xstar = inst.check_point(xstar)
    Gstar = _check_split_at(inst, xstar, split)
    Y = np.asarray(Y, dtype=float)
    if min_eig(Y) < -split.rank_tol_used * max(1.0, float(np.max(np.abs(Y)))):
        raise DomainError("sigma term requires a positive semidefinite multiplier", value=min_eig(Y))
    Gp = pinv_psd(Gstar, split.rank_tol_used)
    D = inst.dG_stack(xstar)
    T = np.einsum("iab,bc->iac", D, Gp)
    return sym(2.0 * np.einsum("ab,ibc,jca->ij", Y, T, D))


class SigmaForms(NamedTuple):
    """Three evaluations of the sigma quadratic form dᵀΩd."""

    definition: float
    trace_form: float
    norm_form: float


def sigma_quad_forms(Gstar: np.ndarray, dG: np.ndarray, Y: np.ndarray, split: EigenSplit) -> SigmaForms:
    """Evaluate the sigma quadratic form for one direction in three algebraically equal ways.

    For Y = E* Y^EE E*ᵀ the values 2 Y∙ΔG G(x*)† ΔG, 2 tr(Y^EE ΔG^EF (G^FF)⁻¹ ΔG^FE) and
    2 ‖(Y^EE)^{1/2} ΔG^EF (G^FF)^{−1/2}‖²_F coincide.

    Args:
        Gstar (np.ndarray): G(x*).
        dG (np.ndarray): The directional derivative ΔG(x*; d).
        Y (np.ndarray): Multiplier supported on the null eigenspace of G(x*).
        split (EigenSplit): Eigen-split of G(x*).

    Returns:
        SigmaForms: The three values.

    """
    definition = 2.0 * float(np.sum(Y * (dG @ pinv_psd(Gstar, split.rank_tol_used) @ dG)))
    if split.rstar == 0 or split.k == 0:
        return SigmaForms(definition, 0.0, 0.0)
    Yee = block_of(Y, split, "EE")
    dEF = block_of(dG, split, "EF")
    Gff = block_of(Gstar, split, "FF")
    Gff_vals, Gff_vecs = eigh_ascending(Gff)
    Gff_inv = sym((Gff_vecs / Gff_vals) @ Gff_vecs.T)
    Gff_inv_sqrt = sym((Gff_vecs / np.sqrt(Gff_vals)) @ Gff_vecs.T)
    trace_form = 2.0 * float(np.trace(Yee @ dEF @ Gff_inv @ dEF.T))
    norm_form = 2.0 * float(np.linalg.norm(sqrt_psd(Yee, split.rank_tol_used) @ dEF @ Gff_inv_sqrt) ** 2)
    return SigmaForms(definition, trace_form, norm_form)


def sigma_quad(inst: NsdpInstance, xstar, Y: np.ndarray, split: EigenSplit, d) -> SigmaForms:
    """Evaluate dᵀΩ(x*, Y)d by definition and by both block formulas."""
    xstar = inst.check_point(xstar)
    Gstar = _check_split_at(inst, xstar, split)
    return sigma_quad_forms(Gstar, delta_G(inst, xstar, d), Y, split)


@dataclass
class ConditionOptions:
    """Options of ``condition_report``.

    Attributes:
        rank_tol (float): Relative singular value cutoff for numerical ranks.
        kkt_tol (float): Tolerance for accepting a supplied multiplier.
        n_cone_samples (int): Number of accepted critical-cone samples.
        mfcq_restarts (int): Restarts of the witness search.
        mfcq_iters (int): Iterations per restart.
        seed (int): Seed of every random draw.
        mfcq_witness (Optional[np.ndarray]): User-supplied witness direction to verify.

    """

    rank_tol: float = DEFAULT_RANK_TOL
    kkt_tol: float = KKT_TOL
    n_cone_samples: int = 256
    mfcq_restarts: int = 100
    mfcq_iters: int = 100
    seed: int = 0
    mfcq_witness: Optional[np.ndarray] = None


@dataclass
class ScResult:
    """Strict complementarity evidence."""

    holds: bool
    rank_G: int
    rank_Y: int
    min_eig_sum: float


@dataclass
class NcResult:
    """Nondegeneracy evidence: rank of the v_ij vectors with the columns of ∇h(x*)."""

    holds: bool
    rank: int
    required: int


@dataclass
class MfcqResult:
    """MFCQ evidence.

    ``status`` is "holds", "fails" (∇h(x*) rank deficient or supplied witness invalid) or "unknown"
    (the witness search failed).
    """

    jac_full_rank: bool
    status: str
    witness_d: Optional[np.ndarray] = None
    witness_min_eig: float = float("nan")

    @property
    def holds(self) -> Optional[bool]:
        """Return True, False, or None when unknown."""
        return {"holds": True, "fails": False}.get(self.status)


@dataclass
class SsoscResult:
    """Sampled evidence for the strong second-order sufficient condition."""

    subspace_min_eig: List[float]
    cone_samples_min: float
    multipliers_tested: int
    cone_samples_accepted: int
    subspace_dim: int

    @property
    def consistent(self) -> bool:
        """Return True if every measured curvature is positive (empty sets count as positive)."""
        return all(v > 0 for v in self.subspace_min_eig) and self.cone_samples_min > 0


@dataclass
class ConditionReport:
    """Condition checks at a KKT point."""

    sc: ScResult
    nc: NcResult
    mfcq: MfcqResult
    ssosc: SsoscResult
    rstar: int
    rank_tol: float
    notes: List[str] = field(default_factory=list)

    def outcomes(self) -> Dict[str, Optional[bool]]:
        """Return the four boolean outcomes (MFCQ may be None when unknown)."""
        return {"sc": self.sc.holds, "nc": self.nc.holds, "mfcq": self.mfcq.holds, "ssosc": self.ssosc.consistent}

    def matches(self, expected: Dict[str, Any]) -> bool:
        """Return True if the outcomes equal the expected ones."""
        outcomes = self.outcomes()
        return all(outcomes[key] == value for key, value in expected.items())


def nc_matrix(inst: NsdpInstance, xstar, split: EigenSplit) -> np.ndarray:
    """Return the n×(k(k+1)/2 + s) matrix with columns v_ij (i ≤ j) followed by ∇h_k(x*).

    The column v_ij has entries e_iᵀ 𝒢_l(x*) e_j for the columns e_i of E*.
    """
    xstar = inst.check_point(xstar)
    k = split.k
    ee = dG_block_stack(inst, xstar, split, "EE")
    rows, cols = np.triu_indices(k)
    V = ee[:, rows, cols] if k else np.zeros((inst.n, 0))
    return np.hstack([V, inst.jac_h(xstar)])


def _check_nc(inst: NsdpInstance, xstar, split: EigenSplit, rank_tol: float) -> NcResult:
    V = nc_matrix(inst, xstar, split)
    required = svec_dim(split.k) + inst.s
    rank = numerical_rank(V, rank_tol)
    return NcResult(holds=rank == required, rank=rank, required=required)


def _check_sc(Gstar: np.ndarray, split: EigenSplit, Y: np.ndarray, rank_tol: float) -> ScResult:
    values = np.linalg.eigvalsh(sym(Y))
    rank_Y = int(np.sum(values >= rank_tol * max(1.0, float(values[-1]))))
    sum_min = min_eig(Gstar + Y)
    holds = split.rstar + rank_Y == Gstar.shape[0] and sum_min > rank_tol
    return ScResult(holds=bool(holds), rank_G=split.rstar, rank_Y=rank_Y, min_eig_sum=sum_min)


def _mfcq_value(Gstar: np.ndarray, D: np.ndarray, d: np.ndarray) -> Tuple[float, np.ndarray]:
    values, vectors = eigh_ascending(Gstar + np.einsum("i,ikl->kl", d, D))
    return float(values[0]), vectors[:, 0]


def _check_mfcq(inst: NsdpInstance, xstar, Gstar: np.ndarray, options: ConditionOptions) -> MfcqResult:
    J = inst.jac_h(xstar)
    jac_full_rank = numerical_rank(J, options.rank_tol) == inst.s
    if not jac_full_rank:
        return MfcqResult(False, "fails")
    D = inst.dG_stack(xstar)
    if options.mfcq_witness is not None:
        d = inst.check_point(options.mfcq_witness)
        value, _ = _mfcq_value(Gstar, D, d)
        ok = value > 0 and float(np.linalg.norm(J.T @ d)) <= options.kkt_tol * max(1.0, float(np.linalg.norm(d)))
        return MfcqResult(True, "holds" if ok else "fails", d, value)
    Z = null_space_basis(J.T, options.rank_tol, ncols=inst.n) if inst.s else np.eye(inst.n)
    value0, _ = _mfcq_value(Gstar, D, np.zeros(inst.n))
    if value0 > 0:
        return MfcqResult(True, "holds", np.zeros(inst.n), value0)
    if Z.shape[1] == 0:
        return MfcqResult(True, "unknown", None, value0)
    DZ = np.einsum("ij,ikl->jkl", Z, D)
    rng = np.random.default_rng(options.seed)
    best_value, best_d = -np.inf, None
    for _ in range(options.mfcq_restarts):
        c = rng.standard_normal(Z.shape[1])
        c /= np.linalg.norm(c)
        for t in range(options.mfcq_iters):
            value, u = _mfcq_value(Gstar, DZ, c)
            if value > best_value:
                best_value, best_d = value, Z @ c
            if value > options.rank_tol:
                return MfcqResult(True, "holds", Z @ c, value)
            g = np.einsum("k,jkl,l->j", u, DZ, u)
            g_norm = float(np.linalg.norm(g))
            if g_norm == 0.0:
                break
            c = c + (0.5 / np.sqrt(t + 1.0)) * g / g_norm
            c_norm = float(np.linalg.norm(c))
            if c_norm > 1.0:
                c /= c_norm
    logger.info(f"{inst.name}: MFCQ witness search failed (best lambda_min {best_value:.3e})")
    return MfcqResult(True, "unknown", best_d, best_value)


def _check_ssosc(
    inst: NsdpInstance,
    xstar: np.ndarray,
    split: EigenSplit,
    multipliers: Sequence[Tuple[np.ndarray, np.ndarray]],
    options: ConditionOptions,
) -> SsoscResult:
    n = inst.n
    grad_f = inst.grad_f(xstar)
    J = inst.jac_h(xstar)
    equality_rows = np.vstack([grad_f[None, :], J.T])
    ee = dG_block_stack(inst, xstar, split, "EE")
    ee_rows = np.stack([svec(B) for B in ee], axis=1) if split.k else np.zeros((0, n))
    subspace = null_space_basis(np.vstack([equality_rows, ee_rows]), options.rank_tol, ncols=n)
    cone_space = null_space_basis(equality_rows, options.rank_tol, ncols=n)

    rng = np.random.default_rng(options.seed)
    samples = []
    attempts = 0
    max_attempts = 20 * options.n_cone_samples
    if cone_space.shape[1] > 0:
        while len(samples) < options.n_cone_samples and attempts < max_attempts:
            attempts += 1
            if subspace.shape[1] > 0 and attempts % 2 == 0:
                c = rng.standard_normal(subspace.shape[1])
                d = subspace @ (c / np.linalg.norm(c))
            else:
                c = rng.standard_normal(cone_space.shape[1])
                d = cone_space @ (c / np.linalg.norm(c))
            if split.k == 0 or min_eig(np.einsum("i,ikl->kl", d, ee)) >= -options.rank_tol:
                samples.append(d)

    subspace_mins = []
    cone_min = float("inf")
    for Y, z in multipliers:
        w = PrimalDualTriplet(xstar, Y, z)
        H = hess_xx_lagrangian(inst, w) + sigma_term(inst, xstar, Y, split)
        if subspace.shape[1] > 0:
            subspace_mins.append(min_eig(subspace.T @ H @ subspace))
        else:
            subspace_mins.append(float("inf"))
        for d in samples:
            cone_min = min(cone_min, float(d @ H @ d))
    return SsoscResult(subspace_mins, cone_min, len(multipliers), len(samples), int(subspace.shape[1]))


def condition_report(
    inst: NsdpInstance,
    xstar,
    multiplier_samples: Sequence[Tuple[np.ndarray, np.ndarray]],
    options: Optional[ConditionOptions] = None,
    split: Optional[EigenSplit] = None,
) -> ConditionReport:
    """Check SC, NC, MFCQ and SSOSC at a KKT point.

    SSOSC over the whole multiplier set is not decidable by sampling: the report states whether the
    supplied multipliers and the sampled critical-cone directions are consistent with it.

    Args:
        inst (NsdpInstance): The instance.
        xstar: The KKT point.
        multiplier_samples: Pairs (Y, z); those failing the KKT check are ignored.
        options (Optional[ConditionOptions]): Tolerances, sample counts and seed.
        split (Optional[EigenSplit]): Eigen-split of G(x*); computed when omitted.

    Returns:
        ConditionReport: Outcomes with their numeric evidence.

    Raises:
        ValidationError: If no supplied multiplier makes xstar a KKT point.

    """
    options = options or ConditionOptions()
    xstar = inst.check_point(xstar)
    valid = []
    for Y, z in multiplier_samples:
        w = PrimalDualTriplet(xstar, Y, z)
        w.check(inst)
        if kkt_residual(inst, w).is_kkt(options.kkt_tol):
            valid.append((w.Y, w.z))
    if not valid:
        raise ValidationError(f"{inst.name}: no supplied multiplier satisfies the KKT conditions at x*")
    Gstar = inst.eval_G(xstar)
    split = split or eigen_split(Gstar, options.rank_tol)
    sc_results = [_check_sc(Gstar, split, Y, options.rank_tol) for Y, _ in valid]
    sc = next((r for r in sc_results if r.holds), sc_results[0])
    report = ConditionReport(
        sc=sc,
        nc=_check_nc(inst, xstar, split, options.rank_tol),
        mfcq=_check_mfcq(inst, xstar, Gstar, options),
        ssosc=_check_ssosc(inst, xstar, split, valid, options),
        rstar=split.rstar,
        rank_tol=options.rank_tol,
    )
    if len(valid) < len(multiplier_samples):
        report.notes.append(f"{len(multiplier_samples) - len(valid)} multiplier(s) rejected by the KKT check")
    logger.info(f"{inst.name}: conditions {report.outcomes()}")
    return report
