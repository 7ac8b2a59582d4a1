"""NSDP problem model for cpathlab.

An NSDP minimizes f(x) subject to G(x) ⪰ 0 and h(x) = 0 with f: ℝⁿ → ℝ, G: ℝⁿ → 𝕊^m and h: ℝⁿ → ℝˢ.
Instances are bundles of derivative oracles (``NsdpInstance``); ``QmiInstance`` is the concrete
quadratic-matrix-inequality family that can be stored on disk.

Provides the instance classes, the directional derivative ΔG(x;d) and the adjoint 𝒥G(x)*Y,
a central finite-difference checker for all oracles, and ``load_instance`` which resolves registry
names and QMI files.
"""

import logging
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from cpathlab.exceptions import InstanceNotFoundError, ValidationError
from cpathlab.symlin import SYM_TOL, chol_psd_test, sym

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
FD_TOL = 1e-5
FD_ABS_FLOOR = 1e-8


class NsdpInstance(ABC):
    """Derivative-oracle bundle defining one NSDP.

    Subclasses implement the oracles below. All oracles must be deterministic and free of side effects
    so that several workers may evaluate the same instance concurrently.

    Attributes:
        name (str): Instance name.
        description (str): Free-text description.
        n (int): Primal dimension.
        m (int): Matrix order of G.
        s (int): Number of equality constraints.

    """

    def __init__(self, name: str, n: int, m: int, s: int, description: str = ""):
        """Initialize the instance dimensions and metadata."""
        if n < 1 or m < 1 or s < 0:
            raise ValidationError(f"{name}: invalid dimensions n={n}, m={m}, s={s}")
        self.name = name
        self.description = description
        self.n = n
        self.m = m
        self.s = s

    @property
    def metadata(self) -> Dict[str, Any]:
        """Return the instance metadata as a dictionary."""
        return {"name": self.name, "description": self.description, "n": self.n, "m": self.m, "s": self.s}

    @abstractmethod
    def eval_f(self, x: np.ndarray) -> float:
        """Evaluate the objective f(x)."""

    @abstractmethod
    def grad_f(self, x: np.ndarray) -> np.ndarray:
        """Return ∇f(x), a vector of length n."""

    @abstractmethod
    def hess_f(self, x: np.ndarray) -> np.ndarray:
        """Return ∇²f(x), a symmetric n×n matrix."""

    @abstractmethod
    def eval_G(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the matrix constraint G(x), a symmetric m×m matrix."""

    @abstractmethod
    def dG(self, x: np.ndarray, i: int) -> np.ndarray:
        """Return the partial derivative ∂G(x)/∂x_i."""

    @abstractmethod
    def hessG_contract(self, x: np.ndarray, W: np.ndarray) -> np.ndarray:
        """Return the n×n matrix with entries W∙∂²G(x)/∂x_i∂x_j."""

    @abstractmethod
    def eval_h(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the equality constraints h(x), a vector of length s."""

    @abstractmethod
    def jac_h(self, x: np.ndarray) -> np.ndarray:
        """Return ∇h(x), the n×s matrix whose columns are the gradients ∇h_k(x)."""

    @abstractmethod
    def hessh_contract(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Return Σ_k z_k ∇²h_k(x)."""

    def dG_stack(self, x: np.ndarray) -> np.ndarray:
        """Return all partial derivatives of G as an array of shape (n, m, m)."""
        return np.stack([self.dG(x, i) for i in range(self.n)])

    def lagrangian_value(self, x: np.ndarray, Y: np.ndarray, z: np.ndarray) -> float:
        """Evaluate the Lagrangian f(x) − G(x)∙Y + h(x)ᵀz."""
        return float(self.eval_f(x) - np.sum(self.eval_G(x) * Y) + self.eval_h(x) @ z)

    def check_point(self, x) -> np.ndarray:
        """Return x as a float vector of length n.

        Raises:
            ValidationError: If x has the wrong shape.

        """
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.n,):
            raise ValidationError(f"{self.name}: point has shape {x.shape}, expected ({self.n},)")
        return x


@dataclass
class QmiData:
    """Coefficients of a quadratic matrix inequality instance.

    Defines G(x) = A0 + Σ x_i A^i + ½ Σ_ij x_i x_j B^{ij}, f(x) = c0 + cᵀx + ½ xᵀQx and
    h(x) = b + Hx + ½ (xᵀ M_k x)_k. ``B`` and ``M`` are optional; omitting them gives affine G and h.
    """

    name: str
    A0: np.ndarray
    A: np.ndarray
    c: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    b: np.ndarray
    c0: float = 0.0
    B: Optional[np.ndarray] = None
    M: Optional[np.ndarray] = None
    description: str = ""
    dims: Dict[str, int] = field(default_factory=dict)

    def validate(self) -> "QmiData":
        """Check shapes and symmetry of every block and symmetrize within tolerance.

        Returns:
            QmiData: self, with float arrays.

        Raises:
            ValidationError: Naming the offending block with expected and actual shapes.

        """
        self.A0 = _sym_block(self.A0, "G.A0")
        m = self.A0.shape[0]
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 3 or A.shape[1:] != (m, m) or A.shape[0] < 1:
            raise ValidationError(f"G.A: expected shape (n, {m}, {m}), got {A.shape}")
        n = A.shape[0]
        self.A = np.stack([_sym_block(A[i], f"G.A[{i}]") for i in range(n)])
        self.c = _vector(self.c, n, "f.c")
        self.Q = _sym_block(self.Q, "f.Q", n)
        H = np.asarray(self.H, dtype=float)
        if H.size == 0:
            H = H.reshape(0, n)
        if H.ndim != 2 or H.shape[1] != n:
            raise ValidationError(f"h.H: expected shape (s, {n}), got {H.shape}")
        s = H.shape[0]
        self.H = H
        self.b = _vector(self.b, s, "h.b")
        self.c0 = float(self.c0)
        if self.B is not None:
            B = np.asarray(self.B, dtype=float)
            if B.shape != (n, n, m, m):
                raise ValidationError(f"G.B: expected shape ({n}, {n}, {m}, {m}), got {B.shape}")
            for i in range(n):
                for j in range(n):
                    B[i, j] = _sym_block(B[i, j], f"G.B[{i}][{j}]")
            gap = float(np.max(np.abs(B - B.transpose(1, 0, 2, 3))))
            if gap > SYM_TOL * max(1.0, float(np.max(np.abs(B)))):
                raise ValidationError(f"G.B: B[i][j] must equal B[j][i] (gap {gap:.3e})")
            self.B = 0.5 * (B + B.transpose(1, 0, 2, 3))
        if self.M is not None:
            M = np.asarray(self.M, dtype=float)
            if M.shape != (s, n, n):
                raise ValidationError(f"h.M: expected shape ({s}, {n}, {n}), got {M.shape}")
            self.M = np.stack([_sym_block(M[k], f"h.M[{k}]") for k in range(s)]) if s else M
        self.dims = {"n": n, "m": m, "s": s}
        return self


def _sym_block(X, name: str, order: Optional[int] = None) -> np.ndarray:
    M = np.asarray(X, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or (order is not None and M.shape[0] != order):
        expected = f"({order}, {order})" if order is not None else "a square matrix"
        raise ValidationError(f"{name}: expected {expected}, got shape {M.shape}")
    gap = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if gap > SYM_TOL * max(1.0, float(np.max(np.abs(M))) if M.size else 1.0):
        raise ValidationError(f"{name}: block is not symmetric (max |M_ij - M_ji| = {gap:.3e})")
    return sym(M)


def _vector(v, size: int, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float).ravel()
    if arr.shape != (size,):
        raise ValidationError(f"{name}: expected shape ({size},), got {np.shape(v)}")
    return arr


class QmiInstance(NsdpInstance):
    """NSDP instance with quadratic f, G and h given by ``QmiData``.

    All derivatives are exact.
    """

    def __init__(self, data: QmiData):
        """Initialize the instance from validated coefficients."""
        data.validate()
        super().__init__(data.name, data.dims["n"], data.dims["m"], data.dims["s"], data.description)
        self.data = data

    @classmethod
    def from_data(cls, data: QmiData) -> "QmiInstance":
        """Build an instance from QMI coefficients."""
        return cls(data)

    def to_data(self) -> QmiData:
        """Return the QMI coefficients of this instance."""
        return self.data

    def eval_f(self, x):
        """Evaluate f(x) = c0 + cᵀx + ½xᵀQx."""
        x = self.check_point(x)
        d = self.data
        return float(d.c0 + d.c @ x + 0.5 * x @ d.Q @ x)

    def grad_f(self, x):
        """Return c + Qx."""
        x = self.check_point(x)
        return self.data.c + self.data.Q @ x

    def hess_f(self, x):
        """Return Q."""
        self.check_point(x)
        return self.data.Q.copy()

    def eval_G(self, x):
        """Evaluate G(x) = A0 + Σ x_i A^i + ½ Σ x_i x_j B^{ij}."""
        x = self.check_point(x)
        d = self.data
        G = d.A0 + np.einsum("i,ikl->kl", x, d.A)
        if d.B is not None:
            G = G + 0.5 * np.einsum("i,j,ijkl->kl", x, x, d.B)
        return sym(G)

    def dG_stack(self, x):
        """Return 𝒢_i(x) = A^i + Σ_j x_j B^{ij} for every i."""
        x = self.check_point(x)
        d = self.data
        if d.B is None:
            return d.A.copy()
        return d.A + np.einsum("j,ijkl->ikl", x, d.B)

    def dG(self, x, i):
        """Return 𝒢_i(x)."""
        return self.dG_stack(x)[i]

    def hessG_contract(self, x, W):
        """Return [W∙B^{ij}]_{ij}."""
        self.check_point(x)
        d = self.data
        if d.B is None:
            return np.zeros((self.n, self.n))
        return sym(np.einsum("ijkl,kl->ij", d.B, np.asarray(W, dtype=float)))

    def eval_h(self, x):
        """Evaluate h(x) = b + Hx + ½(xᵀM_k x)_k."""
        x = self.check_point(x)
        d = self.data
        h = d.b + d.H @ x
        if d.M is not None and self.s:
            h = h + 0.5 * np.einsum("i,kij,j->k", x, d.M, x)
        return h

    def jac_h(self, x):
        """Return the n×s matrix with columns H_k + M_k x."""
        x = self.check_point(x)
        d = self.data
        J = d.H.T.copy()
        if d.M is not None and self.s:
            J = J + np.einsum("kij,j->ik", d.M, x)
        return J

    def hessh_contract(self, x, z):
        """Return Σ_k z_k M_k."""
        self.check_point(x)
        d = self.data
        if d.M is None or not self.s:
            return np.zeros((self.n, self.n))
        return sym(np.einsum("k,kij->ij", np.asarray(z, dtype=float), d.M))


def qmi_instance(
    name: str,
    A0,
    A,
    c,
    Q=None,
    c0: float = 0.0,
    H=None,
    b=None,
    B=None,
    M=None,
    description: str = "",
) -> QmiInstance:
    """Build a QmiInstance, filling omitted objective and constraint blocks with zeros.

    Args:
        name (str): Instance name.
        A0: Constant term of G.
        A: Sequence of the n linear coefficients A^i of G.
        c: Linear objective coefficients.
        Q: Quadratic objective coefficients (zero when omitted).
        c0 (float): Objective constant.
        H: s×n linear part of h (no equality constraints when omitted).
        b: Constant part of h (zero when omitted).
        B: Optional n×n table of quadratic coefficients of G.
        M: Optional list of s quadratic coefficient matrices of h.
        description (str): Free-text description.

    Returns:
        QmiInstance: The validated instance.

    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    H = np.zeros((0, n)) if H is None else np.atleast_2d(np.asarray(H, dtype=float))
    s = H.shape[0]
    data = QmiData(
        name=name,
        A0=np.asarray(A0, dtype=float),
        A=A,
        c=np.asarray(c, dtype=float),
        Q=np.zeros((n, n)) if Q is None else np.asarray(Q, dtype=float),
        H=H,
        b=np.zeros(s) if b is None else np.asarray(b, dtype=float),
        c0=c0,
        B=B,
        M=M,
        description=description,
    )
    return QmiInstance(data)


def delta_G(inst: NsdpInstance, x, d) -> np.ndarray:
    """Return the directional derivative ΔG(x;d) = Σ_i d_i 𝒢_i(x).

    Raises:
        ValidationError: If x or d has the wrong shape.

    """
    x = inst.check_point(x)
    d = inst.check_point(d)
    return sym(np.einsum("i,ikl->kl", d, inst.dG_stack(x)))


def adjoint_JG(inst: NsdpInstance, x, Y) -> np.ndarray:
    """Return 𝒥G(x)*Y = [𝒢_1(x)∙Y, ..., 𝒢_n(x)∙Y].

    Raises:
        ValidationError: If x or Y has the wrong shape.

    """
    x = inst.check_point(x)
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (inst.m, inst.m):
        raise ValidationError(f"{inst.name}: multiplier has shape {Y.shape}, expected ({inst.m}, {inst.m})")
    return np.einsum("ikl,kl->i", inst.dG_stack(x), Y)


def is_interior(inst: NsdpInstance, x) -> bool:
    """Return True iff G(x) is positive definite."""
    return chol_psd_test(inst.eval_G(x))


@dataclass
class FdCheckEntry:
    """Outcome of the finite-difference check of one oracle.

    Attributes:
        oracle (str): Oracle name.
        max_error (float): Max absolute deviation divided by max(1, max |oracle value|).
        max_abs_error (float): Max absolute deviation.
        passed (bool): Whether the deviation is within tolerance.

    """

    oracle: str
    max_error: float
    max_abs_error: float
    passed: bool


@dataclass
class FdCheckReport:
    """Finite-difference report for one instance at one point."""

    instance: str
    x: np.ndarray
    step: float
    tol: float
    entries: List[FdCheckEntry]

    @property
    def all_passed(self) -> bool:
        """Return True if every oracle passed."""
        return all(entry.passed for entry in self.entries)

    def entry(self, oracle: str) -> FdCheckEntry:
        """Return the entry of the named oracle."""
        return next(e for e in self.entries if e.oracle == oracle)


def _central_diff(func, x: np.ndarray, step: float) -> np.ndarray:
    """Stack (func(x + h e_i) − func(x − h e_i)) / 2h along a new leading axis."""
    out = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        out.append((np.asarray(func(xp), dtype=float) - np.asarray(func(xm), dtype=float)) / (xp[i] - xm[i]))
    return np.stack(out)


def _compare(name: str, estimate: np.ndarray, oracle: np.ndarray, tol: float) -> FdCheckEntry:
    estimate = np.asarray(estimate, dtype=float)
    oracle = np.asarray(oracle, dtype=float)
    if oracle.size == 0:
        return FdCheckEntry(name, 0.0, 0.0, True)
    if estimate.shape != oracle.shape or not np.all(np.isfinite(oracle)):
        return FdCheckEntry(name, float("inf"), float("inf"), False)
    diff = float(np.max(np.abs(estimate - oracle)))
    scale = max(1.0, float(np.max(np.abs(oracle))))
    error = diff / scale
    return FdCheckEntry(name, error, diff, bool(error <= tol or diff <= FD_ABS_FLOOR))


def fd_check(inst: NsdpInstance, x, step: float = FD_STEP, tol: float = FD_TOL, seed: int = 0) -> FdCheckReport:
    """Compare every oracle of an instance with central finite differences.

    The contraction oracles are checked with W = I plus a seeded random symmetric W, and with z = 1 plus a
    seeded random z.

    Args:
        inst (NsdpInstance): Instance to check.
        x: Point at which G is evaluable.
        step (float): Finite-difference step.
        tol (float): Relative tolerance.
        seed (int): Seed of the random contraction weights.

    Returns:
        FdCheckReport: One entry per oracle; failures are entries, not exceptions.

    """
    x = inst.check_point(x)
    if step <= 0:
        raise ValidationError(f"finite-difference step must be positive, got {step}")
    rng = np.random.default_rng(seed)
    n, m, s = inst.n, inst.m, inst.s
    W_rand = sym(rng.standard_normal((m, m)))
    z_rand = rng.standard_normal(s)
    entries = [
        _compare("grad_f", _central_diff(lambda y: np.array(inst.eval_f(y)), x, step), inst.grad_f(x), tol),
        _compare("dG", _central_diff(inst.eval_G, x, step), inst.dG_stack(x), tol),
        _compare("hess_f", _central_diff(inst.grad_f, x, step), inst.hess_f(x), tol),
    ]
    for label, W in (("hessG_contract[I]", np.eye(m)), ("hessG_contract[W]", W_rand)):
        estimate = _central_diff(lambda y: np.einsum("ikl,kl->i", inst.dG_stack(y), W), x, step)
        entries.append(_compare(label, estimate, inst.hessG_contract(x, W), tol))
    jac_estimate = _central_diff(inst.eval_h, x, step).reshape(n, s)
    entries.append(_compare("jac_h", jac_estimate, inst.jac_h(x), tol))
    for label, z in (("hessh_contract[1]", np.ones(s)), ("hessh_contract[z]", z_rand)):
        estimate = _central_diff(lambda y: inst.jac_h(y) @ z, x, step)
        entries.append(_compare(label, estimate, inst.hessh_contract(x, z), tol))
    report = FdCheckReport(inst.name, x, step, tol, entries)
    for entry in entries:
        if not entry.passed:
            logger.warning(f"{inst.name}: finite-difference check failed for {entry.oracle} "
                           f"(error {entry.max_error:.3e})")
    return report


def load_instance(source: str, registry=None) -> NsdpInstance:
    """Load an NSDP instance from a registry name or a QMI JSON file.

    Args:
        source (str): A builtin name (e.g. "deg-twin", "rand-qmi-3-2") or the path of a QMI JSON file.
        registry (Optional[InstanceRegistry]): Registry to resolve names against. Defaults to the builtins.

    Returns:
        NsdpInstance: The loaded instance.

    Raises:
        InstanceNotFoundError: If source is neither an existing file nor a registry name.
        ValidationError: If the file violates the QMI format.
        RuntimeError: If the file cannot be read or parsed.

    """
    from cpathlab.instance_registry import default_registry
    from cpathlab.json_instance_store import JSONInstanceStore

    registry = registry if registry is not None else default_registry()
    if os.path.isfile(source):
        return JSONInstanceStore().load(source)
    if source in registry:
        return registry[source].instance
    raise InstanceNotFoundError(
        f"Unknown instance '{source}': not a file and not in the registry "
        f"({', '.join(registry.names())}, rand-qmi-<seed>-<k>)"
    )
