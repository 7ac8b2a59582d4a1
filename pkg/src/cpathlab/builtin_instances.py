"""Builtin NSDP instances with hand-derived oracles for the cpathlab experiments.

Each factory returns a ``BuiltinInstance`` bundling a ``QmiInstance`` with what is known about its
KKT point x* = 0 and its central path.

- deg-twin: n=1, m=2, s=0; f = x₁, G = x₁I₂. The barrier gradient 1 − 2μ/x₁ vanishes at x(μ) = 2μ, so
  Y(μ) = μG⁻¹ = I/2 for every μ. The multiplier set is {Y ⪰ 0 : tr Y = 1} with center I/2, and
  ΔG(ξ) = ξI = (I/2)⁻¹ gives ξ* = 2.
- deg-cross: n=2, m=2, s=0; f = x₁ + x₂², G = [[x₁, x₂], [x₂, x₁]]. Symmetry forces x₂ = 0 on the path,
  then x₁ = 2μ and Y(μ) = I/2; the multipliers are diag(a, 1 − a), center I/2, ξ* = (2, 0).
- deg-mixed: n=3, m=3, s=1; f = x₁ + x₃², G = [[x₁, 0, x₃], [0, x₁, 0], [x₃, 0, 1 + x₂]], h = x₂.
  det G = x₁(x₁ − x₃²) on h = 0, so x(μ) = (2μ, 0, 0), Y(μ) = diag(½, ½, μ) and the x₂ row of
  stationarity gives z(μ) = μ. Y_a = diag(½, ½, 0), z_a = 0, ξ* = (2, 0, 0); G(x*) has rank one so
  the sigma term is active.
- nondeg-control: n=3, m=2, s=0; f = x₁ + x₃, G = [[x₁, x₂], [x₂, x₃]]. x(μ) = (μ, 0, μ), Y(μ) = I and
  ξ* = (1, 0, 1). Nondegeneracy holds, which makes it the contrast instance.
- deg-curve: deg-mixed with G₃₃ = 1 + x₂ + x₂² and h = x₂ − x₃². The path has no closed form; the
  data at x* = 0 coincide with deg-mixed, so Y_a, z_a and ξ* do too.
- rand-qmi-<seed>-<k>: seeded QMI with x* = 0, m = k + 2, planted rank two, n = k(k+1)/2 and one linear
  equality. Strict complementarity, MFCQ and the second-order condition hold by construction while
  nondegeneracy fails by counting. Only x* and a planted multiplier are known in closed form.
"""

import re
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from cpathlab.exceptions import InstanceNotFoundError, ValidationError
from cpathlab.kkt import PrimalDualTriplet
from cpathlab.nsdp_model import QmiInstance, is_interior, qmi_instance
from cpathlab.symlin import sym

RAND_QMI_PATTERN = re.compile(r"^rand-qmi-(\d+)-(\d+)$")

DEGENERATE_BUILTINS = ("deg-twin", "deg-cross", "deg-mixed", "deg-curve")
CONTROL_BUILTINS = ("nondeg-control",)


@dataclass
class BuiltinOracle:
    """Known solution data of a builtin instance.

    Attributes:
        xstar (Optional[np.ndarray]): The KKT point; None for instances traced without a known limit.
        x0 (np.ndarray): Interior start for the first barrier solve at μ = 1e-1.
        w_of_mu (Optional[Callable[[float], PrimalDualTriplet]]): Closed-form central path, if known.
        Y_a (Optional[np.ndarray]): Analytic center of the multiplier set, if known.
        z_a (Optional[np.ndarray]): Its equality multiplier.
        xi_star (Optional[np.ndarray]): Limiting direction, if known.
        multipliers (List[Tuple[np.ndarray, np.ndarray]]): Known KKT multipliers (Y, z) at x*.
        expected_conditions (Dict[str, bool]): Expected outcomes of sc, nc, mfcq and ssosc.

    """

    xstar: Optional[np.ndarray]
    x0: np.ndarray
    w_of_mu: Optional[Callable[[float], PrimalDualTriplet]] = None
    Y_a: Optional[np.ndarray] = None
    z_a: Optional[np.ndarray] = None
    xi_star: Optional[np.ndarray] = None
    multipliers: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    expected_conditions: Dict[str, bool] = field(default_factory=dict)

    def x_of_mu(self, mu: float) -> Optional[np.ndarray]:
        """Return the closed-form x(μ) or None."""
        return None if self.w_of_mu is None else self.w_of_mu(mu).x


@dataclass
class BuiltinInstance:
    """A registry entry: the instance and its oracle."""

    name: str
    instance: QmiInstance
    oracle: BuiltinOracle

    @property
    def degenerate(self) -> bool:
        """Return True when nondegeneracy is expected to fail."""
        return self.oracle.expected_conditions.get("nc") is False


DEGENERATE_CONDITIONS = {"sc": True, "nc": False, "mfcq": True, "ssosc": True}


def _unit(m: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((m, m))
    E[i, j] = E[j, i] = 1.0
    return E


def deg_twin() -> BuiltinInstance:
    """Build deg-twin: G = x₁I₂, f = x₁."""
    inst = qmi_instance("deg-twin", np.zeros((2, 2)), [np.eye(2)], [1.0],
                        description="f = x1, G = x1*I2; NC fails, x(mu) = 2 mu")
    oracle = BuiltinOracle(
        xstar=np.zeros(1),
        x0=np.ones(1),
        w_of_mu=lambda mu: PrimalDualTriplet([2.0 * mu], 0.5 * np.eye(2), np.zeros(0)),
        Y_a=0.5 * np.eye(2),
        z_a=np.zeros(0),
        xi_star=np.array([2.0]),
        multipliers=[(0.5 * np.eye(2), np.zeros(0)), (np.diag([0.3, 0.7]), np.zeros(0))],
        expected_conditions=dict(DEGENERATE_CONDITIONS),
    )
    return BuiltinInstance("deg-twin", inst, oracle)


def deg_cross() -> BuiltinInstance:
    """Build deg-cross: G = [[x₁, x₂], [x₂, x₁]], f = x₁ + x₂²."""
    inst = qmi_instance("deg-cross", np.zeros((2, 2)), [np.eye(2), _unit(2, 0, 1)], [1.0, 0.0],
                        Q=np.diag([0.0, 2.0]),
                        description="f = x1 + x2^2, G = [[x1, x2], [x2, x1]]; NC fails, x(mu) = (2 mu, 0)")
    oracle = BuiltinOracle(
        xstar=np.zeros(2),
        x0=np.array([1.0, 0.0]),
        w_of_mu=lambda mu: PrimalDualTriplet([2.0 * mu, 0.0], 0.5 * np.eye(2), np.zeros(0)),
        Y_a=0.5 * np.eye(2),
        z_a=np.zeros(0),
        xi_star=np.array([2.0, 0.0]),
        multipliers=[(0.5 * np.eye(2), np.zeros(0)), (np.diag([0.8, 0.2]), np.zeros(0))],
        expected_conditions=dict(DEGENERATE_CONDITIONS),
    )
    return BuiltinInstance("deg-cross", inst, oracle)


def _mixed_blocks():
    A0 = np.diag([0.0, 0.0, 1.0])
    A = [np.diag([1.0, 1.0, 0.0]), np.diag([0.0, 0.0, 1.0]), _unit(3, 0, 2)]
    return A0, A


def _mixed_oracle() -> BuiltinOracle:
    Y_a = np.diag([0.5, 0.5, 0.0])
    return BuiltinOracle(
        xstar=np.zeros(3),
        x0=np.array([1.0, 0.0, 0.0]),
        Y_a=Y_a,
        z_a=np.zeros(1),
        xi_star=np.array([2.0, 0.0, 0.0]),
        multipliers=[
            (Y_a, np.zeros(1)),
            (np.array([[0.6, 0.1, 0.0], [0.1, 0.4, 0.0], [0.0, 0.0, 0.0]]), np.zeros(1)),
        ],
        expected_conditions=dict(DEGENERATE_CONDITIONS),
    )


def deg_mixed() -> BuiltinInstance:
    """Build deg-mixed: rank-one G(x*) with one linear equality."""
    A0, A = _mixed_blocks()
    inst = qmi_instance("deg-mixed", A0, A, [1.0, 0.0, 0.0], Q=np.diag([0.0, 0.0, 2.0]), H=[[0.0, 1.0, 0.0]],
                        description="f = x1 + x3^2, G = [[x1,0,x3],[0,x1,0],[x3,0,1+x2]], h = x2; NC fails")
    oracle = _mixed_oracle()
    oracle.w_of_mu = lambda mu: PrimalDualTriplet([2.0 * mu, 0.0, 0.0], np.diag([0.5, 0.5, mu]), [mu])
    return BuiltinInstance("deg-mixed", inst, oracle)


def deg_curve() -> BuiltinInstance:
    """Build deg-curve: deg-mixed with curved G₃₃ and h."""
    A0, A = _mixed_blocks()
    B = np.zeros((3, 3, 3, 3))
    B[1, 1] = 2.0 * _unit(3, 2, 2)
    M = [np.diag([0.0, 0.0, -2.0])]
    inst = qmi_instance("deg-curve", A0, A, [1.0, 0.0, 0.0], Q=np.diag([0.0, 0.0, 2.0]), H=[[0.0, 1.0, 0.0]],
                        B=B, M=M,
                        description="deg-mixed with G33 = 1 + x2 + x2^2 and h = x2 - x3^2; numeric path")
    return BuiltinInstance("deg-curve", inst, _mixed_oracle())


def nondeg_control() -> BuiltinInstance:
    """Build nondeg-control: G = [[x₁, x₂], [x₂, x₃]], f = x₁ + x₃."""
    A = [_unit(2, 0, 0), _unit(2, 0, 1), _unit(2, 1, 1)]
    inst = qmi_instance("nondeg-control", np.zeros((2, 2)), A, [1.0, 0.0, 1.0],
                        description="f = x1 + x3, G = [[x1, x2], [x2, x3]]; NC holds, x(mu) = (mu, 0, mu)")
    oracle = BuiltinOracle(
        xstar=np.zeros(3),
        x0=np.array([2.0, 0.0, 2.0]),
        w_of_mu=lambda mu: PrimalDualTriplet([mu, 0.0, mu], np.eye(2), np.zeros(0)),
        Y_a=np.eye(2),
        z_a=np.zeros(0),
        xi_star=np.array([1.0, 0.0, 1.0]),
        multipliers=[(np.eye(2), np.zeros(0))],
        expected_conditions={"sc": True, "nc": True, "mfcq": True, "ssosc": True},
    )
    return BuiltinInstance("nondeg-control", inst, oracle)


def rand_qmi(seed: int, k: int) -> BuiltinInstance:
    """Build the seeded degenerate QMI instance rand-qmi-<seed>-<k>.

    Args:
        seed (int): Seed of ``numpy.random.default_rng``.
        k (int): Dimension of the null eigenspace of G(x*), at least 2.

    Returns:
        BuiltinInstance: Instance with x* = 0 and a planted multiplier.

    Raises:
        ValidationError: If k < 2. With k = 1 the single equality leaves null(H) = {0} at n = 1, and for
            any larger n MFCQ implies NC, so no degenerate instance of this shape exists.

    """
    if k < 2:
        raise ValidationError(f"rand-qmi needs k >= 2 (with k = 1 MFCQ implies NC), got {k}")
    rng = np.random.default_rng(seed)
    r = 2
    m = k + r
    n = k * (k + 1) // 2
    P, _ = np.linalg.qr(rng.standard_normal((m, m)))
    E, F = P[:, :k], P[:, k:]
    A0 = sym(F @ np.diag(1.0 + rng.uniform(size=r)) @ F.T)

    H = rng.standard_normal((1, n))
    d0 = rng.standard_normal(n)
    d0 -= (H[0] @ d0) / (H[0] @ H[0]) * H[0]
    d0 /= np.linalg.norm(d0)
    A = np.stack([sym(rng.standard_normal((m, m))) for _ in range(n)])
    # plant ΔG^EE(x*; d0) = I so that d0 is an MFCQ direction
    S = np.einsum("i,ikl->kl", d0, np.einsum("ak,iab,bl->ikl", E, A, E))
    correction = E @ (np.eye(k) - S) @ E.T
    A = np.stack([sym(A[i] + d0[i] * correction) for i in range(n)])

    B = np.zeros((n, n, m, m))
    for i in range(n):
        for j in range(i, n):
            block = 0.1 * sym(F @ sym(rng.standard_normal((r, r))) @ F.T)
            B[i, j] = B[j, i] = block

    W = rng.standard_normal((k, k))
    Y0 = sym(E @ (W @ W.T + np.eye(k)) @ E.T)
    Y0 /= np.trace(Y0)
    c = np.array([np.sum(Ai * Y0) for Ai in A])
    R = rng.standard_normal((n, n)) / np.sqrt(n)
    Q = np.eye(n) + R @ R.T

    name = f"rand-qmi-{seed}-{k}"
    inst = qmi_instance(name, A0, A, c, Q=Q, H=H, B=B,
                        description=f"seeded degenerate QMI (seed {seed}, k {k}); NC fails by counting")
    t = 1.0
    while not is_interior(inst, t * d0):
        t *= 0.5
        if t < 1e-12:
            raise ValidationError(f"{name}: no interior start along the planted direction")
    oracle = BuiltinOracle(
        xstar=np.zeros(n),
        x0=t * d0,
        multipliers=[(Y0, np.zeros(1))],
        expected_conditions=dict(DEGENERATE_CONDITIONS),
    )
    return BuiltinInstance(name, inst, oracle)


BUILTIN_FACTORIES: Dict[str, Callable[[], BuiltinInstance]] = {
    "deg-twin": deg_twin,
    "deg-cross": deg_cross,
    "deg-mixed": deg_mixed,
    "nondeg-control": nondeg_control,
    "deg-curve": deg_curve,
}


def parse_rand_qmi(name: str) -> Optional[Tuple[int, int]]:
    """Return (seed, k) for a name of the form rand-qmi-<seed>-<k>, otherwise None."""
    match = RAND_QMI_PATTERN.match(name)
    return (int(match.group(1)), int(match.group(2))) if match else None


def builtin_instance(name: str) -> BuiltinInstance:
    """Build the builtin instance with the given name.

    Raises:
        InstanceNotFoundError: If the name is unknown; the message lists the registry.

    """
    if name in BUILTIN_FACTORIES:
        return BUILTIN_FACTORIES[name]()
    parsed = parse_rand_qmi(name)
    if parsed is not None:
        return rand_qmi(*parsed)
    raise InstanceNotFoundError(
        f"Unknown instance '{name}' (registry: {', '.join(BUILTIN_FACTORIES)}, rand-qmi-<seed>-<k>)"
    )
