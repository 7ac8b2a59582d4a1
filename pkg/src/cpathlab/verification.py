"""Verification runner class for the central path experiments in cpathlab.

Provides the VerificationRunner class, which traces the central path of a builtin instance, computes
its limit data (eigen-split at x*, analytic center of the multiplier set, limiting direction ξ*) and
evaluates the asymptotic claims about the path as a list of experiments over the μ grid.

Θ and O(μ) statements are checked through bounded-ratio proxies on the grid. The tangent-vs-ξ* gap
is measured and reported, never asserted.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.stats import kendalltau

from cpathlab.analytic import (
    AnalyticCenterResult,
    XiStarResult,
    analytic_center,
    parametrize_multiplier_set,
    sample_multipliers,
    xi_star,
)
from cpathlab.barrier import BarrierSolver, lift_to_triplet, psi_eval
from cpathlab.builtin_instances import BuiltinInstance
from cpathlab.central_path import (
    PathTrace,
    PathTracer,
    assemble_A,
    in_region,
    pdipm_corrector,
    predictor_error,
    reduced_form_min_eig,
    tangent,
)
from cpathlab.config import DEFAULT_TOLERANCES
from cpathlab.exceptions import ConvergenceError, CpathLabError, ValidationError
from cpathlab.instance_registry import default_registry
from cpathlab.kkt import (
    ConditionOptions,
    EigenSplit,
    PrimalDualTriplet,
    block_of,
    condition_report,
    eigen_split,
    sigma_quad,
)
from cpathlab.nsdp_model import is_interior
from cpathlab.progress import Progress, ProgressStatus, add_progress_step, calculate_percent
from cpathlab.symlin import chol_psd_test, null_space_basis

MU_CEILING = 1e-2
CAPTURE_CEILING = 1e-3
THETA_RATIO_MAX = 10.0
BLOCK_FACTOR = 10.0
BLOCK_FLOOR = 1e-3
FINAL_DIST_MAX = 1e-4
KENDALL_MIN = 0.7
FLAT_TOL = 1e-12
NOISE_FACTOR = 64.0
LIMIT_SINGULAR_MAX = 1e-10
LIMIT_REGULAR_MIN = 1e-6
UNIQUENESS_STARTS = 8
UNIQUENESS_ATTEMPTS = 32
UNIQUENESS_TOL = 1e-8
MANIFOLD_ZERO = 1e-14
MANIFOLD_EXPONENT = 1.9
RATIO_RANGE = (2.5, 6.0)
EXACT_TOL = 1e-10
SIGMA_DIRECTIONS = 10
SIGMA_TOL = 1e-10
ORACLE_TOL = 1e-8
IDENTITY_TOL = 1e-9

TRACE_COLUMNS_HEAD = ["step", "mu"]
TRACE_COLUMNS_TAIL = [
    "norm_d", "mu_over_normd", "dist_Y_Ya", "dist_z_za", "yEF_over_mu", "yFF_over_mu", "dir_err",
    "sigmin_A", "redform_mineig", "bkkt_res", "newton_iters",
]

_NAN = float("nan")


def trace_columns(n: int) -> List[str]:
    """Return the trace CSV header for an instance with n variables."""
    return TRACE_COLUMNS_HEAD + [f"x_{i}" for i in range(n)] + TRACE_COLUMNS_TAIL


@dataclass
class VerificationSchedule:
    """Geometric μ schedule of a verification run."""

    mu0: float = 1e-1
    sigma: float = 0.1
    mu_min: float = 1e-7

    def to_dict(self) -> Dict[str, float]:
        """Return the schedule as a plain dict."""
        return {"mu0": self.mu0, "sigma": self.sigma, "mu_min": self.mu_min}


@dataclass
class LimitData:
    """Limit quantities at x* used by the experiments.

    ``errors`` maps "center" or "xi_star" to the message of the failure that prevented the computation.
    """

    xstar: np.ndarray
    split: EigenSplit
    center: Optional[AnalyticCenterResult] = None
    xi: Optional[XiStarResult] = None
    errors: Dict[str, str] = field(default_factory=dict)

    @property
    def Y_a(self) -> Optional[np.ndarray]:
        """Return the analytic center, if computed."""
        return None if self.center is None else self.center.Y_a

    @property
    def z_a(self) -> Optional[np.ndarray]:
        """Return the equality multiplier of the analytic center, if computed."""
        return None if self.center is None else self.center.z_a

    @property
    def xi_star(self) -> Optional[np.ndarray]:
        """Return ξ*, if computed."""
        return None if self.xi is None else self.xi.xi


@dataclass
class ExperimentRecord:
    """Outcome of one experiment.

    Attributes:
        name (str): Experiment name.
        passed (Optional[bool]): True or False for asserted experiments, None when skipped or reported only.
        series (Dict[str, List[float]]): Measured values, usually one entry per grid point.
        bound (Dict[str, Any]): Limits checked and summary values.
        status (str): "pass", "fail", "skipped" or "reported".
        message (str): Reason for a skip or a failure.

    """

    name: str
    passed: Optional[bool]
    series: Dict[str, List[float]] = field(default_factory=dict)
    bound: Dict[str, Any] = field(default_factory=dict)
    status: str = ""
    message: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = {True: "pass", False: "fail", None: "reported"}[self.passed]

    def to_dict(self) -> Dict[str, Any]:
        """Return the record as a JSON-ready dict."""
        record = {"name": self.name, "pass": self.passed, "status": self.status, "series": self.series,
                  "bound": self.bound}
        if self.message:
            record["message"] = self.message
        return record


@dataclass
class VerificationReport:
    """Experiments of one verification run."""

    instance: str
    schedule: VerificationSchedule
    rho: float
    seed: int
    experiments: List[ExperimentRecord] = field(default_factory=list)
    trace: Optional[PathTrace] = None
    rows: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        """Return True iff every asserted experiment passed."""
        return all(e.passed for e in self.experiments if e.passed is not None)

    def experiment(self, name: str) -> ExperimentRecord:
        """Return the record with the given name."""
        for e in self.experiments:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        """Return the report as a JSON-ready dict (the trace itself is not included)."""
        schedule = self.schedule.to_dict()
        schedule.update({"rho": self.rho, "seed": self.seed})
        return {
            "instance": self.instance,
            "schedule": schedule,
            "experiments": [e.to_dict() for e in self.experiments],
            "overall": self.overall,
        }


class _Skip(Exception):
    """Raised inside an experiment that cannot run."""


@dataclass
class _Context:
    builtin: BuiltinInstance
    trace: PathTrace
    limits: LimitData
    rows: List[Dict[str, Any]]
    rho: float
    seed: int
    tolerances: Dict[str, float]
    barrier_solver: BarrierSolver

    @property
    def inst(self):
        return self.builtin.instance

    @property
    def mus(self) -> np.ndarray:
        return self.trace.mus

    def column(self, key: str) -> np.ndarray:
        return np.array([row[key] for row in self.rows], dtype=float)

    def need_center(self) -> AnalyticCenterResult:
        if self.limits.center is None:
            raise _Skip(f"analytic center unavailable: {self.limits.errors.get('center', 'not computed')}")
        return self.limits.center

    def need_xi(self) -> np.ndarray:
        if self.limits.xi is None:
            reason = self.limits.errors.get("xi_star") or self.limits.errors.get("center", "not computed")
            raise _Skip(f"limiting direction unavailable: {reason}")
        if not np.any(self.limits.xi.xi):
            raise _Skip("limiting direction is zero")
        return self.limits.xi.xi


def _below(mus: np.ndarray, ceiling: float) -> np.ndarray:
    return mus <= ceiling * (1.0 + 1e-9)


def _floats(values) -> List[float]:
    return [float(v) for v in values]


def _trend(mus: np.ndarray, values: np.ndarray, floors: Optional[np.ndarray] = None) -> Tuple[bool, float]:
    """Return whether values decrease with μ in the Kendall sense (or are flat at zero) and the statistic.

    Values at or below their entry of ``floors`` are rounding noise and count as zero.
    """
    values = np.asarray(values, dtype=float)
    if floors is not None:
        values = np.where(values <= floors, 0.0, values)
    if np.all(np.abs(values) <= FLAT_TOL):
        return True, _NAN
    if len(values) < 2 or not np.all(np.isfinite(values)):
        return False, _NAN
    tau, _ = kendalltau(mus, values)
    tau = float(tau)
    return bool(np.isfinite(tau) and tau >= KENDALL_MIN), tau


def compute_limits(builtin: BuiltinInstance, trace: Optional[PathTrace] = None,
                   rank_tol: float = DEFAULT_TOLERANCES["rank_tol"]) -> LimitData:
    """Compute the eigen-split, the analytic center and ξ* at the oracle's x*.

    The center is warm-started from the EE block of the dual iterate at the smallest traced μ when a
    trace is given. Failures are recorded in ``errors`` instead of raised.
    """
    inst = builtin.instance
    xstar = inst.check_point(builtin.oracle.xstar)
    split = eigen_split(inst.eval_G(xstar), rank_tol)
    limits = LimitData(xstar, split)
    warm = None
    if trace is not None and trace.points and split.k:
        warm = block_of(trace.points[-1].w.Y, split, "EE")
    try:
        limits.center = analytic_center(inst, xstar, split, warm_start=warm)
    except CpathLabError as e:
        limits.errors["center"] = str(e)
        return limits
    try:
        limits.xi = xi_star(inst, xstar, split, limits.center.Y_a, limits.center.z_a, rank_tol)
    except CpathLabError as e:
        limits.errors["xi_star"] = str(e)
    return limits


def trace_metrics(builtin: BuiltinInstance, trace: PathTrace,
                  limits: Optional[LimitData] = None) -> List[Dict[str, Any]]:
    """Build the trace CSV rows: one dict per path point keyed by ``trace_columns(n)``.

    Columns that need a missing limit quantity (or an unknown x*) are NaN.
    """
    inst = builtin.instance
    if limits is None and builtin.oracle.xstar is not None:
        limits = compute_limits(builtin, trace)
    xstar, split = (limits.xstar, limits.split) if limits is not None else (None, None)
    Y_a, z_a, xi = (limits.Y_a, limits.z_a, limits.xi_star) if limits is not None else (None, None, None)
    rows = []
    for step, point in enumerate(trace.points):
        mu, w = point.mu, point.w
        norm_d = float(np.linalg.norm(w.x - xstar)) if xstar is not None else _NAN
        row: Dict[str, Any] = {"step": step, "mu": mu}
        row.update({f"x_{i}": float(v) for i, v in enumerate(w.x)})
        try:
            redform = reduced_form_min_eig(inst, w)
        except CpathLabError:
            redform = _NAN
        row.update({
            "norm_d": norm_d,
            "mu_over_normd": mu / norm_d if norm_d > 0 else _NAN,
            "dist_Y_Ya": float(np.linalg.norm(w.Y - Y_a)) if Y_a is not None else _NAN,
            "dist_z_za": float(np.linalg.norm(w.z - z_a)) if z_a is not None else _NAN,
            "yEF_over_mu": float(np.linalg.norm(block_of(w.Y, split, "EF"))) / mu if split is not None else _NAN,
            "yFF_over_mu": float(np.linalg.norm(block_of(w.Y, split, "FF"))) / mu if split is not None else _NAN,
            "dir_err": float(np.linalg.norm((w.x - xstar) / mu - xi)) if xi is not None else _NAN,
            "sigmin_A": float(point.diagnostics.get("sigmin_A", _NAN)),
            "redform_mineig": redform,
            "bkkt_res": float(point.diagnostics.get("bkkt_res", _NAN)),
            "newton_iters": int(point.diagnostics.get("newton_iters", 0)),
        })
        rows.append(row)
    return rows


def _path_oracle(ctx: _Context) -> ExperimentRecord:
    oracle = ctx.builtin.oracle
    if oracle.w_of_mu is None:
        raise _Skip("no closed-form path")
    errors = []
    for point in ctx.trace.points:
        expected = oracle.x_of_mu(point.mu)
        errors.append(float(np.linalg.norm(point.w.x - expected)) / max(1.0, float(np.linalg.norm(expected))))
    return ExperimentRecord("path_oracle", max(errors) <= ORACLE_TOL,
                            {"mu": _floats(ctx.mus), "rel_error": errors}, {"max_rel_error": ORACLE_TOL})


def _theta_ratio(ctx: _Context) -> ExperimentRecord:
    mask = _below(ctx.mus, MU_CEILING)
    if not mask.any():
        raise _Skip(f"no grid point with mu <= {MU_CEILING:g}")
    theta = ctx.column("mu_over_normd")
    values = theta[mask]
    ratio = float(values.max() / values.min()) if np.all(np.isfinite(values)) and values.min() > 0 else _NAN
    return ExperimentRecord("theta_ratio", bool(np.isfinite(ratio) and ratio <= THETA_RATIO_MAX),
                            {"mu": _floats(ctx.mus), "mu_over_normd": _floats(theta)},
                            {"max_ratio": THETA_RATIO_MAX, "measured_ratio": ratio, "mu_ceiling": MU_CEILING})


def _block_decay(ctx: _Context) -> ExperimentRecord:
    if ctx.limits.split.k == 0:
        raise _Skip("G(x*) is nonsingular")
    mask = _below(ctx.mus, MU_CEILING)
    if not mask.any():
        raise _Skip(f"no grid point with mu <= {MU_CEILING:g}")
    ref = int(np.argmax(mask))
    series = {"mu": _floats(ctx.mus)}
    bound: Dict[str, Any] = {"factor": BLOCK_FACTOR, "floor": BLOCK_FLOOR, "reference_mu": float(ctx.mus[ref])}
    passed = True
    for key in ("yEF_over_mu", "yFF_over_mu"):
        values = ctx.column(key)
        limit = BLOCK_FACTOR * max(float(values[ref]), BLOCK_FLOOR)
        series[key] = _floats(values)
        bound[key] = limit
        passed = passed and bool(np.all(values[mask] <= limit))
    return ExperimentRecord("block_decay", passed, series, bound)


def _dual_convergence(ctx: _Context) -> ExperimentRecord:
    ctx.need_center()
    dist = ctx.column("dist_Y_Ya") + ctx.column("dist_z_za")
    trend_ok, tau = _trend(ctx.mus, dist)
    final = float(dist[-1])
    return ExperimentRecord("dual_convergence", trend_ok and final <= FINAL_DIST_MAX,
                            {"mu": _floats(ctx.mus), "distance": _floats(dist)},
                            {"final_max": FINAL_DIST_MAX, "final": final, "kendall_min": KENDALL_MIN,
                             "kendall_tau": tau})


def _direction_error(ctx: _Context) -> ExperimentRecord:
    ctx.need_xi()
    err = ctx.column("dir_err")
    final = float(err[-1])
    return ExperimentRecord("direction_error", bool(final <= FINAL_DIST_MAX),
                            {"mu": _floats(ctx.mus), "dir_err": _floats(err)},
                            {"final_max": FINAL_DIST_MAX, "final": final})


def _newton_matrix(ctx: _Context) -> ExperimentRecord:
    mask = _below(ctx.mus, MU_CEILING)
    if not mask.any():
        raise _Skip(f"no grid point with mu <= {MU_CEILING:g}")
    sigmin = ctx.column("sigmin_A")
    redform = ctx.column("redform_mineig")
    passed = bool(np.all(sigmin[mask] > 0) and np.all(redform[mask] > 0))
    return ExperimentRecord("newton_matrix", passed,
                            {"mu": _floats(ctx.mus), "sigmin_A": _floats(sigmin), "redform_mineig": _floats(redform)},
                            {"mu_ceiling": MU_CEILING, "min_sigmin_A": float(sigmin[mask].min()),
                             "min_redform": float(redform[mask].min())})


def _limit_singularity(ctx: _Context) -> ExperimentRecord:
    center = ctx.need_center()
    wa = PrimalDualTriplet(ctx.limits.xstar, center.Y_a, center.z_a)
    sv = scipy.linalg.svdvals(assemble_A(ctx.inst, wa).matrix)
    sigmin = float(sv[-1])
    expected_nc = ctx.builtin.oracle.expected_conditions.get("nc")
    if expected_nc is None:
        return ExperimentRecord("limit_singularity", None, {}, {"sigmin_A": sigmin})
    passed = sigmin > LIMIT_REGULAR_MIN if expected_nc else sigmin <= LIMIT_SINGULAR_MAX
    bound = {"sigmin_A": sigmin, "expected_nc": expected_nc}
    bound["min" if expected_nc else "max"] = LIMIT_REGULAR_MIN if expected_nc else LIMIT_SINGULAR_MAX
    return ExperimentRecord("limit_singularity", bool(passed), {}, bound)


def _region_capture(ctx: _Context) -> ExperimentRecord:
    xi = ctx.need_xi()
    mask = _below(ctx.mus, CAPTURE_CEILING)
    if not mask.any():
        raise _Skip(f"no grid point with mu <= {CAPTURE_CEILING:g}")
    xstar = ctx.limits.xstar
    ratios, inside = [], []
    for point in ctx.trace.points:
        radius = ctx.rho * point.mu * float(np.linalg.norm(xi))
        ratios.append(float(np.linalg.norm(xstar + point.mu * xi - point.w.x)) / radius)
        inside.append(in_region(point.w.x, xstar, xi, ctx.rho, point.mu))
    passed = all(flag for flag, m in zip(inside, mask) if m)
    return ExperimentRecord("region_capture", passed, {"mu": _floats(ctx.mus), "dist_over_radius": ratios},
                            {"rho": ctx.rho, "mu_ceiling": CAPTURE_CEILING})


def _uniqueness(ctx: _Context) -> ExperimentRecord:
    xi = ctx.need_xi()
    inst, xstar = ctx.inst, ctx.limits.xstar
    mu = 10.0 * ctx.trace.mu_min
    rng = np.random.default_rng(ctx.seed)
    Z = null_space_basis(inst.jac_h(xstar).T, ncols=inst.n) if inst.s else np.eye(inst.n)
    if Z.shape[1] == 0:
        raise _Skip("the equality constraints leave no free direction")
    center = xstar + mu * xi
    tube = ctx.rho * mu * float(np.linalg.norm(xi))
    solutions, attempts = [], 0
    while len(solutions) < UNIQUENESS_STARTS and attempts < UNIQUENESS_ATTEMPTS:
        attempts += 1
        u = Z @ rng.standard_normal(Z.shape[1])
        u /= np.linalg.norm(u)
        radius = 0.5 * tube * rng.uniform(0.2, 1.0)
        for _ in range(10):
            if is_interior(inst, center + radius * u):
                break
            radius *= 0.5
        else:
            continue
        result = ctx.barrier_solver.solve(inst, mu, center + radius * u)
        solutions.append(result.x)
    if len(solutions) < UNIQUENESS_STARTS:
        raise _Skip(f"only {len(solutions)} of {UNIQUENESS_STARTS} starts inside the tube are interior "
                    f"after {attempts} draws")
    xs = np.stack(solutions)
    spread = max(float(np.linalg.norm(a - b)) for a in xs for b in xs)
    scale = max(1.0, float(np.linalg.norm(xs[0])))
    return ExperimentRecord("uniqueness", bool(spread <= UNIQUENESS_TOL * scale),
                            {"distance_to_first": [float(np.linalg.norm(x - xs[0])) for x in xs]},
                            {"mu": mu, "starts": len(solutions), "attempts": attempts,
                             "max_spread": UNIQUENESS_TOL * scale, "spread": spread})


def _manifold_probe(ctx: _Context) -> ExperimentRecord:
    xi = ctx.need_xi()
    inst, xstar = ctx.inst, ctx.limits.xstar
    values = [float(np.linalg.norm(inst.eval_h(xstar + mu * xi))) if inst.s else 0.0 for mu in ctx.mus]
    exponents = []
    for k in range(len(values) - 1):
        a, b = values[k], values[k + 1]
        if a > MANIFOLD_ZERO and b > MANIFOLD_ZERO:
            exponents.append(float(np.log(a / b) / np.log(ctx.mus[k] / ctx.mus[k + 1])))
    passed = all(v <= MANIFOLD_ZERO for v in values) or not exponents or min(exponents) >= MANIFOLD_EXPONENT
    return ExperimentRecord("manifold_probe", bool(passed), {"mu": _floats(ctx.mus), "h_norm": values},
                            {"zero_tol": MANIFOLD_ZERO, "exponent_min": MANIFOLD_EXPONENT,
                             "exponents": exponents})


def _tangent_vs_xi(ctx: _Context) -> ExperimentRecord:
    xi = ctx.need_xi()
    gaps = []
    for point in ctx.trace.points:
        try:
            gaps.append(float(np.linalg.norm(tangent(ctx.inst, point.w).dx - xi)))
        except CpathLabError:
            gaps.append(_NAN)
    return ExperimentRecord("tangent_vs_xi", None, {"mu": _floats(ctx.mus), "gap": gaps}, {})


def _barrier_objective_monotone(ctx: _Context) -> ExperimentRecord:
    if ctx.limits.split.k == 0:
        raise _Skip("G(x*) is nonsingular")
    values = [psi_eval(ctx.inst, point.w.x, point.mu).value for point in ctx.trace.points]
    passed = all(b - a <= 1e-10 * max(1.0, abs(a)) for a, b in zip(values, values[1:]))
    return ExperimentRecord("barrier_objective_monotone", passed, {"mu": _floats(ctx.mus), "psi": values}, {})


def _scaled_inverse_bounded(ctx: _Context) -> ExperimentRecord:
    center = ctx.need_center()
    scale = float(np.linalg.norm(center.Y_a))
    limit = 10.0 * max(1.0, scale)
    norms, dists, floors = [], [], []
    for point in ctx.trace.points:
        G = ctx.inst.eval_G(point.w.x)
        S = point.mu * scipy.linalg.inv(G)
        norms.append(float(np.linalg.norm(S)))
        dists.append(float(np.linalg.norm(S - center.Y_a)))
        # inversion error plus the centrality gap of the traced point
        floors.append(NOISE_FACTOR * np.finfo(float).eps * float(np.linalg.cond(G)) * scale
                      + 2.0 * float(np.linalg.norm(S - point.w.Y)) + FLAT_TOL)
    trend_ok, tau = _trend(ctx.mus, np.array(dists), np.array(floors))
    passed = max(norms) <= limit and trend_ok and dists[-1] <= FINAL_DIST_MAX
    return ExperimentRecord("scaled_inverse_bounded", bool(passed),
                            {"mu": _floats(ctx.mus), "norm": norms, "dist_to_center": dists, "noise_floor": floors},
                            {"max_norm": limit, "final_max": FINAL_DIST_MAX, "kendall_tau": tau})


def _tight_point(ctx: _Context, w0: PrimalDualTriplet, mu: float) -> PrimalDualTriplet:
    try:
        return pdipm_corrector(ctx.inst, w0, mu, tol=1e-13, max_iter=30).w
    except ConvergenceError:
        return pdipm_corrector(ctx.inst, w0, mu, tol=ctx.tolerances["corrector_tol"]).w


def _point_at(ctx: _Context, w: PrimalDualTriplet, wdot, dmu: float, mu: float) -> PrimalDualTriplet:
    pred = PrimalDualTriplet(w.x - dmu * wdot.dx, w.Y - dmu * wdot.dY, w.z - dmu * wdot.dz)
    if is_interior(ctx.inst, pred.x) and chol_psd_test(pred.Y):
        try:
            return _tight_point(ctx, pred, mu)
        except CpathLabError:
            pass
    x = ctx.barrier_solver.solve(ctx.inst, mu, w.x).x
    return _tight_point(ctx, lift_to_triplet(ctx.inst, x, mu), mu)


def _tangent_consistency(ctx: _Context) -> ExperimentRecord:
    matches = [p for p in ctx.trace.points if abs(p.mu - MU_CEILING) <= 1e-9 * MU_CEILING]
    if not matches:
        raise _Skip(f"mu = {MU_CEILING:g} is not on the grid")
    mu = matches[0].mu
    w = _tight_point(ctx, matches[0].w, mu)
    wdot = tangent(ctx.inst, w)
    errors = []
    for dmu in (mu / 2.0, mu / 4.0):
        target = _point_at(ctx, w, wdot, dmu, mu - dmu)
        errors.append(predictor_error(ctx.inst, w, target, dmu, wdot))
    bound: Dict[str, Any] = {"mu": mu, "exact_tol": EXACT_TOL, "ratio_range": list(RATIO_RANGE)}
    if errors[0] <= EXACT_TOL:
        bound["mode"] = "exact"
        passed = True
    else:
        ratio = errors[0] / errors[1] if errors[1] > 0 else float("inf")
        bound.update({"mode": "ratio", "ratio": ratio})
        passed = RATIO_RANGE[0] <= ratio <= RATIO_RANGE[1]
    return ExperimentRecord("tangent_consistency", bool(passed), {"dmu": [mu / 2.0, mu / 4.0], "error": errors}, bound)


def _sigma_identity(ctx: _Context) -> ExperimentRecord:
    center = ctx.need_center()
    rng = np.random.default_rng(ctx.seed)
    gaps, minimum = [], float("inf")
    for _ in range(SIGMA_DIRECTIONS):
        d = rng.standard_normal(ctx.inst.n)
        forms = sigma_quad(ctx.inst, ctx.limits.xstar, center.Y_a, ctx.limits.split, d)
        scale = max(1.0, abs(forms.definition))
        if ctx.limits.split.rstar and ctx.limits.split.k:
            gaps.append(max(abs(forms.definition - forms.trace_form), abs(forms.definition - forms.norm_form)) / scale)
        else:
            gaps.append(abs(forms.definition) / scale)
        minimum = min(minimum, forms.definition)
    passed = max(gaps) <= SIGMA_TOL and minimum >= -SIGMA_TOL
    return ExperimentRecord("sigma_identity", bool(passed), {"relative_gap": gaps},
                            {"max_gap": SIGMA_TOL, "min_value": minimum})


def _center_oracle(ctx: _Context) -> ExperimentRecord:
    center = ctx.need_center()
    oracle = ctx.builtin.oracle
    bound: Dict[str, Any] = {"certificate_max": IDENTITY_TOL, "certificate_residual": center.cert_residual}
    passed = center.cert_residual <= IDENTITY_TOL
    if oracle.Y_a is not None:
        err = float(np.linalg.norm(center.Y_a - oracle.Y_a))
        if oracle.z_a is not None:
            err += float(np.linalg.norm(center.z_a - oracle.z_a))
        bound.update({"oracle_max": ORACLE_TOL, "oracle_error": err})
        passed = passed and err <= ORACLE_TOL
    return ExperimentRecord("center_oracle", bool(passed), {}, bound)


def _xi_star_oracle(ctx: _Context) -> ExperimentRecord:
    ctx.need_center()
    if ctx.limits.xi is None:
        raise _Skip(f"limiting direction unavailable: {ctx.limits.errors.get('xi_star', 'not computed')}")
    result = ctx.limits.xi
    residuals = {k: v for k, v in result.residuals.items() if k != "full_system"}
    bound: Dict[str, Any] = {"identity_max": IDENTITY_TOL, "residuals": residuals}
    passed = all(v <= IDENTITY_TOL for v in residuals.values())
    if ctx.builtin.oracle.xi_star is not None:
        err = float(np.linalg.norm(result.xi - ctx.builtin.oracle.xi_star))
        bound.update({"oracle_max": ORACLE_TOL, "oracle_error": err})
        passed = passed and err <= ORACLE_TOL
    return ExperimentRecord("xi_star_oracle", bool(passed), {"xi": _floats(result.xi)}, bound)


def _conditions(ctx: _Context) -> ExperimentRecord:
    expected = ctx.builtin.oracle.expected_conditions
    if not expected:
        raise _Skip("no expected conditions")
    samples = list(ctx.builtin.oracle.multipliers)
    center = ctx.limits.center
    if center is not None:
        samples.append((center.Y_a, center.z_a))
        param = parametrize_multiplier_set(ctx.inst, ctx.limits.xstar, ctx.limits.split)
        samples += sample_multipliers(param, center.Y_ee, 4, np.random.default_rng(ctx.seed))
    if not samples:
        raise _Skip("no multiplier available")
    options = ConditionOptions(rank_tol=ctx.tolerances["rank_tol"], seed=ctx.seed)
    report = condition_report(ctx.inst, ctx.limits.xstar, samples, options, ctx.limits.split)
    return ExperimentRecord("conditions", report.matches(expected), {},
                            {"expected": dict(expected), "measured": report.outcomes()})


EXPERIMENTS: Tuple[Tuple[str, Callable[[_Context], ExperimentRecord]], ...] = (
    ("path_oracle", _path_oracle),
    ("center_oracle", _center_oracle),
    ("xi_star_oracle", _xi_star_oracle),
    ("conditions", _conditions),
    ("theta_ratio", _theta_ratio),
    ("block_decay", _block_decay),
    ("dual_convergence", _dual_convergence),
    ("direction_error", _direction_error),
    ("newton_matrix", _newton_matrix),
    ("limit_singularity", _limit_singularity),
    ("region_capture", _region_capture),
    ("uniqueness", _uniqueness),
    ("manifold_probe", _manifold_probe),
    ("tangent_vs_xi", _tangent_vs_xi),
    ("barrier_objective_monotone", _barrier_objective_monotone),
    ("scaled_inverse_bounded", _scaled_inverse_bounded),
    ("tangent_consistency", _tangent_consistency),
    ("sigma_identity", _sigma_identity),
)
"""Experiments in report order."""


class VerificationRunner:
    """Run the experiment suite on a builtin instance.

    The run has three steps: tracing the path, computing the limit data, evaluating the experiments.
    A trace failure propagates; an experiment that raises a solver error is recorded as failed and one
    whose inputs are missing is recorded as skipped.
    """

    def __init__(
        self,
        tolerances: Optional[Dict[str, float]] = None,
        tracer: Optional[PathTracer] = None,
        logger: Optional[logging.Logger] = None,
    ):
        """Initialize the runner.

        Args:
            tolerances (Optional[Dict[str, float]]): Overrides of DEFAULT_TOLERANCES.
            tracer (Optional[PathTracer]): Tracer to use; built from the tolerances when omitted.
            logger (Optional[logging.Logger]): Logger instance to use. If None, a default logger is created.

        """
        if logger is not None and not isinstance(logger, logging.Logger):
            raise TypeError("logger must be an instance of logging.Logger or None")
        self.logger = logger or logging.getLogger(self.__class__.__name__)
        self.tolerances = dict(DEFAULT_TOLERANCES)
        self.tolerances.update(tolerances or {})
        self.tracer = tracer or PathTracer(tolerances=self.tolerances, logger=self.logger)
        self.barrier_solver = self.tracer.barrier_solver

    def run(
        self,
        builtin: BuiltinInstance,
        schedule: Optional[VerificationSchedule] = None,
        rho: float = 0.25,
        seed: int = 42,
        progress_observer: Optional[Callable[[Progress], None]] = None,
    ) -> VerificationReport:
        """Trace the path of the instance and evaluate every experiment.

        Args:
            builtin (BuiltinInstance): Instance with its oracle.
            schedule (Optional[VerificationSchedule]): μ schedule, defaults to (1e-1, 0.1, 1e-7).
            rho (float): Tube radius factor of the region-capture and uniqueness experiments.
            seed (int): Seed of every random draw.
            progress_observer (Optional[Callable[[Progress], None]]): Receives step-based progress events.

        Returns:
            VerificationReport: The records, the trace and its CSV rows.

        Raises:
            PathTracingError: If the path cannot be traced.
            ValidationError: On an invalid schedule or an unknown x*.

        """
        if builtin.oracle.xstar is None:
            raise ValidationError(f"{builtin.name}: verification needs the KKT point x*")
        schedule = schedule or VerificationSchedule()
        total_steps = 3

        # Step 1: trace the path
        tracing_observer = None
        if progress_observer is not None:
            tracing_observer = add_progress_step(step=1, total_steps=total_steps,
                                                 status=ProgressStatus.TRACING_PATH)(progress_observer)
        trace = self.tracer.trace(builtin.instance, builtin.oracle.x0, schedule.mu0, schedule.sigma, schedule.mu_min,
                                  mode="hybrid", xstar=builtin.oracle.xstar, progress_observer=tracing_observer)

        # Step 2: limit data at x*
        if progress_observer is not None:
            progress_observer(Progress(-1, status=ProgressStatus.COMPUTING_CENTER, step=2, total_steps=total_steps))
        limits = compute_limits(builtin, trace, self.tolerances["rank_tol"])
        for key, message in limits.errors.items():
            self.logger.warning(f"{builtin.name}: {key} unavailable: {message}")
        rows = trace_metrics(builtin, trace, limits)

        # Step 3: experiments
        ctx = _Context(builtin, trace, limits, rows, rho, seed, self.tolerances, self.barrier_solver)
        report = VerificationReport(builtin.name, schedule, rho, seed, trace=trace, rows=rows)
        for k, (name, experiment) in enumerate(EXPERIMENTS):
            report.experiments.append(self._run_experiment(ctx, name, experiment))
            if progress_observer is not None:
                progress_observer(Progress(calculate_percent(k + 1, len(EXPERIMENTS)),
                                           status=ProgressStatus.RUNNING_EXPERIMENTS, step=3, total_steps=total_steps))
        self.logger.info(f"{builtin.name}: verification {'passed' if report.overall else 'failed'}")
        return report

    def _run_experiment(self, ctx: _Context, name: str,
                        experiment: Callable[[_Context], ExperimentRecord]) -> ExperimentRecord:
        try:
            record = experiment(ctx)
        except _Skip as e:
            self.logger.info(f"{ctx.builtin.name}: {name} skipped ({e})")
            return ExperimentRecord(name, None, status="skipped", message=str(e))
        except CpathLabError as e:
            self.logger.warning(f"{ctx.builtin.name}: {name} failed with {e.__class__.__name__}: {e}")
            return ExperimentRecord(name, False, message=f"{e.__class__.__name__}: {e}")
        self.logger.debug(f"{ctx.builtin.name}: {name} -> {record.status}")
        return record


def run_verification(
    name: str,
    schedule: Optional[VerificationSchedule] = None,
    rho: float = 0.25,
    seed: int = 42,
    tolerances: Optional[Dict[str, float]] = None,
    registry=None,
) -> VerificationReport:
    """Verify a registry instance by name with a default ``VerificationRunner``.

    Raises:
        InstanceNotFoundError: If the name is not in the registry.

    """
    registry = registry if registry is not None else default_registry()
    return VerificationRunner(tolerances=tolerances).run(registry[name], schedule, rho, seed)
