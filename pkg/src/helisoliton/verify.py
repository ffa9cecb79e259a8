"""Invariant suite: runs every property check over a parameter grid.

Each check reduces to a single worst value compared with one tolerance from
:class:`TolProfile`; a check passes iff ``worst_value <= tolerance``.  Checks
phrased as counts (sign patterns, zero counts) count violations with
tolerance 0.  The name set is fixed, see :data:`CHECKS`.

The existence of the limits of tau and mu as s -> +-inf has no finite-horizon
restatement of its own; it is only covered indirectly by ``tail_signs``,
``horizon_doubling`` and ``omega_monotone``.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .curve import build_generating_curve, locate_k_zeros, unwrap_angle, _sign_changes
from .integrator import DEFAULT_MAX_STEP, integrate_trajectory
from .phase import (
    ROTATOR, CurvatureLaw, PhasePoint, SolitonParams, phase_rhs,
    rotator_curvature_slope_at_zero, rotator_target_H,
)
from .surface import curve_closed_form_H, numeric_mean_curvature, soliton_residuals


@dataclass(frozen=True)
class TolProfile:
    """All tolerances used by the suite and by the acceptance tests."""

    algebraic_tight: float = 1e-12
    algebraic: float = 1e-10
    inversion: float = 1e-9
    ode: float = 1e-6
    omega_fd: float = 1e-5
    slope_fd: float = 1e-5
    fd: float = 1e-4
    fd_step: float = 1e-3
    fd_min_radius: float = 0.1
    rhs_min_norm: float = 1e-3
    dense_defect: float = 100.0
    symmetry_factor: float = 10.0
    nu_ratio: float = 2.0
    order_range: tuple = (1.7, 2.3)


DEFAULT_TOLS = TolProfile()

CHECKS = {
    "support_identities": "<alpha,T>=tau, <alpha,N>=mu, |alpha|^2=r^2, <sigma,sigma>=-1",
    "dense_output_defect": "dense-output midpoint carried to the step end vs the accepted state, in local tolerances",
    "ode_consistency": "finite-difference tau', mu' vs 1+k mu, -k tau",
    "r2_derivative": "finite-difference (r^2)' vs 2 tau",
    "phi_derivative": "finite-difference phi' vs tau/phi",
    "omega_derivative": "finite-difference omega' vs -mu/r^2 where r >= 0.1",
    "no_equilibria": "reciprocal of the smallest phase-velocity norm",
    "tau_zero_unique": "|number of tau sign changes - 1|",
    "r2_minimum_at_tau_zero": "excess of r^2(s0) over the smallest sampled r^2",
    "k_zero_count": "number of curvature sign changes beyond one",
    "k_zero_slope": "finite-difference k'(s1) vs the closed-form slope (inf if k' <= 0)",
    "tail_signs": "violations of tau>0, mu<0 at +S and tau<0, mu>0 at -S, and growth from S/2 to S",
    "horizon_doubling": "violations of |tau|, |mu|, r^2, per-arm winding growing from S to 2S",
    "nu_boundedness": "max|tau/mu| on the outer window over nu_ratio times max on the inner window",
    "omega_monotone": "largest decrease of the per-arm winding outside a neighbourhood of s0",
    "omega_winding": "violations of winding over [s0, 2S] exceeding winding over [s0, S]",
    "time_reversal_symmetry": "max |psi_bar(s) + psi(-s)| over the symmetry window",
    "soliton_identity": "|closed-form H - rho tau/phi|",
    "rotator_translator_equality": "|rotator residual - translator residual|",
    "h1_closed_form": "|k - 2 tau/(1+r^2)| at pitch 1",
    "numeric_H_convergence": "distance of the observed order of the finite-difference H from 2",
}


@dataclass(frozen=True)
class ParameterGrid:
    hs: tuple = (0.5, 1.0, 2.0)
    tau0s: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)
    mu0s: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)
    theta0: float = 0.0
    span: tuple = (-20.0, 20.0)
    tol: tuple = (1e-12, 1e-12)
    max_step: float = DEFAULT_MAX_STEP
    seed: int = 0
    symmetry_window: float = 10.0
    tail_horizon: float = 20.0
    nu_horizon: float = 25.0
    winding_horizon: float = 10.0
    omega_neighbourhood: float = 10.0
    du_list: tuple = (1e-2, 5e-3, 2.5e-3)
    convergence: bool = True

    def __post_init__(self):
        if not self.hs or not self.tau0s or not self.mu0s:
            raise ValueError("parameter grid must be non-empty")
        for h in self.hs:
            SolitonParams(h)
        if not self.span[0] < 0 < self.span[1]:
            raise ValueError(f"span must contain 0 in its interior, got {self.span}")

    def points(self):
        return [(float(h), float(t), float(m)) for h in self.hs for t in self.tau0s for m in self.mu0s]

    @property
    def integration_span(self):
        reach = max(2 * self.tail_horizon, 2 * self.nu_horizon, 2 * self.winding_horizon)
        return (min(self.span[0], -reach), max(self.span[1], reach))


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_value: float | None
    tolerance: float
    location: dict | None = None

    def to_dict(self):
        d = asdict(self)
        if d["worst_value"] is not None and not math.isfinite(d["worst_value"]):
            d["worst_value"] = None
        return d


@dataclass
class VerificationReport:
    grid: dict
    integrator: dict
    law: dict
    checks: list
    timings: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def check(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self, include_timings=False) -> str:
        doc = {
            "grid": self.grid,
            "integrator": self.integrator,
            "law": self.law,
            "checks": [c.to_dict() for c in self.checks],
        }
        if include_timings:
            doc["timings"] = self.timings
        return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _result(name, worst, tol, location=None) -> CheckResult:
    ok = worst is not None and math.isfinite(worst) and worst <= tol
    return CheckResult(name, bool(ok), None if worst is None else float(worst), float(tol), location)


# -- per-trajectory checks -------------------------------------------------

def _fd(fn, s, d):
    """Five-point centered first derivative (fourth order)."""
    return (fn(s - 2 * d) - 8 * fn(s - d) + 8 * fn(s + d) - fn(s + 2 * d)) / (12 * d)


def _uniform(lo, hi, ds=0.01):
    n = int(round((hi - lo) / ds)) + 1
    return np.linspace(lo, hi, n)


def _argmax(values, s):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0, None
    i = int(np.nanargmax(values))
    return float(values[i]), float(s[i])


def arm_winding(traj, s0, s_end, ds=0.01):
    """Unwrapped polar angle of alpha from s0 towards s_end (either side)."""
    n = max(int(abs(s_end - s0) / ds), 2) + 1
    s = np.linspace(s0, s_end, n)
    y = traj(s)
    c, sn = np.cos(y[:, 2]), np.sin(y[:, 2])
    alpha = np.column_stack([y[:, 0] * c - y[:, 1] * sn, y[:, 0] * sn + y[:, 1] * c])
    order = np.argsort(s)
    omega = unwrap_angle(s[order], alpha[order], s0)
    out = np.empty_like(omega)
    out[order] = omega
    valid = ~np.isnan(out)
    return s[valid], out[valid] - out[valid][0]


def symmetry_check(traj, window=10.0, tols: TolProfile = DEFAULT_TOLS, ds=0.01) -> CheckResult:
    """Compare psi with the solution started from the negated initial data.

    For the rotator system psi_bar(s) = -psi(-s) is again a solution, so the
    two integrations must mirror each other in (tau, mu).
    """
    tau0, mu0, theta0 = traj.initial
    mirror = integrate_trajectory((-tau0, -mu0, theta0), traj.params, traj.law,
                                  span=traj.span, tol=traj.tol, max_step=_max_step(traj))
    s = _uniform(-window, window, ds)
    dev = np.max(np.abs(mirror(s)[:, :2] + traj(-s)[:, :2]), axis=1)
    worst, where = _argmax(dev, s)
    return _result("time_reversal_symmetry", worst, tols.symmetry_factor * max(traj.tol),
                   {"s": where})


def _max_step(traj):
    return traj.stats.get("max_step", DEFAULT_MAX_STEP)


def _point_checks(h, tau0, mu0, grid: ParameterGrid, law: CurvatureLaw, tols: TolProfile):
    """Return {name: (worst, s_of_worst)} for one grid point."""
    params = SolitonParams(h)
    traj = integrate_trajectory((tau0, mu0, grid.theta0), params, law,
                                span=grid.integration_span, tol=grid.tol, max_step=grid.max_step)
    out = {}
    lo, hi = grid.span

    # sign-change structure, on the base span
    base = (traj.s >= lo) & (traj.s <= hi)
    n_tau = len(_sign_changes(traj.tau[base]))
    out["tau_zero_unique"] = (abs(n_tau - 1), None)
    try:
        curve = build_generating_curve(traj)
    except ValueError:
        curve = None
    kvals = traj.curvature()
    n_k = len(_sign_changes(kvals[base]))
    out["k_zero_count"] = (max(0, n_k - 1), None)

    # samples and algebraic identities
    speeds = np.array([np.hypot(*phase_rhs(PhasePoint(t, m), params, law)[:2])
                       for t, m in zip(traj.tau, traj.mu)])
    out["no_equilibria"] = _argmax(1.0 / speeds, traj.s)
    out["dense_output_defect"] = _argmax(traj.midpoint_residuals(), traj.s[:-1])

    if curve is not None:
        tau_err = np.abs(np.sum(curve.alpha * curve.T, axis=1) - curve.tau)
        mu_err = np.abs(np.sum(curve.alpha * curve.N, axis=1) - curve.mu)
        r_err = np.abs(np.sum(curve.alpha ** 2, axis=1) - curve.r ** 2)
        lor_err = np.abs(curve.lorentz_norms() + 1.0)
        out["support_identities"] = _argmax(np.maximum.reduce([tau_err, mu_err, r_err, lor_err]), curve.s)
        r2 = curve.r ** 2
        out["r2_minimum_at_tau_zero"] = (max(0.0, r2[curve.s0_index] - r2.min()), curve.s0)

        H = curve_closed_form_H(curve)
        target = rotator_target_H((curve.tau, curve.mu), params)
        out["soliton_identity"] = _argmax(np.abs(H - target), curve.s)
        rot, trans = soliton_residuals(curve, params)
        out["rotator_translator_equality"] = _argmax(np.abs(rot - trans), curve.s)
    if h == 1.0:
        closed = 2 * traj.tau / (1 + traj.tau ** 2 + traj.mu ** 2)
        out["h1_closed_form"] = _argmax(np.abs(kvals - closed), traj.s)

    # finite differences on the dense output
    d = tols.fd_step
    s = _uniform(lo + 2 * d, hi - 2 * d)
    y = traj(s)
    tau, mu = y[:, 0], y[:, 1]
    r2 = tau ** 2 + mu ** 2
    yp = _fd(traj, s, d)
    k = np.array([law(PhasePoint(t, m), params) for t, m in zip(tau, mu)])
    ode_err = np.maximum(np.abs(yp[:, 0] - (1 + k * mu)), np.abs(yp[:, 1] + k * tau))
    out["ode_consistency"] = _argmax(ode_err, s)
    r2p = _fd(lambda x: np.sum(traj(x)[:, :2] ** 2, axis=1), s, d)
    out["r2_derivative"] = _argmax(np.abs(r2p - 2 * tau), s)
    phi = np.sqrt(1 + r2)
    phip = _fd(lambda x: np.sqrt(1 + np.sum(traj(x)[:, :2] ** 2, axis=1)), s, d)
    out["phi_derivative"] = _argmax(np.abs(phip - tau / phi), s)

    def polar(x):
        st = traj(x)
        c, sn = np.cos(st[:, 2]), np.sin(st[:, 2])
        return np.arctan2(st[:, 0] * sn + st[:, 1] * c, st[:, 0] * c - st[:, 1] * sn)

    def wrap(a):
        return (a + np.pi) % (2 * np.pi) - np.pi

    base_angle = polar(s)
    dom = sum(c * wrap(polar(s + j * d) - base_angle) for j, c in ((-2, 1), (-1, -8), (1, 8), (2, -1))) / 12
    far = np.sqrt(r2) >= tols.fd_min_radius
    om_err = np.where(far, np.abs(dom / d + mu / np.where(far, r2, 1.0)), 0.0)
    out["omega_derivative"] = _argmax(om_err, s)

    if curve is None:
        return out, traj

    s0 = curve.s0
    # curvature zeros and their slopes
    try:
        kz = locate_k_zeros(traj)
    except ValueError:
        kz = list(curve.k_zeros)
    def k_at(x):
        st = traj(x)
        return law(PhasePoint(st[0], st[1]), params)

    slope_err = []
    for s1 in kz:
        kfd = _fd(k_at, s1, d)
        st = traj(s1)
        formula = rotator_curvature_slope_at_zero((st[0], st[1]), params)
        slope_err.append(abs(kfd - formula) if kfd > 0 else math.inf)
    out["k_zero_slope"] = _argmax(slope_err, kz) if kz else (0.0, None)

    # tails
    S = grid.tail_horizon
    at = {x: traj(x) for x in (S, -S, S / 2, -S / 2, 2 * S, -2 * S)}
    violations = 0
    violations += not (at[S][0] > 0 and at[S][1] < 0)
    violations += not (at[-S][0] < 0 and at[-S][1] > 0)
    for far_s, mid_s in ((S, S / 2), (-S, -S / 2)):
        violations += sum(not abs(at[far_s][i]) > abs(at[mid_s][i]) for i in (0, 1))
    out["tail_signs"] = (violations, S)

    violations = 0
    for one, two in ((S, 2 * S), (-S, -2 * S)):
        violations += sum(not abs(at[two][i]) > abs(at[one][i]) for i in (0, 1))
        violations += not (at[two][0] ** 2 + at[two][1] ** 2 > at[one][0] ** 2 + at[one][1] ** 2)
        _, w1 = arm_winding(traj, s0, one)
        _, w2 = arm_winding(traj, s0, two)
        violations += not w2[-1] > w1[-1]
    out["horizon_doubling"] = (violations, 2 * S)

    W = grid.winding_horizon
    violations = 0
    for one, two in ((W, 2 * W), (-W, -2 * W)):
        _, w1 = arm_winding(traj, s0, s0 + one)
        _, w2 = arm_winding(traj, s0, s0 + two)
        violations += not w2[-1] > w1[-1]
    out["omega_winding"] = (violations, 2 * W)

    worst, where = -math.inf, None
    s_lo, s_hi = traj.span
    for end in (s_hi, s_lo):
        sa, w = arm_winding(traj, s0, end)
        keep = np.abs(sa - s0) >= grid.omega_neighbourhood
        if keep.sum() > 1:
            dec = -np.diff(w[keep])
            i = int(np.argmax(dec))
            if dec[i] > worst:
                worst, where = float(dec[i]), float(sa[keep][i])
    out["omega_monotone"] = (worst, where)

    U = grid.nu_horizon
    ratio, where = 0.0, None
    for inner, outer in (((s0 + 1, U), (U, 2 * U)), ((-U, s0 - 1), (-2 * U, -U))):
        si, so = _uniform(*inner), _uniform(*outer)
        yi, yo = traj(si), traj(so)
        nu_in = np.max(np.abs(yi[:, 0] / yi[:, 1]))
        nu_out, at_s = _argmax(np.abs(yo[:, 0] / yo[:, 1]), so)
        q = nu_out / (tols.nu_ratio * nu_in)
        if q > ratio:
            ratio, where = q, at_s
    out["nu_boundedness"] = (ratio, where)

    sym = symmetry_check(traj, grid.symmetry_window, tols)
    out["time_reversal_symmetry"] = (sym.worst_value, sym.location["s"])
    return out, traj


def _tolerance_for(name, grid: ParameterGrid, tols: TolProfile):
    return {
        "support_identities": tols.algebraic_tight,
        "dense_output_defect": tols.dense_defect,
        "ode_consistency": tols.ode,
        "r2_derivative": tols.ode,
        "phi_derivative": tols.ode,
        "omega_derivative": tols.omega_fd,
        "no_equilibria": 1.0 / tols.rhs_min_norm,
        "tau_zero_unique": 0.0,
        "r2_minimum_at_tau_zero": tols.algebraic_tight,
        "k_zero_count": 0.0,
        "k_zero_slope": tols.slope_fd,
        "tail_signs": 0.0,
        "horizon_doubling": 0.0,
        "nu_boundedness": 1.0,
        "omega_monotone": 0.0,
        "omega_winding": 0.0,
        "time_reversal_symmetry": tols.symmetry_factor * max(grid.tol),
        "soliton_identity": tols.algebraic,
        "rotator_translator_equality": tols.algebraic_tight,
        "h1_closed_form": tols.algebraic_tight,
        "numeric_H_convergence": 0.5 * (tols.order_range[1] - tols.order_range[0]),
    }[name]


def _worker(args):
    h, tau0, mu0, grid, law, tols = args
    t = time.perf_counter()
    out, _ = _point_checks(h, tau0, mu0, grid, law, tols)
    return out, time.perf_counter() - t


def convergence_study(curve, params: SolitonParams, du_list, tols: TolProfile = DEFAULT_TOLS):
    """Fit the order of max|H_numeric - H_closed| against du on a log-log scale.

    The check value is |order - 2|, passing when the order lies in
    ``tols.order_range``.  ``location`` carries the errors and fitted order.
    """
    du = np.asarray(du_list, dtype=float)
    if len(du) < 3 or np.any(np.diff(du) >= 0):
        raise ValueError("du_list needs at least 3 strictly decreasing values")
    closed = curve_closed_form_H(curve)
    errors = []
    for step in du:
        idx, H = numeric_mean_curvature(curve, params, float(step))
        errors.append(float(np.max(np.abs(H - closed[idx]))))
    order = float(np.polyfit(np.log(du), np.log(errors), 1)[0])
    lo, hi = tols.order_range
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    res = _result("numeric_H_convergence", abs(order - mid), half,
                  {"order": order, "errors": errors, "du": du.tolist()})
    return res


def run_invariant_suite(grid: ParameterGrid | None = None, tols: TolProfile = DEFAULT_TOLS,
                        law: CurvatureLaw = ROTATOR, workers: int = 1) -> VerificationReport:
    grid = grid or ParameterGrid()
    points = grid.points()
    jobs = [(h, t, m, grid, law, tols) for h, t, m in points]
    t_start = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_worker, jobs))
    else:
        results = [_worker(j) for j in jobs]

    names = [n for n in CHECKS if n != "numeric_H_convergence"]
    if 1.0 not in [float(h) for h in grid.hs]:
        names.remove("h1_closed_form")
    checks = []
    for name in names:
        worst, loc = -math.inf, None
        missing = None
        for (h, t, m), (out, _) in zip(points, results):
            if name not in out:
                if name == "h1_closed_form":
                    continue
                missing = missing or {"h": h, "tau0": t, "mu0": m, "s": None}
                continue
            value, s = out[name]
            if value is None or not math.isfinite(value):
                worst, loc = math.inf, {"h": h, "tau0": t, "mu0": m, "s": s}
                continue
            if value > worst:
                worst, loc = float(value), {"h": h, "tau0": t, "mu0": m, "s": s}
        if missing is not None:
            checks.append(CheckResult(name, False, None, _tolerance_for(name, grid, tols), missing))
        else:
            checks.append(_result(name, worst, _tolerance_for(name, grid, tols), loc))
    timings = {"grid_points": sum(r[1] for r in results)}

    if grid.convergence:
        t = time.perf_counter()
        h = 1.0 if 1.0 in [float(x) for x in grid.hs] else float(grid.hs[0])
        params = SolitonParams(h)
        traj = integrate_trajectory((0.0, 0.0, grid.theta0), params, law, span=grid.span,
                                    tol=grid.tol, max_step=grid.max_step)
        try:
            res = convergence_study(build_generating_curve(traj), params, grid.du_list, tols)
            res.location = {"h": h, "tau0": 0.0, "mu0": 0.0, "s": None, **res.location}
        except ValueError:
            res = CheckResult("numeric_H_convergence", False, None,
                              _tolerance_for("numeric_H_convergence", grid, tols), {"h": h})
        checks.append(res)
        timings["numeric_H_convergence"] = time.perf_counter() - t
    timings["total"] = time.perf_counter() - t_start

    grid_doc = {
        "hs": list(grid.hs), "tau0s": list(grid.tau0s), "mu0s": list(grid.mu0s),
        "theta0": grid.theta0, "span": list(grid.span),
        "integration_span": list(grid.integration_span), "seed": grid.seed,
        "symmetry_window": grid.symmetry_window, "tail_horizon": grid.tail_horizon,
        "nu_horizon": grid.nu_horizon, "winding_horizon": grid.winding_horizon,
        "omega_neighbourhood": grid.omega_neighbourhood,
    }
    integrator = {"method": "dormand_prince_5(4)", "atol": grid.tol[0], "rtol": grid.tol[1],
                  "max_step": grid.max_step}
    return VerificationReport(grid_doc, integrator, law.describe(), checks, timings)
