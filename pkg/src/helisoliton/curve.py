"""Reconstruction of the generating curve sigma = (alpha, phi) from a trajectory.

alpha is never integrated.  With T = (cos theta, sin theta) and N = JT the
support functions give alpha = tau T + mu N directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import lift_height, minkowski_inner
from .integrator import Trajectory
from .phase import PhasePoint

ROOT_INTERVAL = 1e-12
OMEGA_MIN_RADIUS = 1e-9
SNAP_DISTANCE = 1e-9


class NoSignChange(ValueError):
    """tau keeps one sign over the span; widen it."""


class MultipleZeros(ValueError):
    """More sign changes than the rotator system allows."""


def reconstruct_position(tau, mu, theta):
    """Return (alpha, T, N), each as an array with trailing axis of length 2."""
    c, s = np.cos(theta), np.sin(theta)
    T = np.stack([c, s], axis=-1)
    N = np.stack([-s, c], axis=-1)
    alpha = np.asarray(tau)[..., None] * T + np.asarray(mu)[..., None] * N
    return alpha, T, N


def _sign_changes(values):
    """Indices i with a root in [i, i+1].  Exact zeros count once."""
    sg = np.sign(values)
    nz = np.flatnonzero(sg)
    out = []
    for a, b in zip(nz[:-1], nz[1:]):
        if sg[a] != sg[b]:
            if b - a > 1:
                out.append(("exact", a + 1))
            else:
                out.append(("bracket", a))
    return out


def _bisect(g, lo, hi, glo):
    while hi - lo > ROOT_INTERVAL:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _roots(traj: Trajectory, values, g):
    roots = []
    for kind, i in _sign_changes(values):
        if kind == "exact":
            roots.append(float(traj.s[i]))
        else:
            roots.append(_bisect(g, float(traj.s[i]), float(traj.s[i + 1]), values[i]))
    return roots


def _tau_at(traj):
    return lambda x: float(traj(x)[0])


def _k_at(traj):
    def g(x):
        tau, mu, _ = traj(x)
        return float(traj.law(PhasePoint(tau, mu), traj.params))

    return g


def locate_tau_zero(traj: Trajectory) -> float:
    """The arclength where tau changes sign, refined by bisection on dense output."""
    roots = _roots(traj, traj.tau, _tau_at(traj))
    if not roots:
        raise NoSignChange(f"tau does not change sign on span {traj.span}")
    if len(roots) > 1:
        raise MultipleZeros(f"tau changes sign {len(roots)} times: {roots}")
    return roots[0]


def locate_k_zeros(traj: Trajectory) -> list[float]:
    """All sign changes of the curvature along the trajectory.

    The rotator system allows at most one; more raises MultipleZeros.
    """
    roots = _roots(traj, traj.curvature(), _k_at(traj))
    if len(roots) > 1:
        raise MultipleZeros(f"curvature changes sign {len(roots)} times: {roots}")
    return roots


def unwrap_angle(s, alpha, s0):
    """Continuous polar angle of alpha, accumulated outward from s0 on each arm.

    Samples with |alpha| < 1e-9 get NaN and do not break the accumulation.
    """
    s = np.asarray(s)
    alpha = np.asarray(alpha)
    raw = np.arctan2(alpha[:, 1], alpha[:, 0])
    valid = np.hypot(alpha[:, 0], alpha[:, 1]) >= OMEGA_MIN_RADIUS
    omega = np.full(len(s), np.nan)
    i0 = min(int(np.searchsorted(s, s0)), len(s) - 1)
    for arm in (range(i0, len(s)), range(i0, -1, -1)):
        prev = None
        for i in arm:
            if not valid[i]:
                continue
            if prev is None:
                omega[i] = raw[i]
            else:
                d = (raw[i] - raw[prev] + np.pi) % (2 * np.pi) - np.pi
                omega[i] = omega[prev] + d
            prev = i
    return omega


@dataclass(frozen=True)
class CurveSample:
    s: float
    alpha: tuple
    T: tuple
    N: tuple
    k: float
    r: float
    omega: float
    phi: float
    tau: float
    mu: float
    theta: float


@dataclass(frozen=True, eq=False)
class GeneratingCurve:
    """Samples of sigma = (alpha, phi) with per-sample derived quantities.

    ``s0_index`` points at the sample sitting on the tau-zero.
    """

    trajectory: Trajectory
    s: np.ndarray
    tau: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray
    T: np.ndarray
    N: np.ndarray
    k: np.ndarray
    r: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    s0: float
    s0_index: int
    k_zeros: tuple

    @property
    def params(self):
        return self.trajectory.params

    @property
    def law(self):
        return self.trajectory.law

    def __len__(self):
        return len(self.s)

    def sample(self, i) -> CurveSample:
        return CurveSample(
            float(self.s[i]), tuple(self.alpha[i]), tuple(self.T[i]), tuple(self.N[i]),
            float(self.k[i]), float(self.r[i]), float(self.omega[i]), float(self.phi[i]),
            float(self.tau[i]), float(self.mu[i]), float(self.theta[i]),
        )

    def __iter__(self):
        return (self.sample(i) for i in range(len(self)))

    @property
    def sigma(self):
        """Hyperboloid lift (x1, x2, x3) per sample."""
        return np.column_stack([self.alpha, self.phi])

    def lorentz_norms(self):
        sig = self.sigma.T
        return minkowski_inner(sig, sig)


def curve_from_states(traj, s, y, s0, k_zeros=()):
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    tau, mu, theta = y[:, 0], y[:, 1], y[:, 2]
    alpha, T, N = reconstruct_position(tau, mu, theta)
    k = np.array([traj.law(PhasePoint(t, m), traj.params) for t, m in zip(tau, mu)])
    r = np.hypot(tau, mu)
    phi = lift_height(alpha[:, 0], alpha[:, 1])
    omega = unwrap_angle(s, alpha, s0)
    i0 = int(np.argmin(np.abs(s - s0)))
    return GeneratingCurve(traj, s, tau, mu, theta, alpha, T, N, k, r, omega, phi,
                           float(s0), i0, tuple(k_zeros))


def build_generating_curve(traj: Trajectory) -> GeneratingCurve:
    """Per-sample reconstruction and lift, with the tau-zero inserted as a sample.

    If an accepted sample already lies within 1e-9 of the tau-zero it is
    replaced by the refined point instead, so no near-duplicate samples appear.
    """
    s0 = locate_tau_zero(traj)
    k_zeros = locate_k_zeros(traj)
    s = traj.s.copy()
    y = traj.y.copy()
    j = int(np.argmin(np.abs(s - s0)))
    state0 = traj(s0)
    if abs(s[j] - s0) < SNAP_DISTANCE:
        s[j] = s0
        y[j] = state0
    else:
        j = int(np.searchsorted(s, s0))
        s = np.insert(s, j, s0)
        y = np.insert(y, j, state0, axis=0)
    return curve_from_states(traj, s, y, s0, k_zeros)


def resample(traj: Trajectory, s):
    """Dense-output states at arbitrary arclengths (no root insertion)."""
    return np.asarray(traj(np.asarray(s, dtype=float)))


def angle_function(curve: GeneratingCurve):
    return unwrap_angle(curve.s, curve.alpha, curve.s0)
