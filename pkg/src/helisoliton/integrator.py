"""Adaptive Dormand-Prince 5(4) integration of the augmented state (tau, mu, theta).

The step loop works on plain Python floats: the state is 3-dimensional and
numpy call overhead would dominate.  Stage derivatives are kept so that the
pair's fourth-order continuous extension can be evaluated anywhere on the
integrated span.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .phase import ROTATOR, CurvatureLaw, PhasePoint, SolitonParams

# Dormand & Prince (1980), RK5(4)7M, with Shampine's dense output.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

MIN_STEP = 1e-14
DEFAULT_TOL = (1e-10, 1e-10)
DEFAULT_MAX_STEPS = 10_000_000
DEFAULT_MAX_STEP = 0.1


class IntegrationError(RuntimeError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class StepUnderflow(IntegrationError):
    pass


def _make_rhs(params, law):
    def f(y):
        tau, mu = y[0], y[1]
        k = law(PhasePoint(tau, mu), params)
        return (1.0 + k * mu, -k * tau, k)

    return f


def _dp_step(f, y, k1, h):
    """One Dormand-Prince step.  Returns (y_new, stages, error_vector)."""
    ks = [k1]
    for i in range(1, 6):
        a = _A[i]
        yi = [y[j] + h * sum(a[m] * ks[m][j] for m in range(i)) for j in range(3)]
        ks.append(f(yi))
    y_new = [y[j] + h * sum(_B[m] * ks[m][j] for m in range(6)) for j in range(3)]
    ks.append(f(y_new))
    err = [h * sum(_E[m] * ks[m][j] for m in range(7)) for j in range(3)]
    return y_new, ks, err


def _err_norm(err, y0, y1, atol, rtol):
    acc = 0.0
    for e, a, b in zip(err, y0, y1):
        sc = atol + rtol * max(abs(a), abs(b))
        acc += (e / sc) ** 2
    return (acc / 3.0) ** 0.5


def _initial_step(f, y0, f0, direction, atol, rtol):
    def norm(v):
        return (sum((x / (atol + rtol * abs(y))) ** 2 for x, y in zip(v, y0)) / 3.0) ** 0.5

    d0, d1 = norm(y0), norm(f0)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = [y + direction * h0 * dy for y, dy in zip(y0, f0)]
    f1 = f(y1)
    d2 = norm([a - b for a, b in zip(f1, f0)]) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def _march(f, y0, s_end, atol, rtol, max_steps, max_step):
    """Integrate from s=0 to s_end (either sign).  Returns accepted data."""
    direction = 1.0 if s_end > 0 else -1.0
    s = 0.0
    y = list(y0)
    fy = f(y)
    h_abs = min(_initial_step(f, y, fy, direction, atol, rtol), abs(s_end), max_step)
    err_old = 1e-4
    beta, expo, safe = 0.04, 0.2 - 0.04 * 0.75, 0.9
    ss, ys, stages, hs = [s], [tuple(y)], [], []
    attempts = rejected = 0
    while direction * (s_end - s) > 0:
        if attempts >= max_steps:
            raise MaxStepsExceeded(f"more than {max_steps} steps before reaching s={s_end}")
        if h_abs < MIN_STEP:
            raise StepUnderflow(f"step size {h_abs:.3e} below {MIN_STEP} at s={s}")
        last = h_abs >= abs(s_end - s)
        h = (s_end - s) if last else direction * h_abs
        attempts += 1
        y_new, ks, err = _dp_step(f, y, fy, h)
        en = _err_norm(err, y, y_new, atol, rtol)
        if not np.isfinite(en):
            h_abs *= 0.1
            rejected += 1
            continue
        if en <= 1.0:
            fac = max(en, 1e-10) ** expo / err_old ** beta
            fac = min(5.0, max(0.1, safe / fac))
            err_old = max(en, 1e-4)
            s = s_end if last else s + h
            ss.append(s)
            ys.append(tuple(y_new))
            stages.append(ks)
            hs.append(h)
            y, fy = y_new, ks[6]
            h_abs = min(abs(h) * fac, max_step)
        else:
            fac = max(en, 1e-10) ** expo
            h_abs = abs(h) * max(0.2, safe / fac)
            rejected += 1
    return ss, ys, stages, hs, attempts, rejected


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Accepted samples of one solution plus the dense-output polynomials.

    Segment ``i`` covers ``[s[i], s[i+1]]``.  Its polynomial is anchored where
    the step started (``anchor_s[i]``), with signed step ``step[i]``.
    """

    params: SolitonParams
    law: CurvatureLaw
    s: np.ndarray
    y: np.ndarray
    anchor_s: np.ndarray
    anchor_y: np.ndarray
    step: np.ndarray
    Q: np.ndarray  # (segments, 3, 4)
    tol: tuple = DEFAULT_TOL
    stats: dict = field(default_factory=dict)

    @property
    def tau(self):
        return self.y[:, 0]

    @property
    def mu(self):
        return self.y[:, 1]

    @property
    def theta(self):
        return self.y[:, 2]

    @property
    def span(self):
        return float(self.s[0]), float(self.s[-1])

    @property
    def initial(self):
        return self(0.0)

    def _segment(self, x):
        i = np.searchsorted(self.s, x, side="right") - 1
        return np.clip(i, 0, len(self.s) - 2)

    def __call__(self, x):
        """Dense-output state at arclength(s) ``x``; shape (..., 3)."""
        x = np.asarray(x, dtype=float)
        i = self._segment(x)
        h = self.step[i]
        th = (x - self.anchor_s[i]) / h
        powers = np.stack([th, th**2, th**3, th**4], axis=-1)
        return self.anchor_y[i] + h[..., None] * np.einsum("...jm,...m->...j", self.Q[i], powers)

    def derivative(self, x):
        """Derivative of the dense-output polynomial at ``x``."""
        x = np.asarray(x, dtype=float)
        i = self._segment(x)
        th = (x - self.anchor_s[i]) / self.step[i]
        powers = np.stack([np.ones_like(th), 2 * th, 3 * th**2, 4 * th**3], axis=-1)
        return np.einsum("...jm,...m->...j", self.Q[i], powers)

    def curvature(self, x=None):
        tau, mu = (self.tau, self.mu) if x is None else self(x)[..., :2].T
        return np.array([self.law(PhasePoint(t, m), self.params) for t, m in zip(np.ravel(tau), np.ravel(mu))])

    def midpoint_residuals(self, substeps: int = 2):
        """How well each accepted pair is consistent with the ODE.

        The dense-output state at the midpoint of every segment is carried to
        the segment's end by an independent short integration and compared
        with the accepted end state, relative to atol + rtol |y|.
        """
        left, right = self.s[:-1], self.s[1:]
        mids = 0.5 * (left + right)
        Y = self(mids)
        h = (right - mids) / substeps
        f = _make_rhs_vec(self.params, self.law)
        for _ in range(substeps):
            Y = _dp_step_vec(f, Y, h)
        atol, rtol = self.tol
        end = self.y[1:]
        return np.max(np.abs(Y - end) / (atol + rtol * np.abs(end)), axis=1)


def _make_rhs_vec(params, law):
    def f(Y):
        tau, mu = Y[:, 0], Y[:, 1]
        try:
            k = np.broadcast_to(law(PhasePoint(tau, mu), params), tau.shape)
        except TypeError:
            k = np.array([law(PhasePoint(t, m), params) for t, m in zip(tau, mu)])
        return np.column_stack([1.0 + k * mu, -k * tau, k])

    return f


def _dp_step_vec(f, Y, h):
    """Dormand-Prince step applied row-wise; ``h`` has one entry per row."""
    h = np.asarray(h)[:, None]
    ks = [f(Y)]
    for i in range(1, 6):
        ks.append(f(Y + h * sum(a * k for a, k in zip(_A[i], ks))))
    return Y + h * sum(b * k for b, k in zip(_B, ks))


def integrate_trajectory(init, params: SolitonParams, law: CurvatureLaw = ROTATOR,
                         span=(-20.0, 20.0), tol=DEFAULT_TOL,
                         max_steps: int = DEFAULT_MAX_STEPS,
                         max_step: float = DEFAULT_MAX_STEP) -> Trajectory:
    """Integrate from ``init = (tau0, mu0, theta0)`` at s=0 across ``span``.

    The backward and forward arms are integrated separately from s=0 and
    joined; either arm may be empty when the span ends at 0.  ``max_steps`` caps attempted steps per direction; ``max_step``
    bounds the step length so the dense output stays accurate in derivative.
    """
    s_min, s_max = float(span[0]), float(span[1])
    if not (s_min <= 0.0 <= s_max and s_min < s_max):
        raise ValueError(f"span must satisfy s_min <= 0 <= s_max with s_min < s_max, got {span}")
    atol, rtol = float(tol[0]), float(tol[1])
    if atol <= 0 or rtol <= 0:
        raise ValueError(f"tolerances must be positive, got {tol}")
    y0 = tuple(float(v) for v in init)
    if len(y0) == 2:
        y0 = (*y0, 0.0)
    f = _make_rhs(params, law)

    back = _march(f, y0, s_min, atol, rtol, max_steps, max_step)
    fwd = _march(f, y0, s_max, atol, rtol, max_steps, max_step)

    s = np.array(back[0][:0:-1] + fwd[0])
    y = np.array(back[1][:0:-1] + fwd[1])
    # backward segment j runs from back_s[j] down to back_s[j+1]
    anchor_s = np.array(back[0][:-1][::-1] + fwd[0][:-1])
    anchor_y = np.array(back[1][:-1][::-1] + fwd[1][:-1])
    step = np.array(back[3][::-1] + fwd[3])
    K = np.array(back[2][::-1] + fwd[2])  # (segments, 7, 3)
    Q = np.einsum("nij,im->njm", K, _P)
    stats = {
        "attempts": back[4] + fwd[4],
        "rejected": back[5] + fwd[5],
        "accepted": len(step),
        "max_step": max_step,
    }
    return Trajectory(params, law, s, y, anchor_s, anchor_y, step, Q, (atol, rtol), stats)


def fixed_step_solve(init, params: SolitonParams, law: CurvatureLaw = ROTATOR,
                     s_end: float = 1.0, n_steps: int = 100):
    """Advance with ``n_steps`` equal Dormand-Prince steps; returns the end state."""
    f = _make_rhs(params, law)
    y = [float(v) for v in init]
    if len(y) == 2:
        y.append(0.0)
    h = s_end / n_steps
    fy = f(y)
    for _ in range(n_steps):
        y, ks, _ = _dp_step(f, y, fy, h)
        fy = ks[6]
    return np.array(y)
