"""Helicoidal surfaces X(u, v) = (e^{vJ} alpha(u), phi(u), h v) in H^2 x R.

Points are 4-vectors of L^3 x R, (x1, x2, x3, t), with the product metric
dx1^2 + dx2^2 - dx3^2 + dt^2.  Sample arguments are anything with ``tau``,
``mu`` and ``k`` attributes (a CurveSample, or a GeneratingCurve for
vectorized evaluation) unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .curve import GeneratingCurve, reconstruct_position
from .geometry import LorentzVec, apply_rotation, poincare_projection
from .integrator import fixed_step_solve
from .phase import SolitonParams, aux_quantities, closed_form_H

METRIC = np.array([1.0, 1.0, -1.0, 1.0])
MIN_FACE_AREA = 1e-14


class GridTooCoarse(ValueError):
    pass


class MeshError(ValueError):
    pass


def product_inner(a, b):
    """Inner product of L^3 x R on the last axis."""
    return np.sum(np.asarray(a) * np.asarray(b) * METRIC, axis=-1)


class SurfacePoint(NamedTuple):
    spatial: LorentzVec
    t: float


def surface_point(sample, v, params: SolitonParams) -> SurfacePoint:
    x, y = apply_rotation(v, sample.alpha)
    return SurfacePoint(LorentzVec(x, y, sample.phi), params.h * v)


def embedding(states, v, params: SolitonParams):
    """X as 4-vectors from augmented states (..., 3) and rotation angles v."""
    states = np.asarray(states, dtype=float)
    tau, mu, theta, v = np.broadcast_arrays(states[..., 0], states[..., 1], states[..., 2], v)
    alpha, _, _ = reconstruct_position(tau, mu, theta)
    x, y = apply_rotation(v, (alpha[..., 0], alpha[..., 1]))
    phi = np.sqrt(1.0 + alpha[..., 0] ** 2 + alpha[..., 1] ** 2)
    return np.stack([x, y, phi, params.h * v], axis=-1)


def unit_normal(sample, params: SolitonParams, v=0.0):
    """eta = rho (e^{vJ}(aT + bN), mu, c) as a 4-vector."""
    aux = aux_quantities((sample.tau, sample.mu), params)
    T = np.asarray(sample.T, dtype=float)
    N = np.asarray(sample.N, dtype=float)
    plane = np.asarray(aux.a)[..., None] * T + np.asarray(aux.b)[..., None] * N
    x, y = apply_rotation(v, (plane[..., 0], plane[..., 1]))
    rho = aux.rho
    return np.stack([rho * x, rho * y, rho * np.asarray(sample.mu), rho * aux.c], axis=-1)


def analytic_tangents(sample, params: SolitonParams, v=0.0):
    """(X_u, X_v) from the closed-form first derivatives of X."""
    aux = aux_quantities((sample.tau, sample.mu), params)
    T = np.asarray(sample.T, dtype=float)
    alpha = np.asarray(sample.alpha, dtype=float)
    tx, ty = apply_rotation(v, (T[..., 0], T[..., 1]))
    ax, ay = apply_rotation(v, (-alpha[..., 1], alpha[..., 0]))
    zero = np.zeros_like(tx)
    Xu = np.stack([tx, ty, zero + aux.phi_prime, zero], axis=-1)
    Xv = np.stack([ax, ay, zero, zero + params.h], axis=-1)
    return Xu, Xv


@dataclass(frozen=True)
class FundamentalForms:
    E: float
    F: float
    G: float
    e: float
    f: float
    g: float
    eta: tuple  # (plane part, e3 part, t part), at v = 0

    @property
    def mean_curvature(self):
        return (self.E * self.g - 2 * self.f * self.F + self.G * self.e) / (
            2 * (self.E * self.G - self.F ** 2))


def fundamental_forms(sample, params: SolitonParams) -> FundamentalForms:
    tau, mu, k = sample.tau, sample.mu, sample.k
    h = params.h
    aux = aux_quantities((tau, mu), params)
    phi, rho = aux.phi, aux.rho
    r2 = tau * tau + mu * mu
    phi_pp = (k * mu + (1 + mu * mu) / phi ** 2) / phi
    eta = unit_normal(sample, params, 0.0)
    return FundamentalForms(
        E=(1 + mu * mu) / phi ** 2,
        F=-mu,
        G=r2 + h * h,
        e=rho * (aux.b * k - phi_pp * mu),
        f=rho * aux.b,
        g=-rho * (aux.a * tau + aux.b * mu),
        eta=(tuple(eta[..., :2]), eta[..., 2], eta[..., 3]),
    )


def curve_closed_form_H(curve: GeneratingCurve):
    return closed_form_H((curve.tau, curve.mu), curve.params, curve.k)


def _flow(state, params, law, du, substeps):
    return fixed_step_solve(state, params, law, du, substeps)


def numeric_mean_curvature(curve: GeneratingCurve, params: SolitonParams, du: float,
                           v: float = 0.7, substeps: int = 4):
    """Mean curvature from centered differences of the embedding X.

    Neighbouring points X(u +- du, .) come from a short local integration of
    the curve from each sample, so they are accurate well beyond the accuracy
    of the trajectory's dense output.  Both fundamental forms are built from
    the differenced derivatives in the ambient product metric, projected on
    the analytic unit normal.  Returns (indices, H) over interior samples.
    """
    n = len(curve)
    if n < 5:
        raise GridTooCoarse(f"need at least 5 samples, got {n}")
    if not du > 0:
        raise ValueError("du must be positive")
    law = curve.law
    idx = np.arange(1, n - 1)
    H = np.empty(len(idx))
    dv = du
    for out, i in enumerate(idx):
        state = (curve.tau[i], curve.mu[i], curve.theta[i])
        plus = _flow(state, params, law, du, substeps)
        minus = _flow(state, params, law, -du, substeps)
        rows = np.array([minus, state, plus])
        vs = np.array([v - dv, v, v + dv])
        X = embedding(rows[:, None, :], vs[None, :], params)  # (3 u, 3 v, 4)
        Xu = (X[2, 1] - X[0, 1]) / (2 * du)
        Xv = (X[1, 2] - X[1, 0]) / (2 * dv)
        Xuu = (X[2, 1] - 2 * X[1, 1] + X[0, 1]) / du ** 2
        Xvv = (X[1, 2] - 2 * X[1, 1] + X[1, 0]) / dv ** 2
        Xuv = (X[2, 2] - X[2, 0] - X[0, 2] + X[0, 0]) / (4 * du * dv)
        eta = unit_normal(curve.sample(i), params, v)
        E, F, G = product_inner(Xu, Xu), product_inner(Xu, Xv), product_inner(Xv, Xv)
        e, f, g = product_inner(Xuu, eta), product_inner(Xuv, eta), product_inner(Xvv, eta)
        H[out] = (E * g - 2 * f * F + G * e) / (2 * (E * G - F * F))
    return idx, H


def soliton_residuals(curve: GeneratingCurve, params: SolitonParams):
    """(rotator_residual, translator_residual) per sample.

    H is the closed-form mean curvature with the curve's own curvature; the
    targets are <J pi(X), eta> = rho (b tau - a mu) and <-h dt, eta> = -h rho c.
    """
    tau, mu = curve.tau, curve.mu
    aux = aux_quantities((tau, mu), params)
    H = closed_form_H((tau, mu), params, curve.k)
    rot = H - aux.rho * (aux.b * tau - aux.a * mu)
    trans = H - (-params.h * aux.rho * aux.c)
    return rot, trans


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (n, 3): disk x, disk y, height
    faces: np.ndarray  # (m, 4), 0-based
    scalars: dict = field(default_factory=dict)

    def validate(self):
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise MeshError("face index out of range")
        q = self.vertices[self.faces]
        d1, d2 = q[:, 2] - q[:, 0], q[:, 3] - q[:, 1]
        area = 0.5 * np.linalg.norm(np.cross(d1, d2), axis=1)
        bad = np.flatnonzero(area < MIN_FACE_AREA)
        if len(bad):
            raise MeshError(f"{len(bad)} degenerate faces (area < {MIN_FACE_AREA}), first {bad[0]}")
        return self


def export_mesh(curve: GeneratingCurve, params: SolitonParams, v_range=(0.0, 2 * np.pi),
                nv: int = 64, scalars=("H", "rotator_residual")) -> Mesh:
    """Quad grid over (curve samples) x (nv angles) in Poincare-disk render coordinates."""
    v0, v1 = v_range
    if nv < 2:
        raise ValueError("nv must be at least 2")
    if not v0 < v1:
        raise ValueError("v_range must satisfy v0 < v1")
    vs = np.linspace(v0, v1, nv)
    n = len(curve)
    ax, ay = curve.alpha[:, 0][:, None], curve.alpha[:, 1][:, None]
    x, y = apply_rotation(vs[None, :], (ax, ay))
    dx, dy = poincare_projection((x, y, curve.phi[:, None]))
    height = np.broadcast_to(params.h * vs[None, :], dx.shape)
    vertices = np.stack([dx, dy, height], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(n - 1), np.arange(nv - 1), indexing="ij")
    a = (i * nv + j).ravel()
    faces = np.stack([a, a + nv, a + nv + 1, a + 1], axis=1)
    channels = {}
    if "H" in scalars:
        channels["H"] = np.repeat(curve_closed_form_H(curve), nv)
    if "rotator_residual" in scalars:
        channels["rotator_residual"] = np.repeat(soliton_residuals(curve, params)[0], nv)
    return Mesh(vertices, faces, channels).validate()


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_obj(mesh: Mesh, path):
    with open(path, "w", newline="\n") as fh:
        for vx in mesh.vertices:
            fh.write("v " + " ".join(fmt(c) for c in vx) + "\n")
        for face in mesh.faces + 1:
            fh.write("f " + " ".join(str(int(c)) for c in face) + "\n")


def write_scalars_csv(mesh: Mesh, path):
    import csv

    names = [c for c in ("H", "rotator_residual") if c in mesh.scalars]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex_index", *names])
        for i in range(len(mesh.vertices)):
            w.writerow([i, *(fmt(mesh.scalars[c][i]) for c in names)])
