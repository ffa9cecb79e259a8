"""Curvature laws and the phase-plane system for helicoidal solitons.

A helicoidal surface of pitch h is generated by a unit-speed plane curve
alpha.  Its support functions tau = <alpha, T> and mu = <alpha, N> obey

    tau' = 1 + k mu,    mu' = -k tau,

so once the curvature k is prescribed as a function of (tau, mu) the pair
becomes an autonomous planar ODE.  The tangent angle theta (theta' = k) is
carried along so that alpha can be rebuilt algebraically.

Formulas are written with plain arithmetic and ``** 0.5`` so they work on
Python floats (fast inside the integrator) and on numpy arrays alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np


@dataclass(frozen=True)
class SolitonParams:
    h: float

    def __post_init__(self):
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"pitch must satisfy h > 0, got h={self.h!r}")


class PhasePoint(NamedTuple):
    tau: float
    mu: float


class AuxQuantities(NamedTuple):
    phi: float
    phi_prime: float
    a: float
    b: float
    c: float
    rho: float


class DegenerateNormal(ArithmeticError):
    """The radicand a^2 + b^2 - mu^2 + c^2 of the unit normal is not positive."""


def aux_quantities(p, params: SolitonParams) -> AuxQuantities:
    tau, mu = p
    h = params.h
    phi = (1.0 + tau * tau + mu * mu) ** 0.5
    phi_prime = tau / phi
    a = mu * phi_prime
    b = (1.0 + mu * mu) / phi
    c = -phi_prime / h
    radicand = a * a + b * b - mu * mu + c * c
    # radicand == (tau^2 + h^2 (1 + mu^2)) / (h^2 phi^2) > 0 analytically
    if np.any(radicand <= 0):
        raise DegenerateNormal(f"non-positive normal radicand at tau={tau}, mu={mu}")
    return AuxQuantities(phi, phi_prime, a, b, c, radicand ** -0.5)


def rotator_curvature(p, params: SolitonParams):
    """Curvature of alpha that makes the helicoidal surface a rotator."""
    tau, mu = p
    h2 = params.h * params.h
    q = 1.0 + mu * mu
    r2 = tau * tau + mu * mu
    num = 2.0 * (tau * tau + h2 * q) * tau + (h2 - 1.0) * q * mu
    return num / ((1.0 + r2) * (h2 + r2))


def closed_form_H(p, params: SolitonParams, k):
    """Mean curvature of the helicoidal surface in terms of (tau, mu, k)."""
    tau, mu = p
    h2 = params.h * params.h
    aux = aux_quantities(p, params)
    phi2 = aux.phi * aux.phi
    q = 1.0 + mu * mu
    r2 = tau * tau + mu * mu
    num = (phi2 * k - mu * q) * (h2 + r2) + mu * q * phi2
    return aux.rho / aux.phi * num / (2.0 * (tau * tau + h2 * q))


def rotator_target_H(p, params: SolitonParams):
    """<J pi(X), eta> = rho (b tau - a mu), which simplifies to rho tau / phi."""
    aux = aux_quantities(p, params)
    return aux.rho * p[0] / aux.phi


def prescribed_curvature(psi: Callable, p, params: SolitonParams):
    """Solve closed_form_H(p, params, k) = psi(tau, mu) for k.

    The coefficient of k in the mean curvature is strictly positive, so the
    solution is unique and smooth wherever psi is.
    """
    tau, mu = p
    h2 = params.h * params.h
    aux = aux_quantities(p, params)
    phi2 = aux.phi * aux.phi
    q = 1.0 + mu * mu
    r2 = tau * tau + mu * mu
    target = psi(tau, mu)
    num = 2.0 * (tau * tau + h2 * q) * target * aux.phi / aux.rho - mu * q * (phi2 - (h2 + r2))
    return num / (phi2 * (h2 + r2))


class CurvatureLaw:
    """A map (PhasePoint, SolitonParams) -> k, autonomous in arclength."""

    name = "abstract"

    def __call__(self, p, params: SolitonParams) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"name": self.name}


class RotatorLaw(CurvatureLaw):
    name = "rotator"

    def __call__(self, p, params):
        return rotator_curvature(p, params)


class PrescribedHLaw(CurvatureLaw):
    """Curvature realizing a prescribed mean curvature H = psi(tau, mu)."""

    name = "prescribed_H"

    def __init__(self, psi: Callable):
        self.psi = psi

    def __call__(self, p, params):
        return prescribed_curvature(self.psi, p, params)


class PerturbedLaw(CurvatureLaw):
    """Adds a constant offset to another law.  Used for mutation testing."""

    name = "perturbed"

    def __init__(self, base: CurvatureLaw, delta: float):
        self.base = base
        self.delta = delta

    def __call__(self, p, params):
        return self.base(p, params) + self.delta

    def describe(self):
        return {"name": self.name, "base": self.base.describe(), "delta": self.delta}


ROTATOR = RotatorLaw()


def phase_rhs(p, params: SolitonParams, law: CurvatureLaw = ROTATOR):
    """(tau', mu', theta') = (1 + k mu, -k tau, k)."""
    tau, mu = p
    k = law(p, params)
    return 1.0 + k * mu, -k * tau, k


def rotator_rhs_explicit(p, params: SolitonParams):
    """The rotator system written out as rational functions of (tau, mu).

    Kept separate from ``phase_rhs`` so the two can be compared.
    """
    tau, mu = p
    h2 = params.h * params.h
    q = 1.0 + mu * mu
    r2 = tau * tau + mu * mu
    den = (1.0 + r2) * (h2 + r2)
    w = tau * tau + h2 * q
    dtau = 1.0 + (2.0 * w * tau * mu + (h2 - 1.0) * q * mu * mu) / den
    dmu = -(2.0 * w * tau * tau + (h2 - 1.0) * q * tau * mu) / den
    return dtau, dmu


def rotator_curvature_slope_at_zero(p, params: SolitonParams):
    """dk/ds at a point where k = 0 along a rotator trajectory."""
    tau, mu = p
    h2 = params.h * params.h
    r2 = tau * tau + mu * mu
    return (6.0 * tau * tau + 2.0 * h2 * (1.0 + mu * mu)) / ((1.0 + r2) * (h2 + r2))
