"""Lorentzian 3-space and the hyperboloid model of the hyperbolic plane.

Points of H^2 are stored as vectors of L^3 = (R^3, dx1^2 + dx2^2 - dx3^2)
lying on the upper sheet <p, p> = -1.  The plane {e3}^perp is identified with
the Euclidean plane, which is where the generating curve alpha lives.

All functions accept scalars or equally shaped numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class LorentzVec(NamedTuple):
    x1: float
    x2: float
    x3: float


class PlanePoint(NamedTuple):
    x: float
    y: float


E3 = LorentzVec(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class HyperboloidPoint:
    """A point of H^2.  The third coordinate is always recomputed from the
    first two, so <p, p> = -1 holds by construction."""

    x1: float
    x2: float

    @property
    def x3(self) -> float:
        return (1.0 + self.x1 * self.x1 + self.x2 * self.x2) ** 0.5

    @property
    def p(self) -> LorentzVec:
        return LorentzVec(self.x1, self.x2, self.x3)


def minkowski_inner(u, v):
    return u[0] * v[0] + u[1] * v[1] - u[2] * v[2]


def lift_to_hyperboloid(a) -> HyperboloidPoint:
    return HyperboloidPoint(a[0], a[1])


def lift_height(x, y):
    """phi = sqrt(1 + |alpha|^2), vectorized."""
    return np.sqrt(1.0 + x * x + y * y)


def poincare_projection(p):
    """Map a hyperboloid point (x1, x2, x3) into the open unit disk."""
    x1, x2, x3 = (p.x1, p.x2, p.x3) if isinstance(p, HyperboloidPoint) else p
    d = 1.0 + x3
    return PlanePoint(x1 / d, x2 / d)


def apply_rotation(v, a) -> PlanePoint:
    """e^{vJ} a, the rotation of the plane by angle v."""
    c, s = np.cos(v), np.sin(v)
    return PlanePoint(a[0] * c - a[1] * s, a[0] * s + a[1] * c)


def J(a) -> PlanePoint:
    """Quarter turn J(x, y) = (-y, x)."""
    return PlanePoint(-a[1], a[0])
