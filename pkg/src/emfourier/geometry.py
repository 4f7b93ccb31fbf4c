"""Quadrature rules: Gauss-Legendre on the source cube and product grids on spheres."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .specfun import spherical_basis

__all__ = [
    "CubeQuadrature",
    "SphereGrid",
    "gauss_legendre_cube",
    "fejer_weights",
    "sphere_grid",
    "observation_points",
    "PointSet",
]


@dataclass(frozen=True)
class CubeQuadrature:
    """Tensor-product Gauss-Legendre rule on ``(-L/2, L/2)^3``.

    ``nodes`` has shape ``(order**3, 3)`` in C order over
    ``(x1, x2, x3)``; ``axis_nodes``/``axis_weights`` hold the 1-D rule.
    """

    order: int
    L: float
    axis_nodes: np.ndarray
    axis_weights: np.ndarray

    @property
    def nodes(self):
        g = np.meshgrid(self.axis_nodes, self.axis_nodes, self.axis_nodes, indexing="ij")
        return np.stack([a.ravel() for a in g], axis=-1)

    @property
    def weights(self):
        w = self.axis_weights
        return np.einsum("i,j,k->ijk", w, w, w).ravel()


def gauss_legendre_cube(order, L=1.0):
    if order < 2:
        raise ValueError("Gauss-Legendre cube rule needs order >= 2")
    x, w = np.polynomial.legendre.leggauss(order)
    return CubeQuadrature(order, float(L), 0.5 * L * x, 0.5 * L * w)


def fejer_weights(n):
    """Fejer's first rule on the Chebyshev midpoints ``theta_j = (j+1/2) pi / n``.

    The weights integrate ``int_0^pi F(cos t) sin t dt`` exactly for
    polynomials ``F`` of degree below ``n``.
    """
    theta = (np.arange(n) + 0.5) * np.pi / n
    kk = np.arange(1, n // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, kk)) / (4.0 * kk**2 - 1.0)
    return 2.0 / n * (1.0 - 2.0 * s.sum(axis=1))


@dataclass(frozen=True)
class PointSet:
    """Points on a sphere of radius ``radius`` with surface quadrature weights.

    ``weights`` integrate over the physical sphere (they sum to ``4 pi r^2``).
    """

    radius: float
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    kind: str = "points"

    @property
    def directions(self):
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=-1)

    @property
    def points(self):
        return self.radius * self.directions

    @property
    def size(self):
        return self.theta.size

    def basis(self):
        return spherical_basis(self.theta, self.phi)

    def describe(self):
        return {"kind": self.kind, "count": int(self.size), "radius": self.radius}


@dataclass(frozen=True)
class SphereGrid(PointSet):
    """Midpoint-in-theta, uniform-in-phi product grid; points are theta-major."""

    n_theta: int = 0
    n_phi: int = 0
    kind: str = field(default="trapezoid")

    @property
    def theta_nodes(self):
        return self.theta.reshape(self.n_theta, self.n_phi)[:, 0]

    @property
    def phi_nodes(self):
        return self.phi[: self.n_phi]

    @property
    def theta_weights(self):
        """Weights in ``sin(theta) d theta`` on the unit sphere."""
        return self.weights.reshape(self.n_theta, self.n_phi)[:, 0] / (
            self.radius**2 * 2 * np.pi / self.n_phi
        )

    def describe(self):
        return {"kind": self.kind, "n_theta": self.n_theta, "n_phi": self.n_phi, "radius": self.radius}


def sphere_grid(n_theta, n_phi, radius=1.0):
    """Product grid on a sphere with poles excluded.

    ``theta_j = (j+1/2) pi / n_theta`` and ``phi_k = 2 pi k / n_phi``. The
    azimuthal rule is the periodic trapezoid rule; the polar weights are
    Fejer's first-rule weights, which equal ``sin(theta_j) pi / n_theta`` up
    to ``O(n_theta^-2)`` and make the rule exact for band-limited integrands.
    """
    if n_theta < 2 or n_phi < 2:
        raise ValueError("sphere grid needs n_theta, n_phi >= 2")
    theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    w = radius**2 * np.outer(fejer_weights(n_theta), np.full(n_phi, 2 * np.pi / n_phi))
    T, P = np.meshgrid(theta, phi, indexing="ij")
    return SphereGrid(
        radius=float(radius), theta=T.ravel(), phi=P.ravel(), weights=w.ravel(),
        n_theta=int(n_theta), n_phi=int(n_phi),
    )


def observation_points(count, radius=1.0):
    """Deterministic Fibonacci-spiral point set with equal-area weights."""
    if count < 100:
        raise ValueError("observation set needs at least 100 points")
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    golden = np.pi * (3.0 - np.sqrt(5.0))
    phi = np.mod(golden * np.arange(count), 2 * np.pi)
    theta = np.arccos(z)
    w = np.full(count, 4 * np.pi * radius**2 / count)
    return PointSet(radius=float(radius), theta=theta, phi=phi, weights=w, kind="fibonacci")


def point_set_from_description(desc):
    kind = desc.get("kind")
    if kind == "trapezoid":
        return sphere_grid(desc["n_theta"], desc["n_phi"], desc["radius"])
    if kind == "fibonacci":
        return observation_points(desc["count"], desc["radius"])
    raise ValueError(f"unknown point layout {kind!r}")
