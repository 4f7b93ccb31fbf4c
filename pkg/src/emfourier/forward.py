"""Radiated electric field by direct volume integration of the dyadic Green's function.

For a current ``J`` supported in ``V0``

    E(x; k) = i k int Phi_k(x, y) [A(kr) I + B(kr) d d^T / r^2] J(y) dy,

with ``d = x - y``, ``r = |d|``, ``Phi_k = exp(ikr) / (4 pi r)`` and

    A = 1 + i/(kr) - 1/(kr)^2,   B = 3/(kr)^2 - 3i/(kr) - 1.

``kernel="printed"`` replaces ``i/(kr)`` in ``A`` by ``i/k``; it is kept only
for comparison runs and does not solve Maxwell's equations.
``kernel="sign-flipped"`` negates that term; it exists only so the self-test
can confirm that the dipole consistency check catches a broken kernel.
"""
from __future__ import annotations

from dataclasses import dataclass

import warnings

import numba
import numpy as np

from .geometry import CubeQuadrature, PointSet

__all__ = [
    "KERNELS",
    "RadiationParams",
    "radiated_field",
    "dipole_field",
    "dipole_curl",
    "tangential_trace",
    "source_values",
    "traces_on_points",
]

warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

KERNELS = {"standard": 0, "printed": 1, "sign-flipped": 2}


@dataclass(frozen=True)
class RadiationParams:
    k: float
    R: float
    quad: CubeQuadrature

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("wavenumber must be positive")
        if not self.R > np.sqrt(3) / 2 * self.quad.L:
            raise ValueError("measurement radius must exceed the cube half-diagonal")

    @property
    def tau0(self):
        return self.R - np.sqrt(3) / 2 * self.quad.L


# Cody-Waite split of pi/2 and the fdlibm kernel polynomials on [-pi/4, pi/4].
# A branch-free sin/cos lets LLVM vectorise the inner loop; libm calls do not.
_PIO2_1 = 1.57079632673412561417e+00
_PIO2_1T = 6.07710050650619224932e-11
_TWO_OVER_PI = 6.36619772367581382433e-01
_S = (-1.66666666666666324348e-01, 8.33333333332248946124e-03, -1.98412698298579493134e-04,
      2.75573137070700676789e-06, -2.50507602534068634195e-08, 1.58969099521155010221e-10)
_C = (4.16666666666666019037e-02, -1.38888888888741095749e-03, 2.48015872894767294178e-05,
      -2.75573143513906633035e-07, 2.08757232129817482790e-09, -1.13596475577881948265e-11)
S1, S2, S3, S4, S5, S6 = _S
C1, C2, C3, C4, C5, C6 = _C


@numba.njit(fastmath=True, cache=True, inline="always")
def _sincos(x):
    n = np.floor(x * _TWO_OVER_PI + 0.5)
    y = (x - n * _PIO2_1) - n * _PIO2_1T
    z = y * y
    sy = y + y * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))))
    cy = 1.0 - 0.5 * z + z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))))
    m = np.int64(n) & 3
    swap = m & 1
    ss = 1.0 - 2.0 * ((m >> 1) & 1)
    cs = 1.0 - 2.0 * (((m + 1) >> 1) & 1)
    return ss * (cy if swap else sy), cs * (sy if swap else cy)


@numba.njit(fastmath=True, cache=True)
def sincos(x):
    """Elementwise (sin x, cos x) through the vectorisable kernel."""
    s = np.empty_like(x)
    c = np.empty_like(x)
    for i in range(x.size):
        s[i], c[i] = _sincos(x[i])
    return s, c


@numba.njit(fastmath=True, cache=True, parallel=True)
def _field_kernel(x, y, wJr, wJi, ks, variant, out):
    # x (P,3); y (Q,3); wJr/wJi (S,3,Q) weighted source values; out (S,K,P,3)
    P = x.shape[0]
    Q = y.shape[0]
    S = wJr.shape[0]
    K = ks.shape[0]
    inv4pi = 1.0 / (4.0 * np.pi)
    for ip in numba.prange(P):
        r = np.empty(Q)
        u = np.empty((3, Q))
        uJr = np.empty((S, Q))
        uJi = np.empty((S, Q))
        for q in range(Q):
            d0 = x[ip, 0] - y[q, 0]
            d1 = x[ip, 1] - y[q, 1]
            d2 = x[ip, 2] - y[q, 2]
            rq = np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            r[q] = rq
            u[0, q] = d0 / rq
            u[1, q] = d1 / rq
            u[2, q] = d2 / rq
        for si in range(S):
            for q in range(Q):
                uJr[si, q] = u[0, q] * wJr[si, 0, q] + u[1, q] * wJr[si, 1, q] + u[2, q] * wJr[si, 2, q]
                uJi[si, q] = u[0, q] * wJi[si, 0, q] + u[1, q] * wJi[si, 1, q] + u[2, q] * wJi[si, 2, q]
        paR = np.empty(Q)
        paI = np.empty(Q)
        pbR = np.empty(Q)
        pbI = np.empty(Q)
        for kk in range(K):
            k = ks[kk]
            for q in range(Q):
                kr = k * r[q]
                ikr = 1.0 / kr
                sn, cs = _sincos(kr)
                amp = k * inv4pi / r[q]
                # i k Phi = amp * (-sin + i cos)
                eR = -amp * sn
                eI = amp * cs
                aR = 1.0 - ikr * ikr
                if variant == 0:
                    aI = ikr
                elif variant == 1:
                    aI = 1.0 / k
                else:
                    aI = -ikr
                bR = 3.0 * ikr * ikr - 1.0
                bI = -3.0 * ikr
                paR[q] = eR * aR - eI * aI
                paI[q] = eR * aI + eI * aR
                pbR[q] = eR * bR - eI * bI
                pbI[q] = eR * bI + eI * bR
            for si in range(S):
                a0r = 0.0
                a0i = 0.0
                a1r = 0.0
                a1i = 0.0
                a2r = 0.0
                a2i = 0.0
                for q in range(Q):
                    tR = pbR[q] * uJr[si, q] - pbI[q] * uJi[si, q]
                    tI = pbR[q] * uJi[si, q] + pbI[q] * uJr[si, q]
                    j0r = wJr[si, 0, q]
                    j0i = wJi[si, 0, q]
                    j1r = wJr[si, 1, q]
                    j1i = wJi[si, 1, q]
                    j2r = wJr[si, 2, q]
                    j2i = wJi[si, 2, q]
                    a0r += paR[q] * j0r - paI[q] * j0i + tR * u[0, q]
                    a0i += paR[q] * j0i + paI[q] * j0r + tI * u[0, q]
                    a1r += paR[q] * j1r - paI[q] * j1i + tR * u[1, q]
                    a1i += paR[q] * j1i + paI[q] * j1r + tI * u[1, q]
                    a2r += paR[q] * j2r - paI[q] * j2i + tR * u[2, q]
                    a2i += paR[q] * j2i + paI[q] * j2r + tI * u[2, q]
                out[si, kk, ip, 0] = complex(a0r, a0i)
                out[si, kk, ip, 1] = complex(a1r, a1i)
                out[si, kk, ip, 2] = complex(a2r, a2i)


def _check_outside(x, L):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    inside = np.all(np.abs(x) <= L / 2, axis=-1)
    if np.any(inside):
        raise ValueError("observation point lies inside or on the source cube")
    return x


def radiated_field(values, nodes, weights, ks, x, L=1.0, kernel="standard"):
    """E at points ``x`` for one or several sources sampled on quadrature nodes.

    Parameters
    ----------
    values : array, shape (Q, 3) or (S, Q, 3)
        Source values ``J(y_q)``.
    nodes, weights : quadrature nodes (Q, 3) and weights (Q,).
    ks : float or sequence of wavenumbers.
    x : array (P, 3) of points outside the closed cube.

    Returns
    -------
    array of shape ``(S, K, P, 3)``; leading axes of size one are squeezed
    for a single source or a scalar ``k``.
    """
    values = np.asarray(values, dtype=complex)
    single = values.ndim == 2
    if single:
        values = values[None]
    scalar_k = np.ndim(ks) == 0
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    if np.any(ks <= 0):
        raise ValueError("wavenumbers must be positive")
    x = _check_outside(x, L)
    nodes = np.ascontiguousarray(nodes, dtype=float)
    wJ = np.ascontiguousarray(values * np.asarray(weights, dtype=float)[None, :, None])
    out = np.zeros((wJ.shape[0], len(ks), len(x), 3), complex)
    wJ = wJ.transpose(0, 2, 1)
    _field_kernel(np.ascontiguousarray(x), nodes, np.ascontiguousarray(wJ.real),
                  np.ascontiguousarray(wJ.imag), ks, KERNELS[kernel], out)
    if scalar_k:
        out = out[:, 0]
    return out[0] if single else out


def source_values(J, quad: CubeQuadrature):
    """Sample a source callable ``J(points) -> (..., 3)`` on the quadrature nodes."""
    return np.asarray(J(quad.nodes), dtype=complex)


def _green_hessian(d, k):
    r = np.linalg.norm(d, axis=-1)[..., None, None]
    u = d[..., :, None] * d[..., None, :] / r**2
    phi = np.exp(1j * k * r) / (4 * np.pi * r)
    g = 1j * k - 1.0 / r
    eye = np.eye(3)
    return phi, phi * ((g**2 + 1 / r**2) * u + (g / r) * (eye - u))


def dipole_field(x, y0, q, k):
    """E = i k (Phi q + k^-2 grad(grad Phi . q)) of a point current ``q`` at ``y0``."""
    d = np.asarray(x, dtype=float) - np.asarray(y0, dtype=float)
    phi, H = _green_hessian(d, k)
    q = np.asarray(q, dtype=complex)
    return 1j * k * (phi[..., 0] * q + (H @ q) / k**2)


def dipole_curl(x, y0, q, k):
    """curl E = i k grad(Phi) x q for a point current."""
    d = np.asarray(x, dtype=float) - np.asarray(y0, dtype=float)
    r = np.linalg.norm(d, axis=-1, keepdims=True)
    phi = np.exp(1j * k * r) / (4 * np.pi * r)
    grad = phi * (1j * k - 1 / r) * d / r
    return 1j * k * np.cross(grad, np.asarray(q, dtype=complex))


def tangential_trace(E, xhat):
    """``xhat x E``."""
    xhat = np.asarray(xhat, dtype=float)
    if not np.allclose(np.linalg.norm(xhat, axis=-1), 1.0, atol=1e-10):
        raise ValueError("xhat must be a unit vector")
    return np.cross(xhat, E)


def traces_on_points(values, quad: CubeQuadrature, ks, points: PointSet, kernel="standard"):
    """Tangential traces ``xhat x E`` on a point set; shape ``([S,] K, P, 3)``."""
    E = radiated_field(values, quad.nodes, quad.weights, np.atleast_1d(ks), points.points,
                       L=quad.L, kernel=kernel)
    return np.cross(points.directions, E)
