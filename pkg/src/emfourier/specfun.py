"""Spherical Bessel/Hankel functions and scalar/vector spherical harmonics.

Conventions
-----------
* ``Y_n^m`` is orthonormal on the unit sphere and carries the Condon-Shortley
  phase, so ``Y_n^{-m} = (-1)^m conj(Y_n^m)``.
* ``U_n^m = grad_S Y_n^m / sqrt(n(n+1))`` and ``V_n^m = xhat x U_n^m``.
* Tangential vectors on a sphere are handled either in Cartesian form
  (last axis of length 3) or by their ``(e_theta, e_phi)`` components.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SphericalHarmonicIndex",
    "HankelBoundConstants",
    "spherical_bessel_j",
    "spherical_bessel_y",
    "spherical_hankel1",
    "spherical_hankel1_derivative",
    "z_fn",
    "sph_jn_all",
    "sph_yn_all",
    "sph_hankel1_all",
    "z_all",
    "legendre_tables",
    "sph_harmonic",
    "vsh_U",
    "vsh_V",
    "vsh_components",
    "spherical_basis",
    "hankel_bound_constants",
    "check_z_over_h_lower_bound",
    "check_hankel_ratio_bounds",
]

@dataclass(frozen=True)
class SphericalHarmonicIndex:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 0 or abs(self.m) > self.n:
            raise ValueError(f"invalid harmonic index (n={self.n}, m={self.m})")


def _as_positive(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("spherical Bessel functions need t > 0")
    return t


# ---------------------------------------------------------------------------
# Spherical Bessel / Hankel functions
# ---------------------------------------------------------------------------

def _jn_upward(nmax, t):
    out = np.empty((nmax + 1,) + t.shape)
    s, c = np.sin(t), np.cos(t)
    out[0] = s / t
    if nmax >= 1:
        out[1] = s / t**2 - c / t
    for n in range(1, nmax):
        out[n + 1] = (2 * n + 1) / t * out[n] - out[n - 1]
    return out


def _jn_miller(nmax, t):
    """Miller's downward recurrence in ratio form, anchored on j_0 or j_1.

    The ratios ``r_n = j_n / j_{n-1}`` obey ``r_n = 1 / ((2n+1)/t - r_{n+1})``
    and are run down from an order well above ``max(nmax, t)``, which keeps
    every intermediate quantity in range (needs nmax >= 1).
    """
    tmax = float(np.max(t))
    top = int(max(nmax, tmax)) + 20 + int(np.sqrt(40.0 * max(nmax, tmax, 1.0)))
    ratio = np.zeros((nmax + 1,) + t.shape)
    r = np.zeros_like(t)
    for n in range(top, 0, -1):
        r = 1.0 / ((2 * n + 1) / t - r)
        if n <= nmax:
            ratio[n] = r
    s, c = np.sin(t), np.cos(t)
    j0 = s / t
    j1 = s / t**2 - c / t
    out = np.empty((nmax + 1,) + t.shape)
    # anchor on whichever of j0, j1 is further from a zero
    use_j1 = np.abs(j1) > np.abs(j0)
    out[0] = np.where(use_j1, j1 / np.where(ratio[1] == 0, 1.0, ratio[1]), j0)
    out[1] = np.where(use_j1, j1, ratio[1] * j0)
    for n in range(2, nmax + 1):
        out[n] = ratio[n] * out[n - 1]
    return out


def sph_jn_all(nmax, t):
    """j_0..j_nmax evaluated at every entry of ``t``; shape ``(nmax+1,) + t.shape``.

    Upward recurrence is used where ``t >= nmax`` and Miller's downward
    recurrence otherwise.
    """
    t = _as_positive(t)
    flat = np.atleast_1d(t).ravel()
    out = np.empty((nmax + 1, flat.size))
    up = flat >= nmax
    if np.any(up):
        out[:, up] = _jn_upward(nmax, flat[up])
    if np.any(~up):
        out[:, ~up] = _jn_miller(max(nmax, 1), flat[~up])[: nmax + 1]
    return out.reshape((nmax + 1,) + t.shape)


def sph_yn_all(nmax, t):
    t = _as_positive(t)
    out = np.empty((nmax + 1,) + t.shape)
    s, c = np.sin(t), np.cos(t)
    out[0] = -c / t
    if nmax >= 1:
        out[1] = -c / t**2 - s / t
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, nmax):
            out[n + 1] = (2 * n + 1) / t * out[n] - out[n - 1]
    return out


def sph_hankel1_all(nmax, t):
    return sph_jn_all(nmax, t) + 1j * sph_yn_all(nmax, t)


def z_all(nmax, t):
    """z_n(t) = h_n(t) + t h_n'(t) = (n+1) h_n(t) - t h_{n+1}(t) for n = 0..nmax."""
    t = _as_positive(t)
    h = sph_hankel1_all(nmax + 1, t)
    n = np.arange(nmax + 1).reshape((-1,) + (1,) * t.ndim)
    return (n + 1) * h[:-1] - t * h[1:]


def spherical_bessel_j(n, t):
    """Spherical Bessel function of the first kind, j_n(t), for t > 0."""
    t = _as_positive(t)
    return sph_jn_all(int(n), t)[int(n)]


def spherical_bessel_y(n, t):
    t = _as_positive(t)
    return sph_yn_all(int(n), t)[int(n)]


def spherical_hankel1(n, t):
    """h_n^{(1)}(t) = j_n(t) + i y_n(t)."""
    t = _as_positive(t)
    return sph_hankel1_all(int(n), t)[int(n)]


def spherical_hankel1_derivative(n, t):
    """h_n'(t) = n h_n(t)/t - h_{n+1}(t)."""
    t = _as_positive(t)
    h = sph_hankel1_all(int(n) + 1, t)
    return n * h[n] / t - h[n + 1]


def z_fn(n, t):
    """z_n(t) = h_n^{(1)}(t) + t h_n^{(1)'}(t)."""
    t = _as_positive(t)
    return z_all(int(n), t)[int(n)]


# ---------------------------------------------------------------------------
# Scalar and vector spherical harmonics
# ---------------------------------------------------------------------------

def legendre_tables(nmax, theta):
    r"""Fully normalised associated Legendre data at colatitudes ``theta``.

    Returns three arrays of shape ``(nmax+1, nmax+1) + theta.shape`` indexed
    ``[n, m]`` for ``0 <= m <= n``:

    ``P``
        :math:`\bar P_n^m(\cos\theta)` with ``Y_n^m = P e^{im\varphi}``.
    ``dP``
        :math:`\partial_\theta \bar P_n^m`.
    ``mQ``
        :math:`m \bar P_n^m / \sin\theta`, finite at the poles.
    """
    theta = np.asarray(theta, dtype=float)
    x, s = np.cos(theta), np.sin(theta)
    shape = (nmax + 1, nmax + 1) + theta.shape
    P = np.zeros(shape)
    Q = np.zeros(shape)  # P / sin(theta), only meaningful for m >= 1
    P[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, nmax + 1):
        c = -np.sqrt((2 * m + 1) / (2.0 * m))
        Q[m, m] = c * (P[m - 1, m - 1] if m == 1 else s * Q[m - 1, m - 1])
        P[m, m] = s * Q[m, m]
    for m in range(0, nmax + 1):
        if m + 1 <= nmax:
            f = np.sqrt(2 * m + 3.0)
            P[m + 1, m] = f * x * P[m, m]
            Q[m + 1, m] = f * x * Q[m, m]
        for n in range(m + 2, nmax + 1):
            a = np.sqrt((4.0 * n * n - 1) / (n * n - m * m))
            b = np.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1) ** 2 - 1))
            P[n, m] = a * (x * P[n - 1, m] - b * P[n - 2, m])
            Q[n, m] = a * (x * Q[n - 1, m] - b * Q[n - 2, m])
    dP = np.zeros(shape)
    for n in range(1, nmax + 1):
        dP[n, 0] = np.sqrt(n * (n + 1.0)) * P[n, 1]
        for m in range(1, n + 1):
            c = np.sqrt((n * n - m * m) * (2 * n + 1.0) / (2 * n - 1.0)) if n > m else 0.0
            dP[n, m] = n * x * Q[n, m] - c * Q[n - 1, m]
    m_idx = np.arange(nmax + 1).reshape((1, -1) + (1,) * theta.ndim)
    return P, dP, m_idx * Q


def _angles(xhat):
    xhat = np.asarray(xhat, dtype=float)
    r = np.linalg.norm(xhat, axis=-1)
    theta = np.arccos(np.clip(xhat[..., 2] / r, -1.0, 1.0))
    phi = np.arctan2(xhat[..., 1], xhat[..., 0])
    return theta, phi


def spherical_basis(theta, phi):
    """Unit vectors (e_r, e_theta, e_phi), each of shape ``theta.shape + (3,)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    e_r = np.stack([st * cp, st * sp, ct * np.ones_like(phi)], axis=-1)
    e_t = np.stack([ct * cp, ct * sp, -st * np.ones_like(phi)], axis=-1)
    e_p = np.stack([-sp * np.ones_like(theta), cp * np.ones_like(theta), np.zeros(np.broadcast(theta, phi).shape)], axis=-1)
    return e_r, e_t, e_p


def _signed(table, n, m):
    val = table[n, abs(m)]
    return (-1) ** m * val if m < 0 else val


def sph_harmonic(idx: SphericalHarmonicIndex, theta, phi):
    """Orthonormal Y_n^m(theta, phi) with Condon-Shortley phase."""
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > np.pi)):
        raise ValueError("colatitude must lie in [0, pi]")
    P, _, _ = legendre_tables(idx.n, theta)
    return _signed(P, idx.n, idx.m) * np.exp(1j * idx.m * np.asarray(phi))


def vsh_components(nmax, theta):
    """theta-dependent parts of U_n^m for m >= 0.

    ``U_n^m = (A e_theta + B e_phi) e^{im phi}`` and
    ``V_n^m = (-B e_theta + A e_phi) e^{im phi}``, with ``A = dP/dtheta / s``
    and ``B = i m P / (sin(theta) s)``, ``s = sqrt(n(n+1))``. Arrays are
    indexed ``[n, m]``; row ``n = 0`` is zero.
    """
    _, dP, mQ = legendre_tables(nmax, theta)
    n = np.arange(nmax + 1, dtype=float)
    norm = np.zeros_like(n)
    norm[1:] = 1.0 / np.sqrt(n[1:] * (n[1:] + 1))
    norm = norm.reshape((-1, 1) + (1,) * np.ndim(theta))
    return dP * norm, 1j * mQ * norm


def _check_vsh_args(idx, xhat):
    if idx.n < 1:
        raise ValueError("vector spherical harmonics need degree n >= 1")
    xhat = np.asarray(xhat, dtype=float)
    if not np.allclose(np.linalg.norm(xhat, axis=-1), 1.0, atol=1e-10):
        raise ValueError("xhat must be a unit vector")
    return xhat


def vsh_U(idx: SphericalHarmonicIndex, xhat):
    """U_n^m at unit direction(s) ``xhat``; returns complex Cartesian 3-vectors."""
    xhat = _check_vsh_args(idx, xhat)
    theta, phi = _angles(xhat)
    A, B = vsh_components(idx.n, theta)
    a, b = _signed(A, idx.n, idx.m), _signed(B, idx.n, idx.m)
    if idx.m < 0:
        # U_n^{-m} = (-1)^m conj(U_n^m): B is imaginary, so its sign flips
        b = -b
    _, e_t, e_p = spherical_basis(theta, phi)
    ph = np.exp(1j * idx.m * phi)[..., None]
    return (a[..., None] * e_t + b[..., None] * e_p) * ph


def vsh_V(idx: SphericalHarmonicIndex, xhat):
    """V_n^m = xhat x U_n^m."""
    xhat = _check_vsh_args(idx, xhat)
    return np.cross(xhat, vsh_U(idx, xhat))


# ---------------------------------------------------------------------------
# Hankel ratio estimates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HankelBoundConstants:
    c1: float
    c2: float
    c3: float
    c4: float
    L: float
    R: float
    rho: float

    @property
    def C1(self):
        return self.L / (2 * np.pi * self.rho) + self.c1

    @property
    def C2(self):
        return 1.0 / self.rho + self.c2


def hankel_bound_constants(L, R, rho):
    if not 0 < R < rho:
        raise ValueError("need 0 < R < rho")
    c3 = np.sqrt(15.0) / 4.0
    e = np.exp(11.0 / 25.0)
    c4 = (25 + 11 * e) / (25 - 11 * e) * (16.0 / 15.0) ** 0.25
    c1 = max(9.0, 1 + c4 * L * np.exp(-1 + c3 * (1 - R / rho)) / (2 * np.pi * c3 * (rho - R)))
    c2 = max(4.5, 0.5 + c4 / (c3 * (rho - R) * np.sqrt(2 * c3 * np.e)))
    return HankelBoundConstants(c1, c2, c3, c4, L, R, rho)


def check_z_over_h_lower_bound(nmax, t):
    """Minimum of |z_n/h_n| - n(n+1)/(2t^2+n+1) over n = 1..nmax and the given t."""
    t = np.asarray(t, dtype=float)
    h = sph_hankel1_all(nmax, t)
    z = z_all(nmax, t)
    n = np.arange(1, nmax + 1).reshape((-1,) + (1,) * t.ndim)
    ratio = np.abs(z[1:] / h[1:])
    return float(np.min(ratio - n * (n + 1) / (2 * t**2 + n + 1)))


def check_hankel_ratio_bounds(constants: HankelBoundConstants, k, nmax):
    """Worst-case slack of the four Hankel-ratio estimates over ``k`` and ``n <= nmax``.

    Each entry is ``min(bound - value)``; a negative number flags a violation.
    Estimate 1 is also evaluated at ``n = 0``. The fourth estimate is checked
    on ``k >= 2 pi / L`` and on ``k <= 1/2`` with its respective branch;
    wavenumbers in between are skipped for that estimate.
    """
    R, rho, L = constants.R, constants.rho, constants.L
    k = np.atleast_1d(np.asarray(k, dtype=float))
    hR = sph_hankel1_all(nmax, k * R)
    hr = sph_hankel1_all(nmax, k * rho)
    zR = z_all(nmax, k * R)
    zr = z_all(nmax, k * rho)
    kk = k[None, :]
    s1 = 1.0 - np.abs(hr / hR)
    s2 = (4 + 10 * kk * R) * rho / R - np.abs(zr[1:] / zR[1:])
    s3 = 7.0 - np.abs(hr[1:] / zR[1:])
    r4 = np.abs(zr[1:] / hR[1:])
    hi = k >= 2 * np.pi / L
    lo = k <= 0.5
    parts = []
    if np.any(hi):
        parts.append((constants.C1 * kk * rho - r4)[:, hi].min())
    if np.any(lo):
        parts.append((constants.C2 * rho - r4)[:, lo].min())
    report = {
        "h_ratio": float(s1.min()),
        "h_ratio_n0": float(s1[0].min()),
        "z_ratio": float(s2.min()),
        "h_over_z": float(s3.min()),
        "z_over_h": float(min(parts)) if parts else float("inf"),
        "z_over_h_low_k": float((constants.C2 * rho - r4)[:, lo].min()) if np.any(lo) else float("inf"),
    }
    report["min_slack"] = min(report.values())
    return report
