"""Fourier representation of currents ``J = p f + p x grad g`` on the cube ``V0``.

With ``phi_l(x) = exp(2 pi i l.x / L)`` the source reads

    J = a_0 p + sum_{|l|>=1} (a_l p + (2 pi i / L) b_l (p x l)) phi_l

and its ``sigma``-norm is
``(L^3 sum (1+|l|^2)^s |a_l|^2 + 4 pi^2 L sum (1+|l|^2)^s |p x l|^2 |b_l|^2)^(1/2)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import CubeQuadrature

__all__ = [
    "ADMISSIBILITY_TOL",
    "lattice_vectors",
    "is_admissible",
    "LatticeFrame",
    "lattice_frame",
    "FourierSource",
    "project_scalar_fields",
    "evaluate",
    "evaluate_on_grid",
    "truncate",
    "sobolev_norm",
    "ExampleSource",
    "example_source",
]

ADMISSIBILITY_TOL = 1e-12


def lattice_vectors(N, include_zero=True):
    """All ``l in Z^3`` with ``|l| <= N`` in lexicographic order, shape ``(n, 3)``."""
    r = np.arange(-N, N + 1)
    g = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    s = (g**2).sum(axis=1)
    keep = s <= N * N
    if not include_zero:
        keep &= s > 0
    return g[keep]


def _check_unit(p):
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or abs(np.linalg.norm(p) - 1.0) > 1e-12:
        raise ValueError("polarization must be a real unit 3-vector")
    return p


def is_admissible(p, N_check):
    """Return ``(admissible, C_N)`` with ``C_N = min |p x l/|l||`` over ``1 <= |l| <= N_check``."""
    p = _check_unit(p)
    if N_check < 1:
        raise ValueError("N_check must be >= 1")
    ls = lattice_vectors(N_check, include_zero=False).astype(float)
    cross = np.linalg.norm(np.cross(p, ls), axis=1)
    ok = bool(np.all(cross > ADMISSIBILITY_TOL))
    return ok, float(np.min(cross / np.linalg.norm(ls, axis=1)))


@dataclass(frozen=True)
class LatticeFrame:
    l: np.ndarray
    v: np.ndarray
    w: np.ndarray


def lattice_frame(p, l):
    """``v_l = p x l`` and ``w_l = l x (p x l)``; ``l`` may be non-integer."""
    l = np.asarray(l, dtype=float)
    v = np.cross(p, l)
    return LatticeFrame(l, v, np.cross(l, v))


@dataclass(frozen=True)
class FourierSource:
    """Sparse Fourier data of a source; ``lattice`` rows are kept in lexicographic order."""

    p: np.ndarray
    L: float
    lattice: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _check_unit(self.p))
        lat = np.asarray(self.lattice, dtype=np.int64).reshape(-1, 3)
        a = np.asarray(self.a, dtype=complex).reshape(-1)
        b = np.asarray(self.b, dtype=complex).reshape(-1)
        if not (len(lat) == len(a) == len(b)):
            raise ValueError("lattice, a and b must have equal length")
        order = np.lexsort(lat.T[::-1])
        lat, a, b = lat[order], a[order], b[order]
        zero = ~lat.any(axis=1)
        if np.any(b[zero] != 0):
            raise ValueError("b has no entry at l = 0")
        object.__setattr__(self, "lattice", lat)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_dicts(cls, p, L, a, b=None):
        keys = sorted(set(a) | set(b or {}))
        return cls(
            p, L, np.array(keys, dtype=np.int64).reshape(-1, 3),
            [a.get(key, 0) for key in keys], [(b or {}).get(key, 0) for key in keys],
        )

    @property
    def N_max(self):
        return float(np.sqrt((self.lattice**2).sum(axis=1).max())) if len(self.lattice) else 0.0

    def coefficient(self, l):
        hit = np.flatnonzero((self.lattice == np.asarray(l)).all(axis=1))
        if hit.size == 0:
            return 0j, 0j
        return complex(self.a[hit[0]]), complex(self.b[hit[0]])

    def vector_coefficients(self):
        """``c_l = a_l p + (2 pi i / L) b_l (p x l)``, shape ``(n, 3)``."""
        pxl = np.cross(self.p, self.lattice.astype(float))
        return self.a[:, None] * self.p + (2j * np.pi / self.L) * self.b[:, None] * pxl

    def to_dict(self):
        return {
            "p": self.p.tolist(),
            "L": self.L,
            "coefficients": [
                {"l": l.tolist(), "a": [a.real, a.imag], "b": [b.real, b.imag]}
                for l, a, b in zip(self.lattice, self.a, self.b)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            rows = d["coefficients"]
            lat = [r["l"] for r in rows]
            a = [complex(*r["a"]) for r in rows]
            b = [complex(*r["b"]) for r in rows]
            return cls(np.array(d["p"], dtype=float), float(d["L"]), lat, a, b)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed source document: {exc}") from exc

    def to_json(self):
        return json.dumps(self.to_dict())


def _axis_phases(lmax, axis_points, L, sign):
    ls = np.arange(-lmax, lmax + 1)
    return np.exp(sign * 2j * np.pi / L * np.outer(ls, axis_points))


def project_scalar_fields(p, f, g, quad: CubeQuadrature, N):
    """Fourier coefficients of ``f`` and ``g`` for ``|l| <= N`` by cube quadrature.

    ``f`` and ``g`` take an array of points ``(..., 3)``; ``g`` may be ``None``.
    This is a direct evaluation of ``L^-3 int f conj(phi_l)`` and serves as
    the reference the inversion is checked against.
    """
    L = quad.L
    x = quad.axis_nodes
    X = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    w3 = np.einsum("i,j,k->ijk", quad.axis_weights, quad.axis_weights, quad.axis_weights)
    E = _axis_phases(N, x, L, -1.0)  # conj(phi) per axis, (2N+1, order)
    lat = lattice_vectors(N)
    idx = lat + N

    def coeffs(fun):
        vals = np.asarray(fun(X), dtype=complex) * w3
        c = np.einsum("ai,bj,ck,ijk->abc", E, E, E, vals, optimize=True)
        return c[idx[:, 0], idx[:, 1], idx[:, 2]] / L**3

    a = coeffs(f)
    b = coeffs(g) if g is not None else np.zeros(len(lat), complex)
    b[~lat.any(axis=1)] = 0
    return FourierSource(p, L, lat, a, b)


def evaluate(source: FourierSource, x, chunk=4096):
    """J(x) at points ``x`` of shape ``(..., 3)``; returns complex ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 3)
    c = source.vector_coefficients()
    kvec = 2 * np.pi / source.L * source.lattice.astype(float)
    out = np.empty((len(flat), 3), complex)
    for s in range(0, len(flat), chunk):
        ph = np.exp(1j * flat[s:s + chunk] @ kvec.T)
        out[s:s + chunk] = ph @ c
    return out.reshape(x.shape[:-1] + (3,))


def evaluate_on_grid(source: FourierSource, x1, x2, x3):
    """J on the tensor grid ``x1 x x2 x x3``; returns ``(n1, n2, n3, 3)``."""
    lat = source.lattice
    if len(lat) == 0:
        return np.zeros((len(x1), len(x2), len(x3), 3), complex)
    M = int(np.abs(lat).max())
    C = np.zeros((2 * M + 1,) * 3 + (3,), complex)
    idx = lat + M
    C[idx[:, 0], idx[:, 1], idx[:, 2]] = source.vector_coefficients()
    E1, E2, E3 = (_axis_phases(M, np.asarray(v, float), source.L, 1.0) for v in (x1, x2, x3))
    return np.einsum("ai,bj,ck,abcd->ijkd", E1, E2, E3, C, optimize=True)


def truncate(source: FourierSource, N):
    if N < 0:
        raise ValueError("truncation order must be >= 0")
    keep = (source.lattice**2).sum(axis=1) <= N * N
    return FourierSource(source.p, source.L, source.lattice[keep], source.a[keep], source.b[keep])


def sobolev_norm(source: FourierSource, sigma=0.0):
    lat = source.lattice.astype(float)
    wgt = (1.0 + (lat**2).sum(axis=1)) ** sigma
    pxl2 = (np.cross(source.p, lat) ** 2).sum(axis=1)
    L = source.L
    total = L**3 * np.sum(wgt * np.abs(source.a) ** 2)
    total += 4 * np.pi**2 * L * np.sum(wgt * pxl2 * np.abs(source.b) ** 2)
    return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# Example sources
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExampleSource:
    id: int
    p: np.ndarray
    f: Callable
    g: Callable | None
    grad_g: Callable | None
    L: float = 1.0

    def J(self, x):
        x = np.asarray(x, dtype=float)
        out = self.p * np.asarray(self.f(x), dtype=float)[..., None]
        if self.grad_g is not None:
            out = out + np.cross(self.p, self.grad_g(x))
        return out


def _gauss(amp, rate, center):
    c = np.asarray(center, dtype=float)

    def fun(x):
        return amp * np.exp(-rate * ((np.asarray(x) - c) ** 2).sum(axis=-1))

    def grad(x):
        d = np.asarray(x) - c
        return (-2 * rate * fun(x))[..., None] * d

    return fun, grad


def _f2(x):
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    block = (x1 >= 0) & (x1 <= 0.4) & (x2 >= 0) & (x2 <= 0.4) & (x3 >= -0.2) & (x3 <= 0.2)
    ball = (x1 + 0.25) ** 2 + (x2 + 0.25) ** 2 + x3**2 <= 0.15**2
    return np.where(block, np.sqrt(6.0), np.where(ball, np.sqrt(6.0) / 2, 0.0))


def example_source(id):
    """Closed-form sources of the three reference experiments (``L = 1``)."""
    if id in (1, 2):
        p = np.array([1.0, np.sqrt(2.0), np.sqrt(3.0)]) / np.sqrt(6.0)
    elif id == 3:
        p = np.array([np.sqrt(5.0), -1.0, np.sqrt(3.0)]) / 3.0
    else:
        raise ValueError(f"unknown example id {id!r}")
    if id == 1:
        f, _ = _gauss(np.sqrt(6.0), 80.0, (0.15, 0.15, 0.0))
        g, dg = _gauss(np.sqrt(6.0) / 10, 40.0, (0.0, 0.0, 0.0))
        return ExampleSource(1, p, f, g, dg)
    if id == 2:
        return ExampleSource(2, p, _f2, None, None)
    f, _ = _gauss(3.0, 80.0, (0.15, 0.15, 0.0))
    g, dg = _gauss(0.3, 40.0, (0.0, 0.0, 0.0))
    return ExampleSource(3, p, f, g, dg)
