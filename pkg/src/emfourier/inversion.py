"""Explicit recovery of the Fourier coefficients of ``J`` from multi-frequency traces.

For every lattice vector ``l`` with ``1 <= |l| <= N`` the data at
``k = 2 pi |l| / L`` are propagated from the measurement sphere to a larger
sphere ``Gamma_rho`` and tested against ``w_l conj(phi_l)`` and
``v_l conj(phi_l)``:

    a_l = (i k |v_l|^2 L^3)^-1 oint [ (xhat x curl E) . w_l conj(phi_l)
                                      + (xhat x E) . curl(w_l conj(phi_l)) ] ds
    b_l = -(2 pi k L^2 |v_l|^2)^-1 oint [ same with v_l ]

``a_0`` comes from one extra low wavenumber ``k* = 2 pi lam / L`` with a
correction sum over the recovered ``a_(j,0,0)``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .fieldio import MeasurementSet, propagate, synthesize, vsh_decompose
from .geometry import PointSet, sphere_grid
from .source import ADMISSIBILITY_TOL, FourierSource, is_admissible, lattice_vectors

__all__ = [
    "InversionConfig",
    "ReconstructionResult",
    "WavenumberGroup",
    "truncation_order",
    "wavenumber_set",
    "surface_moments",
    "recover_coefficient_pair",
    "recover_coefficients",
    "a0_projection",
    "recover_a0",
    "propagated_fields",
    "reconstruct",
]

A0_SUM_CHOICES = ("two-sided", "one-sided")


@dataclass
class InversionConfig:
    lam: float = 1e-2
    rho: float = 1.2
    N: int | None = None
    tau: float = 3.0
    n_max: int = 20
    rho_grid: tuple = (200, 400)
    a0_sum: str = "two-sided"

    def validate(self, L=1.0, R=None):
        if not 0 < self.lam < 0.5:
            raise ValueError("lambda must satisfy 0 < lambda < 1/2")
        if not self.lam < L / (4 * np.pi):
            raise ValueError("lambda must satisfy lambda < L/(4 pi)")
        if R is not None and not self.rho > R:
            raise ValueError("rho must exceed the measurement radius R")
        if self.N is not None and int(self.N) < 1:
            raise ValueError("truncation order N must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.a0_sum not in A0_SUM_CHOICES:
            raise ValueError(f"a0_sum must be one of {A0_SUM_CHOICES}")
        return self

    def resolve_N(self, delta):
        return int(self.N) if self.N is not None else truncation_order(delta, self.tau)

    def to_dict(self):
        d = asdict(self)
        d["rho_grid"] = list(self.rho_grid)
        return d


def truncation_order(delta, tau=3.0):
    """``N = floor(tau delta^(-1/4)) + 1``."""
    if not delta > 0:
        raise ValueError("truncation rule needs delta > 0; give N explicitly for noiseless data")
    if not delta < 1:
        raise ValueError("delta must be below 1")
    return int(np.floor(tau * delta ** -0.25)) + 1


@dataclass(frozen=True)
class WavenumberGroup:
    """One wavenumber and the lattice vectors it serves (``(n, 3)``, lexicographic)."""

    k: float
    norm_sq: int
    lattice: np.ndarray
    is_star: bool = False


def wavenumber_set(N, L=1.0, lam=None):
    """Distinct ``2 pi |l| / L`` for ``1 <= |l| <= N``, ascending.

    With ``lam`` given, the auxiliary ``k* = 2 pi lam / L`` is prepended;
    its group carries no lattice vectors.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    lat = lattice_vectors(N, include_zero=False)
    s = (lat**2).sum(axis=1)
    groups = [
        WavenumberGroup(2 * np.pi * np.sqrt(n) / L, int(n), lat[s == n])
        for n in np.unique(s)
    ]
    if lam is not None:
        groups.insert(0, WavenumberGroup(2 * np.pi * lam / L, 0, np.zeros((0, 3), np.int64), True))
    return groups


def _axis_tables(x, L, lmax):
    """``exp(-2 pi i j x / L)`` for ``j = -lmax..lmax``; shape ``(2 lmax + 1, P)``."""
    base = np.exp(-2j * np.pi / L * x)
    out = np.empty((2 * lmax + 1, x.size), complex)
    out[lmax] = 1.0
    for j in range(1, lmax + 1):
        out[lmax + j] = out[lmax + j - 1] * base
        out[lmax - j] = out[lmax - j + 1] * np.conj(base)
    return out


def surface_moments(trace, curl, points: PointSet, lattice, L=1.0, chunk=8192):
    """``G_l = oint conj(phi_l) (xhat x curl E) ds`` and ``H_l`` likewise for ``xhat x E``.

    ``lattice`` may be integer (phases built from per-axis tables) or
    real-valued (direct exponentials). Returns two ``(n, 3)`` arrays.
    """
    lattice = np.asarray(lattice)
    x = points.points
    w = points.weights
    n = len(lattice)
    G = np.zeros((n, 3), complex)
    H = np.zeros((n, 3), complex)
    if n == 0:
        return G, H
    integer = np.issubdtype(lattice.dtype, np.integer)
    lmax = int(np.abs(lattice).max()) if integer else 0
    for s in range(0, len(x), chunk):
        xs = x[s:s + chunk]
        if integer:
            t1, t2, t3 = (_axis_tables(xs[:, i], L, lmax) for i in range(3))
            ph = t1[lattice[:, 0] + lmax] * t2[lattice[:, 1] + lmax] * t3[lattice[:, 2] + lmax]
        else:
            ph = np.exp(-2j * np.pi / L * lattice @ xs.T)
        ph *= w[s:s + chunk]
        G += ph @ curl[s:s + chunk]
        H += ph @ trace[s:s + chunk]
    return G, H


def _pair_from_moments(G, H, p, lattice, k, L):
    l = np.asarray(lattice, dtype=float)
    v = np.cross(p, l)
    wv = np.cross(l, v)
    v2 = (v**2).sum(axis=1)
    bad = v2 <= ADMISSIBILITY_TOL**2
    if np.any(bad):
        raise ValueError(f"polarization is not admissible for l = {lattice[np.argmax(bad)].tolist()}")
    c = -2j * np.pi / L
    Ia = (G * wv).sum(axis=1) + c * (np.cross(l, wv) * H).sum(axis=1)
    Ib = (G * v).sum(axis=1) + c * (np.cross(l, v) * H).sum(axis=1)
    a = Ia / (1j * k * v2 * L**3)
    b = -Ib / (2 * np.pi * k * L**2 * v2)
    return a, b


def recover_coefficients(trace, curl, points: PointSet, p, lattice, k, L=1.0):
    """Vectorised ``(a_l, b_l)`` for all lattice vectors sharing wavenumber ``k``."""
    lattice = np.asarray(lattice)
    if len(lattice):
        norms = np.sqrt((lattice.astype(float) ** 2).sum(axis=1))
        if not np.allclose(2 * np.pi * norms / L, k, rtol=1e-9):
            raise ValueError("k does not match 2 pi |l| / L for every lattice vector")
    G, H = surface_moments(trace, curl, points, lattice, L)
    return _pair_from_moments(G, H, np.asarray(p, float), lattice, k, L)


def recover_coefficient_pair(trace, curl, points: PointSet, p, l, L=1.0):
    """``(a_l, b_l)`` from ``xhat x E`` and ``xhat x curl E`` sampled on ``points``."""
    l = np.asarray(l, dtype=np.int64).reshape(1, 3)
    k = 2 * np.pi * np.linalg.norm(l) / L
    if k == 0:
        raise ValueError("l = 0 is recovered by recover_a0")
    a, b = recover_coefficients(trace, curl, points, p, l, k, L)
    return complex(a[0]), complex(b[0])


def a0_projection(trace, curl, points: PointSet, p, lam, L=1.0):
    """Normalised surface integral at ``k*``, i.e. the bracket's first term."""
    k_star = 2 * np.pi * lam / L
    l_star = np.array([[lam, 0.0, 0.0]])
    G, H = surface_moments(trace, curl, points, l_star, L)
    p = np.asarray(p, float)
    v = np.cross(p, l_star)
    wv = np.cross(l_star, v)
    v2 = float((v**2).sum())
    if v2 <= ADMISSIBILITY_TOL**2:
        raise ValueError("polarization parallel to the first lattice axis")
    I = (G * wv).sum() + (-2j * np.pi / L) * (np.cross(l_star, wv) * H).sum()
    return complex(I / (1j * k_star * L**3 * v2))


def recover_a0(projection, a_axis, lam, N, two_sided=True):
    """``a_0 = (lam pi / sin(lam pi)) [projection - sum_j sinc(j - lam) a_j]``.

    ``a_axis`` maps integer ``j`` to the recovered coefficient at
    ``l = (j, 0, 0)``; ``j`` runs over ``1..N`` and, when ``two_sided``,
    also over ``-N..-1``.
    """
    js = list(range(1, N + 1))
    if two_sided:
        js += [-j for j in js]
    missing = [j for j in js if j not in a_axis]
    if missing:
        raise ValueError(f"missing axis coefficients for j = {sorted(missing)}")
    corr = sum(np.sinc(j - lam) * a_axis[j] for j in js)
    return complex(lam * np.pi / np.sin(lam * np.pi) * (projection - corr))


def propagated_fields(traces, points: PointSet, k, rho_grid, n_max=20):
    """Decompose traces on the measurement sphere and return ``(xhat x E, xhat x curl E)`` on ``rho_grid``."""
    zeta = vsh_decompose(traces, points, n_max, k=k)
    tr, cu = propagate(zeta, rho_grid.radius)
    return synthesize(tr, rho_grid), synthesize(cu, rho_grid)


@dataclass
class ReconstructionResult:
    source: FourierSource
    N: int
    config: InversionConfig
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        d = self.source.to_dict()
        d["N"] = self.N
        d["config"] = self.config.to_dict()
        d["diagnostics"] = self.diagnostics
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d):
        cfg = dict(d["config"])
        cfg["rho_grid"] = tuple(cfg["rho_grid"])
        return cls(FourierSource.from_dict(d), int(d["N"]), InversionConfig(**cfg), d.get("diagnostics", {}))


def reconstruct(ms: MeasurementSet, p=None, config: InversionConfig | None = None) -> ReconstructionResult:
    """Full pipeline from a measurement set to the truncated source ``J_N``."""
    config = config or InversionConfig()
    config.validate(ms.L, ms.R)
    p = ms.p if p is None else np.asarray(p, float)
    N = config.resolve_N(ms.delta)
    L = ms.L
    points = ms.points
    grid = sphere_grid(*config.rho_grid, radius=config.rho)
    groups = wavenumber_set(N, L, config.lam)

    lat_all, a_all, b_all = [np.zeros((1, 3), np.int64)], [], [np.zeros(1, complex)]
    projection = None
    for g in groups:
        try:
            idx = ms.index_of(g.k)
        except KeyError as exc:
            what = "k*" if g.is_star else f"|l|^2 = {g.norm_sq}"
            raise ValueError(f"measurement set lacks wavenumber {g.k:.12g} ({what})") from exc
        T, C = propagated_fields(ms.traces[idx], points, g.k, grid, config.n_max)
        if g.is_star:
            projection = a0_projection(T, C, grid, p, config.lam, L)
            continue
        try:
            a, b = recover_coefficients(T, C, grid, p, g.lattice, g.k, L)
        except ValueError as exc:
            raise ValueError(f"recovery failed at k = {g.k:.12g}: {exc}") from exc
        lat_all.append(g.lattice)
        a_all.append(a)
        b_all.append(b)

    lattice = np.concatenate(lat_all)
    a_rest = np.concatenate(a_all)
    axis = {}
    for l, a in zip(lattice[1:], a_rest):
        if l[1] == 0 and l[2] == 0:
            axis[int(l[0])] = a
    a0 = recover_a0(projection, axis, config.lam, N, two_sided=config.a0_sum == "two-sided")
    src = FourierSource(p, L, lattice, np.concatenate([[a0], a_rest]), np.concatenate(b_all))
    _, C_N = is_admissible(p, N)
    diagnostics = {
        "wavenumbers": [g.k for g in groups],
        "a0_projection": [projection.real, projection.imag],
        "C_N": C_N,
        "delta": ms.delta,
        "seed": ms.seed,
    }
    return ReconstructionResult(src, N, config, diagnostics)
