"""Measurement post-processing on spheres.

Tangential fields are expanded as ``sum alpha_nm U_n^m + beta_nm V_n^m`` with
coefficients taken against the unit-sphere basis. Coefficient arrays are
dense, shape ``(n_max + 1, 2 n_max + 1)`` indexed ``[n, m + n_max]``; the row
``n = 0`` and the entries with ``|m| > n`` are always zero.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .geometry import PointSet, SphereGrid, point_set_from_description
from .specfun import sph_hankel1_all, vsh_components, z_all

__all__ = [
    "VshCoefficients",
    "MeasurementSet",
    "MeasurementFormatError",
    "noise_rng",
    "add_noise",
    "vsh_decompose",
    "synthesize",
    "calderon",
    "propagate",
    "l2_norm",
    "save_measurements",
    "load_measurements",
    "export_coefficients_csv",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1
_OVERFLOW_GUARD = 1e300


@dataclass
class VshCoefficients:
    k: float
    R: float
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def n_max(self):
        return self.alpha.shape[0] - 1

    @classmethod
    def zeros(cls, k, R, n_max):
        shape = (n_max + 1, 2 * n_max + 1)
        return cls(k, R, np.zeros(shape, complex), np.zeros(shape, complex))

    def get(self, n, m):
        return self.alpha[n, m + self.n_max], self.beta[n, m + self.n_max]

    def set(self, n, m, alpha=0.0, beta=0.0):
        if n < 1 or abs(m) > n or n > self.n_max:
            raise ValueError(f"invalid mode (n={n}, m={m})")
        self.alpha[n, m + self.n_max] = alpha
        self.beta[n, m + self.n_max] = beta
        return self

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.alpha) ** 2 + np.abs(self.beta) ** 2)))

    def __add__(self, other):
        return VshCoefficients(self.k, self.R, self.alpha + other.alpha, self.beta + other.beta)

    def scaled(self, c):
        return VshCoefficients(self.k, self.R, c * self.alpha, c * self.beta)


def _signed_tables(n_max, theta):
    """theta-parts ``a, b`` of U_n^m for all ``-n_max <= m <= n_max``.

    ``U_n^m = (a e_theta + b e_phi) e^{im phi}``; arrays are ``(n+1, 2n+1, T)``.
    """
    A, B = vsh_components(n_max, theta)
    a = np.zeros((n_max + 1, 2 * n_max + 1) + np.shape(theta), complex)
    b = np.zeros_like(a)
    for m in range(0, n_max + 1):
        a[:, n_max + m] = A[:, m]
        b[:, n_max + m] = B[:, m]
        if m:
            sgn = (-1) ** m
            a[:, n_max - m] = sgn * A[:, m]
            b[:, n_max - m] = -sgn * B[:, m]
    return a, b


def _mode_mask(n_max):
    n = np.arange(n_max + 1)[:, None]
    m = np.arange(-n_max, n_max + 1)[None, :]
    return (n >= 1) & (np.abs(m) <= n)


def _components(samples, points: PointSet):
    _, e_t, e_p = points.basis()
    return np.einsum("...pc,pc->...p", samples, e_t), np.einsum("...pc,pc->...p", samples, e_p)


def _cartesian(Ft, Fp, points: PointSet):
    _, e_t, e_p = points.basis()
    return Ft[..., None] * e_t + Fp[..., None] * e_p


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------

def noise_rng(seed, index=0):
    """PCG64 generator seeded by ``SeedSequence([seed, index])``.

    ``index`` is the position of the wavenumber in its measurement set, so
    every wavenumber draws an independent, reproducible stream.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def add_noise(samples, points: PointSet, delta, rng):
    """Multiplicative uniform noise on the ``e_theta`` and ``e_phi`` components.

    Each component ``c`` becomes ``c + delta r |c| exp(i pi r')`` with
    ``r, r'`` uniform on ``(-1, 1)``; per point the draws are taken in the
    order ``(r1, r2, r3, r4)``.
    """
    if not 0 <= delta < 1:
        raise ValueError("noise level must satisfy 0 <= delta < 1")
    samples = np.asarray(samples, dtype=complex)
    if isinstance(rng, (int, np.integer)):
        rng = noise_rng(rng)
    r = rng.uniform(-1.0, 1.0, size=(points.size, 4))
    if delta == 0:
        return samples.copy()
    Ft, Fp = _components(samples, points)
    Ft = Ft + delta * r[:, 0] * np.abs(Ft) * np.exp(1j * np.pi * r[:, 1])
    Fp = Fp + delta * r[:, 2] * np.abs(Fp) * np.exp(1j * np.pi * r[:, 3])
    return _cartesian(Ft, Fp, points)


# ---------------------------------------------------------------------------
# Decomposition and synthesis
# ---------------------------------------------------------------------------

def vsh_decompose(samples, points: PointSet, n_max=20, k=0.0):
    """Coefficients ``alpha = int F . conj(U)``, ``beta = int F . conj(V)`` over the unit sphere.

    ``samples`` are Cartesian tangential vectors ``(P, 3)`` on ``points``.
    Product grids use an FFT in azimuth; other layouts a direct weighted sum.
    """
    samples = np.asarray(samples, dtype=complex)
    Ft, Fp = _components(samples, points)
    R = points.radius
    if isinstance(points, SphereGrid):
        if points.n_phi < 2 * n_max + 1:
            raise ValueError("grid too coarse in phi for the requested n_max")
        nt, nphi = points.n_theta, points.n_phi
        a, b = _signed_tables(n_max, points.theta_nodes)
        m = np.arange(-n_max, n_max + 1)
        scale = 2 * np.pi / nphi
        Gt = np.fft.fft(Ft.reshape(nt, nphi), axis=1)[:, m % nphi] * scale
        Gp = np.fft.fft(Fp.reshape(nt, nphi), axis=1)[:, m % nphi] * scale
        w = points.theta_weights
        alpha = np.einsum("nmt,tm,t->nm", a.conj(), Gt, w) + np.einsum("nmt,tm,t->nm", b.conj(), Gp, w)
        beta = np.einsum("nmt,tm,t->nm", -b.conj(), Gt, w) + np.einsum("nmt,tm,t->nm", a.conj(), Gp, w)
    else:
        a, b = _signed_tables(n_max, points.theta)
        m = np.arange(-n_max, n_max + 1)
        eph = np.exp(-1j * np.outer(m, points.phi)) * (points.weights / R**2)
        Gt = eph * Ft
        Gp = eph * Fp
        alpha = np.einsum("nmp,mp->nm", a.conj(), Gt) + np.einsum("nmp,mp->nm", b.conj(), Gp)
        beta = np.einsum("nmp,mp->nm", -b.conj(), Gt) + np.einsum("nmp,mp->nm", a.conj(), Gp)
    mask = _mode_mask(n_max)
    return VshCoefficients(k, R, np.where(mask, alpha, 0), np.where(mask, beta, 0))


def synthesize(coeffs: VshCoefficients, points: PointSet):
    """``sum alpha U + beta V`` at the points, returned as Cartesian ``(P, 3)``."""
    n_max = coeffs.n_max
    al, be = coeffs.alpha, coeffs.beta
    m = np.arange(-n_max, n_max + 1)
    if isinstance(points, SphereGrid):
        nt, nphi = points.n_theta, points.n_phi
        if nphi < 2 * n_max + 1:
            raise ValueError("grid too coarse in phi for the requested n_max")
        a, b = _signed_tables(n_max, points.theta_nodes)
        Ht = np.einsum("nm,nmt->tm", al, a) - np.einsum("nm,nmt->tm", be, b)
        Hp = np.einsum("nm,nmt->tm", al, b) + np.einsum("nm,nmt->tm", be, a)
        St = np.zeros((nt, nphi), complex)
        Sp = np.zeros((nt, nphi), complex)
        St[:, m % nphi] = Ht
        Sp[:, m % nphi] = Hp
        Ft = (np.fft.ifft(St, axis=1) * nphi).ravel()
        Fp = (np.fft.ifft(Sp, axis=1) * nphi).ravel()
    else:
        a, b = _signed_tables(n_max, points.theta)
        eph = np.exp(1j * np.outer(m, points.phi))
        Ft = np.einsum("nm,nmp,mp->p", al, a, eph) - np.einsum("nm,nmp,mp->p", be, b, eph)
        Fp = np.einsum("nm,nmp,mp->p", al, b, eph) + np.einsum("nm,nmp,mp->p", be, a, eph)
    return _cartesian(Ft, Fp, points)


def l2_norm(samples, points: PointSet):
    """Unit-sphere L^2_t norm of sampled tangential vectors."""
    samples = np.asarray(samples)
    integrand = np.sum(np.abs(samples) ** 2, axis=-1)
    return float(np.sqrt(np.sum(integrand * points.weights) / points.radius**2))


# ---------------------------------------------------------------------------
# Calderon operator and outward propagation
# ---------------------------------------------------------------------------

def _radial_factors(n_max, t):
    h = sph_hankel1_all(n_max, t)
    z = z_all(n_max, t)
    return h[:, None], z[:, None]


def _usable(h, n_max, k):
    ok = np.isfinite(h) & (np.abs(h) < _OVERFLOW_GUARD)
    ok[0] = True
    if not np.all(ok):
        warnings.warn(f"dropping modes with overflowing Hankel values at k={k}", RuntimeWarning)
    return ok


def calderon(zeta: VshCoefficients, k, R):
    """Electric-to-magnetic map ``xhat x E -> xhat x curl E`` on the sphere of radius R."""
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    n_max = zeta.n_max
    h, z = _radial_factors(n_max, k * R)
    ok = _usable(h, n_max, k)
    with np.errstate(all="ignore"):
        u = np.where(ok, k * k * R * h / z, 0) * zeta.beta
        v = np.where(ok, z / (R * h), 0) * zeta.alpha
    u[0] = v[0] = 0
    return VshCoefficients(k, R, u, v)


def propagate(zeta: VshCoefficients, rho):
    """Traces ``xhat x E`` and ``xhat x curl E`` on the sphere of radius ``rho``."""
    k, R = zeta.k, zeta.R
    if not rho > R:
        raise ValueError("propagation radius must exceed the measurement radius")
    n_max = zeta.n_max
    hR, zR = _radial_factors(n_max, k * R)
    hr, zr = _radial_factors(n_max, k * rho)
    ok = _usable(hR, n_max, k)
    with np.errstate(all="ignore"):
        t_u = np.where(ok, hr / hR, 0) * zeta.alpha
        t_v = np.where(ok, (R / rho) * zr / zR, 0) * zeta.beta
        c_u = np.where(ok, k * k * R * hr / zR, 0) * zeta.beta
        c_v = np.where(ok, zr / (rho * hR), 0) * zeta.alpha
    for arr in (t_u, t_v, c_u, c_v):
        arr[0] = 0
    return VshCoefficients(k, rho, t_u, t_v), VshCoefficients(k, rho, c_u, c_v)


# ---------------------------------------------------------------------------
# Measurement sets
# ---------------------------------------------------------------------------

class MeasurementFormatError(ValueError):
    """Raised when a measurement file is missing fields or is malformed."""


@dataclass
class MeasurementSet:
    """Multi-frequency tangential traces on the measurement sphere.

    ``traces`` has shape ``(K, P, 3)`` (complex Cartesian ``xhat x E``) for
    the wavenumbers in ``wavenumbers`` and the points described by ``grid``.
    """

    R: float
    rho: float
    delta: float
    seed: int
    L: float
    p: np.ndarray
    grid: dict
    wavenumbers: np.ndarray
    traces: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.delta < 1:
            raise ValueError("noise level must satisfy 0 <= delta < 1")
        if not self.R < self.rho:
            raise ValueError("need R < rho")
        self.p = np.asarray(self.p, dtype=float)
        self.wavenumbers = np.asarray(self.wavenumbers, dtype=float)
        self.traces = np.asarray(self.traces, dtype=complex)
        if self.traces.shape[0] != len(self.wavenumbers) or self.traces.shape[-1] != 3:
            raise ValueError("traces must have shape (K, P, 3)")

    @property
    def points(self) -> PointSet:
        return point_set_from_description(self.grid)

    def index_of(self, k, rtol=1e-9):
        hit = np.flatnonzero(np.abs(self.wavenumbers - k) <= rtol * max(k, 1e-300))
        if hit.size == 0:
            raise KeyError(f"wavenumber {k!r} not in measurement set")
        return int(hit[0])

    def header(self):
        return {
            "format": "emfourier.measurements",
            "version": FORMAT_VERSION,
            "R": self.R,
            "rho": self.rho,
            "delta": self.delta,
            "seed": self.seed,
            "L": self.L,
            "p": [float(v) for v in self.p],
            "grid": self.grid,
            "metadata": self.metadata,
            "wavenumbers": [float(v) for v in self.wavenumbers],
        }


_HEADER_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "R", "rho", "delta", "seed", "L", "p", "grid", "wavenumbers"],
    "properties": {
        "format": {"const": "emfourier.measurements"},
        "version": {"const": FORMAT_VERSION},
        "R": {"type": "number", "exclusiveMinimum": 0},
        "rho": {"type": "number", "exclusiveMinimum": 0},
        "delta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "seed": {"type": "integer"},
        "L": {"type": "number", "exclusiveMinimum": 0},
        "p": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "grid": {"type": "object", "required": ["kind", "radius"]},
        "metadata": {"type": "object"},
        "wavenumbers": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "traces": {"type": "array"},
    },
}


def save_measurements(ms: MeasurementSet, path):
    """Write a measurement set.

    ``.json`` files hold the header fields plus ``traces`` as nested lists
    ``[k][point][component] = [re, im]``; ``.npz`` files store the same
    header as a JSON string next to a complex ``traces`` array.
    """
    path = Path(path)
    head = ms.header()
    if path.suffix == ".npz":
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(head)), traces=ms.traces)
        return path
    doc = dict(head)
    doc["traces"] = np.stack([ms.traces.real, ms.traces.imag], axis=-1).tolist()
    path.write_text(json.dumps(doc))
    return path


def _from_header(head, traces):
    try:
        jsonschema.validate(head, _HEADER_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise MeasurementFormatError(f"invalid measurement header: {exc.message}") from exc
    traces = np.asarray(traces)
    K = len(head["wavenumbers"])
    try:
        ms = MeasurementSet(
            R=float(head["R"]), rho=float(head["rho"]), delta=float(head["delta"]),
            seed=int(head["seed"]), L=float(head["L"]), p=np.array(head["p"], float),
            grid=head["grid"], wavenumbers=np.array(head["wavenumbers"], float),
            traces=traces, metadata=head.get("metadata", {}),
        )
    except ValueError as exc:
        raise MeasurementFormatError(str(exc)) from exc
    expected = point_set_from_description(head["grid"]).size
    if ms.traces.shape != (K, expected, 3):
        raise MeasurementFormatError(
            f"traces have shape {ms.traces.shape}, expected {(K, expected, 3)}"
        )
    return ms


def load_measurements(path) -> MeasurementSet:
    path = Path(path)
    try:
        if path.suffix == ".npz":
            with np.load(path, allow_pickle=False) as data:
                head = json.loads(str(data["header"]))
                traces = data["traces"]
            return _from_header(head, traces)
        doc = json.loads(path.read_text())
    except MeasurementFormatError:
        raise
    except (OSError, ValueError, KeyError) as exc:
        raise MeasurementFormatError(f"cannot read measurement file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "traces" not in doc:
        raise MeasurementFormatError("measurement document has no traces")
    try:
        raw = np.asarray(doc["traces"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MeasurementFormatError(f"traces are not a numeric array: {exc}") from exc
    if raw.ndim != 4 or raw.shape[-2:] != (3, 2):
        raise MeasurementFormatError(f"traces have shape {raw.shape}, expected (K, P, 3, 2)")
    return _from_header({k: v for k, v in doc.items() if k != "traces"}, raw[..., 0] + 1j * raw[..., 1])


def export_coefficients_csv(coeffs, path):
    """Write ``k, n, m, Re alpha, Im alpha, Re beta, Im beta`` rows for each coefficient set."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "n", "m", "re_alpha", "im_alpha", "re_beta", "im_beta"])
        for c in coeffs:
            for n in range(1, c.n_max + 1):
                for m in range(-n, n + 1):
                    a, b = c.get(n, m)
                    out.writerow([repr(c.k), n, m, repr(a.real), repr(a.imag), repr(b.real), repr(b.imag)])
