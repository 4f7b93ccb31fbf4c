"""End-to-end runs of the three example sources, error tables and the self-test."""
from __future__ import annotations

import csv
import hashlib
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fieldio import MeasurementSet, add_noise, l2_norm, noise_rng, propagate, synthesize, vsh_decompose
from .forward import dipole_curl, dipole_field, radiated_field, source_values, traces_on_points
from .geometry import gauss_legendre_cube, sphere_grid
from .inversion import InversionConfig, ReconstructionResult, reconstruct, truncation_order, wavenumber_set
from .source import FourierSource, evaluate_on_grid, example_source, project_scalar_fields, sobolev_norm, truncate

__all__ = [
    "Preset",
    "PRESETS",
    "relative_l2_error",
    "clean_traces",
    "make_measurements",
    "run_example",
    "field_slices",
    "write_slices",
    "SweepReport",
    "sweep",
    "sweep_table1",
    "sweep_table2",
    "truncation_errors",
    "selftest",
    "TABLE1_DELTAS",
    "TABLE2_ORDERS",
]

TABLE1_DELTAS = (0.01, 0.02, 0.05, 0.10)
TABLE2_ORDERS = (5, 6, 7, 8, 9, 10)


@dataclass(frozen=True)
class Preset:
    """Discretisation sizes.

    ``meas_grid`` is the ``(n_theta, n_phi)`` layout of the observation
    points on the measurement sphere, ``rho_grid`` the one used for the
    recovery integrals.
    """

    name: str
    quad_order: int
    meas_grid: tuple
    rho_grid: tuple
    n_max: int = 20
    R: float = 1.0
    rho: float = 1.2


PRESETS = {
    "desk": Preset("desk", 24, (70, 140), (100, 200)),
    "full": Preset("full", 48, (200, 400), (200, 400)),
}


def _preset(preset):
    if isinstance(preset, Preset):
        return preset
    try:
        return PRESETS[preset]
    except KeyError:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}") from None


def relative_l2_error(exact, recon: FourierSource, n=101, L=1.0):
    """Discrete relative L^2 error on the uniform ``n^3`` lattice covering the closed cube.

    ``exact`` is a callable ``J(points) -> (..., 3)``.
    """
    x = np.linspace(-L / 2, L / 2, n)
    X = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    Je = np.asarray(exact(X))
    den = np.sum(np.abs(Je) ** 2)
    if den == 0:
        raise ZeroDivisionError("exact source vanishes on the evaluation grid")
    Jr = evaluate_on_grid(recon, x, x, x)
    return float(np.sqrt(np.sum(np.abs(Je - Jr) ** 2) / den))


# ---------------------------------------------------------------------------
# Forward data with an in-process cache
# ---------------------------------------------------------------------------

_CLEAN_CACHE: dict = {}


def _cache_key(example, ks, preset, kernel):
    h = hashlib.sha256(np.asarray(ks, float).tobytes()).hexdigest()[:16]
    return f"ex{example}-{preset.name}-q{preset.quad_order}-g{preset.meas_grid[0]}x{preset.meas_grid[1]}-R{preset.R}-{kernel}-{h}"


def clean_traces(example, ks, preset="desk", kernel="standard", cache_dir=None):
    """Noise-free ``xhat x E`` of an example source, shape ``(K, P, 3)``.

    Results are memoised per process; with ``cache_dir`` (or the
    ``EMFOURIER_CACHE_DIR`` environment variable) they are also kept on disk.
    """
    preset = _preset(preset)
    ks = np.asarray(ks, float)
    key = _cache_key(example, ks, preset, kernel)
    if key in _CLEAN_CACHE:
        return _CLEAN_CACHE[key]
    cache_dir = cache_dir or os.environ.get("EMFOURIER_CACHE_DIR")
    path = Path(cache_dir) / f"{key}.npy" if cache_dir else None
    if path is not None and path.exists():
        tr = np.load(path)
    else:
        src = example_source(example)
        quad = gauss_legendre_cube(preset.quad_order, src.L)
        pts = sphere_grid(*preset.meas_grid, radius=preset.R)
        tr = traces_on_points(source_values(src.J, quad), quad, ks, pts, kernel=kernel)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.save(path, tr)
    _CLEAN_CACHE[key] = tr
    return tr


def make_measurements(example, delta, seed=0, preset="desk", N=None, tau=3.0, lam=1e-2,
                      kernel="standard", ks=None, clean=None):
    """Noisy measurement set of an example covering the wavenumbers needed for order ``N``.

    Wavenumber ``i`` of the set receives noise from ``noise_rng(seed, i)``.
    """
    preset = _preset(preset)
    src = example_source(example)
    if ks is None:
        N = N if N is not None else truncation_order(delta, tau)
        ks = [g.k for g in wavenumber_set(N, src.L, lam)]
    ks = np.asarray(ks, float)
    if clean is None:
        clean = clean_traces(example, ks, preset, kernel)
    pts = sphere_grid(*preset.meas_grid, radius=preset.R)
    noisy = np.stack([add_noise(clean[i], pts, delta, noise_rng(seed, i)) for i in range(len(ks))])
    meta = {"example": int(example), "preset": preset.name, "quad_order": preset.quad_order,
            "kernel": kernel, "lambda": lam}
    return MeasurementSet(preset.R, preset.rho, float(delta), int(seed), src.L, src.p,
                          pts.describe(), ks, noisy, meta)


def _config(preset, N, tau, lam, a0_sum="two-sided", n_max=None):
    return InversionConfig(lam=lam, rho=preset.rho, N=N, tau=tau, n_max=n_max or preset.n_max,
                           rho_grid=tuple(preset.rho_grid), a0_sum=a0_sum)


# ---------------------------------------------------------------------------
# Slices for plotting
# ---------------------------------------------------------------------------

def field_slices(example, recon: FourierSource, n=101, component=1):
    """Planes ``x3 = 0`` and ``x1 = x2`` of one Cartesian component (0-based index).

    Returns ``{name: (coords (n, n, 3), exact (n, n), recon (n, n))}`` with
    the real part of the reconstruction.
    """
    src = example_source(example)
    s = np.linspace(-src.L / 2, src.L / 2, n)
    U, V = np.meshgrid(s, s, indexing="ij")
    planes = {
        "x3_0": np.stack([U, V, np.zeros_like(U)], axis=-1),
        "x1_eq_x2": np.stack([U, U, V], axis=-1),
    }
    from .source import evaluate

    out = {}
    for name, X in planes.items():
        out[name] = (X, src.J(X)[..., component], evaluate(recon, X)[..., component].real)
    return out


def write_slices(slices, directory, prefix="slice"):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (X, ex, rc) in slices.items():
        path = directory / f"{prefix}_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "x3", "exact", "reconstruction"])
            for xyz, e, r in zip(X.reshape(-1, 3), ex.ravel(), rc.ravel()):
                w.writerow([f"{xyz[0]:.6f}", f"{xyz[1]:.6f}", f"{xyz[2]:.6f}", repr(float(e)), repr(float(r))])
        paths.append(path)
    return paths


def run_example(example, delta, N=None, seed=0, preset="desk", tau=3.0, lam=1e-2, kernel="standard",
                a0_sum="two-sided", slices=False, measurements=None):
    """One reconstruction; returns ``(row, result, slices_or_None)``."""
    preset = _preset(preset)
    t0 = time.perf_counter()
    ms = measurements or make_measurements(example, delta, seed, preset, N, tau, lam, kernel)
    res = reconstruct(ms, config=_config(preset, N, tau, lam, a0_sum))
    err = relative_l2_error(example_source(example).J, res.source)
    res.diagnostics["relative_l2_error"] = err
    row = {"delta": float(delta), "N": res.N, "relative_l2_error": err,
           "wall_time_s": time.perf_counter() - t0}
    return row, res, (field_slices(example, res.source) if slices else None)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, row):
        if any(r["delta"] == row["delta"] and r["N"] == row["N"] for r in self.rows):
            raise ValueError(f"duplicate sweep cell (delta={row['delta']}, N={row['N']})")
        self.rows.append(row)

    def error(self, delta, N):
        for r in self.rows:
            if np.isclose(r["delta"], delta) and r["N"] == N:
                return r["relative_l2_error"]
        raise KeyError((delta, N))

    def to_csv(self, path, timing=True):
        """Columns ``delta_percent, N, relative_l2_error_percent[, wall_time_s]``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta_percent", "N", "relative_l2_error_percent"] + (["wall_time_s"] if timing else []))
            for r in self.rows:
                line = [f"{100 * r['delta']:g}", r["N"], f"{100 * r['relative_l2_error']:.4f}"]
                if timing:
                    line.append(f"{r['wall_time_s']:.2f}")
                w.writerow(line)
        return path


def sweep(example, cells, seed=0, preset="desk", lam=1e-2, kernel="standard", a0_sum="two-sided"):
    """Run ``(delta, N)`` cells sharing one noise-free dataset.

    All cells use the wavenumbers of the largest ``N``; for a fixed ``delta``
    the noisy data are therefore identical across ``N``.
    """
    preset = _preset(preset)
    src = example_source(example)
    n_top = max(N for _, N in cells)
    ks = [g.k for g in wavenumber_set(n_top, src.L, lam)]
    clean = clean_traces(example, ks, preset, kernel)
    report = SweepReport(metadata={"example": example, "preset": preset.name, "quad_order": preset.quad_order,
                                   "meas_grid": list(preset.meas_grid), "rho_grid": list(preset.rho_grid),
                                   "seed": seed, "kernel": kernel, "a0_sum": a0_sum})
    by_delta = {}
    for delta, N in cells:
        if delta not in by_delta:
            by_delta[delta] = make_measurements(example, delta, seed, preset, lam=lam, kernel=kernel,
                                                ks=ks, clean=clean)
        row, _, _ = run_example(example, delta, N, seed, preset, lam=lam, kernel=kernel, a0_sum=a0_sum,
                                measurements=by_delta[delta])
        report.add(row)
    return report


def sweep_table1(seed=0, preset="desk", example=1, deltas=TABLE1_DELTAS, tau=3.0, **kw):
    return sweep(example, [(d, truncation_order(d, tau)) for d in deltas], seed, preset, **kw)


def sweep_table2(seed=0, preset="desk", example=1, deltas=TABLE1_DELTAS, orders=TABLE2_ORDERS, **kw):
    return sweep(example, [(d, N) for d in deltas for N in orders], seed, preset, **kw)


def truncation_errors(example=1, orders=range(3, 11), order=64, n_ref=16, sigma=0.0):
    """``||J_ref - J_N||_{p,sigma}`` from a high-order projection with ``|l| <= n_ref``."""
    src = example_source(example)
    quad = gauss_legendre_cube(order, src.L)
    ref = project_scalar_fields(src.p, src.f, src.g, quad, n_ref)
    out = {}
    for N in orders:
        tail = FourierSource(ref.p, ref.L, ref.lattice, ref.a - truncate_like(ref, N).a, ref.b - truncate_like(ref, N).b)
        out[N] = sobolev_norm(tail, sigma)
    return out


def truncate_like(ref: FourierSource, N):
    """Zero the coefficients with ``|l| > N`` while keeping the lattice of ``ref``."""
    keep = (ref.lattice**2).sum(axis=1) <= N * N
    return FourierSource(ref.p, ref.L, ref.lattice, np.where(keep, ref.a, 0), np.where(keep, ref.b, 0))


# ---------------------------------------------------------------------------
# Self-test
# ---------------------------------------------------------------------------

def _dipole_kernel_error(kernel, k=2 * np.pi):
    y0 = np.array([0.1, -0.05, 0.2])
    q = np.array([1.0, 0.5j, -0.3])
    x = sphere_grid(10, 20, 1.0).points
    E = radiated_field(q[None, :], y0[None, :], np.ones(1), k, x, kernel=kernel)
    ref = dipole_field(x, y0, q, k)
    return float(np.max(np.abs(E - ref)) / np.max(np.abs(ref)))


def _suite_specfun():
    from .specfun import check_hankel_ratio_bounds, check_z_over_h_lower_bound, hankel_bound_constants, spherical_hankel1

    ok = abs(spherical_hankel1(0, 1.0) - (np.sin(1) - 1j * np.cos(1))) < 1e-12
    ok &= check_z_over_h_lower_bound(40, np.linspace(0.05, 100, 400)) >= 0
    c = hankel_bound_constants(1.0, 1.0, 1.2)
    ok &= check_hankel_ratio_bounds(c, np.linspace(2 * np.pi, 20 * np.pi, 40), 40)["min_slack"] >= 0
    return bool(ok)


def _suite_geometry():
    g = sphere_grid(200, 400, 1.2)
    q = gauss_legendre_cube(4)
    return bool(abs(g.weights.sum() / (4 * np.pi * 1.44) - 1) < 1e-10
                and abs(np.sum(q.weights * q.nodes[:, 0] ** 2) - 1 / 12) < 1e-14)


def _suite_source():
    p = np.array([1.0, np.sqrt(2), np.sqrt(3)]) / np.sqrt(6)
    s = FourierSource.from_dicts(p, 1.0, {(1, 0, 0): 1.0})
    return abs(sobolev_norm(s, 0) - 1) < 1e-14


def _suite_forward():
    return _dipole_kernel_error("standard") < 1e-12


def _suite_kernel_mutation():
    # The check must reject kernels that differ from the dyadic Green's function.
    return _dipole_kernel_error("sign-flipped") > 1e-6 and _dipole_kernel_error("printed") > 1e-6


def _suite_fieldio():
    y0 = np.array([0.1, -0.05, 0.2])
    q = np.array([1.0, 0.5j, -0.3])
    k = 2 * np.pi
    gR, gr = sphere_grid(60, 120, 1.0), sphere_grid(60, 120, 1.2)
    z = vsh_decompose(np.cross(gR.directions, dipole_field(gR.points, y0, q, k)), gR, 20, k=k)
    tr, cu = propagate(z, 1.2)
    T = np.cross(gr.directions, dipole_field(gr.points, y0, q, k))
    C = np.cross(gr.directions, dipole_curl(gr.points, y0, q, k))
    e1 = l2_norm(synthesize(tr, gr) - T, gr) / l2_norm(T, gr)
    e2 = l2_norm(synthesize(cu, gr) - C, gr) / l2_norm(C, gr)
    return max(e1, e2) < 1e-4


def _suite_inversion():
    from .source import lattice_vectors, evaluate

    if [truncation_order(d) for d in TABLE1_DELTAS] != [10, 8, 7, 6]:
        return False
    p = np.array([1.0, np.sqrt(2), np.sqrt(3)]) / np.sqrt(6)
    lat = lattice_vectors(1)
    rng = np.random.default_rng(1)
    a = rng.uniform(0.5, 1, len(lat)) * np.exp(2j * np.pi * rng.uniform(size=len(lat)))
    b = np.where(lat.any(axis=1), a[::-1], 0)
    src = FourierSource(p, 1.0, lat, a, b)
    quad = gauss_legendre_cube(12)
    cfg = InversionConfig(N=1, rho_grid=(40, 80), n_max=20)
    ks = [g.k for g in wavenumber_set(1, 1.0, cfg.lam)]
    pts = sphere_grid(40, 80, 1.0)
    tr = traces_on_points(evaluate(src, quad.nodes), quad, ks, pts)
    ms = MeasurementSet(1.0, 1.2, 0.0, 0, 1.0, p, pts.describe(), ks, tr)
    rec = reconstruct(ms, config=cfg).source
    return bool(np.max(np.abs(rec.a - src.a)) < 1e-3 and np.max(np.abs(rec.b - src.b)) < 1e-3)


SUITES = {
    "specfun": _suite_specfun,
    "geometry": _suite_geometry,
    "source": _suite_source,
    "forward": _suite_forward,
    "kernel-mutation": _suite_kernel_mutation,
    "fieldio": _suite_fieldio,
    "inversion": _suite_inversion,
}


def selftest(suites=None):
    """Run the quick invariant suites; returns ``[(name, passed, seconds, message)]``."""
    results = []
    for name in suites or SUITES:
        t0 = time.perf_counter()
        try:
            passed, msg = bool(SUITES[name]()), ""
        except Exception as exc:  # a crashing suite is a failing suite
            passed, msg = False, f"{type(exc).__name__}: {exc}"
        results.append((name, passed, time.perf_counter() - t0, msg))
    return results
