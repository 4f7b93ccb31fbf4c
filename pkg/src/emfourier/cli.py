"""Command-line interface: ``emfourier simulate | reconstruct | sweep | selftest``.

Options may also come from a JSON config file (``--config``) holding
``{"version": 1, ...}`` with keys named like the long options
(``"delta"``, ``"preset"``, ``"rho_grid"``, ...). Flags given on the command
line override the file. Exit codes: 0 success, 1 invalid input, 2 runtime
failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__

CONFIG_VERSION = 1
log = logging.getLogger("emfourier")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _order(text):
    if str(text).lower() == "auto":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("N must be a positive integer or 'auto'") from None
    if value < 1:
        raise argparse.ArgumentTypeError("N must be >= 1")
    return value


def _grid(text):
    parts = str(text).lower().replace("x", ",").split(",")
    try:
        nt, nphi = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like 200x400") from None
    return nt, nphi


def _add_common(p):
    p.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    p.add_argument("--threads", type=int, help="cap on worker threads")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_discretisation(p):
    p.add_argument("--preset", choices=["desk", "full"])
    p.add_argument("--quad-order", type=int, dest="quad_order")
    p.add_argument("--meas-grid", type=_grid, dest="meas_grid", help="n_theta x n_phi on the measurement sphere")
    p.add_argument("--rho-grid", type=_grid, dest="rho_grid", help="n_theta x n_phi on the propagation sphere")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--R", type=float, dest="R")
    p.add_argument("--rho", type=float)
    p.add_argument("--lam", type=float, help="auxiliary wavenumber parameter (k* = 2 pi lam / L)")
    p.add_argument("--tau", type=float)
    p.add_argument("--N", type=_order, dest="N", default=argparse.SUPPRESS, help="truncation order or 'auto'")


def build_parser():
    parser = _Parser(prog="emfourier", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"emfourier {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a noisy measurement set for an example source")
    _add_common(p)
    _add_discretisation(p)
    p.add_argument("--example", type=int, choices=[1, 2, 3])
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--kernel", choices=["standard", "printed"])
    p.add_argument("--out", type=Path, help="output file (.json or .npz)")

    p = sub.add_parser("reconstruct", help="recover the source from a measurement set")
    _add_common(p)
    _add_discretisation(p)
    p.add_argument("--in", type=Path, dest="input")
    p.add_argument("--out", type=Path)
    p.add_argument("--a0-sum", choices=["two-sided", "one-sided"], dest="a0_sum")
    p.add_argument("--slices", type=Path, help="directory for slice CSV files")

    p = sub.add_parser("sweep", help="error tables over noise levels and truncation orders")
    _add_common(p)
    p.add_argument("--table", choices=["1", "2", "custom"])
    p.add_argument("--example", type=int, choices=[1, 2, 3])
    p.add_argument("--preset", choices=["desk", "full"])
    p.add_argument("--quad-order", type=int, dest="quad_order")
    p.add_argument("--meas-grid", type=_grid, dest="meas_grid")
    p.add_argument("--rho-grid", type=_grid, dest="rho_grid")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--seed", type=int)
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--orders", type=int, nargs="+")
    p.add_argument("--kernel", choices=["standard", "printed"])
    p.add_argument("--out", type=Path)

    p = sub.add_parser("selftest", help="run the quick invariant suites")
    _add_common(p)
    return parser


DEFAULTS = {
    "simulate": {"example": 1, "delta": 0.1, "seed": 0, "preset": "desk", "kernel": "standard",
                 "tau": 3.0, "lam": 1e-2, "N": None, "out": "measurements.json"},
    "reconstruct": {"out": "reconstruction.json", "a0_sum": "two-sided", "tau": None, "lam": None, "N": None},
    "sweep": {"table": "1", "example": 1, "preset": "desk", "seed": 0, "kernel": "standard", "out": "sweep.csv"},
    "selftest": {},
}


def _load_config(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigError(f"config version must be {CONFIG_VERSION}")
    out = {k: v for k, v in doc.items() if k != "version"}
    for key in ("meas_grid", "rho_grid"):
        if key in out:
            out[key] = tuple(out[key])
    if "N" in out and isinstance(out["N"], str):
        out["N"] = _order(out["N"])
    return out


def resolve(args):
    """Merge defaults, config file and explicit flags (in increasing priority)."""
    opts = dict(DEFAULTS[args.command])
    if getattr(args, "config", None):
        opts.update(_load_config(args.config))
    for key, value in vars(args).items():
        if key in ("command", "config") or (value is None and key != "N"):
            continue
        if key == "verbose" and not value:
            continue
        opts[key] = value
    return opts


def _preset_from(opts):
    from .experiments import PRESETS

    base = PRESETS[opts.get("preset") or "desk"]
    changes = {k: opts[k] for k in ("quad_order", "meas_grid", "rho_grid", "n_max", "R", "rho") if opts.get(k) is not None}
    preset = dataclasses.replace(base, **changes)
    if not preset.R > np.sqrt(3) / 2:
        raise ConfigError("R must exceed the cube half-diagonal sqrt(3)/2")
    if not preset.rho > preset.R:
        raise ConfigError("rho must exceed R")
    return preset


def _check_delta(delta, N):
    if not 0 <= delta < 1:
        raise ConfigError("delta must satisfy 0 <= delta < 1")
    if delta == 0 and N is None:
        raise ConfigError("N=auto needs delta > 0; give an explicit N for noiseless data")


def cmd_simulate(opts):
    from .experiments import make_measurements
    from .fieldio import save_measurements
    from .inversion import InversionConfig

    preset = _preset_from(opts)
    _check_delta(opts["delta"], opts["N"])
    InversionConfig(lam=opts["lam"], rho=preset.rho, N=opts["N"], tau=opts["tau"]).validate(1.0, preset.R)
    ms = make_measurements(opts["example"], opts["delta"], opts["seed"], preset, opts["N"], opts["tau"],
                           opts["lam"], opts["kernel"])
    ms.metadata.update({"N": opts["N"], "tau": opts["tau"], "rho_grid": list(preset.rho_grid),
                        "n_max": preset.n_max})
    save_measurements(ms, opts["out"])
    log.info("wrote %d wavenumbers x %d points to %s", len(ms.wavenumbers), ms.traces.shape[1], opts["out"])
    return 0


def cmd_reconstruct(opts):
    from .experiments import field_slices, relative_l2_error, write_slices
    from .fieldio import load_measurements
    from .inversion import InversionConfig, reconstruct
    from .source import example_source

    if not opts.get("input"):
        raise ConfigError("reconstruct needs --in")
    ms = load_measurements(opts["input"])
    meta = ms.metadata
    N = opts["N"] if opts["N"] is not None else meta.get("N")
    _check_delta(ms.delta, N)
    cfg = InversionConfig(
        lam=opts["lam"] if opts["lam"] is not None else meta.get("lambda", 1e-2),
        rho=opts.get("rho") or ms.rho,
        N=N,
        tau=opts["tau"] if opts["tau"] is not None else meta.get("tau", 3.0),
        n_max=opts.get("n_max") or meta.get("n_max", 20),
        rho_grid=tuple(opts.get("rho_grid") or meta.get("rho_grid", (200, 400))),
        a0_sum=opts["a0_sum"],
    )
    res = reconstruct(ms, config=cfg)
    example = meta.get("example")
    if example is not None:
        res.diagnostics["relative_l2_error"] = relative_l2_error(example_source(example).J, res.source)
        if opts.get("slices"):
            write_slices(field_slices(example, res.source), opts["slices"], prefix=f"example{example}")
    Path(opts["out"]).write_text(res.to_json())
    log.info("N=%d, relative L2 error %s", res.N, res.diagnostics.get("relative_l2_error"))
    return 0


def cmd_sweep(opts):
    from .experiments import TABLE1_DELTAS, TABLE2_ORDERS, sweep, sweep_table1, sweep_table2

    kw = {"seed": opts["seed"], "preset": _preset_from(opts), "example": opts["example"], "kernel": opts["kernel"]}
    deltas = tuple(opts.get("deltas") or TABLE1_DELTAS)
    for d in deltas:
        _check_delta(d, None if opts["table"] == "1" else 1)
    if opts["table"] == "1":
        report = sweep_table1(deltas=deltas, **kw)
    elif opts["table"] == "2":
        report = sweep_table2(deltas=deltas, orders=tuple(opts.get("orders") or TABLE2_ORDERS), **kw)
    else:
        if not opts.get("orders"):
            raise ConfigError("custom sweeps need --orders")
        example = kw.pop("example")
        report = sweep(example, [(d, N) for d in deltas for N in opts["orders"]], **kw)
    report.to_csv(opts["out"])
    for r in report.rows:
        print(f"delta={100 * r['delta']:g}%  N={r['N']:2d}  error={100 * r['relative_l2_error']:.3f}%")
    return 0


def cmd_selftest(opts):
    from .experiments import selftest

    results = selftest()
    for name, passed, seconds, msg in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name:16s} {seconds:7.2f}s  {msg}")
    return 0 if all(r[1] for r in results) else 1


COMMANDS = {"simulate": cmd_simulate, "reconstruct": cmd_reconstruct, "sweep": cmd_sweep, "selftest": cmd_selftest}


def main(argv=None):
    from .fieldio import MeasurementFormatError

    try:
        args = build_parser().parse_args(argv)
        opts = resolve(args)
    except ConfigError as exc:
        print(f"emfourier: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if opts.get("verbose") else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if opts.get("threads"):
        import numba

        numba.set_num_threads(max(1, min(int(opts["threads"]), numba.config.NUMBA_NUM_THREADS)))
    try:
        return COMMANDS[args.command](opts)
    except (ConfigError, MeasurementFormatError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"emfourier: invalid input: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - report anything else as a runtime failure
        print(f"emfourier: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
