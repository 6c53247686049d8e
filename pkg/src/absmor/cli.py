"""Command-line interface: ``absmor {spectrum,reference,generate,compare}``.

Exit codes
----------
0  success (converged / within threshold)
1  ``compare``: difference above ``--threshold``
2  bad input (arguments, config file, matrices)
3  reduced model did not converge (outputs are still written)
4  I/O failure
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import AdaptiveError, PlanConfig, adaptive_spectrum, uniform_spectrum
from .mmio import load_problem, save_problem
from .pencil import PencilError
from .reference import (NotPositiveDefiniteError, dense_cpp_spectrum, dense_structured_eig,
                        lorentzian_spectrum, oscillator_table)
from .solver import SolverConfig
from .spectrum import (FrequencyGrid, _atomic_write, normalized_difference, read_spectrum_csv,
                       write_csv, write_spectrum_csv)
from .synth import SynthSpec, generate

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_BAD_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4

log = logging.getLogger("absmor")

# defaults applied after merging a --config file; flags always win
SPECTRUM_DEFAULTS = {
    "input": None, "A": None, "B": None, "M": None, "K": None, "d": None,
    "omega_min": None, "omega_max": None, "points": 1000, "eta": 1.0,
    "tol": 0.01, "gmres_tol": 1e-6, "max_iterations": 200, "batch_size": 12,
    "preconditioner": "none", "shift_mode": "complex", "algorithm": "mk",
    "fixed_k": None, "level1": 5, "max_order": 256, "save_model": False,
    "check_spd": False, "unit_label": "eV", "out": ".",
}
REFERENCE_DEFAULTS = {k: SPECTRUM_DEFAULTS[k] for k in
                      ("input", "A", "B", "M", "K", "d", "omega_min", "omega_max",
                       "points", "eta", "unit_label", "out")}
REFERENCE_DEFAULTS["cpp"] = False
GENERATE_DEFAULTS = {
    "n_occ": 5, "n_virt": 40, "gap_min": 8.0, "gap_max": 24.0,
    "omega_min": 10.0, "omega_max": 20.0, "coupling": 0.05, "density": 0.3,
    "seed": 0, "out": ".",
}


class BadInput(Exception):
    pass


def _add_input_args(sp):
    g = sp.add_argument_group("input")
    g.add_argument("--input", help="directory holding A.mtx, B.mtx (or M.mtx, K.mtx) and d.mtx")
    g.add_argument("--A", help="path of A.mtx")
    g.add_argument("--B", help="path of B.mtx")
    g.add_argument("--M", help="path of M.mtx (instead of A/B)")
    g.add_argument("--K", help="path of K.mtx (instead of A/B)")
    g.add_argument("--d", help="path of the n x 3 dipole file d.mtx")


def _add_grid_args(sp):
    sp.add_argument("--omega-min", type=float)
    sp.add_argument("--omega-max", type=float)
    sp.add_argument("--points", type=int, help="output grid size (default 1000)")
    sp.add_argument("--eta", type=float, help="damping (default 1.0)")
    sp.add_argument("--unit-label", help="energy unit label for diagnostics (default eV)")


def build_parser():
    ap = argparse.ArgumentParser(prog="absmor", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="reduced-model spectrum on a window")
    sp.add_argument("--config", help="JSON file of option values (flags win)")
    _add_input_args(sp)
    _add_grid_args(sp)
    sp.add_argument("--tol", type=float, help="adaptive spectrum tolerance (default 0.01)")
    sp.add_argument("--gmres-tol", type=float, help="relative residual target (default 1e-6)")
    sp.add_argument("--max-iterations", type=int)
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--preconditioner", choices=["none", "jacobi-diagonal"])
    sp.add_argument("--shift-mode", choices=["complex", "real"])
    sp.add_argument("--algorithm", choices=["mk", "full"])
    sp.add_argument("--fixed-k", type=int, help="use K uniform frequencies instead of adaptive refinement")
    sp.add_argument("--level1", type=int)
    sp.add_argument("--max-order", type=int)
    sp.add_argument("--save-model", action="store_true", default=None)
    sp.add_argument("--check-spd", action="store_true", default=None)
    sp.add_argument("--out", help="output directory")

    sp = sub.add_parser("reference", help="sum-over-states reference spectrum")
    sp.add_argument("--config")
    _add_input_args(sp)
    _add_grid_args(sp)
    sp.add_argument("--cpp", action="store_true", default=None,
                    help="also write cpp.csv from dense per-frequency solves")
    sp.add_argument("--out")

    sp = sub.add_parser("generate", help="write a seeded synthetic problem")
    sp.add_argument("--config")
    sp.add_argument("--n-occ", type=int)
    sp.add_argument("--n-virt", type=int)
    sp.add_argument("--gap-min", type=float)
    sp.add_argument("--gap-max", type=float)
    sp.add_argument("--omega-min", type=float)
    sp.add_argument("--omega-max", type=float)
    sp.add_argument("--coupling", type=float)
    sp.add_argument("--density", type=float, help="fraction of gaps inside the window")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")

    sp = sub.add_parser("compare", help="max-abs difference of two normalized spectra")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--threshold", type=float, default=0.01)
    sp.add_argument("--out", help="write the report as JSON here")
    return ap


def resolve(args, defaults):
    """Merge defaults < config file < explicit flags into a plain dict."""
    cfg = dict(defaults)
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise BadInput(f"cannot read config {path}: {exc}") from exc
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise BadInput(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _write_json(path, obj):
    _atomic_write(path, lambda fh: json.dump(obj, fh, indent=2, default=_json_default))


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _load(cfg):
    if not any(cfg[k] for k in ("input", "A", "B", "M", "K", "d")):
        raise BadInput("no input given (use --input DIR or --A/--B/--d)")
    return load_problem(cfg["input"], A=cfg["A"], B=cfg["B"], M=cfg["M"], K=cfg["K"],
                        d=cfg["d"], check_spd=cfg.get("check_spd", False))


def _grid(cfg):
    if cfg["omega_min"] is None or cfg["omega_max"] is None:
        raise BadInput("--omega-min and --omega-max are required")
    return FrequencyGrid(cfg["omega_min"], cfg["omega_max"], int(cfg["points"]), float(cfg["eta"]))


def cmd_spectrum(cfg):
    p, d = _load(cfg)
    grid = _grid(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    scfg = SolverConfig(tol=cfg["gmres_tol"], max_iterations=cfg["max_iterations"],
                        batch_size=cfg["batch_size"], preconditioner=cfg["preconditioner"])
    pcfg = PlanConfig(level1=cfg["level1"], tol=cfg["tol"], max_order=cfg["max_order"],
                      algorithm=cfg["algorithm"], shift_mode=cfg["shift_mode"])
    if cfg["fixed_k"]:
        model, res = uniform_spectrum(p, d, grid, int(cfg["fixed_k"]), pcfg, scfg)
    else:
        model, res = adaptive_spectrum(p, d, grid, pcfg, scfg)
    write_spectrum_csv(out / "spectrum.csv", res)
    diag = dict(res.diagnostics, n=p.n, unit=cfg["unit_label"],
                window=[grid.omega_min, grid.omega_max], points=grid.N)
    _write_json(out / "diagnostics.json", diag)
    if cfg["save_model"]:
        _atomic_write(out / "model.json", lambda fh: fh.write(model.to_json()))
    log.info("k=%d r=%d gemms=%d converged=%s", diag["k"], diag["r"], diag["gemms"], diag["converged"])
    return EXIT_OK if diag["converged"] else EXIT_NOT_CONVERGED


def cmd_reference(cfg):
    p, d = _load(cfg)
    grid = _grid(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    eig = dense_structured_eig(p)
    res = lorentzian_spectrum(eig, d, grid)
    write_spectrum_csv(out / "reference.csv", res)
    oscillator_table(eig, d).write_csv(out / "oscillators.csv")
    write_csv(out / "eigs.csv", [eig.lambdas], ["lambda"])
    diag = {
        "n": p.n,
        "n_in_window": eig.count_in_window(grid.omega_min, grid.omega_max),
        "window": [grid.omega_min, grid.omega_max],
        "eta": grid.eta,
        "points": grid.N,
        "unit": cfg["unit_label"],
        "eig_residual": eig.residual,
        "eig_biorthogonality": eig.biorthogonality,
    }
    if cfg["cpp"]:
        cpp = dense_cpp_spectrum(p, d, grid)
        write_spectrum_csv(out / "cpp.csv", cpp)
        diag["cpp_vs_lorentzian"] = normalized_difference(cpp.sigma, res.sigma)[0]
    _write_json(out / "diagnostics.json", diag)
    return EXIT_OK


def cmd_generate(cfg):
    spec = SynthSpec(n_occ=cfg["n_occ"], n_virt=cfg["n_virt"],
                     gap_range=(cfg["gap_min"], cfg["gap_max"]),
                     window=(cfg["omega_min"], cfg["omega_max"]),
                     g=cfg["coupling"], f=cfg["density"], seed=cfg["seed"])
    prob = generate(spec)
    out = Path(cfg["out"])
    save_problem(out, prob.pencil, prob.dipoles)
    _atomic_write(out / "spec.json", lambda fh: fh.write(prob.spec_json(indent=2)))
    return EXIT_OK


def cmd_compare(args):
    a = read_spectrum_csv(args.a)
    b = read_spectrum_csv(args.b)
    if a.omegas.shape != b.omegas.shape or not np.array_equal(a.omegas, b.omegas):
        raise BadInput("spectra are sampled on different grids")
    diff, i = normalized_difference(a.sigma, b.sigma)
    report = {"max_abs_diff": diff, "at_omega": float(a.omegas[i]), "index": i,
              "threshold": args.threshold, "within": diff <= args.threshold}
    print(f"max |a - b| (normalized) = {diff:.6e} at omega = {a.omegas[i]:.17g}")
    if args.out:
        _write_json(args.out, report)
    return EXIT_OK if report["within"] else EXIT_THRESHOLD


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "spectrum":
            return cmd_spectrum(resolve(args, SPECTRUM_DEFAULTS))
        if args.command == "reference":
            return cmd_reference(resolve(args, REFERENCE_DEFAULTS))
        if args.command == "generate":
            return cmd_generate(resolve(args, GENERATE_DEFAULTS))
        return cmd_compare(args)
    except AdaptiveError as exc:
        print(f"absmor: not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (BadInput, PencilError, NotPositiveDefiniteError, ValueError) as exc:
        print(f"absmor: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"absmor: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
