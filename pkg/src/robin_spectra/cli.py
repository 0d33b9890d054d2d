"""Command-line front end.

    robin-spectra transversal --alpha 1 --eps 1 --nmax 3 [--out FILE]
    robin-spectra transversal --neumann --eps 1 --nmax 3
    robin-spectra spectrum CONFIG.json [--dump-matrix PREFIX]
    robin-spectra trial CONFIG.json
    robin-spectra weyl CONFIG.json

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
"""

import argparse
import csv
import io
import json
import logging
import math
from pathlib import Path
import sys

import jsonschema

from . import analysis, profiles
from .analysis import fmt
from .eigensolver import ConvergenceError, FactorizationError
from .strip import Ends, StripGrid, assemble, dump_matrix_market
from .transversal import (TransversalParams, basis_defect, boundary_residual, ground_defect,
                          neumann_reference, transversal_modes)

log = logging.getLogger("robin_spectra")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_numlist = {"type": "array", "items": _num}


def _requires(kind, *keys):
    return {"if": {"properties": {"kind": {"const": kind}}},
            "then": {"required": list(keys)}}


PROFILE_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(profiles.KINDS)},
        "alpha0": _num,
        "amplitude": _num,
        "width": _pos,
        "radius": _pos,
        "breakpoints": _numlist,
        "values": _numlist,
        "x": _numlist,
        "alpha": _numlist,
        "csv": {"type": "string"},
        "truncate": _pos,
    },
    "required": ["kind", "alpha0"],
    "additionalProperties": False,
    "allOf": [
        _requires("gaussian", "amplitude"),
        _requires("compact", "amplitude", "radius"),
        _requires("piecewise", "breakpoints", "values"),
        {"if": {"properties": {"kind": {"const": "tabulated"}}},
         "then": {"oneOf": [{"required": ["csv"]}, {"required": ["x", "alpha"]}]}},
    ],
}


def _output(*keys):
    return {"type": "object", "properties": {k: {"type": "string"} for k in keys},
            "additionalProperties": False}


SCHEMAS = {
    "spectrum": {
        "type": "object",
        "properties": {
            "command": {"const": "spectrum"},
            "profile": PROFILE_SCHEMA,
            "eps": _pos,
            "sweep": {
                "type": "object",
                "properties": {
                    "L": {"type": "array", "items": _pos, "minItems": 2},
                    "nx": {"type": "array", "items": {"type": "integer", "minimum": 4},
                           "minItems": 3, "maxItems": 3},
                    "ny": {"type": "array", "items": {"type": "integer", "minimum": 4},
                           "minItems": 3, "maxItems": 3},
                    "ends": {"enum": ["neumann", "dirichlet"]},
                },
                "additionalProperties": False,
            },
            "solver": {
                "type": "object",
                "properties": {"k": {"type": "integer", "minimum": 1}, "tol": _pos},
                "additionalProperties": False,
            },
            "probe": {"type": "boolean"},
            "output": _output("json", "csv"),
        },
        "required": ["command", "profile", "eps"],
        "additionalProperties": False,
    },
    "trial": {
        "type": "object",
        "properties": {
            "command": {"const": "trial"},
            "profile": PROFILE_SCHEMA,
            "eps": _pos,
            "n": {"type": "array", "items": {"type": "number", "minimum": 1}, "minItems": 1},
            "output": _output("csv", "dat"),
        },
        "required": ["command", "profile", "eps"],
        "additionalProperties": False,
    },
    "weyl": {
        "type": "object",
        "properties": {
            "command": {"const": "weyl"},
            "alpha0": _num,
            "eps": _pos,
            "t": {"type": "number", "minimum": 0},
            "lambda": _num,
            "n": {"type": "array", "items": _pos, "minItems": 1},
            "grid": {
                "type": "object",
                "properties": {"L": _pos, "nx": {"type": "integer", "minimum": 4},
                               "ny": {"type": "integer", "minimum": 4}},
                "required": ["L", "nx", "ny"],
                "additionalProperties": False,
            },
            "output": _output("csv", "dat"),
        },
        "required": ["command", "alpha0", "eps", "t"],
        "additionalProperties": False,
    },
}


def load_config(path, command):
    """Read and validate a JSON config for ``command``; raises ConfigError."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
    return cfg


def _profile(block):
    try:
        return profiles.from_dict(block)
    except (profiles.ProfileError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def _default_path(config, suffix):
    p = Path(config)
    return str(p.with_name(p.stem + suffix))


def _write(path, text):
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _table(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _two_column(rows):
    return "".join(f"{fmt(float(a))} {fmt(b)}\n" for a, b in rows)


# -- commands --------------------------------------------------------------------

def run_transversal(args):
    if args.neumann:
        modes = neumann_reference(args.eps, args.nmax)
        p = TransversalParams(0.0, args.eps)
        rows = []
        for m in modes:
            r0, r1 = boundary_residual(m, p)
            rows.append([m.index, fmt(m.eigenvalue), fmt(0.0), fmt(r0), fmt(r1)])
    else:
        if args.alpha is None:
            raise ConfigError("--alpha is required unless --neumann is given")
        if args.alpha == 0:
            raise ConfigError("alpha = 0 is the Neumann problem; use --neumann")
        p = TransversalParams(args.alpha, args.eps)
        rows = []
        for m in transversal_modes(p, args.nmax):
            r0, r1 = boundary_residual(m, p)
            defect = ground_defect(p) if m.index == 0 else basis_defect(p, m.index)
            rows.append([m.index, fmt(m.eigenvalue), fmt(defect), fmt(r0), fmt(r1)])
    _write(args.out, _table(["n", "lambda", "defect", "bc_residual_0", "bc_residual_eps"], rows))
    return EXIT_OK


def run_spectrum(args):
    cfg = load_config(args.config, "spectrum")
    profile = _profile(cfg["profile"])
    sweep = cfg.get("sweep", {})
    solver = cfg.get("solver", {})
    out = cfg.get("output", {})
    kw = dict(L=sweep.get("L", [10.0, 20.0, 40.0]), nx=sweep.get("nx", [80, 160, 320]),
              ny=sweep.get("ny", [8, 16, 32]), ends=Ends(sweep.get("ends", "neumann")),
              k=solver.get("k", 4), tol=solver.get("tol", 1e-10), probe=cfg.get("probe", False))
    try:
        report = analysis.find_bound_states(profile, cfg["eps"], **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _write(out.get("json", _default_path(args.config, ".report.json")), report.to_json())
    _write(out.get("csv", _default_path(args.config, ".convergence.csv")), report.to_csv())
    if args.dump_matrix:
        Lmax = float(kw["L"][-1])
        grid = StripGrid(Lmax, cfg["eps"], int(round(kw["nx"][-1] * Lmax / kw["L"][0])),
                         kw["ny"][-1], kw["ends"])
        dump_matrix_market(assemble(grid, profile), args.dump_matrix)
    log.info("threshold %g, %d bound state(s), status %s", report.threshold,
             len(report.bound_states), report.status)
    return EXIT_OK


def run_trial(args):
    cfg = load_config(args.config, "trial")
    profile = _profile(cfg["profile"])
    ns = cfg.get("n", [2**k for k in range(11)])
    out = cfg.get("output", {})
    rows = [(n, analysis.variational_Q(profile, cfg["eps"], n)) for n in ns]
    _write(out.get("csv", _default_path(args.config, ".trial.csv")),
           _table(["n", "Q"], [[fmt(float(n)), fmt(q)] for n, q in rows]))
    _write(out.get("dat", _default_path(args.config, ".trial.dat")), _two_column(rows))
    return EXIT_OK


def run_weyl(args):
    cfg = load_config(args.config, "weyl")
    ns = cfg.get("n", [4, 8, 16])
    out = cfg.get("output", {})
    g = cfg.get("grid")
    grid = None
    if g is not None:
        grid = StripGrid(g["L"], cfg["eps"], g["nx"], g["ny"], Ends.NEUMANN)
    try:
        rows = [(n, analysis.weyl_residual(cfg["alpha0"], cfg["eps"], cfg["t"], n, grid=grid,
                                           lam=cfg.get("lambda")))
                for n in ns]
    except analysis.PacketDoesNotFit as exc:
        raise ConfigError(str(exc)) from exc
    _write(out.get("csv", _default_path(args.config, ".weyl.csv")),
           _table(["n", "residual"], [[fmt(float(n)), fmt(r)] for n, r in rows]))
    _write(out.get("dat", _default_path(args.config, ".weyl.dat")), _two_column(rows))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="robin-spectra",
                                     description="Spectra of the sign-flipped Robin Laplacian on a strip.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("transversal", help="cross-section eigenvalues and checks as CSV")
    t.add_argument("--alpha", type=float)
    t.add_argument("--eps", type=float, required=True)
    t.add_argument("--nmax", type=int, default=3)
    t.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    t.add_argument("--neumann", action="store_true", help="Neumann reference (alpha = 0)")
    t.set_defaults(func=run_transversal)

    s = sub.add_parser("spectrum", help="bound-state sweep from a JSON config")
    s.add_argument("config")
    s.add_argument("--dump-matrix", metavar="PREFIX",
                   help="write K and M of the finest largest-L pencil as Matrix Market")
    s.set_defaults(func=run_spectrum)

    for name, fn, helptext in (("trial", run_trial, "trial-function energies Q(u_n)"),
                               ("weyl", run_weyl, "wave-packet residuals")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config")
        p.set_defaults(func=fn)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "eps", None) is not None and not (args.eps > 0 and math.isfinite(args.eps)):
        parser.error("--eps must be positive")
    if getattr(args, "nmax", 0) < 0:
        parser.error("--nmax must be >= 0")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"robin-spectra: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, FactorizationError, analysis.QuadratureMismatch) as exc:
        print(f"robin-spectra: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
