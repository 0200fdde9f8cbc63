"""Command-line front end.

Subcommands write CSV or JSON artifacts and print a JSON summary on stdout.
Validation failures exit with status 2 and numerical failures with status 3;
both print a diagnostic JSON object on stderr.
"""

from __future__ import annotations

import os

if os.environ.get("PLATE_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["PLATE_THREADS"])

import argparse
import csv
import json
import sys

import jsonschema
import numpy as np

from .errors import NumericalFailure, PlateError, ValidationError

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "k": {"type": "number", "exclusiveMinimum": 0},
        "bc": {"enum": ["simply", "clamped"]},
        "nx": {"type": "integer", "minimum": 2},
        "ny": {"type": "integer", "minimum": 2},
        "L": {"type": "number", "exclusiveMinimum": 0},
        "hole": {"oneOf": [{"type": "string"},
                           {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                           {"type": "null"}]},
        "pmax": {"type": "integer", "minimum": 1},
        "beta": {"type": ["number", "null"], "minimum": 0},
        "nu": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "c": {"type": "number", "exclusiveMinimum": 0},
        "n": {"type": "integer", "minimum": 1},
        "p": {"type": "integer", "minimum": 1},
        "gammas": {"type": "string"},
        "kmin": {"type": "number", "exclusiveMinimum": 0},
        "kmax": {"type": "number", "exclusiveMinimum": 0},
        "nk": {"type": "integer", "minimum": 2},
        "source": {"oneOf": [{"type": "string"}, {"type": "object"}]},
        "out": {"type": "string"},
        "coeffs": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "all": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_DEFAULTS = {"bc": "simply", "nx": 160, "ny": 40, "L": 1.5, "hole": None, "pmax": 20, "beta": None,
             "nu": 0.3, "c": 1.0, "n": 5, "p": 1, "gammas": "1e-2..1e-6", "kmin": 1.0, "kmax": 10.0,
             "nk": 91, "seed": 0, "all": False}


def _fmt(v) -> str:
    return f"{v:.12g}"


def write_csv(path, header, rows):
    """CSV with 12 significant digits; ``path`` of '-' writes to stdout."""
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def parse_gammas(text: str):
    """'1e-2..1e-6' (decades, inclusive) or a comma-separated list."""
    text = text.strip()
    if ".." in text:
        a, b = (float(t) for t in text.split(".."))
        if a <= 0 or b <= 0:
            raise ValidationError("damping values must be positive")
        n = int(round(abs(np.log10(a / b)))) + 1
        return list(np.geomspace(a, b, n))
    vals = [float(t) for t in text.split(",") if t]
    if not vals or min(vals) < 0:
        raise ValidationError("damping list must be non-empty and non-negative")
    return vals


def _hole(value):
    from .fem import Hole
    if value is None:
        return None
    if isinstance(value, str):
        return Hole.parse(value)
    return Hole(*map(float, value))


def _source(value, k, bc):
    from .clamped_strip import SourceTerm
    if value is None:
        return SourceTerm.bump()
    if isinstance(value, str):
        try:
            with open(value) as fh:
                value = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read source spec {value!r}: {exc}") from exc
    return SourceTerm.from_dict(value, k, bc)


def _need_k(cfg):
    if cfg.get("k") is None:
        raise ValidationError("--k is required")
    return float(cfg["k"])


# ---------------------------------------------------------------------------
# subcommands


def cmd_thresholds(cfg):
    from .spectrum import thresholds
    table = thresholds(cfg["bc"], cfg["n"])
    rows = [(i + 1, float(v), float(a)) for i, (v, a) in enumerate(zip(table.values, table.asymptotes))]
    write_csv(cfg.get("out"), ["n", "k_n", "asymptote"], rows)
    return {"bc": cfg["bc"], "n": cfg["n"], "k_n": [float(v) for v in table.values]}


def cmd_modes(cfg):
    from .spectrum import check_not_threshold, complex_exponents, propagating_exponents
    k = _need_k(cfg)
    check_not_threshold(k, cfg["bc"])
    modes = list(propagating_exponents(k, cfg["bc"]))
    if cfg["all"]:
        modes += [m for m in complex_exponents(k, cfg["bc"]) if m.kind.value != "propagating"]
    rows = [(m.kind.value, float(m.lam.real), float(m.lam.imag), m.alg_mult, m.geom_mult,
             "" if m.index is None else m.index) for m in modes]
    write_csv(cfg.get("out"), ["kind", "re", "im", "alg_mult", "geom_mult", "p"], rows)
    n_prop = sum(1 for m in modes if m.kind.value == "propagating")
    return {"k": k, "bc": cfg["bc"], "propagating": n_prop, "listed": len(rows)}


def cmd_dispersion(cfg):
    from .physics import group_velocity, phase_velocity
    from .spectrum import propagating_etas, thresholds
    ks = np.linspace(cfg["kmin"], cfg["kmax"], cfg["nk"])
    th = thresholds(cfg["bc"], int(cfg["kmax"] / np.pi) + 2).values
    rows = []
    for k in ks:
        if np.min(np.abs(th - k)) < 1e-9:
            continue
        for p, eta in enumerate(propagating_etas(k, cfg["bc"]), start=1):
            rows.append((float(k), p, float(eta), group_velocity(p, k, cfg["bc"], cfg["c"]),
                         phase_velocity(p, k, cfg["bc"], cfg["c"])))
    write_csv(cfg.get("out"), ["k", "p", "eta", "group_velocity", "phase_velocity"], rows)
    return {"bc": cfg["bc"], "rows": len(rows)}


def cmd_solve_strip(cfg):
    from .fem import StripMesh, assemble_plate, load_vector, solve
    from .spectrum import check_not_threshold
    k = _need_k(cfg)
    check_not_threshold(k, cfg["bc"])
    mesh = StripMesh(cfg["L"], cfg["nx"], cfg["ny"], _hole(cfg["hole"]))
    src = _source(cfg.get("source"), k, cfg["bc"])
    ends = "dtn" if cfg["bc"] == "simply" else "clamped"
    system = assemble_plate(mesh, cfg["nu"], k, cfg["bc"], ends=ends, p_max=cfg["pmax"])
    lo, hi = src.x_support
    if lo < -mesh.L or hi > mesh.L:
        raise ValidationError("source support must lie inside the truncated strip")
    field = solve(system, load_vector(mesh, src, (lo, hi)))
    if cfg.get("out"):
        field.to_csv(cfg["out"])
    return {"k": k, "bc": cfg["bc"], "ends": ends, "n_dofs": int(system.matrix.shape[0]),
            "residual": field.residual}


def cmd_scatter(cfg):
    from .scattering import scattering_matrix
    k = _need_k(cfg)
    if cfg["bc"] != "simply":
        raise ValidationError("scattering is implemented for simply supported walls only")
    sm = scattering_matrix(k, cfg["L"], cfg["nx"], cfg["ny"], _hole(cfg["hole"]), cfg["nu"], cfg["pmax"])
    d = sm.to_dict()
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            json.dump(d, fh, indent=2)
    return {key: d[key] for key in ("k", "n", "unitarity_defect", "symmetry_defect", "max_residual")}


def cmd_clamped_solve(cfg):
    from .clamped_strip import ContourSpec, radiating_solution
    k = _need_k(cfg)
    src = _source(cfg.get("source"), k, "clamped")
    spec = ContourSpec.default(k, "clamped", beta=cfg.get("beta"))
    dec = radiating_solution(src, k, spec)
    if cfg.get("out"):
        from .fem import write_field_csv
        a, b = src.x_support
        x = np.linspace(min(a, -2.0) - 1.0, max(b, 2.0) + 1.0, 121)
        y = np.linspace(0.0, 1.0, 21)
        X, Y = np.meshgrid(x, y, indexing="ij")
        write_field_csv(cfg["out"], X.ravel(), Y.ravel(), dec.total.derivative(X, Y).ravel())
    flux = dec.flux_coefficients()
    out = dec.coefficients_dict()
    out.update({"contour": dec.line_field.spec.to_dict(),
                "flux_a_re": np.real(flux.a).tolist(), "flux_a_im": np.imag(flux.a).tolist(),
                "flux_b_re": np.real(flux.b).tolist(), "flux_b_im": np.imag(flux.b).tolist(),
                "residue_flux_gap": float(max(np.max(np.abs(flux.a - dec.a), initial=0.0),
                                              np.max(np.abs(flux.b - dec.b), initial=0.0))),
                "decay_rate": dec.decay_rate()})
    if cfg.get("coeffs"):
        with open(cfg["coeffs"], "w") as fh:
            json.dump(out, fh, indent=2)
    return out


def cmd_labs(cfg):
    from .physics import absorption_slope, absorption_trajectory
    k = _need_k(cfg)
    bc = cfg["bc"] if cfg.get("_bc_given") else "clamped"
    tr = absorption_trajectory(cfg["p"], k, parse_gammas(cfg["gammas"]), bc, cfg["c"])
    write_csv(cfg.get("out"), ["gamma", "re", "im"], tr.rows())
    return {"k": k, "p": cfg["p"], "bc": bc, "limit_eta": tr.limit, "decaying": tr.decaying(),
            "monotone": tr.monotone(), "close_gap": tr.close_gap,
            "predicted_slope": absorption_slope(cfg["p"], k, bc, cfg["c"])}


_CSV_COMMANDS = {"thresholds", "modes", "dispersion", "labs"}

COMMANDS = {
    "thresholds": cmd_thresholds,
    "modes": cmd_modes,
    "dispersion": cmd_dispersion,
    "solve-strip": cmd_solve_strip,
    "scatter": cmd_scatter,
    "clamped-solve": cmd_clamped_solve,
    "labs": cmd_labs,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with defaults for any option")
    common.add_argument("--k", type=float)
    common.add_argument("--bc", choices=["simply", "clamped"])
    common.add_argument("--nx", type=int)
    common.add_argument("--ny", type=int)
    common.add_argument("--L", type=float)
    common.add_argument("--hole", help="x0,y0,x1,y1")
    common.add_argument("--pmax", type=int)
    common.add_argument("--beta", type=float)
    common.add_argument("--nu", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--out")
    common.add_argument("--seed", type=int)
    parser = argparse.ArgumentParser(prog="plate-waveguide", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("thresholds", parents=[common]).add_argument("--n", type=int)
    modes = sub.add_parser("modes", parents=[common])
    modes.add_argument("--all", action="store_true", default=None,
                       help="also list evanescent exponents in the default search box")
    disp = sub.add_parser("dispersion", parents=[common])
    disp.add_argument("--kmin", type=float)
    disp.add_argument("--kmax", type=float)
    disp.add_argument("--nk", type=int)
    sub.add_parser("solve-strip", parents=[common]).add_argument("--source")
    sub.add_parser("scatter", parents=[common])
    cs = sub.add_parser("clamped-solve", parents=[common])
    cs.add_argument("--source")
    cs.add_argument("--coeffs")
    labs = sub.add_parser("labs", parents=[common])
    labs.add_argument("--p", type=int)
    labs.add_argument("--gammas")
    return parser


def resolve_config(args) -> dict:
    """Defaults, then the --config file, then explicit flags; validated by schema."""
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config!r}: {exc}") from exc
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "command") and v is not None}
    cfg.update(flags)
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"invalid configuration: {exc.message}") from exc
    merged = dict(_DEFAULTS)
    merged.update(cfg)
    merged["_bc_given"] = "bc" in cfg
    if merged.get("kmin", 0) >= merged.get("kmax", 1):
        raise ValidationError("kmin must be below kmax")
    return merged


def _join_negative_values(argv):
    """Let '--hole -0.3,0.4,0.3,0.7' through argparse, which reads it as a flag."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--hole", "--k", "--L", "--beta"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    try:
        cfg = resolve_config(args)
        np.random.seed(cfg["seed"])
        summary = COMMANDS[args.command](cfg)
    except (ValidationError, ValueError) as exc:
        _diagnose(exc, EXIT_VALIDATION)
        return EXIT_VALIDATION
    except (NumericalFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
        _diagnose(exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    summary = {"command": args.command, "status": "ok", **summary}
    if args.command not in _CSV_COMMANDS or cfg.get("out") not in (None, "-"):
        print(json.dumps(summary, default=_jsonable))
    return 0


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"not serializable: {type(v)}")


def _diagnose(exc, code):
    info = {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, PlateError):
        info["category"] = "validation" if code == EXIT_VALIDATION else "numerical"
    print(json.dumps(info), file=sys.stderr)


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
