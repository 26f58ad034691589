"""Command-line front end: verify, spectrum, solve, presets-list.

Exit codes: 0 pass, 1 check failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from typing import Any, Dict, Optional

import jsonschema
import numpy as np
import yaml

from . import presets as P
from .calculus import m2_calculus, torus_calculus
from .errors import ConfigurationError
from .geometry import (Connection, flip_braid, inner_connection, m2_alt_braid, m2_alt_metric, m2_standard_braid,
                       m2_standard_metric, torus_metric, torus_torsion_free_connection)
from .problems import PROBLEMS, get_problem
from .report import DEFAULT_TOL, solve_report, spectrum_rows, summary_lines, verify_bundle, verify_preset
from .solver import cluster_solutions, multistart
from .spinor import SpinorBundle, flip_sigma_s, inner_bundle

log = logging.getLogger(__name__)

_num = {"type": "number"}
_cnum = {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}]}
_tensor = {"type": "array"}
_sign = {"enum": [1, -1]}

CONFIG_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"type": "string"},
        "params": {"type": "object"},
        "override": {
            "type": "object", "additionalProperties": False,
            "properties": {"J": _tensor, "gamma": _tensor, "phi": _tensor, "kappa": _cnum,
                           "eps": _sign, "eps1": _sign, "eps2": _sign},
        },
        "definition": {
            "type": "object", "additionalProperties": False, "required": ["backend", "spinor"],
            "properties": {
                "backend": {"enum": ["torus", "m2"]},
                "theta": _num,
                "metric": {
                    "type": "object", "additionalProperties": False,
                    "properties": {"kind": {"enum": ["euclidean", "standard", "alt"]},
                                   "c": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}},
                },
                "connection": {
                    "type": "object", "additionalProperties": False,
                    "properties": {"kind": {"enum": ["qlc", "torsion_free", "general"]},
                                   "mu": _num, "rho": _cnum, "h": _tensor, "H": _tensor},
                },
                "spinor": {
                    "type": "object", "additionalProperties": False, "required": ["C", "J"],
                    "properties": {"C": _tensor, "S": _tensor, "sigma_s": {"oneOf": [{"const": "flip"}, _tensor]},
                                   "zeta": _tensor, "A": _tensor, "J": _tensor, "gamma": _tensor, "phi": _tensor,
                                   "kappa": _cnum, "eps": _sign, "eps1": _sign, "eps2": _sign},
                },
                "checks": {"type": "array", "items": {"type": "string"}},
            },
        },
        "truncation": {"type": "integer", "minimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "solver": {
            "type": "object", "additionalProperties": False, "required": ["problem"],
            "properties": {"problem": {"type": "string"}, "params": {"type": "object"},
                           "starts": {"type": "integer", "minimum": 0}, "seed": {"type": "integer"},
                           "max_iter": {"type": "integer", "minimum": 1},
                           "tol": {"type": "number", "exclusiveMinimum": 0},
                           "dedup_tol": {"type": "number", "exclusiveMinimum": 0}},
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"path": {"type": "string"}, "format": {"enum": ["records", "csv"]}},
        },
    },
}


# value parsing -----------------------------------------------------------------------------

def complex_array(obj, shape) -> np.ndarray:
    """Nested lists of the given shape; each entry is a number or an [re, im] pair."""
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()

    def conv(x, depth):
        if depth == len(shape):
            if isinstance(x, (int, float)) and not isinstance(x, bool):
                return complex(x)
            if isinstance(x, (list, tuple)) and len(x) == 2 and \
                    all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
                return complex(x[0], x[1])
            raise ConfigurationError(f"cannot read {x!r} as a complex number")
        if not isinstance(x, (list, tuple)) or len(x) != shape[depth]:
            raise ConfigurationError(f"expected an array of shape {tuple(shape)}")
        return [conv(v, depth + 1) for v in x]

    return np.asarray(conv(obj, 0), dtype=complex)


def param_value(v):
    """--param / params values: [re, im] pairs become complex, nested pair lists complex arrays."""
    if isinstance(v, list):
        if len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            return complex(v[0], v[1])
        items = [param_value(x) for x in v]
        if items and all(isinstance(x, (complex, np.ndarray)) for x in items):
            return np.asarray(items, dtype=complex)
        return items
    return v


def parse_param(text: str):
    if "=" not in text:
        raise ConfigurationError(f"--param expects k=v, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k.strip(), param_value(yaml.safe_load(v))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse --param {text!r}: {exc}") from exc


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as f:
            cfg = yaml.safe_load(f) or {}
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config {path} is not valid YAML: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigurationError(f"config error at {where}: {exc.message}") from exc
    if "preset" in cfg and "definition" in cfg:
        raise ConfigurationError("give either a preset or an inline definition, not both")


# building targets ------------------------------------------------------------------------------

def build_definition(d: dict):
    """Inline definition -> (bundle, connection, metric, checks)."""
    backend = d["backend"]
    met = d.get("metric", {})
    con = d.get("connection", {})
    sp = d["spinor"]
    if backend == "torus":
        calc = torus_calculus(float(d.get("theta", 0.0)))
        if met.get("kind", "euclidean") != "euclidean":
            raise ConfigurationError("torus backend supports the euclidean metric kind")
        g = torus_metric(*met.get("c", (1.0, 1.0, 0.0)))
        kind = con.get("kind", "torsion_free")
        if kind == "torsion_free":
            conn = torus_torsion_free_connection(calc, np.real(complex_array(con.get("h", np.zeros((2, 3))), (2, 3))))
        elif kind == "general":
            conn = Connection.from_nabla(np.real(complex_array(con["H"], (2, 2, 2))), flip_braid(2), calc)
        else:
            raise ConfigurationError("torus connections are torsion_free or general")
    else:
        calc = m2_calculus()
        kind = met.get("kind", "standard")
        if kind == "standard":
            g, braid = m2_standard_metric(), m2_standard_braid(float(con.get("mu", 0.0)))
        elif kind == "alt":
            rho = con.get("rho", 0.0)
            g, braid = m2_alt_metric(), m2_alt_braid(complex(*rho) if isinstance(rho, list) else complex(rho))
        else:
            raise ConfigurationError("M_2 metric kind must be standard or alt")
        if con.get("kind", "qlc") != "qlc":
            raise ConfigurationError("M_2 connections are given by their QLC parameter")
        conn = inner_connection(calc, braid)

    ns = 2
    C = complex_array(sp["C"], (2, ns, ns))
    J = complex_array(sp["J"], (ns, ns))
    opt = {}
    for key in ("gamma", "phi"):
        if key in sp:
            opt[key] = complex_array(sp[key], (ns, ns))
    if "kappa" in sp:
        k = sp["kappa"]
        opt["kappa"] = complex(*k) if isinstance(k, list) else complex(k)
    for key in ("eps", "eps1", "eps2"):
        if key in sp:
            opt[key] = sp[key]
    sig = sp.get("sigma_s", "flip")
    if "zeta" in sp:
        zeta = complex_array(sp["zeta"], (2, 2))
        K = C[0] @ C[1] - C[1] @ C[0]
        sig = np.array([[zeta[i, j] * K for j in range(2)] for i in range(2)])
    elif isinstance(sig, str):
        sig = flip_sigma_s()
    else:
        sig = complex_array(sig, (2, 2, ns, ns))
    if backend == "torus":
        S = complex_array(sp.get("S", np.zeros((2, ns, ns))), (2, ns, ns))
        b = SpinorBundle(calc, C, S, sig, J, **opt)
    else:
        if "S" in sp:
            raise ConfigurationError("on M_2 the spinor connection is built from sigma_s (and A)")
        A = complex_array(sp["A"], (2, ns, ns)) if "A" in sp else None
        b = inner_bundle(calc, C, sig, J, A=A, **opt)
    return b, conn, g, d.get("checks")


def apply_override(b: SpinorBundle, ov: dict) -> SpinorBundle:
    ch = {}
    for key in ("J", "gamma", "phi"):
        if key in ov:
            ch[key] = complex_array(ov[key], (b.ns, b.ns))
    if "kappa" in ov:
        ch["kappa"] = complex(*ov["kappa"]) if isinstance(ov["kappa"], list) else complex(ov["kappa"])
    for key in ("eps", "eps1", "eps2"):
        if key in ov:
            ch[key] = ov[key]
    return b.replace(**ch)


def target_from(cfg: dict, args) -> dict:
    name = args.preset or cfg.get("preset")
    params = dict(cfg.get("params", {}))
    params = {k: param_value(v) for k, v in params.items()}
    for text in args.param or []:
        k, v = parse_param(text)
        params[k] = v
    if name and "definition" in cfg:
        raise ConfigurationError("give either a preset or an inline definition, not both")
    if name:
        p = P.preset(name, **params)
        if "override" in cfg:
            if p.bundle is None:
                raise ConfigurationError(f"preset {name} has no spinor data to override")
            b = apply_override(p.bundle, cfg["override"])
            return {"kind": "inline", "name": name, "bundle": b, "connection": p.connection, "metric": p.metric,
                    "checks": p.checks, "truncation": p.truncation, "preset": None}
        return {"kind": "preset", "name": name, "preset": p, "bundle": p.bundle, "truncation": p.truncation}
    if "definition" in cfg:
        if params:
            raise ConfigurationError("--param applies to presets only")
        b, conn, g, checks = build_definition(cfg["definition"])
        return {"kind": "inline", "name": "inline", "bundle": b, "connection": conn, "metric": g,
                "checks": checks, "truncation": 2 if cfg["definition"]["backend"] == "torus" else None,
                "preset": None}
    raise ConfigurationError("nothing to run: give --preset or a config with a preset or definition")


# commands ---------------------------------------------------------------------------------------

def _settings(cfg, args):
    tol = args.tol if args.tol is not None else cfg.get("tol", DEFAULT_TOL)
    trunc = args.truncation if args.truncation is not None else cfg.get("truncation")
    out = cfg.get("output", {})
    path = args.out or out.get("path")
    fmt = args.format or out.get("format")
    return tol, trunc, path, fmt


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_verify(cfg, args) -> int:
    tol, trunc, path, fmt = _settings(cfg, args)
    if fmt == "csv":
        raise ConfigurationError("verify reports are records only")
    t = target_from(cfg, args)
    if t["kind"] == "preset":
        rep = verify_preset(t["preset"], tol, trunc)
    else:
        rep = {"preset": t["name"], "overridden": t["name"] != "inline"}
        rep.update(verify_bundle(t["bundle"], t["connection"], t["metric"], tol,
                                 trunc if trunc is not None else t["truncation"], t["checks"]))
    _emit(json.dumps(rep, indent=2, sort_keys=True) + "\n", path)
    for line in summary_lines(rep):
        print(line, file=sys.stderr)
    return 0 if rep["passed"] else 1


def cmd_spectrum(cfg, args) -> int:
    tol, trunc, path, fmt = _settings(cfg, args)
    t = target_from(cfg, args)
    if t["bundle"] is None:
        raise ConfigurationError(f"{t['name']} has no spinor data")
    rows = spectrum_rows(t["bundle"], trunc if trunc is not None else t["truncation"])
    if (fmt or "csv") == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "real", "imag", "multiplicity"])
        for r in rows["rows"]:
            w.writerow([r["index"], repr(float(r["real"])), repr(float(r["imag"])), r["multiplicity"]])
        _emit(buf.getvalue(), path)
    else:
        _emit(json.dumps(rows, indent=2) + "\n", path)
    print(f"{t['name']}: {rows['count']} eigenvalues, {len(rows['rows'])} distinct (grouping tol {rows['tol']}),"
          f" leakage {rows['leakage']}", file=sys.stderr)
    return 0


def cmd_solve(cfg, args) -> int:
    tol, _, path, fmt = _settings(cfg, args)
    if fmt == "csv":
        raise ConfigurationError("solve reports are records only")
    sv = dict(cfg.get("solver", {}))
    name = args.preset or sv.get("problem")
    if not name:
        raise ConfigurationError(f"solve needs a problem name; known: {sorted(PROBLEMS)}")
    params = {k: param_value(v) for k, v in sv.get("params", {}).items()}
    for text in args.param or []:
        k, v = parse_param(text)
        params[k] = v
    if "c" in params:
        params["c"] = tuple(complex(x) for x in np.ravel(params["c"]))
    starts = args.starts if args.starts is not None else sv.get("starts", 50)
    seed = args.seed if args.seed is not None else sv.get("seed", 0)
    stol = sv.get("tol", 1e-9)
    prob = get_problem(name, **params)
    res = multistart(prob, starts, seed=seed, max_iter=sv.get("max_iter", 500), tol=stol)
    labels, reps = cluster_solutions(res["solutions"], sv.get("dedup_tol", 1e-6))
    rep = solve_report(res, labels, reps, stol)
    rep["layout"] = prob.layout_report()
    rep["layout"]["slots"] = [list(s) for s in rep["layout"]["slots"]]
    _emit(json.dumps(rep, indent=2) + "\n", path)
    best = rep["best_residual"]
    print(f"{name}: {rep['converged']}/{starts} converged, {rep['clusters']} gauge clusters, best residual "
          f"{'n/a' if best is None else f'{best:.3e}'} (success tol {stol})", file=sys.stderr)
    return 0


def cmd_presets_list(cfg, args) -> int:
    _, _, path, fmt = _settings(cfg, args)
    rows = [{"name": n, "summary": s.summary, "defaults": {k: _jsonable(v) for k, v in s.defaults.items()}}
            for n, s in sorted(P.list_presets().items())]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "summary", "defaults"])
        for r in rows:
            w.writerow([r["name"], r["summary"], json.dumps(r["defaults"])])
        _emit(buf.getvalue(), path)
    else:
        _emit(json.dumps(rows, indent=2) + "\n", path)
    return 0


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


COMMANDS = {"verify": cmd_verify, "spectrum": cmd_spectrum, "solve": cmd_solve, "presets-list": cmd_presets_list}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qrgdirac", description="Geometric Dirac operators on quantum Riemannian "
                                 "geometries: verification, spectra and solution searches.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="YAML run configuration")
    ap.add_argument("--preset", help="preset name (solve: solver problem name)")
    ap.add_argument("--param", action="append", metavar="K=V", help="preset or problem parameter (repeatable)")
    ap.add_argument("--truncation", type=int, help="torus monomial window |m|, |n| <= N")
    ap.add_argument("--tol", type=float, help="residual tolerance")
    ap.add_argument("--starts", type=int, help="solver multistarts")
    ap.add_argument("--seed", type=int, help="solver seed")
    ap.add_argument("--out", help="output path (default stdout)")
    ap.add_argument("--format", choices=["records", "csv"], help="records (JSON) or csv")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
