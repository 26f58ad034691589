"""Verification reports: residuals, realisation class, sign pattern, spectra and solve records.

Every judged number is stored as {"value", "tol", "pass"} so a report is
self-describing.  Reports are plain dicts of JSON-compatible values.
"""
from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from .errors import NoPhiError, PreconditionError
from .geometry import Connection, QuantumMetric, torsion
from .spinor import (SpinorBundle, axiom_residuals, clifford_check, hilbert_checks, lichnerowicz_residual,
                     spectrum)

DEFAULT_TOL = 1e-10
HILBERT_TOL = 1e-10

# KO-dimension sign table (eps, eps', eps'') for n mod 8; eps'' only for even n
KO_TABLE = {0: (1, 1, 1), 1: (1, -1, None), 2: (-1, 1, -1), 3: (-1, 1, None),
            4: (-1, 1, 1), 5: (-1, -1, None), 6: (1, 1, -1), 7: (1, 1, None)}


def judged(value: float, tol: float, below: bool = True) -> dict:
    value = float(value)
    return {"value": value, "tol": tol, "pass": bool(value <= tol if below else value > tol)}


def ko_dimensions(eps: int, eps1: int, eps2: Optional[int], even: bool) -> list:
    out = []
    for n, (a, b, c) in KO_TABLE.items():
        if (a, b) != (eps, eps1):
            continue
        if c is None and not even:
            out.append(n)
        elif c is not None and even and c == eps2:
            out.append(n)
    return out


def sign_pattern(b: SpinorBundle) -> dict:
    """Both readings: the Dirac operator itself (hermitian case) or i times it (antihermitian case).

    J commutes with D up to eps'; since J is antilinear, passing to i D flips eps'.
    """
    even = b.gamma is not None
    eps2 = (b.eps2 if b.eps2 is not None else 1) if even else None
    return {"eps": int(b.eps), "eps1": int(b.eps1), "eps2": eps2, "even": even,
            "ko_dimension": {"D": ko_dimensions(b.eps, b.eps1, eps2, even),
                             "iD": ko_dimensions(b.eps, -b.eps1, eps2, even)}}


def dirac_symmetry(h: dict, tol: float = HILBERT_TOL) -> str:
    if h["antihermiticity_defect"] <= tol:
        return "antihermitian"
    if h["hermiticity_defect"] <= tol:
        return "hermitian"
    return "neither"


def classify(local_ok: bool, covariance_requested: bool, clifford_ok: bool, symmetry: str,
             hilbert_ok: bool) -> str:
    """fails / full / geometric / almost, in that order of precedence."""
    if not local_ok:
        return "fails"
    if symmetry == "neither" or not hilbert_ok:
        return "almost"
    if covariance_requested and clifford_ok:
        return "full"
    return "geometric"


def verify_bundle(b: SpinorBundle, conn: Connection, g: QuantumMetric, tol: float = DEFAULT_TOL,
                  truncation=None, checks=None) -> dict:
    res = axiom_residuals(b, conn)
    requested = list(res) if checks is None else [k for k in res if k in checks]
    residuals = {k: dict(judged(v, tol), requested=k in requested) for k, v in res.items()}
    local_ok = all(residuals[k]["pass"] for k in requested)

    try:
        cl = clifford_check(b, g)
        clifford = {"full": judged(cl["residual"], tol), "relaxed": judged(cl["relaxed_residual"], tol),
                    "phi": _cplx(cl["phi"]), "kappa": _cplx(cl["kappa"]), "phi_derived": cl["phi_derived"]}
        clifford_ok = clifford["full"]["pass"]
    except NoPhiError as exc:
        clifford, clifford_ok, cl = {"error": str(exc)}, False, None

    h = hilbert_checks(b, truncation)
    sym = dirac_symmetry(h, HILBERT_TOL)
    hilbert = {k: judged(h[k], HILBERT_TOL) for k in ("antihermiticity_defect", "hermiticity_defect",
                                                      "J_isometry_algebraic", "J_isometry_sampled")
               if k in h}
    if "gamma_hermiticity_defect" in h:
        hilbert["gamma_hermiticity_defect"] = judged(h["gamma_hermiticity_defect"], HILBERT_TOL)
    hilbert["leakage"] = bool(h.get("leakage", False))
    side_ok = all(v["pass"] for k, v in hilbert.items()
                  if isinstance(v, dict) and k not in ("antihermiticity_defect", "hermiticity_defect"))

    out = {"tolerance": tol, "residuals": residuals, "local_pass": local_ok, "clifford": clifford,
           "hilbert": hilbert, "dirac_symmetry": sym, "signs": sign_pattern(b)}
    cov_req = "covariance" in requested
    out["classification"] = classify(local_ok, cov_req, clifford_ok, sym, side_ok)

    torsion_free = max(t.norm() for t in torsion(conn)) <= tol
    out["torsion_free"] = torsion_free
    # the identity is stated for torsion free connections with a full realisation
    if cl is not None and cov_req and local_ok and clifford_ok and torsion_free:
        try:
            lr = lichnerowicz_residual(b.replace(phi=cl["phi"]), conn, g, truncation)
            out["lichnerowicz"] = dict(judged(lr["residual"], tol), R_S=_cplx(lr["R_S"]))
        except (PreconditionError, NoPhiError) as exc:
            out["lichnerowicz"] = {"error": str(exc)}
    else:
        out["lichnerowicz"] = {"applicable": False}
    out["passed"] = local_ok
    return out


def verify_preset(p, tol: float = DEFAULT_TOL, truncation=None, expectations: bool = True) -> dict:
    from .presets import check_expectations

    trunc = truncation if truncation is not None else p.truncation
    rep = {"preset": p.name, "params": {k: _cplx(v) for k, v in p.params.items()},
           "realisation_expected": p.realisation, "summary": p.summary}
    if p.bundle is not None:
        rep.update(verify_bundle(p.bundle, p.connection, p.metric, tol, trunc, p.checks))
    else:
        rep.update({"tolerance": tol, "classification": "none", "passed": True})
    if expectations:
        recs = check_expectations(p) if truncation is None else \
            check_expectations(_with_truncation(p, truncation))
        rep["expectations"] = [{**r, "deviation": float(np.real(r["deviation"]))} for r in recs]
        rep["passed"] = rep["passed"] and all(r["ok"] or r["disputed"] for r in recs)
    return rep


def _with_truncation(p, N):
    import dataclasses
    return dataclasses.replace(p, truncation=N)


def spectrum_rows(b: SpinorBundle, truncation=None, tol: float = 1e-8) -> dict:
    """Sorted eigenvalues of i D grouped into multiplicities."""
    ev, info = spectrum(b, truncation)
    ev = ev[np.lexsort((np.round(ev.imag, 8), np.round(ev.real, 8)))]
    rows = []
    for z in ev:
        if rows and abs(z - rows[-1]["value"]) <= tol:
            rows[-1]["multiplicity"] += 1
        else:
            rows.append({"value": complex(z), "multiplicity": 1})
    out = [{"index": k, "real": r["value"].real, "imag": r["value"].imag, "multiplicity": r["multiplicity"]}
           for k, r in enumerate(rows)]
    return {"rows": out, "count": int(ev.size), "tol": tol, "leakage": info["leakage"],
            "leaked_columns": list(map(int, info["leaked_columns"]))}


def solve_report(res: dict, labels, reps, tol: float) -> dict:
    sols = []
    for rec, lab in zip(res["solutions"], labels):
        q, r = rec["problem"], rec["result"]
        d = q.point(r.x)
        diag = q.diagnostics(d) if q.diagnostics else {}
        inv = q.invariants(d) if q.invariants else None
        sols.append({"residual": judged(r.residual, tol), "seed": res["seed"], "signs": rec["signs"],
                     "cluster": int(lab), "iterations": r.iterations, "x": list(map(float, r.x)),
                     "diagnostics": {k: float(v) for k, v in diag.items()},
                     "invariants": None if inv is None else _cplx(np.asarray(inv).ravel())})
    best = res["best_residual"]
    return {"problem": res["problem"], "seed": res["seed"], "starts": res["starts"],
            "converged": len(sols), "clusters": len(reps), "tol": tol,
            "best_residual": None if best is None else float(best), "solutions": sols}


def _cplx(x):
    """JSON-friendly copy: complex numbers become [re, im] pairs."""
    if isinstance(x, dict):
        return {k: _cplx(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_cplx(v) for v in x]
    if isinstance(x, np.ndarray):
        if x.dtype == object:
            return [_cplx(v) for v in x.tolist()]
        return _cplx(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if hasattr(x, "pauli_coefficients"):
        return _cplx(x.pauli_coefficients())
    if hasattr(x, "coeffs"):
        return {f"{m},{n}": _cplx(c) for (m, n), c in sorted(x.coeffs.items())}
    return x


def summary_lines(rep: dict) -> list:
    """Short human summary of a verify report."""
    lines = []
    name = rep.get("preset", "inline")
    lines.append(f"{name}: {rep.get('classification')} (tol {rep.get('tolerance')})")
    for k, v in rep.get("residuals", {}).items():
        mark = "ok" if v["pass"] else ("FAIL" if v["requested"] else "off")
        lines.append(f"  {k:22s} {v['value']:.3e}  <= {v['tol']:.0e}  {mark}")
    if "dirac_symmetry" in rep:
        s = rep["signs"]
        lines.append(f"  Dirac operator: {rep['dirac_symmetry']}; signs (eps, eps', eps'') = "
                     f"({s['eps']}, {s['eps1']}, {s['eps2']}); KO dim as D {s['ko_dimension']['D']}, "
                     f"as iD {s['ko_dimension']['iD']}")
    for e in rep.get("expectations", []):
        if not e["ok"]:
            tag = "disputed" if e["disputed"] else "MISMATCH"
            lines.append(f"  expectation {e['quantity']}: {tag} (deviation {e['deviation']:.3g})")
    return lines
