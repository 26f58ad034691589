"""Acceptance suite: one test (and one summary line) per criterion.

Criteria that cannot be met as stated fail here on purpose; the analysis
is recorded in the decisions ledger.  Nothing is loosened to make them pass.
"""
import time

import numpy as np
import pytest

from qrgdirac.algebra import SIGMA
from qrgdirac.calculus import exterior_d, m2_calculus, torus_calculus
from qrgdirac.geometry import (EPS2, curvature, inner_connection, m2_standard_braid, m2_standard_metric,
                               ricci)
from qrgdirac.presets import (ROTATION_U, _torus_spectrum_oracle, alt_family_data, check_expectations,
                              preset, sort_spectrum)
from qrgdirac.problems import THM42_C_REAL, alt_full_clifford, alt_hermitian_circle, get_problem
from qrgdirac.solver import cluster_solutions, continue_family, multistart
from qrgdirac.spinor import (axiom_residuals, clifford_check, curvature_action, curvature_action_direct,
                             gauge_transform, hilbert_checks, inner_bundle, make_spinor, onorm, spectrum, spinor_laplacian,
                             spinor_laplacian_direct, sub_dirac_defects)

s1, s2, s3 = SIGMA
I2 = np.eye(2)


def obj_dev(arr, expected) -> float:
    """Max norm of (algebra-element array) - (scalars times identity)."""
    arr = np.asarray(arr, dtype=object)
    e = np.broadcast_to(np.asarray(expected, dtype=complex), arr.shape)
    return max((x - complex(y)).norm() for x, y in zip(arr.flat, e.flat))


def expectations_ok(p, quantities):
    recs = [r for r in check_expectations(p) if r["quantity"] in quantities]
    assert {r["quantity"] for r in recs} == set(quantities)
    return all(r["ok"] for r in recs), max(float(np.real(r["deviation"])) for r in recs)


# 1 -------------------------------------------------------------------------------------------

def test_criterion_01_torus_spectral_triple(criterion):
    t0 = time.perf_counter()
    worst_local, worst_anti, worst_J = 0.0, 0.0, 0.0
    for eps in (1, -1):
        p = preset("torus_spectral", eps=eps)
        worst_local = max(worst_local, max(axiom_residuals(p.bundle, p.connection).values()))
        h = hilbert_checks(p.bundle, p.truncation)
        worst_anti = max(worst_anti, h["antihermiticity_defect"])
        worst_J = max(worst_J, h["J_isometry_algebraic"], h["J_isometry_sampled"])
    p = preset("torus_spectral", d1=0.3, d2=0.3)
    injected = hilbert_checks(p.bundle, p.truncation)["antihermiticity_defect"]
    dt = time.perf_counter() - t0
    ok = worst_local < 1e-12 and worst_anti < 1e-12 and worst_J < 1e-12 and injected > 0.1 and dt < 1.0
    criterion("1", ok, f"local {worst_local:.1e}, antiherm {worst_anti:.1e}, J {worst_J:.1e}, "
                       f"d_i = 0.3 defect {injected:.3f}", dt)
    assert ok


# 2 -------------------------------------------------------------------------------------------

def test_criterion_02_torus_spectrum(criterion):
    t0 = time.perf_counter()
    p = preset("torus_spectral", N=4)
    ev, info = spectrum(p.bundle, 4)
    ev = sort_spectrum(ev)
    oracle = _torus_spectrum_oracle(4)
    dt = time.perf_counter() - t0
    dev = float(np.max(np.abs(ev - oracle))) if ev.shape == oracle.shape else np.inf
    # multiplicities: count of each distinct |value|^2 = m^2 + n^2 on the lattice
    vals, counts = np.unique(np.round(ev.real, 8), return_counts=True)
    lattice = {}
    for m in range(-4, 5):
        for n in range(-4, 5):
            r = round(float(np.hypot(m, n)), 8)
            lattice[r] = lattice.get(r, 0) + 1
            lattice[-r] = lattice.get(-r, 0) + 1
    mult_ok = all(lattice[round(v, 8) if v != 0 else 0.0] == c for v, c in zip(vals, counts))
    ok = dev < 1e-10 and mult_ok and not info["leakage"] and dt < 5.0
    criterion("2", ok, f"{ev.size} eigenvalues, max deviation {dev:.1e}, multiplicities {mult_ok}", dt)
    assert ok


# 3 -------------------------------------------------------------------------------------------

def test_criterion_03_torus_forced_flatness(criterion):
    t0 = time.perf_counter()
    res = multistart(get_problem("torus_wqlc"), 200, seed=0)
    sols = res["solutions"]
    hmax = max((float(np.max(np.abs(r["result"].x[:4]))) for r in sols), default=np.inf)
    flat_ok = len(sols) > 0 and hmax < 1e-7

    ext = multistart(get_problem("torus_general_connection"), 100, seed=0)
    worst, pts = 0.0, []
    for rec in ext["solutions"]:
        d = rec["problem"].point(rec["result"].x)
        H, S = np.real(d["H"]), d["S"]
        h12, h21 = H[0, 1, 1], H[1, 0, 0]
        Hx = np.zeros((2, 2, 2))
        Hx[0, 1, 1], Hx[0, 0, 1], Hx[1, 0, 0], Hx[1, 1, 0] = h12, -h21, h21, -h12
        d1, d2 = np.trace(S[0]) / 2, np.trace(S[1]) / 2
        Sx = np.array([d1 * I2 - 0.5j * h21 * s3, d2 * I2 + 0.5j * h12 * s3])
        worst = max(worst, float(np.max(np.abs(H - Hx))), float(np.max(np.abs(S - Sx))))
        pts.append((h12, h21))
    pts = np.array(pts)
    # a genuine 2-parameter family: the recovered (h12, h21) span the plane
    rank = np.linalg.matrix_rank(pts - pts.mean(0), tol=1e-3) if len(pts) > 2 else 0
    dt = time.perf_counter() - t0
    ok = flat_ok and len(pts) > 0 and worst < 1e-8 and rank == 2 and dt < 60
    criterion("3", ok, f"{len(sols)}/200 converged, max |h| {hmax:.1e}; extended {len(pts)} points, "
                       f"family defect {worst:.1e}, rank {rank}", dt)
    assert ok


# 4 -------------------------------------------------------------------------------------------

def test_criterion_04_m2_standard_geometry(criterion):
    t0 = time.perf_counter()
    calc, g = m2_calculus(), m2_standard_metric()
    worst = 0.0
    for mu in (-1.0, 0.0, 0.5):
        rho = curvature(inner_connection(calc, m2_standard_braid(mu)))
        ric, S = ricci(rho, g)
        worst = max(worst, obj_dev(rho, -mu * EPS2), obj_dev(ric, mu / 2 * g.g),
                    obj_dev(np.array([S], dtype=object), -mu))
    dt = time.perf_counter() - t0
    ok = worst < 1e-12 and dt < 1.0
    criterion("4", ok, f"max deviation {worst:.1e} over mu in (-1, 0, 0.5)", dt)
    assert ok


# 5 -------------------------------------------------------------------------------------------

def test_criterion_05_m2_canonical(criterion):
    t0 = time.perf_counter()
    worst_local, worst_h, worst_g = 0.0, 0.0, 0.0
    for e1 in (1, -1):
        p = preset("m2_canonical", eps1=e1)
        worst_local = max(worst_local, max(axiom_residuals(p.bundle, p.connection).values()))
        h = hilbert_checks(p.bundle)
        worst_h = max(worst_h, h["antihermiticity_defect"], h["gamma_hermiticity_defect"])
        r = gauge_transform(p.bundle, ROTATION_U)
        sq = np.sqrt(2.0)
        worst_g = max(worst_g, float(np.max(np.abs(r.C - np.array([s1 / sq, e1 * s3 / sq])))),
                      float(np.max(np.abs(r.J - (s3 - s1) / sq))),
                      float(np.max(np.abs(r.gamma + e1 * s2))))
    dt = time.perf_counter() - t0
    ok = worst_local < 1e-12 and worst_h < 1e-12 and worst_g < 1e-12
    criterion("5", ok, f"local {worst_local:.1e}, hermiticity {worst_h:.1e}, rotation {worst_g:.1e}", dt)
    assert ok


# 6 -------------------------------------------------------------------------------------------

def test_criterion_06_lichnerowicz(criterion):
    t0 = time.perf_counter()
    oks, devs = [], []
    for e1 in (1, -1):
        ok, dev = expectations_ok(preset("m2_canonical", eps1=e1), ["phi", "kappa", "R_S", "lichnerowicz"])
        oks.append(ok), devs.append(dev)
        ok, dev = expectations_ok(preset("m2_canonical_rotated", eps1=e1),
                                  ["phi", "kappa", "R_S", "lichnerowicz", "closed_form:laplacian",
                                   "closed_form:dirac_square"])
        oks.append(ok), devs.append(dev)
    ok, dev = expectations_ok(preset("torus_spectral", N=1), ["lichnerowicz"])
    oks.append(ok)
    dt = time.perf_counter() - t0
    ok = all(oks) and dt < 1.0
    criterion("6", ok, f"phi, kappa, R_S and closed forms max deviation {max(devs):.1e}", dt)
    assert ok


# 7 -------------------------------------------------------------------------------------------

def test_criterion_07_forced_mu_zero(criterion):
    t0 = time.perf_counter()
    p = get_problem("m2_thm42")
    res = multistart(p, 100, seed=0)
    mu, fit, det = [], [], []
    for rec in res["solutions"]:
        dg = p.diagnostics(rec["problem"].point(rec["result"].x))
        mu.append(abs(dg["mu"])), fit.append(dg["zeta_fit"]), det.append(dg["det_zeta_defect"])
    dt = time.perf_counter() - t0
    n = len(mu)
    mu_ok = n > 0 and max(mu) < 1e-7
    fit_ok = n > 0 and max(fit) < 1e-7
    det_ok = n > 0 and max(det) < 1e-7
    ok = mu_ok and fit_ok and det_ok
    criterion("7", ok, f"{n}/100 converged; max |mu| {max(mu, default=np.nan):.1e}, sigma_S = zeta K fit "
                       f"{max(fit, default=np.nan):.1e}, det zeta defect {max(det, default=np.nan):.2e}", dt)
    # informational: with C^i that admit the reality condition, the det relation splits into two branches
    q = get_problem("m2_thm42", c=THM42_C_REAL, cj=True)
    branches = {"plus": 0, "minus": 0}
    for rec in multistart(q, 100, seed=0)["solutions"]:
        dg = q.diagnostics(rec["problem"].point(rec["result"].x))
        branches["plus" if dg["det_zeta_defect"] < 1e-7 else "minus"] += 1
    print(f"criterion 7 info: realisable C with CJ, det zeta = -1/det K^2 holds on {branches['plus']} "
          f"solutions and fails on {branches['minus']} (conj(zeta) zeta = -id branch)")
    assert ok


# 8 -------------------------------------------------------------------------------------------

def _family_points(name, starts=200, seed=1):
    p = get_problem(name)
    res = multistart(p, starts, seed=seed)
    labels, reps = cluster_solutions(res["solutions"])
    out = []
    for k in reps:
        rec = res["solutions"][k]
        d = rec["problem"].point(rec["result"].x)
        b, conn = rec["problem"].realise(d)
        out.append((d, rec["signs"], max(axiom_residuals(b, conn).values())))
    return out


def test_criterion_08_example_families(criterion):
    t0 = time.perf_counter()
    found, worst = {}, 0.0
    for d, signs, r in _family_points("m2_zeta3_type1"):
        worst = max(worst, r)
        C, K = d["C"], d["K"]
        anti = C[0] @ C[1] + C[1] @ C[0]
        if signs["eps1"] == 1 and max(abs(np.linalg.det(C[0])), abs(np.linalg.det(C[1]))) < 1e-8 \
                and abs(np.linalg.det(K) + 1) < 1e-8 and np.max(np.abs(anti + I2)) < 1e-8:
            found["zeta3_type1"] = found.get("zeta3_type1", 0) + 1
    for d, signs, r in _family_points("m2_zeta1_type1"):
        worst = max(worst, r)
        C = d["C"]
        c = np.real(d["_slots"]["c"])  # (c0, x, y): C^1 diagonal x, C^2 diagonal y
        anti = C[0] @ C[1] + C[1] @ C[0]
        if abs(abs(c[1] - c[2]) - 1) < 1e-8 and np.max(np.abs(anti)) < 1e-8:
            found["zeta1_type1"] = found.get("zeta1_type1", 0) + 1
    for d, signs, r in _family_points("m2_zeta3_type2"):
        worst = max(worst, r)
        C = d["C"]
        if np.max(np.abs(C[0] @ C[1] + C[1] @ C[0])) < 1e-8:
            found["zeta3_type2"] = found.get("zeta3_type2", 0) + 1
    dt = time.perf_counter() - t0
    ok = set(found) == {"zeta3_type1", "zeta1_type1", "zeta3_type2"} and worst < 1e-8
    criterion("8", ok, f"points per family {found}, max verifier residual {worst:.1e}", dt)
    assert ok


# 9 -------------------------------------------------------------------------------------------

def test_criterion_09a_full_clifford_negative_certificate(criterion):
    t0 = time.perf_counter()
    res = multistart(alt_full_clifford(), 1000, seed=0)
    dt = time.perf_counter() - t0
    best = res["best_residual"]
    ok = len(res["solutions"]) == 0 and best >= 1e-2
    criterion("9a", ok, f"{len(res['solutions'])} solutions in 1000 starts, best residual {best:.3f}", dt)
    assert ok


def _alt_family_points():
    return [(1.3, 0.7, 0.4, 0.2), (0.6, 1.5, -0.8, 1.1), (1.0, 1.0, 0.3, 0.0), (2.0, 0.5, 0.0, -0.7),
            (0.9, -1.2, 1.7, 2.5)]


def test_criterion_09b_alt_family_axioms(criterion):
    t0 = time.perf_counter()
    worst_stated, worst_rho, worst_cov, worst_cov_rho = 0.0, 0.0, 0.0, 0.0
    for s, t, x, y in _alt_family_points():
        target = 0.25 * (6 - s * s / (t * t) - t * t / (s * s))
        p = preset("m2_alt_family", s=s, t=t, x=x, y=y, rho_mode="stated")
        worst_stated = max(worst_stated, max(axiom_residuals(p.bundle, p.connection).values()))
        worst_rho = max(worst_rho, abs(1 + p.extras["rho"] ** 2 - target))
        q = preset("m2_alt_family", s=s, t=t, x=x, y=y, rho_mode="covariant")
        worst_cov = max(worst_cov, max(axiom_residuals(q.bundle, q.connection).values()))
        worst_cov_rho = max(worst_cov_rho, abs(1 + q.extras["rho"] ** 2 - target))
    dt = time.perf_counter() - t0
    ok = worst_stated < 1e-12 and worst_rho < 1e-12
    criterion("9b", ok, f"stated rho: axioms {worst_stated:.2e}, 1+rho^2 {worst_rho:.1e}; "
                        f"real rho: axioms {worst_cov:.1e}, 1+rho^2 off by {worst_cov_rho:.2f}", dt)
    assert ok


def _grid():
    """20 (s, t, x) points: on the circle with x = 0, at the stated x off the circle, and generic."""
    pts = []
    for s in (0.5, 0.9, 1.0, 1.3):
        pts.append((s, np.sqrt(2 - s * s), 0.0))
        pts.append((s, -np.sqrt(2 - s * s), 0.0))
    for s, t in ((1.0, 1.5), (1.3, 0.9), (0.7, 2.0), (2.0, 1.0)):
        P = s * s + t * t
        pts.append((s, t, s * np.sqrt(1 - 2 / P)))
        pts.append((s, t, -s * np.sqrt(1 - 2 / P)))
    for s, t, x in ((1.2, 0.4, 0.3), (0.8, 1.7, -0.5), (1.5, 1.5, 0.0), (0.6, 0.3, 0.9)):
        pts.append((s, t, x))
    return pts


def _hermiticity(s, t, x):
    C, sig, J, gamma = alt_family_data(s, t, x, 0.0)
    b = inner_bundle(m2_calculus(), C, sig, J, eps=1, eps1=1, eps2=1, gamma=gamma)
    d1 = sub_dirac_defects(b, 0, clifford=0)["hermiticity_defect"]
    d2 = sub_dirac_defects(b, 1, anti=True, clifford=0)["hermiticity_defect"]
    g = hilbert_checks(b)["gamma_hermiticity_defect"]
    return d1 < 1e-10 and d2 < 1e-10, g < 1e-10


def test_criterion_09c_hermiticity_predicates(criterion):
    t0 = time.perf_counter()
    stated_bad, gamma_bad, corrected_bad = [], [], []
    for s, t, x in _grid():
        P = s * s + t * t
        sub, gam = _hermiticity(s, t, x)
        stated = abs(x * x - s * s * (1 - 2 / P)) < 1e-12
        if stated and not sub:
            stated_bad.append((round(float(s), 3), round(float(t), 3), round(float(x), 3)))
        if gam != (abs(x) < 1e-14):
            gamma_bad.append((s, t, x))
        # C^1 antihermitian: x imaginary with x^2 = s^2 (1 - 2/P); for real x only x = 0 on the circle
        corrected = abs(x) < 1e-14 and abs(P - 2) < 1e-12
        if corrected != sub:
            corrected_bad.append((s, t, x))
    dt = time.perf_counter() - t0
    ok = not stated_bad and not gamma_bad
    criterion("9c", ok, f"20-point grid: stated sub-operator predicate fails at {len(stated_bad)} points "
                        f"(e.g. {stated_bad[:1]}), gamma predicate mismatches {len(gamma_bad)}", dt)
    print(f"criterion 9c info: corrected predicate (x = 0 and s^2 + t^2 = 2) mismatches {len(corrected_bad)}")
    assert ok


def test_criterion_09d_circle_continuation(criterion):
    t0 = time.perf_counter()
    p = alt_hermitian_circle()
    out = continue_family(p, p.pack({"s": 1.0, "t": 1.0}), "s", steps=200, ds=0.05, close_tol=0.04)
    P = out["path"]
    defect = float(np.max(np.abs(P[:, 0] ** 2 + P[:, 1] ** 2 - 2)))
    dt = time.perf_counter() - t0
    ok = defect < 1e-7 and len(P) > 20
    criterion("9d", ok, f"{out['status']} after {len(P)} points, max |s^2 + t^2 - 2| {defect:.1e}", dt)
    assert ok


# 10 ------------------------------------------------------------------------------------------

def _random_unitary(rng):
    q, r = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_criterion_10_property_suites(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    fails = []

    # calculus and algebra properties on 1000 random inputs (500 per backend)
    worst = 0.0
    for calc, make in ((m2_calculus(), lambda a: a.random(rng)),
                       (torus_calculus(0.37), lambda a: a.random(rng, degree=2))):
        alg = calc.algebra
        for _ in range(500):
            a, b = make(alg), make(alg)
            ga, gb, gab = calc.grad(a), calc.grad(b), calc.grad(a * b)
            worst = max(worst, max((gab[i] - ga[i] * b - a * gb[i]).norm() for i in range(calc.n)))
            worst = max(worst, exterior_d(exterior_d(a, calc)).norm())
            worst = max(worst, abs((a * b).integral() - (b * a).integral()))
            worst = max(worst, ((a * b).star() - b.star() * a.star()).norm(), (a.star().star() - a).norm())
    if worst > 1e-10:
        fails.append(f"algebra {worst:.1e}")

    # gauge invariance of residual verdicts and spectra under 50 random unitaries
    bundles = [preset("m2_canonical", eps1=-1), preset("m2_exJ2"), preset("torus_spectral", d1=0.3, N=1),
               preset("m2_alt_family", rho_mode="stated")]
    base = [(axiom_residuals(p.bundle, p.connection), sort_spectrum(spectrum(p.bundle, p.truncation)[0]))
            for p in bundles]
    g_worst = 0.0
    for _ in range(50):
        u = _random_unitary(rng)
        for p, (r0, ev0) in zip(bundles, base):
            b = gauge_transform(p.bundle, u)
            r = axiom_residuals(b, p.connection)
            for k, v in r0.items():
                # zero stays zero; a nonzero max-entry residual moves by at most a factor 2 for 2x2 data
                if v < 1e-12:
                    g_worst = max(g_worst, r[k])
                elif not 0.5 * v - 1e-12 <= r[k] <= 2 * v + 1e-12:
                    g_worst = max(g_worst, abs(r[k] - v))
            ev = sort_spectrum(spectrum(b, p.truncation)[0])
            g_worst = max(g_worst, float(np.max(np.abs(ev - ev0))))
    if g_worst > 1e-10:
        fails.append(f"gauge {g_worst:.1e}")

    # expanded versus two-step oracles for the spinor Laplacian and the curvature action
    o_worst = 0.0
    for p in (preset("m2_canonical", eps1=1), preset("m2_canonical_rotated", eps1=-1)):
        b = p.bundle.replace(phi=clifford_check(p.bundle, p.metric)["phi"])
        R1, R2 = curvature_action(b, p.connection, p.metric), curvature_action_direct(b, p.metric)
        alg = p.calculus.algebra
        for _ in range(50):
            psi = make_spinor(alg.random(rng), alg.random(rng))
            o_worst = max(o_worst, onorm(spinor_laplacian(psi, b, p.connection, p.metric)
                                         - spinor_laplacian_direct(psi, b, p.connection, p.metric)))
            o_worst = max(o_worst, onorm(psi @ R1 - psi @ R2))
    if o_worst > 1e-10:
        fails.append(f"oracles {o_worst:.1e}")

    dt = time.perf_counter() - t0
    ok = not fails
    criterion("10", ok, f"algebra {worst:.1e}, gauge {g_worst:.1e}, Laplacian/curvature oracles {o_worst:.1e}"
              + (f"; failing: {fails}" if fails else ""), dt)
    assert ok
