"""Registry of solver layouts for the torus and M_2 searches.

Each factory returns a `SolveProblem`.  Builders only use operations that
also run on `Dual` arrays, so the Jacobian sanity check covers them.
"""
from __future__ import annotations

from typing import Callable, Dict

import numpy as np

from .algebra import SIGMA
from .calculus import m2_calculus, torus_calculus
from .errors import ConfigurationError
from .geometry import (Connection, flip_braid, inner_connection, m2_alt_braid, m2_alt_metric,
                       m2_standard_braid, m2_standard_metric)
from .relations import (ANTI_THETA, AD_THETA, clifford_block, concat, covariance_const_block,
                        covariance_inner_block, cj_block, flat, hermiticity_block, jj_block,
                        mat2, sj_flip_block, sj_inner_block, stack)
from .solver import Slot, SolveProblem, gauge_invariants
from .spinor import SpinorBundle, flip_sigma_s, inner_bundle

SQ2 = np.sqrt(2.0)
W_M2 = np.diag([1j, 1j])
PAULI_C = np.array(SIGMA[:3], dtype=complex)


def _affine_braid(fn, p):
    """Batched braid for a family affine in its parameter: fn(0) + p (fn(1) - fn(0))."""
    b0 = fn(0.0)
    db = fn(1.0) - b0
    return p.reshape(-1, 1, 1, 1, 1) * db + b0


def _type2_C(c0, c1, c2, c3, c4):
    C1 = mat2(c1, c2, (c0 - c1 * c1) / c2, -c1)
    C2 = mat2(c3, c4, (c0 - c3 * c3) / c4, -c3)
    return stack([C1, C2], 1)


def _comm(C):
    return C[:, 0] @ C[:, 1] - C[:, 1] @ C[:, 0]


def _zeta_K(zeta, K):
    """sigma_S^i_j = zeta^i_j K for a constant zeta."""
    return K[:, None, None] * np.asarray(zeta, dtype=complex)[None, :, :, None, None]


def _m2_realise(braid_fn, rho_key):
    def realise(d):
        calc = m2_calculus()
        conn = inner_connection(calc, braid_fn(complex(np.asarray(d[rho_key]))))
        b = inner_bundle(calc, d["C"], d["sig"], d["J"], eps=int(round(d["eps"].real)),
                         eps1=int(round(d["eps1"].real)))
        return b, conn
    return realise


def _m2_invariants(d):
    return gauge_invariants(d["C"], d["sig"], d["J"])


# torus ------------------------------------------------------------------------------

def _torus_C():
    return np.array([PAULI_C[0], PAULI_C[1]])


def _torus_realise(d):
    calc = torus_calculus(0.0)
    S = d["S"]
    b = SpinorBundle(calc, _torus_C(), S, flip_sigma_s(), d["J"], eps=1, eps1=1)
    conn = Connection.from_nabla(d["H"].real, flip_braid(2), calc)
    return b, conn


def _torus_invariants(d):
    S = d["S"]
    inv = list(np.asarray(d["H"]).ravel()) + [np.trace(S[0]), np.trace(S[1]), np.linalg.det(S[0]),
                                              np.linalg.det(S[1]), np.trace(S[0] @ S[1])]
    return np.array(inv, dtype=complex)


def _torus_problem(name, h_slots, H_of, description):
    slots = list(h_slots) + [Slot("S", (2, 2, 2), "complex")]

    def builder(v):
        S = v["S"]
        B = S.shape[0]
        H = H_of(v)
        C = np.broadcast_to(_torus_C(), (B, 2, 2, 2))
        J = np.broadcast_to(PAULI_C[0], (B, 2, 2))
        br = np.broadcast_to(flip_braid(2), (B, 2, 2, 2, 2))
        return {"C": C, "S": S, "H": H, "J": J, "braid": br}

    cons = [("covariance", lambda d: covariance_const_block(d["C"], d["S"], d["H"], d["braid"])),
            ("SJ", lambda d: sj_flip_block(d["S"], d["J"]))]

    def diag(d):
        return {"h_norm": float(np.linalg.norm(d["H"]))}

    return SolveProblem(name, slots, builder, cons, description=description, invariants=_torus_invariants,
                        diagnostics=diag, realise=_torus_realise)


def torus_wqlc() -> SolveProblem:
    """Euclidean WQLC family (h11, h12, h13, h22) with C = sigma^i, J = sigma^1, flip sigma_S."""
    def H_of(v):
        h = v["h"]
        h11, h12, h13, h22 = h[:, 0], h[:, 1], h[:, 2], h[:, 3]
        h21, h23 = h13, h12  # WQLC completion for c1 = c2 = 1, c3 = 0
        row1 = stack([stack([h11, h13], -1), stack([h13, h12], -1)], -2)
        row2 = stack([stack([h21, h23], -1), stack([h23, h22], -1)], -2)
        return stack([row1, row2], 1)
    return _torus_problem("torus_wqlc", [Slot("h", (4,), "real")], H_of,
                          "WQLC connection coefficients forced to zero")


def torus_torsion_free() -> SolveProblem:
    """Any flip-braided torsion free connection: 6 real h with H^i_{jk} symmetric in jk."""
    def H_of(v):
        h = v["h"]
        rows = []
        for i in range(2):
            a, b, c = h[:, 3 * i], h[:, 3 * i + 1], h[:, 3 * i + 2]
            rows.append(stack([stack([a, c], -1), stack([c, b], -1)], -2))
        return stack(rows, 1)
    return _torus_problem("torus_torsion_free", [Slot("h", (6,), "real")], H_of,
                          "torsion free extension forced to zero")


def torus_general_connection() -> SolveProblem:
    """All 8 real Christoffel entries free."""
    return _torus_problem("torus_general_connection", [Slot("H", (2, 2, 2), "real")], lambda v: v["H"],
                          "general bimodule connection: 2-parameter family")


def torus_j_phase() -> SolveProblem:
    """J = q sigma^1 with only conj(J) J = id imposed: the unit circle in q."""
    def builder(v):
        q = v["q"]
        z = q * 0.0
        J = mat2(z, q, q, z)
        return {"J": J, "eps": q.real * 0 + 1.0}
    return SolveProblem("torus_j_phase", [Slot("q", (), "complex")], builder,
                        [("JJ", lambda d: jj_block(d["J"], d["eps"]))],
                        description="phase gauge direction of J")


# M_2 standard geometry ---------------------------------------------------------------

THM42_C = (0.7 + 0.2j, 0.4 - 0.3j, 1.1 + 0.5j, -0.6 + 0.1j, 0.9 - 0.4j)


# type (2) J family data at x = 0.2, y = 0.7 (upper sign): a type II pair admitting the CJ reality condition
THM42_C_REAL = (0.5, 0.2, 0.7, 1.2, 0.7)


def m2_thm42(c=THM42_C, cj: bool = False) -> SolveProblem:
    """mu real, sigma_S and J free for pinned type II C^i; JJ, covariance, SJ and optionally CJ.

    Generic complex C^i cannot satisfy CJ, so the default drops it; with cj=True
    pin C^i to data that admits the reality condition (e.g. THM42_C_REAL).
    """
    c = tuple(complex(x) for x in c)
    C0 = _type2_C(*[np.array([x]) for x in c])[0]
    slots = [Slot("mu", (), "real"), Slot("sig", (2, 2, 2, 2), "complex"), Slot("J", (2, 2), "complex"),
             Slot("eps", (), "real"), Slot("eps1", (), "real")]

    def builder(v):
        B = v["sig"].shape[0]
        br = _affine_braid(m2_standard_braid, v["mu"])
        return {"C": np.broadcast_to(C0, (B, 2, 2, 2)), "sig": v["sig"], "J": v["J"], "braid": br,
                "eps": v["eps"], "eps1": v["eps1"], "mu": v["mu"]}

    cons = [("JJ", lambda d: jj_block(d["J"], d["eps"])),
            ("covariance", lambda d: covariance_inner_block(d["C"], d["sig"], d["braid"])),
            ("SJ", lambda d: sj_inner_block(d["sig"], d["J"]))]
    if cj:
        cons.append(("CJ", lambda d: cj_block(d["C"], d["sig"], d["J"], d["eps1"])))

    def diag(d):
        K = _comm(d["C"][None])[0]
        Ki = np.linalg.inv(K)
        zeta = np.array([[np.trace(Ki @ d["sig"][i, j]) / 2 for j in range(2)] for i in range(2)])
        fit = max(float(np.max(np.abs(d["sig"][i, j] - zeta[i, j] * K))) for i in range(2) for j in range(2))
        return {"mu": float(np.real(d["mu"])), "zeta_fit": fit,
                "det_zeta_defect": float(abs(np.linalg.det(zeta) + 1 / np.linalg.det(K) ** 2)),
                "zeta_reality": float(np.max(np.abs(zeta.conj() @ zeta - np.eye(2))))}

    signs = {"eps": (1.0, -1.0), "eps1": (1.0, -1.0) if cj else (1.0,)}
    return SolveProblem("m2_thm42", slots, builder, cons, description="mu forced to zero",
                        invariants=_m2_invariants, diagnostics=diag, signs=signs,
                        realise=_m2_realise(m2_standard_braid, "mu"))


def _m2_example(name, zeta, jtype, full_clifford=False, description=""):
    """zeta pinned, sigma_S = zeta [C^1, C^2], real C^i and real J with eps = 1, mu = 0."""
    zeta = np.asarray(zeta, dtype=complex)
    if jtype == 1:
        slots = [Slot("c", (3,), "real"), Slot("z", (), "real"), Slot("r", (), "real")]
    else:
        slots = [Slot("c", (5,), "real"), Slot("z", (), "real")]
    if full_clifford:
        slots.append(Slot("phi", (2, 2), "complex"))
    slots.append(Slot("eps1", (), "real"))
    br0 = m2_standard_braid(0.0)
    ginv = m2_standard_metric().ginv

    def builder(v):
        c = v["c"]
        z = v["z"]
        one = z * 0.0 + 1.0
        if jtype == 1:
            C = _type2_C(c[:, 0], c[:, 1], one, c[:, 2], one)
            J = mat2(z, v["r"], (one - z * z) / v["r"], -z)
        else:
            C = _type2_C(c[:, 0], c[:, 1], c[:, 2], c[:, 3], c[:, 4])
            J = mat2(one, z * 0.0, z, -one)
        K = _comm(C)
        B = z.shape[0]
        d = {"C": C, "K": K, "sig": _zeta_K(zeta, K), "J": J, "eps": one, "eps1": v["eps1"],
             "braid": np.broadcast_to(br0, (B, 2, 2, 2, 2)), "mu": z * 0.0}
        if full_clifford:
            d["phi"] = v["phi"]
        return d

    cons = [("JJ", lambda d: jj_block(d["J"], d["eps"])),
            ("covariance", lambda d: covariance_inner_block(d["C"], d["sig"], d["braid"])),
            ("SJ", lambda d: sj_inner_block(d["sig"], d["J"])),
            ("CJ", lambda d: cj_block(d["C"], d["sig"], d["J"], d["eps1"]))]
    if full_clifford:
        cons.append(("clifford", lambda d: clifford_block(d["C"], d["phi"], d["eps"], ginv, W_M2)))

    def diag(d):
        C = d["C"]
        K = d["K"]
        anti = C[0] @ C[1] + C[1] @ C[0]
        return {"det_C1": complex(np.linalg.det(C[0])), "det_C2": complex(np.linalg.det(C[1])),
                "det_K": complex(np.linalg.det(K)), "anticommutator": anti[0, 0],
                "anticommutator_offscalar": float(np.max(np.abs(anti - anti[0, 0] * np.eye(2))))}

    return SolveProblem(name, slots, builder, cons, description=description, invariants=_m2_invariants,
                        diagnostics=diag, signs={"eps1": (1.0, -1.0)},
                        realise=_m2_realise(m2_standard_braid, "mu"))


def m2_zeta3_type1() -> SolveProblem:
    return _m2_example("m2_zeta3_type1", PAULI_C[2], 1, description="zeta = sigma^3, real type (1) J, c2 = c4 = 1")


def m2_zeta1_type1(full_clifford: bool = True) -> SolveProblem:
    return _m2_example("m2_zeta1_type1", PAULI_C[0], 1, full_clifford,
                       description="zeta = sigma^1, real type (1) J, c2 = c4 = 1")


def m2_zeta3_type2() -> SolveProblem:
    return _m2_example("m2_zeta3_type2", PAULI_C[2], 2, description="zeta = sigma^3, real type (2) J")


# alternate geometry ------------------------------------------------------------------

def alt_full_clifford(rho_kind: str = "imaginary") -> SolveProblem:
    """cliffab C^i (phi = id, kappa = 1 hold identically), sigma_S and J free.

    Constraints: JJ, CJ, covariance and the full Clifford relations; rho is
    imaginary (rho = i r) or, with rho_kind="complex", unrestricted.
    """
    if rho_kind not in ("imaginary", "complex"):
        raise ConfigurationError("rho_kind must be 'imaginary' or 'complex'")
    slots = [Slot("a", (), "complex"), Slot("b", (), "complex"),
             Slot("r", (), "real" if rho_kind == "imaginary" else "complex"),
             Slot("sig", (2, 2, 2, 2), "complex"), Slot("J", (2, 2), "complex"),
             Slot("eps", (), "real"), Slot("eps1", (), "real"), Slot("s1", (), "real"), Slot("s2", (), "real")]
    ginv = m2_alt_metric().ginv

    def builder(v):
        a, b = v["a"], v["b"]
        w = SQ2 - a
        C1 = mat2(w, b, a / b * w, a) * (1j * v["s1"]).reshape(-1, 1, 1)
        C2 = mat2(a, -b, -(a / b) * w, w) * v["s2"].reshape(-1, 1, 1)
        rho = v["r"] * 1j if rho_kind == "imaginary" else v["r"]
        B = a.shape[0]
        return {"C": stack([C1, C2], 1), "sig": v["sig"], "J": v["J"], "eps": v["eps"], "eps1": v["eps1"],
                "braid": _affine_braid(m2_alt_braid, rho), "rho": rho,
                "phi": np.broadcast_to(np.eye(2, dtype=complex), (B, 2, 2)), "kappa": a.real * 0 + 1.0}

    cons = [("JJ", lambda d: jj_block(d["J"], d["eps"])),
            ("CJ", lambda d: cj_block(d["C"], d["sig"], d["J"], d["eps1"])),
            ("covariance", lambda d: covariance_inner_block(d["C"], d["sig"], d["braid"])),
            ("clifford", lambda d: clifford_block(d["C"], d["phi"], d["kappa"], ginv, W_M2))]
    signs = {"eps": (1.0, -1.0), "eps1": (1.0, -1.0), "s1": (1.0, -1.0), "s2": (1.0, -1.0)}
    return SolveProblem("alt_full_clifford" + ("" if rho_kind == "imaginary" else "_complex_rho"),
                        slots, builder, cons, description="negative certificate for the full relations",
                        invariants=_m2_invariants, signs=signs, realise=_m2_realise(m2_alt_braid, "rho"))


def alt_C1(s, t, x):
    """C^1 of the natural alternate-metric family at y = 0 (batched, Dual-safe)."""
    P = s * s + t * t
    Q = P * x * x + 2.0 * s * s
    return mat2(x, s, -Q / (s * P), -x)


def alt_hermitian_circle() -> SolveProblem:
    """(s, t) with x = y = 0 pinned; hermiticity of both sub-operators."""
    slots = [Slot("s", (), "real"), Slot("t", (), "real")]

    def builder(v):
        s, t = v["s"], v["t"]
        C1 = alt_C1(s, t, s * 0.0)
        return {"C1": C1, "s": s, "t": t}

    cons = [("hermiticity", lambda d: hermiticity_block((AD_THETA[0], ANTI_THETA[1]), (d["C1"], d["C1"])))]

    def diag(d):
        return {"circle_defect": float(abs(d["s"] ** 2 + d["t"] ** 2 - 2))}

    return SolveProblem("alt_hermitian_circle", slots, builder, cons,
                        description="hermiticity locus of the sub-operators at x = 0", diagnostics=diag)


PROBLEMS: Dict[str, Callable[..., SolveProblem]] = {
    "torus_wqlc": torus_wqlc,
    "torus_torsion_free": torus_torsion_free,
    "torus_general_connection": torus_general_connection,
    "torus_j_phase": torus_j_phase,
    "m2_thm42": m2_thm42,
    "m2_zeta3_type1": m2_zeta3_type1,
    "m2_zeta1_type1": m2_zeta1_type1,
    "m2_zeta3_type2": m2_zeta3_type2,
    "alt_full_clifford": alt_full_clifford,
    "alt_hermitian_circle": alt_hermitian_circle,
}


def get_problem(name: str, **params) -> SolveProblem:
    if name not in PROBLEMS:
        raise ConfigurationError(f"unknown solver problem {name!r}; known: {sorted(PROBLEMS)}")
    try:
        return PROBLEMS[name](**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name}: {exc}") from exc
