"""Spinor bundle data over a central basis and the geometric-realisation checks.

Conventions
-----------
Spinors are rows psi = (psi_1, ..., psi_Ns) of algebra elements; constant
matrices act from the right, so (psi M)_b = psi_a M^a_b.

* C[i]            Clifford action  s^i |> e^a = C^{ia}_b e^b
* S[i]            object matrix, nabla_S e^a = S^a_{ib} s^i (x) e^b
* sigma_s[i, j]   matrix (sigma_S^i_j)^a_b = sigma_S^{a i}_{j b}
* J               J(a e^a) = a^* J^a_b e^b
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algebra import AlgebraElement
from .calculus import Calculus
from .errors import ConfigurationError, NoPhiError, PreconditionError
from .geometry import Connection, QuantumMetric, obj_array, obj_norm, torsion


# object-matrix helpers -----------------------------------------------------------

def as_obj(M) -> np.ndarray:
    return np.asarray(M, dtype=object)


def omat(a, b) -> np.ndarray:
    """Matrix product where either factor may hold algebra elements."""
    return as_obj(a) @ as_obj(b)


def ostar(M) -> np.ndarray:
    """Entrywise star (no transpose)."""
    M = as_obj(M)
    out = np.empty(M.shape, dtype=object)
    for idx in np.ndindex(*M.shape):
        x = M[idx]
        out[idx] = x.star() if isinstance(x, AlgebraElement) else np.conj(x)
    return out


def onorm(M) -> float:
    """Max norm of a matrix that may mix algebra elements and numbers."""
    M = as_obj(M)
    best = 0.0
    for x in M.flat:
        v = x.norm() if isinstance(x, AlgebraElement) else abs(x)
        best = max(best, float(v))
    return best


def lift_matrix(M, algebra) -> np.ndarray:
    """Promote a complex matrix to an object matrix of scalar algebra elements."""
    M = np.asarray(M)
    out = np.empty(M.shape, dtype=object)
    for idx in np.ndindex(*M.shape):
        x = M[idx]
        out[idx] = x if isinstance(x, AlgebraElement) else algebra.scalar(x)
    return out


def flip_sigma_s(n: int = 2, ns: int = 2) -> np.ndarray:
    out = np.zeros((n, n, ns, ns), dtype=complex)
    for i in range(n):
        out[i, i] = np.eye(ns)
    return out


@dataclass(frozen=True)
class SpinorBundle:
    calculus: Calculus
    C: np.ndarray
    S: np.ndarray
    sigma_s: np.ndarray
    J: np.ndarray
    eps: int = 1
    eps1: int = 1
    eps2: Optional[int] = None
    gamma: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None
    kappa: complex = 1.0
    measure: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    inner: bool = False

    def __post_init__(self):
        C = np.asarray(self.C, dtype=complex)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "S", lift_matrix(self.S, self.calculus.algebra))
        object.__setattr__(self, "sigma_s", np.asarray(self.sigma_s, dtype=complex))
        object.__setattr__(self, "J", np.asarray(self.J, dtype=complex))
        n, ns = self.calculus.n, C.shape[1]
        if C.shape != (n, ns, ns) or self.S.shape != (n, ns, ns):
            raise ConfigurationError("Clifford/connection shapes do not match (n, Ns, Ns)")
        if self.sigma_s.shape != (n, n, ns, ns):
            raise ConfigurationError("sigma_S must have shape (n, n, Ns, Ns)")
        if self.measure is None:
            object.__setattr__(self, "measure", np.eye(ns, dtype=complex))
        mu = np.asarray(self.measure, dtype=complex)
        if np.max(np.abs(mu - mu.conj().T)) > 1e-12 or np.min(np.linalg.eigvalsh(mu)) <= 0:
            raise ConfigurationError("measure must be positive hermitian")
        object.__setattr__(self, "measure", mu)

    @property
    def ns(self) -> int:
        return self.C.shape[1]

    @property
    def n(self) -> int:
        return self.calculus.n

    def replace(self, **changes) -> "SpinorBundle":
        return dataclasses.replace(self, **changes)

    def S_is_scalar(self) -> bool:
        one = self.calculus.algebra.one()
        for x in self.S.flat:
            c = x.integral() if x.backend == "torus" else x.pauli_coefficients()[0]
            if (x - one * c).norm() > 1e-14:
                return False
        return True

    def S_constant(self) -> np.ndarray:
        """S as a complex array; only valid when S_is_scalar()."""
        out = np.zeros(self.S.shape, dtype=complex)
        for idx in np.ndindex(*self.S.shape):
            x = self.S[idx]
            out[idx] = x.integral() if x.backend == "torus" else x.pauli_coefficients()[0]
        return out


def make_spinor(*components) -> np.ndarray:
    return np.array(list(components), dtype=object)


def build_inner_connection(calc: Calculus, sigma_s, A=None) -> np.ndarray:
    """S_i = theta_i id - theta_j sigma_S^j_i + A_i as an object array."""
    if not calc.is_inner:
        raise ConfigurationError("inner spinor connection needs an inner calculus")
    sigma_s = np.asarray(sigma_s, dtype=complex)
    n, ns = calc.n, sigma_s.shape[-1]
    th = calc.theta
    S = obj_array((n, ns, ns), calc.algebra.zero())
    for i in range(n):
        for a in range(ns):
            for b in range(ns):
                x = th[i] * (1.0 if a == b else 0.0)
                for j in range(n):
                    if sigma_s[j, i, a, b] != 0:
                        x = x - th[j] * sigma_s[j, i, a, b]
                if A is not None and A[i, a, b] != 0:
                    x = x + A[i, a, b]
                S[i, a, b] = x
    return S


def inner_bundle(calc: Calculus, C, sigma_s, J, A=None, **kw) -> SpinorBundle:
    S = build_inner_connection(calc, sigma_s, A)
    return SpinorBundle(calc, C, S, sigma_s, J, A=None if A is None else np.asarray(A, dtype=complex),
                        inner=True, **kw)


# local tensorial axioms -------------------------------------------------------------

def axiom_residuals(b: SpinorBundle, conn: Connection) -> dict:
    n, ns = b.n, b.ns
    C, S, sig_s, J = b.C, b.S, b.sigma_s, b.J
    I = np.eye(ns)
    out = {}
    out["JJ"] = float(np.max(np.abs(J.conj() @ J - b.eps * I)))

    Sbar = ostar(S)
    sj = 0.0
    for j in range(n):
        lhs = sum(omat(omat(Sbar[i], J), sig_s[i, j]) for i in range(n))
        sj = max(sj, onorm(lhs - omat(J, S[j])))
    out["SJ"] = sj

    cj = 0.0
    for i in range(n):
        rhs = b.eps1 * J @ sum(sig_s[i, j] @ C[j] for j in range(n))
        cj = max(cj, float(np.max(np.abs(C[i].conj() @ J - rhs))))
    out["CJ"] = cj

    H = conn.H
    sig = conn.braid
    cov = 0.0
    for i in range(n):
        for j in range(n):
            r = omat(C[i], S[j])
            for k in range(n):
                for l in range(n):
                    if sig[i, k, j, l] != 0:
                        r = r - omat(S[k], C[l]) * sig[i, k, j, l]
                r = r - _elem_times(H[i, j, k], C[k])
            cov = max(cov, onorm(r))
    out["covariance"] = cov

    if b.gamma is not None:
        g = b.gamma
        out["gamma_square"] = float(np.max(np.abs(g @ g - I)))
        out["gamma_anticommute"] = max(float(np.max(np.abs(C[i] @ g + g @ C[i]))) for i in range(n))
        eps2 = b.eps2 if b.eps2 is not None else 1
        out["gamma_J"] = float(np.max(np.abs(g.conj() @ J - eps2 * J @ g)))
        out["gamma_S"] = max(onorm(omat(S[i], g) - omat(g, S[i])) for i in range(n))
        if b.inner:
            out["gamma_sigma_s"] = max(
                float(np.max(np.abs(sig_s[i, j] @ g - g @ sig_s[i, j]))) for i in range(n) for j in range(n)
            )
            if b.A is not None:
                out["gamma_A"] = max(float(np.max(np.abs(b.A[i] @ g - g @ b.A[i]))) for i in range(n))

    if b.inner and conn.inner:
        out.update(inner_reductions(b, conn))
    return out


def _elem_times(x: AlgebraElement, M) -> np.ndarray:
    """Algebra element times a complex matrix, as an object matrix."""
    M = np.asarray(M)
    out = np.empty(M.shape, dtype=object)
    for idx in np.ndindex(*M.shape):
        out[idx] = x * M[idx]
    return out


def inner_reductions(b: SpinorBundle, conn: Connection) -> dict:
    """Theta-free forms of covariance and SJ for inner connections."""
    n = b.n
    C, sig_s, J, sig = b.C, b.sigma_s, b.J, conn.braid
    I = np.eye(b.ns)
    out = {}
    r = 0.0
    for i in range(n):
        for k in range(n):
            for j in range(n):
                lhs = C[i] @ sig_s[k, j]
                rhs = sum(sig[i, m, j, l] * sig_s[k, m] @ C[l] for m in range(n) for l in range(n))
                r = max(r, float(np.max(np.abs(lhs - rhs))))
    out["inner_covariance"] = r
    r = 0.0
    for j in range(n):
        for k in range(n):
            rhs = sum(sig_s[k, i].conj() @ J @ sig_s[i, j] for i in range(n))
            r = max(r, float(np.max(np.abs((1.0 if j == k else 0.0) * J - rhs))))
    out["inner_SJ"] = r
    if b.A is not None:
        A = b.A
        r = 0.0
        for i in range(n):
            for j in range(n):
                rhs = sum(sig[i, k, j, l] * A[k] @ C[l] for k in range(n) for l in range(n))
                r = max(r, float(np.max(np.abs(C[i] @ A[j] - rhs))))
        out["inner_A_covariance"] = r
        r = 0.0
        for j in range(n):
            lhs = sum(A[i].conj() @ J @ sig_s[i, j] for i in range(n))
            r = max(r, float(np.max(np.abs(J @ A[j] - lhs))))
        out["inner_A_J"] = r
    return out


# Clifford relations ------------------------------------------------------------------

def clifford_products(b: SpinorBundle, g: QuantumMetric, phi) -> np.ndarray:
    """M[i, j] = C^j C^i phi - kappa g^{ij} id."""
    n, ns = b.n, b.ns
    gi = g.ginv
    M = np.zeros((n, n, ns, ns), dtype=complex)
    for i in range(n):
        for j in range(n):
            M[i, j] = b.C[j] @ b.C[i] @ phi - b.kappa * gi[i, j] * np.eye(ns)
    return M


def _wd_residuals(M, W):
    n = W.shape[0]
    zero_part = 0.0
    vols = []
    for i in range(n):
        for j in range(n):
            if W[i, j] == 0:
                zero_part += float(np.linalg.norm(M[i, j]))
            else:
                vols.append(M[i, j] / W[i, j])
    spread = 0.0
    for a in range(len(vols)):
        for c in range(a + 1, len(vols)):
            spread = max(spread, float(np.linalg.norm(vols[a] - vols[c])))
    V = sum(vols) / len(vols) if vols else None
    return zero_part, spread, V


def derive_phi(b: SpinorBundle, g: QuantumMetric):
    """Least-squares (phi, V) with C^j C^i phi - W^{ij} V = kappa g^{ij} id."""
    n, ns = b.n, b.ns
    W = b.calculus.wedge
    gi = g.ginv
    I = np.eye(ns)
    rows, rhs = [], []
    for i in range(n):
        for j in range(n):
            P = b.C[j] @ b.C[i]
            # vec(P phi) = kron(P, I) vec(phi) for row-major vec
            rows.append(np.hstack([np.kron(P, I), -W[i, j] * np.eye(ns * ns)]))
            rhs.append((b.kappa * gi[i, j] * I).reshape(-1))
    A = np.vstack(rows)
    y = np.concatenate(rhs)
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    phi = sol[: ns * ns].reshape(ns, ns)
    res = float(np.linalg.norm(A @ sol - y))
    if abs(np.linalg.det(phi)) < 1e-10:
        raise NoPhiError("no invertible phi makes the Clifford relations well defined")
    return phi, res


def clifford_check(b: SpinorBundle, g: QuantumMetric) -> dict:
    phi = b.phi
    derived = phi is None
    if derived:
        phi, _ = derive_phi(b, g)
    M = clifford_products(b, g, phi)
    zero_part, spread, V = _wd_residuals(M, b.calculus.wedge)
    return {"phi": phi, "kappa": b.kappa, "phi_derived": derived,
            "residual": zero_part + spread, "relaxed_residual": spread,
            "zero_part": zero_part, "vol_action": V}


# Dirac operator ---------------------------------------------------------------------

def nabla_S(psi, b: SpinorBundle) -> np.ndarray:
    """X[i, a] with nabla_S psi = X_{ia} s^i (x) e^a."""
    n, ns = b.n, b.ns
    X = np.empty((n, ns), dtype=object)
    for i in range(n):
        for a in range(ns):
            x = psi[a].partial(i + 1)
            for c in range(ns):
                x = x + psi[c] * b.S[i, c, a]
            X[i, a] = x
    return X


def dirac_apply(psi, b: SpinorBundle) -> np.ndarray:
    X = nabla_S(psi, b)
    n, ns = b.n, b.ns
    out = np.empty(ns, dtype=object)
    for g_ in range(ns):
        y = psi[0] * 0
        for i in range(n):
            for a in range(ns):
                if b.C[i, a, g_] != 0:
                    y = y + X[i, a] * b.C[i, a, g_]
        out[g_] = y
    return out


def _basis(b: SpinorBundle, truncation):
    alg = b.calculus.algebra
    if alg.backend == "torus" and (truncation is None or truncation < 1):
        raise ConfigurationError("torus operators need truncation N >= 1")
    return alg.basis(truncation)


def operator_matrix(op, b: SpinorBundle, truncation=None):
    """Dense matrix of a spinor map on {basis element (x) e^a}; returns (M, leaked columns)."""
    alg = b.calculus.algebra
    basis = _basis(b, truncation)
    ns = b.ns
    dim = len(basis) * ns
    M = np.zeros((dim, dim), dtype=complex)
    zero = alg.zero()
    leaked = []
    for k, a in enumerate(basis):
        for al in range(ns):
            psi = make_spinor(*[a if c == al else zero for c in range(ns)])
            out = op(psi)
            col = k * ns + al
            for be in range(ns):
                vec, leak = alg.coordinates(out[be], truncation)
                M[be::ns, col] = vec
                if leak:
                    leaked.append(col)
    return M, sorted(set(leaked))


def dirac_matrix(b: SpinorBundle, truncation=None):
    M, leaked = operator_matrix(lambda p: dirac_apply(p, b), b, truncation)
    return M, {"leaked_columns": leaked, "leakage": bool(leaked)}


def spectrum(b: SpinorBundle, truncation=None):
    M, info = dirac_matrix(b, truncation)
    ev = np.linalg.eigvals(1j * M)
    order = np.lexsort((ev.imag, ev.real))
    return ev[order], info


def gram_matrix(b: SpinorBundle, truncation=None) -> np.ndarray:
    basis = _basis(b, truncation)
    Ga = np.array([[(x.star() * y).integral() for y in basis] for x in basis])
    return np.kron(Ga, b.measure)


def constant_action_matrix(M, b: SpinorBundle, truncation=None) -> np.ndarray:
    """Dense matrix of psi -> psi M for constant M."""
    k = len(_basis(b, truncation))
    return np.kron(np.eye(k), np.asarray(M).T)


# Laplacian, curvature, Lichnerowicz ------------------------------------------------------

def spinor_laplacian(psi, b: SpinorBundle, conn: Connection, g: QuantumMetric) -> np.ndarray:
    """Component formula for (,)_{12} nabla_{Omega^1 (x) S} nabla_S."""
    from .geometry import scalar_laplacian

    n, ns = b.n, b.ns
    gi = g.ginv
    H = conn.H
    sig = conn.braid
    S = b.S
    zero = b.calculus.algebra.zero()
    # L^a_b
    L = obj_array((ns, ns), zero)
    for a in range(ns):
        for c in range(ns):
            x = zero
            for i in range(n):
                for j in range(n):
                    if gi[i, j] != 0:
                        x = x + S[j, a, c].partial(i + 1) * gi[i, j]
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        if gi[k, l] != 0:
                            x = x + (S[j, a, c] * H[j, k, l]) * gi[k, l]
            for i in range(n):
                for j in range(n):
                    coef = sum(gi[k, l] * sig[i, j, k, l] for k in range(n) for l in range(n))
                    if coef != 0:
                        for t in range(ns):
                            x = x + (S[i, a, t] * S[j, t, c]) * coef
            L[a, c] = x
    out = np.empty(ns, dtype=object)
    for a in range(ns):
        y = scalar_laplacian(psi[a], conn, g)
        for c in range(ns):
            y = y + psi[c] * L[c, a]
        for i in range(n):
            dpsi = [psi[c].partial(i + 1) for c in range(ns)]
            for j in range(n):
                coef = gi[i, j] + sum(gi[k, l] * sig[i, j, k, l] for k in range(n) for l in range(n))
                if coef != 0:
                    for c in range(ns):
                        y = y + (dpsi[c] * S[j, c, a]) * coef
        out[a] = y
    return out


def spinor_laplacian_direct(psi, b: SpinorBundle, conn: Connection, g: QuantumMetric) -> np.ndarray:
    """Two-step evaluation ((,) (x) id)(nabla (x) id + (sigma (x) id)(id (x) nabla_S)) nabla_S."""
    n, ns = b.n, b.ns
    X = nabla_S(psi, b)
    H = conn.H
    sig = conn.braid
    zero = b.calculus.algebra.zero()
    Y = obj_array((n, n, ns), zero)
    for i in range(n):
        for a in range(ns):
            dX = X[i, a]
            for c in range(n):
                Y[c, i, a] = Y[c, i, a] + dX.partial(c + 1)
            for j in range(n):
                for k in range(n):
                    Y[j, k, a] = Y[j, k, a] + X[i, a] * H[i, j, k]
            for j in range(n):
                for be in range(ns):
                    XS = X[i, a] * b.S[j, a, be]
                    for k in range(n):
                        for l in range(n):
                            if sig[i, j, k, l] != 0:
                                Y[k, l, be] = Y[k, l, be] + XS * sig[i, j, k, l]
    gi = g.ginv
    out = np.empty(ns, dtype=object)
    for be in range(ns):
        y = zero
        for k in range(n):
            for l in range(n):
                if gi[k, l] != 0:
                    y = y + Y[k, l, be] * gi[k, l]
        out[be] = y
    return out


def _phi_of(b: SpinorBundle, g: QuantumMetric):
    return b.phi if b.phi is not None else derive_phi(b, g)[0]


def curvature_action(b: SpinorBundle, conn: Connection, g: QuantumMetric, check_torsion: bool = True):
    """R_S^a_e from the expanded curvature formula; object matrix."""
    if check_torsion and max(t.norm() for t in torsion(conn)) > 1e-10:
        raise PreconditionError("curvature action formula needs a torsion free connection")
    n, ns = b.n, b.ns
    phi = _phi_of(b, g)
    M = clifford_products(b, g, phi)
    S, H = b.S, conn.H
    zero = b.calculus.algebra.zero()
    R = obj_array((ns, ns), zero)
    for i in range(n):
        for j in range(n):
            F = obj_array((ns, ns), zero)
            for a in range(ns):
                for c in range(ns):
                    x = S[j, a, c].partial(i + 1)
                    for k in range(n):
                        x = x + S[k, a, c] * H[k, i, j]
                    for t in range(ns):
                        x = x - S[i, a, t] * S[j, t, c]
                    F[a, c] = x
            R = R + omat(F, M[i, j])
    return R


def curvature_action_direct(b: SpinorBundle, g: QuantumMetric):
    """Vol-coefficient of (d (x) id - id ^ nabla_S) nabla_S, then the Vol action."""
    c = b.calculus
    n, ns = b.n, b.ns
    W = c.wedge
    S = b.S
    zero = c.algebra.zero()
    F = obj_array((ns, ns), zero)
    for a in range(ns):
        for be in range(ns):
            x = zero
            for i in range(n):
                for k in range(n):
                    if W[k, i] != 0:
                        x = x + S[i, a, be].partial(k + 1) * W[k, i]
                x = x + S[i, a, be] * c.dbasis[i]
                for j in range(n):
                    if W[i, j] != 0:
                        for t in range(ns):
                            x = x - (S[i, a, t] * S[j, t, be]) * W[i, j]
            F[a, be] = x
    chk = clifford_check(b.replace(phi=_phi_of(b, g)), g)
    return omat(F, chk["vol_action"])


def lichnerowicz_residual(b: SpinorBundle, conn: Connection, g: QuantumMetric,
                          truncation=None, tol: float = 1e-10) -> dict:
    cov = axiom_residuals(b, conn)["covariance"]
    phi = _phi_of(b, g)
    cl = clifford_check(b.replace(phi=phi), g)
    pre_ok = cov < tol and cl["residual"] < tol
    R = curvature_action(b, conn, g, check_torsion=False)
    alg = b.calculus.algebra
    zero = alg.zero()
    worst = 0.0
    for a in _basis(b, truncation) if alg.backend == "torus" else alg.basis():
        for al in range(b.ns):
            psi = make_spinor(*[a if c == al else zero for c in range(b.ns)])
            D2 = dirac_apply(dirac_apply(psi, b), b)
            lhs = omat(D2, phi)
            box = spinor_laplacian(psi, b, conn, g)
            rhs = box * b.kappa + omat(psi, R)
            worst = max(worst, onorm(lhs - rhs))
    return {"residual": worst, "precondition": pre_ok, "covariance": cov,
            "clifford": cl["residual"], "R_S": R, "phi": phi}


# Hilbert-space level ---------------------------------------------------------------------

def inner_product(x, y, b: SpinorBundle) -> complex:
    mu = b.measure
    return sum(complex((x[a].star() * y[c]).integral()) * mu[a, c]
               for a in range(b.ns) for c in range(b.ns))


def charge_conjugate(psi, b: SpinorBundle) -> np.ndarray:
    """(J psi)_b = psi_a^* J^a_b."""
    ns = b.ns
    out = np.empty(ns, dtype=object)
    for c in range(ns):
        y = psi[0] * 0
        for a in range(ns):
            y = y + psi[a].star() * b.J[a, c]
        out[c] = y
    return out


def hilbert_checks(b: SpinorBundle, truncation=None, samples: int = 4, seed: int = 0) -> dict:
    D, info = dirac_matrix(b, truncation)
    G = gram_matrix(b, truncation)
    anti = float(np.max(np.abs(D.conj().T @ G + G @ D)))
    herm = float(np.max(np.abs(D.conj().T @ G - G @ D)))
    mu = b.measure
    out = {"antihermiticity_defect": anti, "hermiticity_defect": herm, "leakage": info["leakage"]}
    if b.S_is_scalar():
        K = sum(b.S_constant()[i] @ b.C[i] for i in range(b.n))
        alg_def = max(float(np.max(np.abs(b.C[i].conj() @ mu - mu @ b.C[i].T))) for i in range(b.n))
        alg_def = max(alg_def, float(np.max(np.abs(K.conj() @ mu + mu @ K.T))))
        out["antihermiticity_algebraic"] = alg_def
    out["J_isometry_algebraic"] = float(np.max(np.abs(b.eps * mu @ b.J.T - b.J @ mu)))
    rng = np.random.default_rng(seed)
    alg = b.calculus.algebra
    worst = 0.0
    for _ in range(samples):
        if alg.backend == "torus":
            x = make_spinor(*[alg.random(rng, degree=1) for _ in range(b.ns)])
            y = make_spinor(*[alg.random(rng, degree=1) for _ in range(b.ns)])
        else:
            x = make_spinor(*[alg.random(rng) for _ in range(b.ns)])
            y = make_spinor(*[alg.random(rng) for _ in range(b.ns)])
        lhs = inner_product(charge_conjugate(x, b), charge_conjugate(y, b), b)
        worst = max(worst, abs(lhs - inner_product(y, x, b)))
    out["J_isometry_sampled"] = worst
    if b.gamma is not None:
        Gm = constant_action_matrix(b.gamma, b, truncation)
        out["gamma_hermiticity_defect"] = float(np.max(np.abs(Gm.conj().T @ G - G @ Gm)))
    return out


def sub_dirac_defects(b: SpinorBundle, i: int, truncation=None, anti: bool = False,
                      clifford: Optional[int] = None) -> dict:
    """Defects of psi -> (X_i psi_a) C^{ka}_b with X_i psi = d_i psi, or {theta_i, psi} if `anti`.

    k defaults to i.  The anticommutator form needs an inner calculus.
    """
    k = i if clifford is None else clifford
    if anti and not b.calculus.is_inner:
        raise ConfigurationError("anticommutator sub-operator needs an inner calculus")
    th = b.calculus.theta[i] if anti else None

    def op(psi):
        out = np.empty(b.ns, dtype=object)
        for c in range(b.ns):
            y = psi[0] * 0
            for a in range(b.ns):
                if b.C[k, a, c] != 0:
                    x = th * psi[a] + psi[a] * th if anti else psi[a].partial(i + 1)
                    y = y + x * b.C[k, a, c]
            out[c] = y
        return out
    D, _ = operator_matrix(op, b, truncation)
    G = gram_matrix(b, truncation)
    return {"hermiticity_defect": float(np.max(np.abs(D.conj().T @ G - G @ D))),
            "antihermiticity_defect": float(np.max(np.abs(D.conj().T @ G + G @ D)))}


# gauge and J classification -----------------------------------------------------------------

def gauge_transform(b: SpinorBundle, u) -> SpinorBundle:
    u = np.asarray(u, dtype=complex)
    if abs(np.linalg.det(u)) < 1e-12:
        raise ConfigurationError("gauge transformation must be invertible")
    ui = np.linalg.inv(u)
    conj = lambda M: u @ M @ ui
    n = b.n
    C = np.array([conj(b.C[i]) for i in range(n)])
    S = np.array([omat(omat(u, b.S[i]), ui) for i in range(n)], dtype=object)
    sig = np.array([[conj(b.sigma_s[i, j]) for j in range(n)] for i in range(n)])
    J = u.conj() @ b.J @ ui
    gamma = None if b.gamma is None else conj(b.gamma)
    phi = None if b.phi is None else conj(b.phi)
    A = None if b.A is None else np.array([conj(b.A[i]) for i in range(n)])
    mu = u.conj() @ b.measure @ u.T
    mu = 0.5 * (mu + mu.conj().T)
    return b.replace(C=C, S=S, sigma_s=sig, J=J, gamma=gamma, phi=phi, A=A, measure=mu)


def classify_J(eps: int, jtype: int, z: complex = 0.0, r: float = 1.0) -> np.ndarray:
    """Representative J with conj(J) J = eps id, type (1) or (2), up to a phase."""
    if eps not in (1, -1):
        raise ConfigurationError("eps must be +1 or -1")
    z = complex(z)
    if jtype == 1:
        if r <= 0:
            raise ConfigurationError("type (1) needs r > 0")
        return np.array([[z, r], [(eps - abs(z) ** 2) / r, -z.conjugate()]])
    if jtype == 2:
        if z == 0:
            if eps == -1:
                raise ConfigurationError("type (2) with eps = -1 needs z != 0")
            # limit along the positive real ray
            return np.array([[1, 0], [0, -1]], dtype=complex)
        return np.array([[1, (eps - 1) * z / abs(z) ** 2], [z, -z / z.conjugate()]])
    raise ConfigurationError("J type must be 1 or 2")
