"""Quantum metrics, bimodule connections and their curvature data.

Connections are stored through their Christoffel symbols,
nabla s^i = -1/2 Gamma^i_{jk} s^j (x) s^k, with Gamma an object array of
algebra elements indexed [i, j, k], and a constant braiding
sigma(s^i (x) s^j) = sigma^{ij}_{kl} s^k (x) s^l stored as braid[i, j, k, l].
Internally most formulas use H = -Gamma/2, the coefficients of nabla s^i.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algebra import AlgebraElement
from .calculus import Calculus
from .errors import ConfigurationError, DegenerateMetricError

DET_TOL = 1e-10


def obj_array(shape, fill):
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        out[idx] = fill
    return out


def obj_norm(arr) -> float:
    """Max norm over an object array of algebra elements."""
    return max((x.norm() for x in np.asarray(arr, dtype=object).flat), default=0.0)


@dataclass(frozen=True)
class QuantumMetric:
    g: np.ndarray
    lift: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=complex)
        if abs(np.linalg.det(g)) < DET_TOL:
            raise DegenerateMetricError("metric coefficient matrix is singular")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "lift", np.asarray(self.lift, dtype=complex))

    @property
    def ginv(self) -> np.ndarray:
        """(s^i, s^j) = g^{ij}, with g^{ik} g_{kj} = delta."""
        return np.linalg.inv(self.g)

    @property
    def n(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class Connection:
    christoffel: np.ndarray
    braid: np.ndarray
    calculus: Calculus
    alpha: Optional[np.ndarray] = None
    inner: bool = False

    def __post_init__(self):
        n = self.calculus.n
        if self.christoffel.shape != (n, n, n) or self.braid.shape != (n, n, n, n):
            raise ConfigurationError("connection index ranges do not match the calculus")
        if abs(np.linalg.det(self.braid.reshape(n * n, n * n))) < 1e-12:
            raise ConfigurationError("braiding is not invertible")

    @property
    def H(self) -> np.ndarray:
        """Coefficients of nabla s^i = H^i_{jk} s^j (x) s^k."""
        return _scale_obj(self.christoffel, -0.5)

    @classmethod
    def from_nabla(cls, H, braid, calculus, **kw):
        H = _as_elements(H, calculus)
        return cls(_scale_obj(H, -2.0), np.asarray(braid, dtype=complex), calculus, **kw)


def _scale_obj(arr, c):
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(*arr.shape):
        out[idx] = arr[idx] * c
    return out


def _as_elements(arr, calculus):
    arr = np.asarray(arr, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(*arr.shape):
        x = arr[idx]
        out[idx] = x if isinstance(x, AlgebraElement) else calculus.algebra.scalar(x)
    return out


def flip_braid(n: int = 2) -> np.ndarray:
    b = np.zeros((n, n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            b[i, j, j, i] = 1
    return b


def inner_connection(calc: Calculus, braid, alpha=None) -> Connection:
    """nabla w = theta (x) w - sigma(w (x) theta) + alpha(w)."""
    if not calc.is_inner:
        raise ConfigurationError("inner connection needs an inner calculus")
    n = calc.n
    braid = np.asarray(braid, dtype=complex)
    th = calc.theta
    H = obj_array((n, n, n), calc.algebra.zero())
    for i in range(n):
        for j in range(n):
            for k in range(n):
                h = th[j] * (1.0 if i == k else 0.0)
                for m in range(n):
                    if braid[i, m, j, k] != 0:
                        h = h - th[m] * braid[i, m, j, k]
                if alpha is not None:
                    h = h + alpha[i, j, k]
                H[i, j, k] = h
    return Connection(_scale_obj(H, -2.0), braid, calc, alpha=alpha, inner=True)


# checks ------------------------------------------------------------------------

def metric_checks(g: QuantumMetric, calc: Calculus) -> dict:
    n = g.n
    herm = float(np.max(np.abs(g.g - g.g.conj().T)))
    inv = float(np.max(np.abs(g.ginv @ g.g - np.eye(n))))
    sym = abs(complex(np.sum(g.g * calc.wedge)))
    return {"hermiticity": herm, "inverse": inv, "quantum_symmetry": sym}


def torsion(conn: Connection):
    """T(s^i) Vol-coefficients, one algebra element per i."""
    c = conn.calculus
    n = c.n
    H = conn.H
    out = []
    for i in range(n):
        t = -c.dbasis[i]
        for j in range(n):
            for k in range(n):
                if c.wedge[j, k] != 0:
                    t = t + H[i, j, k] * c.wedge[j, k]
        out.append(t)
    return out


def cotorsion(conn: Connection, g: QuantumMetric):
    """Vol (x) s^b components of (d (x) id - id ^ nabla) g."""
    c = conn.calculus
    n = c.n
    H = conn.H
    out = []
    for b in range(n):
        t = c.algebra.zero()
        for i in range(n):
            t = t + c.dbasis[i] * g.g[i, b]
            for j in range(n):
                for a in range(n):
                    if c.wedge[i, a] != 0 and g.g[i, j] != 0:
                        t = t - H[j, a, b] * (g.g[i, j] * c.wedge[i, a])
        out.append(t)
    return out


def metric_compatibility(conn: Connection, g: QuantumMetric) -> np.ndarray:
    """Components [c, d, e] of (nabla (x) id + (sigma (x) id)(id (x) nabla)) g."""
    c = conn.calculus
    n = c.n
    H = conn.H
    sig = conn.braid
    out = obj_array((n, n, n), c.algebra.zero())
    for cc in range(n):
        for d in range(n):
            for e in range(n):
                t = c.algebra.zero()
                for i in range(n):
                    if g.g[i, e] != 0:
                        t = t + H[i, cc, d] * g.g[i, e]
                    for j in range(n):
                        for a in range(n):
                            coef = g.g[i, j] * sig[i, a, cc, d]
                            if coef != 0:
                                t = t + H[j, a, e] * coef
                out[cc, d, e] = t
    return out


def is_star_preserving_flip(conn: Connection, tol: float = 1e-10) -> Optional[bool]:
    """For flip braiding, *-preservation means self-adjoint Christoffel symbols."""
    n = conn.calculus.n
    if not np.allclose(conn.braid, flip_braid(n)):
        return None
    return all((x.star() - x).norm() <= tol for x in conn.christoffel.flat)


def star_preservation_defect(conn: Connection) -> float:
    """Max norm of H^i_{pq} - sum_{jk} (H^i_{jk})^* sigma^{kj}_{pq}, i.e. of nabla o * = sigma o dagger o nabla."""
    n = conn.calculus.n
    H = conn.H
    sig = conn.braid
    worst = 0.0
    for i in range(n):
        for p in range(n):
            for q in range(n):
                t = H[i, p, q]
                for j in range(n):
                    for k in range(n):
                        if sig[k, j, p, q] != 0:
                            t = t - H[i, j, k].star() * sig[k, j, p, q]
                worst = max(worst, t.norm())
    return worst


def is_star_preserving(conn: Connection, tol: float = 1e-10) -> bool:
    return star_preservation_defect(conn) <= tol


def curvature(conn: Connection) -> np.ndarray:
    """rho[i, b] with R(s^i) = rho^i_b Vol (x) s^b."""
    c = conn.calculus
    n = c.n
    H = conn.H
    W = c.wedge
    rho = obj_array((n, n), c.algebra.zero())
    for i in range(n):
        for b in range(n):
            t = c.algebra.zero()
            for j in range(n):
                grads = c.grad(H[i, j, b])
                for a in range(n):
                    if W[a, j] != 0:
                        t = t + grads[a] * W[a, j]
                t = t + H[i, j, b] * c.dbasis[j]
                for k in range(n):
                    for a in range(n):
                        if W[j, a] != 0:
                            t = t - (H[i, j, k] * H[k, a, b]) * W[j, a]
            rho[i, b] = t
    return rho


def ricci(rho: np.ndarray, g: QuantumMetric):
    """Ricci = ((,) (x) id)(id (x) i (x) id)(id (x) R) g and S = (,)(Ricci).

    Component form: Ricci_{db} = g_{ij} rho^j_b lift^{cd} g^{ic}; this
    contraction order reproduces the torus WQLC and both M_2 geometries.
    """
    n = g.n
    gi = g.ginv
    zero = rho[0, 0] * 0
    ric = obj_array((n, n), zero)
    for d in range(n):
        for b in range(n):
            t = zero
            for i in range(n):
                for j in range(n):
                    for c in range(n):
                        coef = g.g[i, j] * g.lift[c, d] * gi[i, c]
                        if coef != 0:
                            t = t + rho[j, b] * coef
            ric[d, b] = t
    S = zero
    for d in range(n):
        for b in range(n):
            if gi[d, b] != 0:
                S = S + ric[d, b] * gi[d, b]
    return ric, S


def scalar_laplacian(a: AlgebraElement, conn: Connection, g: QuantumMetric) -> AlgebraElement:
    """(,) nabla d a."""
    c = conn.calculus
    n = c.n
    H = conn.H
    gi = g.ginv
    da = c.grad(a)
    out = a * 0
    for j in range(n):
        dda = c.grad(da[j])  # dda[i] = d_i d_j a
        for i in range(n):
            if gi[i, j] != 0:
                out = out + dda[i] * gi[i, j]
    for j in range(n):
        for k in range(n):
            for l in range(n):
                if gi[k, l] != 0:
                    out = out + (da[j] * H[j, k, l]) * gi[k, l]
    return out


# standard geometries -------------------------------------------------------------

EPS2 = np.array([[0, 1], [-1, 0]], dtype=complex)  # epsilon_{ij}


def torus_metric(c1=1.0, c2=1.0, c3=0.0) -> QuantumMetric:
    g = np.array([[c1, c3], [c3, c2]], dtype=complex)
    lift = np.array([[0, 0.5], [-0.5, 0]], dtype=complex)
    return QuantumMetric(g, lift)


def torus_torsion_free_connection(calc: Calculus, h) -> Connection:
    """Flip-braided torsion free family, h = [[h11, h12, h13], [h21, h22, h23]]."""
    h = np.asarray(h, dtype=float)
    H = np.zeros((2, 2, 2))
    for i in range(2):
        H[i, 0, 0] = h[i, 0]
        H[i, 1, 1] = h[i, 1]
        H[i, 0, 1] = H[i, 1, 0] = h[i, 2]
    return Connection.from_nabla(H, flip_braid(2), calc)


def torus_wqlc_h(h11, h12, h13, h22, c1=1.0, c2=1.0) -> np.ndarray:
    """Complete (h11, h12, h13, h22) to a WQLC for the diagonal metric c1, c2."""
    h21 = c1 * h13 / c2
    h23 = c1 * h12 / c2
    return np.array([[h11, h12, h13], [h21, h22, h23]], dtype=float)


def torus_wqlc_scalar(h, c=(1.0, 1.0, 0.0)) -> float:
    h = np.asarray(h, dtype=float)
    c1, c2, c3 = c
    (h11, h12, h13), (h21, h22, h23) = h
    if c3 != 0:
        return (h12 * h21 - h13 * h23) / c3
    return h23 * (h23 - h11) / c1 + h13 * (h13 - h22) / c2


def m2_standard_metric() -> QuantumMetric:
    """g = i(s^2 (x) s^1 - s^1 (x) s^2); lift of Vol is (1/2i) delta."""
    g = np.array([[0, -1j], [1j, 0]])
    return QuantumMetric(g, np.eye(2) / 2j)


def m2_standard_braid(mu: float) -> np.ndarray:
    """sigma^{ij}_{kl} = -delta^j_k delta^i_l - 2i mu delta_{ij} delta^i_k eps_{il}."""
    b = np.zeros((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            b[i, j, j, i] -= 1
        for l in range(2):
            b[i, i, i, l] += -2j * mu * EPS2[i, l]
    return b


def m2_alt_metric() -> QuantumMetric:
    g = np.diag([-1.0, 1.0]).astype(complex)
    return QuantumMetric(g, np.eye(2) / 2j)


def m2_alt_braid(rho: complex) -> np.ndarray:
    """Identity on i != j; sigma(s^i (x) s^i) = -s^ib (x) s^ib - 2i rho s^ib (x) s^i."""
    b = np.zeros((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        ib = 1 - i
        b[i, ib, i, ib] = 1
        b[i, i, ib, ib] = -1
        b[i, i, ib, i] = -2j * rho
    return b
