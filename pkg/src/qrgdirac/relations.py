"""Batched matrix residual blocks for the local tensorial conditions.

Every block takes arrays with a leading batch axis (one row per candidate
point) and returns a complex array of shape (B, k).  Only arithmetic,
matmul, indexing, conj and stacking are used, so the same code runs on
plain complex arrays and on `Dual` arrays (forward-mode tangents).

Shapes, with n = 2 directions and Ns = 2 spinor components:

    C        (B, n, Ns, Ns)
    sigma_s  (B, n, n, Ns, Ns)      sigma_s[:, i, j] = sigma_S^i_j
    S        (B, n, Ns, Ns)         constant spinor connection (torus)
    H        (B, n, n, n)           nabla s^i = H^i_{jk} s^j (x) s^k
    braid    (B, n, n, n, n)        braid[:, i, j, k, l] = sigma^{ij}_{kl}
    J, gamma, phi  (B, Ns, Ns)
"""
from __future__ import annotations

import numpy as np


class Dual:
    """Complex array with a tangent part: value + eps * tangent, eps^2 = 0."""

    __array_priority__ = 1000
    __array_ufunc__ = None

    def __init__(self, v, d):
        self.v = np.asarray(v, dtype=complex)
        self.d = np.asarray(d, dtype=complex)

    @property
    def shape(self):
        return self.v.shape

    @property
    def ndim(self):
        return self.v.ndim

    @staticmethod
    def _split(x):
        if isinstance(x, Dual):
            return x.v, x.d
        return x, 0.0

    def __add__(self, o):
        v, d = self._split(o)
        return Dual(self.v + v, self.d + d)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.v, -self.d)

    def __sub__(self, o):
        v, d = self._split(o)
        return Dual(self.v - v, self.d - d)

    def __rsub__(self, o):
        v, d = self._split(o)
        return Dual(v - self.v, d - self.d)

    def __mul__(self, o):
        v, d = self._split(o)
        return Dual(self.v * v, self.d * v + self.v * d)

    __rmul__ = __mul__

    def __truediv__(self, o):
        v, d = self._split(o)
        return Dual(self.v / v, (self.d * v - self.v * d) / (v * v))

    def __rtruediv__(self, o):
        v, d = self._split(o)
        return Dual(v / self.v, (d * self.v - v * self.d) / (self.v * self.v))

    def _full_d(self):
        return np.broadcast_to(self.d, self.v.shape)

    def __matmul__(self, o):
        if not isinstance(o, Dual):
            return Dual(self.v @ o, self._full_d() @ o)
        return Dual(self.v @ o.v, self._full_d() @ o.v + self.v @ o._full_d())

    def __rmatmul__(self, o):
        return Dual(o @ self.v, o @ self._full_d())

    def __getitem__(self, key):
        return Dual(self.v[key], np.broadcast_to(self.d, self.v.shape)[key])

    def conj(self):
        return Dual(self.v.conj(), np.conj(self.d))

    def reshape(self, *shape):
        return Dual(self.v.reshape(*shape), np.broadcast_to(self.d, self.v.shape).reshape(*shape))

    def swapaxes(self, a, b):
        return Dual(self.v.swapaxes(a, b), np.broadcast_to(self.d, self.v.shape).swapaxes(a, b))

    @property
    def real(self):
        return Dual(self.v.real, np.real(self.d))

    @property
    def imag(self):
        return Dual(self.v.imag, np.imag(self.d))


def stack(items, axis=0):
    if any(isinstance(x, Dual) for x in items):
        vs = [x.v if isinstance(x, Dual) else np.asarray(x, dtype=complex) for x in items]
        shape = np.broadcast_shapes(*[v.shape for v in vs])
        vs = [np.broadcast_to(v, shape) for v in vs]
        ds = [np.broadcast_to(x.d, shape) if isinstance(x, Dual) else np.zeros(shape, complex) for x in items]
        return Dual(np.stack(vs, axis=axis), np.stack(ds, axis=axis))
    shape = np.broadcast_shapes(*[np.shape(x) for x in items])
    return np.stack([np.broadcast_to(np.asarray(x, dtype=complex), shape) for x in items], axis=axis)


def concat(items, axis=-1):
    if any(isinstance(x, Dual) for x in items):
        vs = [x.v if isinstance(x, Dual) else np.asarray(x) for x in items]
        ds = [np.broadcast_to(x.d, x.v.shape) if isinstance(x, Dual) else np.zeros(np.shape(x), complex)
              for x in items]
        return Dual(np.concatenate(vs, axis=axis), np.concatenate(ds, axis=axis))
    return np.concatenate(items, axis=axis)


def einsum2(spec, A, B):
    """np.einsum for two operands, bilinear in Dual tangents."""
    if not isinstance(A, Dual) and not isinstance(B, Dual):
        return np.einsum(spec, A, B)
    Av, Ad = (A.v, A._full_d()) if isinstance(A, Dual) else (A, None)
    Bv, Bd = (B.v, B._full_d()) if isinstance(B, Dual) else (B, None)
    d = 0
    if Ad is not None:
        d = d + np.einsum(spec, Ad, Bv)
    if Bd is not None:
        d = d + np.einsum(spec, Av, Bd)
    return Dual(np.einsum(spec, Av, Bv), d)


def mat2(a, b, c, d):
    """(B,) entries -> (B, 2, 2)."""
    return stack([stack([a, b], -1), stack([c, d], -1)], -2)


def col(x):
    """(B,) -> (B, 1, 1) so scalars broadcast against matrices."""
    return x[..., None, None]


def flat(x):
    return x.reshape(x.shape[0], -1)


def eye_like(M):
    return np.broadcast_to(np.eye(M.shape[-1], dtype=complex), M.shape)


def commutator(A, B):
    return A @ B - B @ A


# blocks ------------------------------------------------------------------------------

def jj_block(J, eps):
    """conj(J) J - eps id."""
    return flat(J.conj() @ J - col(eps) * eye_like(J))


def sj_inner_block(sig, J):
    """delta_{jk} J - sum_i conj(sigma_S^k_i) J sigma_S^i_j."""
    n = sig.shape[1]
    out = []
    for j in range(n):
        for k in range(n):
            r = J * (1.0 if j == k else 0.0)
            for i in range(n):
                r = r - sig[:, k, i].conj() @ J @ sig[:, i, j]
            out.append(flat(r))
    return concat(out)


def sj_flip_block(S, J):
    """conj(S_i) J - J S_i (sigma_S the flip)."""
    return concat([flat(S[:, i].conj() @ J - J @ S[:, i]) for i in range(S.shape[1])])


def cj_block(C, sig, J, eps1):
    """conj(C^i) J - eps' J sum_j sigma_S^i_j C^j."""
    n = C.shape[1]
    out = []
    for i in range(n):
        acc = sig[:, i, 0] @ C[:, 0]
        for j in range(1, n):
            acc = acc + sig[:, i, j] @ C[:, j]
        out.append(flat(C[:, i].conj() @ J - col(eps1) * (J @ acc)))
    return concat(out)


def covariance_inner_block(C, sig, braid):
    """C^i sigma_S^k_j - sigma^{im}_{jl} sigma_S^k_m C^l (theta-free form)."""
    CS = C[:, :, None, None] @ sig[:, None]        # (B, i, k, j, Ns, Ns)
    SC = sig[:, :, :, None] @ C[:, None, None, :]   # (B, k, m, l, Ns, Ns)
    r = CS - einsum2("bimjl,bkmlxy->bikjxy", braid, SC)
    return r.reshape(r.shape[0], -1)


def covariance_const_block(C, S, H, braid):
    """C^i S_j - sigma^{ik}_{jl} S_k C^l - H^i_{jk} C^k for constant S and H."""
    CS = C[:, :, None] @ S[:, None]                 # (B, i, j, Ns, Ns)
    SC = S[:, :, None] @ C[:, None]                 # (B, k, l, Ns, Ns)
    r = CS - einsum2("bikjl,bklxy->bijxy", braid, SC) - einsum2("bijk,bkxy->bijxy", H, C)
    return r.reshape(r.shape[0], -1)


def clifford_block(C, phi, kappa, ginv, W, half=False):
    """Well-definedness of (s^i ^ s^j) |> e: zero part and volume spread.

    M^{ij} = C^j C^i phi - kappa g^{ij}; entries with W^{ij} = 0 must vanish
    and M^{ij}/W^{ij} must not depend on (i, j).  `half` keeps the spread only.
    """
    n = C.shape[1]
    I = eye_like(phi)
    zero, vols = [], []
    for i in range(n):
        for j in range(n):
            M = C[:, j] @ C[:, i] @ phi - col(kappa) * ginv[i, j] * I
            if W[i, j] == 0:
                zero.append(flat(M))
            else:
                vols.append(M * (1.0 / W[i, j]))
    out = [] if half else zero
    for v in vols[1:]:
        out.append(flat(v - vols[0]))
    return concat(out)


def gamma_block(C, sig, J, gamma, eps2):
    """gamma^2 = id, {C^i, gamma} = 0, conj(gamma) J = eps'' J gamma, [sigma_S, gamma] = 0."""
    n = C.shape[1]
    out = [flat(gamma @ gamma - eye_like(gamma))]
    for i in range(n):
        out.append(flat(C[:, i] @ gamma + gamma @ C[:, i]))
    out.append(flat(gamma.conj() @ J - col(eps2) * (J @ gamma)))
    for i in range(n):
        for j in range(n):
            out.append(flat(commutator(sig[:, i, j], gamma)))
    return concat(out)


def symmetric_j_block(J, eps):
    """eps J^T - J: the J-isometry condition for the identity measure."""
    return flat(col(eps) * J.swapaxes(-1, -2) - J)


def real_part_block(x):
    """Vanishing real part of a (B,) complex quantity, e.g. imaginary rho."""
    return x.real[:, None] + 0j


# Hilbert-level: dense sub-Dirac operators on M_2 --------------------------------------

def _mult_mats(a):
    """4x4 matrices of X -> a X and X -> X a on row-major vec(X)."""
    I = np.eye(2)
    return np.kron(a, I), np.kron(I, a.T)


_L1, _R1 = _mult_mats(0.5j * np.array([[0, 1], [1, 0]], dtype=complex))
_L2, _R2 = _mult_mats(0.5j * np.array([[0, -1j], [1j, 0]], dtype=complex))
AD_THETA = (_L1 - _R1, _L2 - _R2)    # psi -> [theta_i, psi] = d_i psi
ANTI_THETA = (_L1 + _R1, _L2 + _R2)  # psi -> {theta_i, psi}


def batched_kron(A, Bm):
    """kron(A, B[b]) for a constant A and a batch B of shape (B, p, q)."""
    p, q = A.shape
    r, s = Bm.shape[-2:]
    K = Bm[:, None, :, None, :] * A[None, :, None, :, None]
    return K.reshape(Bm.shape[0], p * r, q * s)


def hermiticity_block(ops, Cs):
    """Hermiticity defect of psi -> op(psi_a) C^a_b under (1/2)Tr with mu = id.

    The Gram matrix is a multiple of the identity, so the test is D^dagger = D.
    """
    out = []
    for op, C in zip(ops, Cs):
        D = batched_kron(op, C.swapaxes(-1, -2))
        out.append(flat(D.conj().swapaxes(-1, -2) - D))
    return concat(out)


BLOCKS = {
    "JJ": jj_block,
    "SJ": sj_inner_block,
    "SJ_flip": sj_flip_block,
    "CJ": cj_block,
    "covariance": covariance_inner_block,
    "covariance_const": covariance_const_block,
    "clifford": clifford_block,
    "gamma": gamma_block,
    "symmetric_J": symmetric_j_block,
    "imag_rho": real_part_block,
}
