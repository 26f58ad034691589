"""Coordinate algebras: M_2(C) and the noncommutative torus.

Elements are immutable.  Complex scalars mix freely with elements and are
read as multiples of the unit, so numpy object arrays of elements can be
multiplied by plain complex matrices.
"""
from __future__ import annotations

import cmath
import numbers
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .errors import ConfigurationError

PRUNE = 1e-14

I2 = np.eye(2, dtype=complex)
SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
PAULI = (I2,) + SIGMA  # PAULI[k] = sigma^k, PAULI[0] = id


def _is_scalar(x) -> bool:
    return isinstance(x, numbers.Number) or (isinstance(x, np.ndarray) and x.ndim == 0)


class AlgebraElement:
    """Base class; concrete payloads live in Matrix2 and TorusElement."""

    __slots__ = ()
    backend = "abstract"

    # subclass hooks
    def _mul(self, other):
        raise NotImplementedError

    def _add(self, other):
        raise NotImplementedError

    def _scale(self, c: complex):
        raise NotImplementedError

    def scalar_like(self, c: complex):
        raise NotImplementedError

    def _coerce(self, other):
        if isinstance(other, AlgebraElement):
            self._check_compatible(other)
            return other
        if _is_scalar(other):
            return self.scalar_like(complex(other))
        return NotImplemented

    def _check_compatible(self, other):
        if other.backend != self.backend:
            raise ConfigurationError(f"backend mismatch: {self.backend} vs {other.backend}")

    def __mul__(self, other):
        if _is_scalar(other):
            return self._scale(complex(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._mul(other)

    def __rmul__(self, other):
        if _is_scalar(other):
            return self._scale(complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._add(other)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return self._scale(-1.0)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._add(-other)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __truediv__(self, other):
        if _is_scalar(other):
            return self._scale(1.0 / complex(other))
        return NotImplemented

    def commutator(self, other):
        return self * other - other * self

    def allclose(self, other, tol: float = 1e-10) -> bool:
        return (self - other).norm() <= tol


class Matrix2(AlgebraElement):
    """Element of M_2(C) stored as a dense 2x2 complex array."""

    __slots__ = ("m",)
    backend = "matrix2"

    def __init__(self, m):
        arr = np.array(m, dtype=complex).reshape(2, 2)
        arr.setflags(write=False)
        self.m = arr

    def scalar_like(self, c):
        return Matrix2(c * I2)

    def _mul(self, other):
        return Matrix2(self.m @ other.m)

    def _add(self, other):
        return Matrix2(self.m + other.m)

    def _scale(self, c):
        return Matrix2(c * self.m)

    def star(self):
        return Matrix2(self.m.conj().T)

    def partial(self, i: int):
        """(i/2)[sigma^i, a] for i in {1, 2}."""
        if i not in (1, 2):
            raise IndexError(f"direction {i} out of range (1, 2)")
        s = SIGMA[i - 1]
        return Matrix2(0.5j * (s @ self.m - self.m @ s))

    def integral(self) -> complex:
        return complex(0.5 * np.trace(self.m))

    def norm(self) -> float:
        return float(np.max(np.abs(self.m)))

    def pauli_coefficients(self) -> np.ndarray:
        """Coefficients c_k with a = sum_k c_k sigma^k (k = 0..3)."""
        return np.array([0.5 * np.trace(P @ self.m) for P in PAULI])

    def __repr__(self):
        return f"Matrix2({self.m.tolist()})"


class TorusElement(AlgebraElement):
    """Finite Laurent polynomial sum c_{mn} u^m v^n with vu = e^{i theta} uv."""

    __slots__ = ("coeffs", "theta")
    backend = "torus"

    def __init__(self, coeffs: Dict[Tuple[int, int], complex], theta: float):
        self.coeffs = {
            (int(k[0]), int(k[1])): complex(c) for k, c in coeffs.items() if abs(c) >= PRUNE
        }
        self.theta = float(theta)

    def _check_compatible(self, other):
        super()._check_compatible(other)
        if other.theta != self.theta:
            raise ConfigurationError(
                f"torus deformation mismatch: {self.theta} vs {other.theta}"
            )

    def scalar_like(self, c):
        return TorusElement({(0, 0): c}, self.theta)

    def _mul(self, other):
        out: Dict[Tuple[int, int], complex] = {}
        th = self.theta
        for (m, n), a in self.coeffs.items():
            for (m2, n2), b in other.coeffs.items():
                key = (m + m2, n + n2)
                out[key] = out.get(key, 0j) + a * b * cmath.exp(1j * th * n * m2)
        return TorusElement(out, th)

    def _add(self, other):
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0j) + c
        return TorusElement(out, self.theta)

    def _scale(self, c):
        return TorusElement({k: c * v for k, v in self.coeffs.items()}, self.theta)

    def star(self):
        th = self.theta
        return TorusElement(
            {(-m, -n): c.conjugate() * cmath.exp(1j * th * m * n) for (m, n), c in self.coeffs.items()},
            th,
        )

    def partial(self, i: int):
        """i*m (i=1) or i*n (i=2) on u^m v^n."""
        if i not in (1, 2):
            raise IndexError(f"direction {i} out of range (1, 2)")
        return TorusElement(
            {k: 1j * k[i - 1] * c for k, c in self.coeffs.items()}, self.theta
        )

    def integral(self) -> complex:
        return self.coeffs.get((0, 0), 0j)

    def norm(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def degree(self) -> int:
        return max((max(abs(m), abs(n)) for m, n in self.coeffs), default=0)

    def __repr__(self):
        return f"TorusElement({self.coeffs}, theta={self.theta})"


# functional interface --------------------------------------------------------

def mul(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    if not isinstance(a, AlgebraElement) or not isinstance(b, AlgebraElement):
        raise ConfigurationError("mul expects two algebra elements")
    return a * b


def star(a: AlgebraElement) -> AlgebraElement:
    return a.star()


def partial(i: int, a: AlgebraElement) -> AlgebraElement:
    return a.partial(i)


def integral(a: AlgebraElement) -> complex:
    return a.integral()


# algebra descriptors ---------------------------------------------------------

class Matrix2Algebra:
    backend = "matrix2"
    theta = None

    def one(self) -> Matrix2:
        return Matrix2(I2)

    def zero(self) -> Matrix2:
        return Matrix2(np.zeros((2, 2)))

    def scalar(self, c) -> Matrix2:
        return Matrix2(complex(c) * I2)

    def pauli(self, k: int) -> Matrix2:
        return Matrix2(PAULI[k])

    def from_pauli(self, coeffs: Iterable[complex]) -> Matrix2:
        return Matrix2(sum(c * P for c, P in zip(coeffs, PAULI)))

    def basis(self, truncation=None) -> List[Matrix2]:
        """Matrix units E_11, E_12, E_21, E_22."""
        out = []
        for k in range(4):
            e = np.zeros(4, dtype=complex)
            e[k] = 1
            out.append(Matrix2(e.reshape(2, 2)))
        return out

    def coordinates(self, a: Matrix2, truncation=None):
        return np.asarray(a.m).reshape(4).copy(), False

    def random(self, rng: np.random.Generator, scale: float = 1.0) -> Matrix2:
        return Matrix2(scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))))

    def __eq__(self, other):
        return isinstance(other, Matrix2Algebra)

    def __hash__(self):
        return hash("matrix2")


class TorusAlgebra:
    backend = "torus"

    def __init__(self, theta: float):
        self.theta = float(theta)

    def one(self) -> TorusElement:
        return TorusElement({(0, 0): 1.0}, self.theta)

    def zero(self) -> TorusElement:
        return TorusElement({}, self.theta)

    def scalar(self, c) -> TorusElement:
        return TorusElement({(0, 0): complex(c)}, self.theta)

    def monomial(self, m: int, n: int, c: complex = 1.0) -> TorusElement:
        return TorusElement({(m, n): c}, self.theta)

    def u(self) -> TorusElement:
        return self.monomial(1, 0)

    def v(self) -> TorusElement:
        return self.monomial(0, 1)

    def window(self, truncation: int) -> List[Tuple[int, int]]:
        N = int(truncation)
        return [(m, n) for m in range(-N, N + 1) for n in range(-N, N + 1)]

    def basis(self, truncation: int = 1) -> List[TorusElement]:
        return [self.monomial(m, n) for m, n in self.window(truncation)]

    def coordinates(self, a: TorusElement, truncation: int):
        """Coefficient vector on the window and a flag for support outside it."""
        keys = self.window(truncation)
        idx = {k: i for i, k in enumerate(keys)}
        vec = np.zeros(len(keys), dtype=complex)
        leak = False
        for k, c in a.coeffs.items():
            if k in idx:
                vec[idx[k]] = c
            else:
                leak = True
        return vec, leak

    def random(self, rng: np.random.Generator, degree: int = 2, scale: float = 1.0) -> TorusElement:
        coeffs = {}
        for m, n in self.window(degree):
            coeffs[(m, n)] = scale * complex(rng.normal(), rng.normal())
        return TorusElement(coeffs, self.theta)

    def __eq__(self, other):
        return isinstance(other, TorusAlgebra) and other.theta == self.theta

    def __hash__(self):
        return hash(("torus", self.theta))


def self_test(theta: float = 0.7) -> None:
    """Assert the torus relation vu = e^{i theta} uv fixing the phase convention."""
    T = TorusAlgebra(theta)
    vu = T.v() * T.u()
    expected = T.monomial(1, 1, cmath.exp(1j * theta))
    if not vu.allclose(expected, 1e-14):
        raise AssertionError("torus product convention broken: vu != e^{i theta} uv")


self_test()
