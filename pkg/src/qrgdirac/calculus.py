"""Differential calculi with a central basis s^i of 1-forms.

Forms store their coefficients to the left of basis symbols.  Omega^2 is
one-dimensional with generator Vol; the wedge constants W^{ij} give
s^i ^ s^j = W^{ij} Vol and ds^i = dbasis^i Vol.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .algebra import AlgebraElement, Matrix2Algebra, TorusAlgebra, SIGMA, Matrix2
from .errors import ConfigurationError


@dataclass(frozen=True)
class Calculus:
    algebra: object
    wedge: np.ndarray
    dbasis: Tuple[AlgebraElement, ...]
    theta: Optional[Tuple[AlgebraElement, ...]] = None
    name: str = ""

    @property
    def n(self) -> int:
        return self.wedge.shape[0]

    @property
    def backend(self) -> str:
        return self.algebra.backend

    @property
    def is_inner(self) -> bool:
        return self.theta is not None

    def grad(self, a: AlgebraElement) -> Tuple[AlgebraElement, ...]:
        """(d_1 a, ..., d_n a)."""
        return tuple(a.partial(i + 1) for i in range(self.n))

    def one_form(self, *coeffs) -> "OneForm":
        return OneForm(tuple(self._lift(c) for c in coeffs), self)

    def _lift(self, c):
        if isinstance(c, AlgebraElement):
            return c
        return self.algebra.scalar(c)


@dataclass(frozen=True)
class OneForm:
    coeffs: Tuple[AlgebraElement, ...]
    calculus: Calculus

    def __post_init__(self):
        if len(self.coeffs) != self.calculus.n:
            raise ConfigurationError("one-form component count must equal n")

    def __add__(self, other: "OneForm") -> "OneForm":
        return OneForm(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.calculus)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return OneForm(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.calculus)

    def left(self, a) -> "OneForm":
        return OneForm(tuple(a * c for c in self.coeffs), self.calculus)

    def right(self, a) -> "OneForm":
        return OneForm(tuple(c * a for c in self.coeffs), self.calculus)

    def norm(self) -> float:
        return max(c.norm() for c in self.coeffs)


@dataclass(frozen=True)
class TwoForm:
    vol: AlgebraElement
    calculus: Calculus

    def __add__(self, other: "TwoForm") -> "TwoForm":
        return TwoForm(self.vol + other.vol, self.calculus)

    def __sub__(self, other: "TwoForm") -> "TwoForm":
        return TwoForm(self.vol - other.vol, self.calculus)

    def left(self, a) -> "TwoForm":
        return TwoForm(a * self.vol, self.calculus)

    def norm(self) -> float:
        return self.vol.norm()


def exterior_d(x: Union[AlgebraElement, OneForm], calc: Optional[Calculus] = None):
    """d on functions (needs calc) or on 1-forms."""
    if isinstance(x, OneForm):
        c = x.calculus
        n = c.n
        vol = c.algebra.zero()
        for i in range(n):
            grads = c.grad(x.coeffs[i])
            for j in range(n):
                if c.wedge[j, i] != 0:
                    vol = vol + grads[j] * c.wedge[j, i]
            vol = vol + x.coeffs[i] * c.dbasis[i]
        return TwoForm(vol, c)
    if isinstance(x, TwoForm):
        raise ConfigurationError("no 3-forms: d on Omega^2 is not represented")
    if calc is None:
        raise ConfigurationError("exterior_d on a function needs its calculus")
    return OneForm(calc.grad(x), calc)


def wedge(w: OneForm, e: OneForm) -> TwoForm:
    if w.calculus is not e.calculus and w.calculus != e.calculus:
        raise ConfigurationError("wedge of forms from different calculi")
    c = w.calculus
    vol = c.algebra.zero()
    for i in range(c.n):
        for j in range(c.n):
            if c.wedge[i, j] != 0:
                vol = vol + (w.coeffs[i] * e.coeffs[j]) * c.wedge[i, j]
    return TwoForm(vol, c)


def basis_form(calc: Calculus, i: int) -> OneForm:
    """s^i as a OneForm (0-based index)."""
    return calc.one_form(*[1.0 if k == i else 0.0 for k in range(calc.n)])


def check_inner(calc: Calculus, truncation: int = 2) -> dict:
    """Residuals of da = [theta, a] and ds^i = {theta, s^i}."""
    if not calc.is_inner:
        return {"inner": False, "residual": None}
    th = calc.theta
    res_fun = 0.0
    for a in calc.algebra.basis(truncation):
        da = calc.grad(a)
        for i in range(calc.n):
            res_fun = max(res_fun, (th[i] * a - a * th[i] - da[i]).norm())
    res_form = 0.0
    for i in range(calc.n):
        anti = calc.algebra.zero()
        for j in range(calc.n):
            anti = anti + th[j] * (calc.wedge[j, i] + calc.wedge[i, j])
        res_form = max(res_form, (anti - calc.dbasis[i]).norm())
    return {"inner": True, "residual": max(res_fun, res_form),
            "functions": res_fun, "forms": res_form}


# presets ----------------------------------------------------------------------

def torus_calculus(theta: float) -> Calculus:
    A = TorusAlgebra(theta)
    W = np.array([[0, 1], [-1, 0]], dtype=complex)
    return Calculus(A, W, (A.zero(), A.zero()), None, "torus")


def m2_calculus(theta_scale: float = 1.0) -> Calculus:
    """M_2 calculus; theta_scale != 1 gives a deliberately wrong inner element."""
    A = Matrix2Algebra()
    W = np.array([[1j, 0], [0, 1j]])
    dbasis = tuple(Matrix2(-s) for s in SIGMA[:2])
    theta = tuple(Matrix2(0.5j * theta_scale * s) for s in SIGMA[:2])
    return Calculus(A, W, dbasis, theta, "matrix2")
