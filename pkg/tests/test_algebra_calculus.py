import cmath

import numpy as np
import pytest

from qrgdirac.algebra import SIGMA, Matrix2, Matrix2Algebra, TorusAlgebra, integral, mul, partial, star
from qrgdirac.calculus import basis_form, check_inner, exterior_d, m2_calculus, torus_calculus, wedge
from qrgdirac.errors import ConfigurationError


def test_torus_relation_fixes_phase():
    T = TorusAlgebra(0.7)
    assert (T.v() * T.u()).allclose(T.monomial(1, 1, cmath.exp(0.7j)), 1e-14)
    assert (T.u() * T.v()).allclose(T.monomial(1, 1), 1e-14)


def test_torus_star_is_antimultiplicative():
    T = TorusAlgebra(0.4)
    rng = np.random.default_rng(1)
    a, b = T.random(rng, 1), T.random(rng, 1)
    assert star(mul(a, b)).allclose(mul(star(b), star(a)), 1e-12)
    assert star(star(a)).allclose(a, 1e-12)


def test_torus_derivations_and_integral():
    T = TorusAlgebra(0.3)
    x = T.monomial(2, -1, 1.5)
    assert partial(1, x).allclose(T.monomial(2, -1, 3j), 1e-14)
    assert partial(2, x).allclose(T.monomial(2, -1, -1.5j), 1e-14)
    rng = np.random.default_rng(2)
    a, b = T.random(rng, 1), T.random(rng, 1)
    for i in (1, 2):
        assert partial(i, a * b).allclose(partial(i, a) * b + a * partial(i, b), 1e-12)
        assert abs(integral(partial(i, a))) < 1e-14
    assert integral(T.scalar(2 + 1j)) == 2 + 1j


def test_direction_out_of_range():
    with pytest.raises(IndexError):
        TorusAlgebra(0.1).u().partial(3)
    with pytest.raises(IndexError):
        Matrix2Algebra().one().partial(0)


def test_mixing_backends_is_rejected():
    with pytest.raises(ConfigurationError):
        TorusAlgebra(0.1).u() + Matrix2Algebra().one()
    with pytest.raises(ConfigurationError):
        TorusAlgebra(0.1).u() * TorusAlgebra(0.2).u()


def test_matrix_partials_are_inner():
    A = Matrix2Algebra()
    a = A.random(np.random.default_rng(3))
    for i in (1, 2):
        th = 0.5j * SIGMA[i - 1]
        assert np.allclose(a.partial(i).m, th @ a.m - a.m @ th)
    assert abs(A.pauli(3).integral()) < 1e-15
    assert A.one().integral() == 1


def test_pauli_roundtrip():
    A = Matrix2Algebra()
    c = np.array([1 + 1j, -2, 0.5j, 3])
    assert np.allclose(A.from_pauli(c).pauli_coefficients(), c)


def test_torus_coordinates_flag_leakage():
    T = TorusAlgebra(0.2)
    vec, leak = T.coordinates(T.monomial(1, 1) + T.monomial(3, 0), 1)
    assert leak and vec.size == 9 and np.count_nonzero(vec) == 1


@pytest.mark.parametrize("calc", [m2_calculus(), torus_calculus(0.5)], ids=["matrix2", "torus"])
def test_d_squared_vanishes_on_functions(calc):
    A = calc.algebra
    a = A.random(np.random.default_rng(4)) if calc.backend == "matrix2" else A.random(np.random.default_rng(4), 1)
    assert exterior_d(exterior_d(a, calc)).vol.norm() < 1e-12


def test_m2_calculus_is_inner():
    r = check_inner(m2_calculus())
    assert r["inner"] and r["residual"] < 1e-14
    assert check_inner(m2_calculus(theta_scale=2.0))["residual"] > 0.1
    assert not check_inner(torus_calculus(0.5))["inner"]


def test_wedge_is_antisymmetric_on_torus():
    c = torus_calculus(0.5)
    s1, s2 = basis_form(c, 0), basis_form(c, 1)
    assert (wedge(s1, s2).vol + wedge(s2, s1).vol).norm() < 1e-15
    assert wedge(s1, s1).vol.norm() < 1e-15


def test_m2_wedge_squares_are_volume():
    c = m2_calculus()
    s1, s2 = basis_form(c, 0), basis_form(c, 1)
    assert (wedge(s1, s1).vol - wedge(s2, s2).vol).norm() < 1e-15
    assert wedge(s1, s2).vol.norm() < 1e-15
