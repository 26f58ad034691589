import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qrgdirac.algebra import Matrix2, TorusAlgebra, TorusElement
from qrgdirac.cli import complex_array
from qrgdirac.presets import preset
from qrgdirac.spinor import axiom_residuals, classify_J, gauge_transform

finite = st.floats(-2, 2, allow_nan=False)
cplx = st.builds(complex, finite, finite)
thetas = st.floats(-3, 3, allow_nan=False)
monos = st.dictionaries(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), cplx, max_size=4)
mats = st.lists(cplx, min_size=4, max_size=4).map(lambda v: Matrix2(np.reshape(v, (2, 2))))


@settings(max_examples=60, deadline=None)
@given(thetas, monos, monos, monos)
def test_torus_product_is_associative(th, a, b, c):
    a, b, c = (TorusElement(x, th) for x in (a, b, c))
    assert ((a * b) * c).allclose(a * (b * c), 1e-9)


@settings(max_examples=60, deadline=None)
@given(thetas, monos, monos)
def test_torus_star_and_leibniz(th, a, b):
    a, b = TorusElement(a, th), TorusElement(b, th)
    assert (a * b).star().allclose(b.star() * a.star(), 1e-9)
    for i in (1, 2):
        assert (a * b).partial(i).allclose(a.partial(i) * b + a * b.partial(i), 1e-9)


@settings(max_examples=60, deadline=None)
@given(thetas, monos)
def test_torus_trace_is_invariant(th, a):
    a = TorusElement(a, th)
    u = TorusAlgebra(th).u()
    assert abs((u * a * u.star()).integral() - a.integral()) < 1e-9


@settings(max_examples=60, deadline=None)
@given(mats, mats)
def test_matrix_derivations(a, b):
    for i in (1, 2):
        assert (a * b).partial(i).allclose(a.partial(i) * b + a * b.partial(i), 1e-9)
        assert abs(a.partial(i).integral()) < 1e-12
    assert (a * b).star().allclose(b.star() * a.star(), 1e-12)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from([1, -1]), st.sampled_from([1, 2]), cplx, st.floats(0.1, 3))
def test_classify_J_satisfies_reality(eps, jtype, z, r):
    if jtype == 2 and abs(z) < 1e-3:
        z = 0.5
    J = classify_J(eps, jtype, z, r)
    assert np.allclose(J.conj() @ J, eps * np.eye(2), atol=1e-9 * (1 + np.abs(J).max() ** 2))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8),
       st.sampled_from(["m2_canonical", "m2_thm42", "m2_alt_family"]))
def test_gauge_invariance_of_residuals(v, name):
    p = preset(name)
    M = np.reshape(v[:4], (2, 2)) + 1j * np.reshape(v[4:], (2, 2))
    u, _ = np.linalg.qr(M + 3 * np.eye(2))
    r0 = axiom_residuals(p.bundle, p.connection)
    r1 = axiom_residuals(gauge_transform(p.bundle, u), p.connection)
    for k, a in r0.items():
        b = r1[k]
        if a < 1e-12:
            assert b < 1e-9, k
        else:
            # max-entry norms of 2 x 2 data move by at most a factor 2 under a unitary
            assert 0.5 - 1e-9 <= b / a <= 2 + 1e-9, k


@settings(max_examples=60, deadline=None)
@given(st.lists(cplx, min_size=4, max_size=4))
def test_complex_array_round_trip(v):
    arr = np.reshape(v, (2, 2))
    cfg = [[[z.real, z.imag] for z in row] for row in arr]
    assert np.array_equal(complex_array(cfg, (2, 2)), arr)
