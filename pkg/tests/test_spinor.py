import numpy as np
import pytest

from qrgdirac.algebra import SIGMA, TorusAlgebra
from qrgdirac.errors import ConfigurationError
from qrgdirac.presets import preset
from qrgdirac.spinor import (axiom_residuals, charge_conjugate, classify_J, clifford_check, dirac_apply,
                             dirac_matrix, gauge_transform, hilbert_checks, inner_product,
                             lichnerowicz_residual, make_spinor, spectrum, spinor_laplacian,
                             spinor_laplacian_direct)


def test_torus_spectrum_by_hand():
    # flat torus, S = 0: i D on u^m v^n has eigenvalues +-sqrt(m^2 + n^2)
    p = preset("torus_spectral", N=1)
    ev, info = spectrum(p.bundle, 1)
    want = []
    for m in (-1, 0, 1):
        for n in (-1, 0, 1):
            r = np.hypot(m, n)
            want += [r, -r]
    assert not info["leakage"]
    assert np.allclose(np.sort(ev.real), np.sort(want), atol=1e-12)
    assert np.max(np.abs(ev.imag)) < 1e-12


def test_dirac_matrix_matches_pointwise_action():
    p = preset("torus_spectral", N=1, d1=0.3)
    b = p.bundle
    T = p.calculus.algebra
    psi = make_spinor(T.monomial(1, 0, 2.0), T.monomial(0, -1, 1j))
    out = dirac_apply(psi, b)
    D, _ = dirac_matrix(b, 1)
    # coordinates interleave the spinor index: column k * Ns + a
    vec = np.stack([T.coordinates(psi[a], 1)[0] for a in range(2)], axis=1).ravel()
    got = D @ vec
    want = np.stack([T.coordinates(out[a], 1)[0] for a in range(2)], axis=1).ravel()
    assert np.allclose(got, want)


def test_canonical_data_is_a_full_realisation():
    p = preset("m2_canonical")
    res = axiom_residuals(p.bundle, p.connection)
    assert max(res.values()) < 1e-12
    cl = clifford_check(p.bundle, p.metric)
    assert cl["residual"] < 1e-12
    lr = lichnerowicz_residual(p.bundle.replace(phi=cl["phi"]), p.connection, p.metric)
    assert lr["residual"] < 1e-12


def test_laplacian_forms_agree():
    p = preset("m2_canonical")
    A = p.calculus.algebra
    rng = np.random.default_rng(5)
    psi = make_spinor(A.random(rng), A.random(rng))
    a = spinor_laplacian(psi, p.bundle, p.connection, p.metric)
    b = spinor_laplacian_direct(psi, p.bundle, p.connection, p.metric)
    assert max((a[k] - b[k]).norm() for k in range(2)) < 1e-12


def test_charge_conjugation_is_antiunitary():
    p = preset("torus_spectral", N=1)
    b = p.bundle
    T = p.calculus.algebra
    rng = np.random.default_rng(6)
    x = make_spinor(T.random(rng, 1), T.random(rng, 1))
    y = make_spinor(T.random(rng, 1), T.random(rng, 1))
    lhs = inner_product(charge_conjugate(x, b), charge_conjugate(y, b), b)
    assert abs(lhs - inner_product(y, x, b)) < 1e-12
    jj = charge_conjugate(charge_conjugate(x, b), b)
    assert max((jj[k] - b.eps * x[k]).norm() for k in range(2)) < 1e-12


def test_hilbert_checks_see_antihermitian_dirac():
    h = hilbert_checks(preset("torus_spectral", N=1).bundle, 1)
    assert h["antihermiticity_defect"] < 1e-12 and h["hermiticity_defect"] > 1


@pytest.mark.parametrize("eps", [1, -1])
@pytest.mark.parametrize("jtype,z,r", [(1, 0.3 + 0.2j, 0.7), (1, 0.0, 1.0), (2, 0.5 - 0.4j, 1.0)])
def test_classify_J_representatives(eps, jtype, z, r):
    J = classify_J(eps, jtype, z, r)
    assert np.allclose(J.conj() @ J, eps * np.eye(2))


def test_classify_J_bad_input():
    with pytest.raises(ConfigurationError):
        classify_J(2, 1)
    with pytest.raises(ConfigurationError):
        classify_J(-1, 2, 0)
    with pytest.raises(ConfigurationError):
        classify_J(1, 3)
    assert np.allclose(classify_J(1, 2, 0), SIGMA[2])


def test_gauge_transform_keeps_residuals():
    p = preset("m2_canonical")
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    b2 = gauge_transform(p.bundle, q)
    assert max(axiom_residuals(b2, p.connection).values()) < 1e-12
    assert np.allclose(np.sort_complex(spectrum(b2)[0]), np.sort_complex(spectrum(p.bundle)[0]))


def test_gauge_transform_rejects_singular():
    with pytest.raises(ConfigurationError):
        gauge_transform(preset("m2_canonical").bundle, np.zeros((2, 2)))


def test_broken_J_shows_in_residuals():
    p = preset("m2_canonical")
    res = axiom_residuals(p.bundle.replace(J=2 * p.bundle.J), p.connection)
    assert res["JJ"] == pytest.approx(3.0)


def test_bundle_shape_checks():
    p = preset("m2_canonical")
    with pytest.raises(ConfigurationError):
        p.bundle.replace(C=p.bundle.C[:1])
    with pytest.raises(ConfigurationError):
        p.bundle.replace(measure=-np.eye(2))
