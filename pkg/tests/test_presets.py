import numpy as np
import pytest

from qrgdirac.errors import ConfigurationError, PresetMismatch
from qrgdirac.presets import (RHO_MODES, TAGS, alt_family_data, alt_family_rho, assert_expectations,
                              check_expectations, list_presets, preset, sort_spectrum)

VARIANTS = [
    ("torus_euclidean_wqlc", {"h11": 0.3, "h12": -0.2}),
    ("torus_euclidean_wqlc", {"h13": 0.4, "h22": 0.1, "N": 1}),
    ("torus_spectral", {"eps": -1}),
    ("torus_spectral", {"q": 1j, "d1": 0.3, "d2": -0.2}),
    ("torus_extended", {"d1": 0.2}),
    ("torus_general_spinor", {"b1": 0.3, "eps": -1}),
    ("torus_mass", {"m": 0.0}),
    ("torus_mass", {"eps": -1, "m": 1.2}),
    ("m2_standard_qlc", {"mu": 0.0}),
    ("m2_standard_qlc", {"mu": -1.3}),
    # eps' = -1 needs zeta -> -zeta with the same C and J
    ("m2_thm42", {"eps1": -1, "zeta": [[-1, 0], [0, 1]]}),
    ("m2_ex41a", {"swap": 1}),
    ("m2_ex41a", {"negate": 1}),
    ("m2_ex41b", {"x": -0.8, "swap": 1, "negate": 1}),
    ("m2_ex42a", {"eps1": -1, "root": -1}),
    ("m2_ex42b", {"root": -1}),
    ("m2_ex42c", {"eps1": -1}),
    ("m2_exJ2", {"branch": -1}),
    ("m2_exJ2", {"eps1": -1}),
    ("m2_canonical", {"eps1": -1}),
    ("m2_canonical_rotated", {"eps1": -1}),
    ("m2_alt_qlc", {"rho": -0.7j}),
    ("m2_alt_cliffab", {"sign1": -1, "sign2": -1}),
    ("m2_alt_family", {"s": 1.0, "t": 1.0, "x": 0.3, "y": 0.0}),
    ("m2_alt_family", {"rho_mode": "stated"}),
    ("m2_alt_family", {"gamma_sign": -1}),
    ("m2_alt_hermitian_circle", {"t_sign": -1}),
    ("m2_alt_hermitian_circle", {"s": 0.6, "rho_mode": "stated"}),
]

# quantities where the stated value and the computed one are known to disagree
DISPUTED_OK = {"one_plus_rho2", "local_residual", "sub_hermitian"}


def _cases():
    return [(name, {}) for name in sorted(list_presets())] + VARIANTS


@pytest.mark.parametrize("name,params", _cases(), ids=lambda v: v if isinstance(v, str) else
                         ",".join(f"{k}={w}".replace(" ", "") for k, w in v.items()) or "defaults")
def test_preset_expectations(name, params):
    p = preset(name, **params)
    recs = check_expectations(p)
    assert recs, "every preset states at least one expected value"
    for r in recs:
        assert r["tag"] in TAGS
        if not r["ok"]:
            assert r["disputed"], f"{r['quantity']}: deviation {r['deviation']} ({r['note']})"
            assert r["quantity"].split(":")[0] in DISPUTED_OK
    if all(r["ok"] for r in recs):
        assert_expectations(p)


def test_disputed_items_are_flagged():
    recs = check_expectations(preset("m2_alt_family"))
    bad = [r for r in recs if not r["ok"]]
    assert bad and all(r["disputed"] for r in bad)
    assert {r["quantity"] for r in bad} == {"one_plus_rho2"}
    assert_expectations(preset("m2_alt_family"))  # disputed items do not raise


def test_type2_preset_sign_needs_matching_zeta():
    recs = check_expectations(preset("m2_thm42", eps1=-1))
    assert not all(r["ok"] for r in recs)


def test_mismatch_raises():
    import dataclasses
    p = preset("m2_canonical")
    broken = dataclasses.replace(p, bundle=p.bundle.replace(J=2 * p.bundle.J))
    with pytest.raises(PresetMismatch):
        assert_expectations(broken)


def test_unknown_names_and_params():
    with pytest.raises(ConfigurationError):
        preset("no_such_preset")
    with pytest.raises(ConfigurationError):
        preset("m2_canonical", nonsense=1)
    with pytest.raises(ConfigurationError):
        preset("torus_spectral", eps=3)
    with pytest.raises(ConfigurationError):
        preset("torus_spectral", q=2.0)


def test_registry_has_summaries_and_defaults():
    reg = list_presets()
    assert len(reg) == 19
    for name, spec in reg.items():
        assert spec.summary
        assert isinstance(spec.defaults, dict)


def test_alt_family_rho_modes():
    s, t = 1.3, 0.7
    assert set(RHO_MODES) == {"covariant", "stated"}
    r = alt_family_rho(s, t, "covariant")
    assert abs(r - 0.5 * (t / s - s / t)) < 1e-15
    assert abs(alt_family_rho(s, t, "stated").real) < 1e-15
    with pytest.raises(ConfigurationError):
        alt_family_rho(s, t, "other")


def test_alt_family_data_shapes():
    C, sig, J, gamma = alt_family_data(1.3, 0.7, 0.4, 0.2)
    assert C.shape == (2, 2, 2) and sig.shape == (2, 2, 2, 2)
    assert np.allclose(J.conj() @ J, np.eye(2)) or np.allclose(J.conj() @ J, -np.eye(2))
    assert np.allclose(gamma @ gamma, np.eye(2))


def test_sort_spectrum_is_stable_under_noise():
    ev = np.array([1.0, -1.0 + 1e-13j, 0.0, -1.0])
    assert np.allclose(sort_spectrum(ev), [-1, -1, 0, 1])
