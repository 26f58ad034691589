import numpy as np
import pytest

from qrgdirac.presets import list_presets, preset
from qrgdirac.report import (KO_TABLE, classify, dirac_symmetry, judged, ko_dimensions, sign_pattern,
                             spectrum_rows, summary_lines, verify_preset)


def test_ko_table_round_trip():
    for n, (a, b, c) in KO_TABLE.items():
        assert ko_dimensions(a, b, c, even=c is not None) == [n]


def test_sign_pattern_reads_both_ways():
    # canonical data with eps' = -1: as i D it sits in KO dimension 0
    s = sign_pattern(preset("m2_canonical", eps1=-1).bundle)
    assert s["even"] and s["ko_dimension"]["iD"] == [0]
    s = sign_pattern(preset("m2_canonical", eps1=1).bundle)
    assert s["ko_dimension"]["D"] == [0]


def test_classify_precedence():
    assert classify(False, True, True, "antihermitian", True) == "fails"
    assert classify(True, True, True, "neither", True) == "almost"
    assert classify(True, True, True, "hermitian", False) == "almost"
    assert classify(True, True, True, "antihermitian", True) == "full"
    assert classify(True, False, True, "antihermitian", True) == "geometric"
    assert classify(True, True, False, "antihermitian", True) == "geometric"


def test_dirac_symmetry_and_judged():
    assert dirac_symmetry({"antihermiticity_defect": 0.0, "hermiticity_defect": 1.0}) == "antihermitian"
    assert dirac_symmetry({"antihermiticity_defect": 1.0, "hermiticity_defect": 0.0}) == "hermitian"
    assert dirac_symmetry({"antihermiticity_defect": 1.0, "hermiticity_defect": 1.0}) == "neither"
    assert judged(1e-12, 1e-10) == {"value": 1e-12, "tol": 1e-10, "pass": True}
    assert not judged(1.0, 1e-10)["pass"]


@pytest.mark.parametrize("name", sorted(list_presets()))
def test_classification_agrees_with_preset(name):
    # "local" only claims the local axioms, so any class but "fails" is consistent with it
    p = preset(name)
    rep = verify_preset(p)
    got = rep["classification"]
    if p.realisation in ("full", "geometric", "almost"):
        assert got == p.realisation
    elif p.realisation == "local":
        assert got != "fails"
    else:
        assert p.bundle is None or not rep["local_pass"] or got != "full"


def test_lichnerowicz_only_when_applicable():
    assert verify_preset(preset("m2_canonical"))["lichnerowicz"]["pass"]
    assert verify_preset(preset("torus_extended"))["lichnerowicz"] == {"applicable": False}


def test_spectrum_rows_group_multiplicities():
    rows = spectrum_rows(preset("m2_canonical").bundle)
    assert [(round(r["real"], 9), r["multiplicity"]) for r in rows["rows"]] == [(-1, 2), (0, 4), (1, 2)]
    assert rows["count"] == 8 and not rows["leakage"]


def test_summary_lines_mark_failures():
    import dataclasses
    p = preset("m2_canonical")
    p = dataclasses.replace(p, bundle=p.bundle.replace(J=2 * p.bundle.J))
    text = "\n".join(summary_lines(verify_preset(p)))
    assert "FAIL" in text and "MISMATCH" in text
