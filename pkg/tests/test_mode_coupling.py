from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abcflux.mode_coupling import (EQUAL, EW, GOLDEN, KPZ, DensityPoint, average_current,
                                   c_constants, check_case, classify_modes, coupling_report,
                                   delta_equal, eigen_structure, fibonacci_exponents,
                                   g_constants_closed_form, general_delta, hessians_unscaled,
                                   jacobian, normal_mode_spec, system_residual,
                                   theorem_coefficients)
from abcflux.model_core import ModelParams


def _params(ea, eb, ec=0.0, gamma=0.5):
    return ModelParams(N=1024, gamma=gamma, E_A=ea, E_B=eb, E_C=ec)


def test_equal_density_current_case_one():
    p = _params(1.7, 1.7)
    j = average_current(EQUAL, p)
    assert np.allclose(j, 1.7 * p.asymmetry / 9 * np.ones(2), rtol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.05, 0.6), st.floats(0.05, 0.35))
def test_jacobian_and_hessian_match_finite_differences(ea, eb, ra, rb):
    p = _params(ea, eb)
    h = 1e-6
    J = jacobian((ra, rb), p)
    num = np.column_stack([(average_current((ra + h, rb), p) - average_current((ra - h, rb), p)) / (2 * h),
                           (average_current((ra, rb + h), p) - average_current((ra, rb - h), p)) / (2 * h)])
    assert np.allclose(J, num, atol=1e-8)
    H1, H2 = hessians_unscaled(ea, eb)
    for i, H in enumerate((H1, H2)):
        for j in range(2):
            e = np.eye(2)[j] * h
            dj = (jacobian((ra + e[0], rb + e[1]), p) - jacobian((ra - e[0], rb - e[1]), p)) / (2 * h)
            assert np.allclose(dj[i] / p.asymmetry, H[j], atol=1e-6)


@settings(max_examples=80, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_eigenbasis_diagonalizes(ea, eb, ec):
    p = _params(ea, eb, ec)
    try:
        rep = coupling_report(p, DensityPoint(0.25, 0.4))
    except ValueError:
        return
    D = rep.R @ rep.J @ rep.R_inv
    ref = max(1.0, np.abs(rep.J).max())
    assert abs(D[0, 1]) + abs(D[1, 0]) < 1e-11 * ref
    assert D[0, 0] == pytest.approx(rep.v_plus, abs=1e-11 * ref)
    assert rep.v_plus >= rep.v_minus


def test_case_one_eigenstructure():
    p = _params(2.0, 2.0)
    rep = coupling_report(p)
    assert rep.v_plus == pytest.approx(2 / 3) and rep.v_minus == pytest.approx(-2 / 3)
    assert np.allclose(rep.tau_plus, [-1, 1]) and np.allclose(rep.tau_minus, [1, 1])
    assert (rep.class_plus, rep.class_minus) == (EW, KPZ)


def test_case_one_coupling_values():
    # reference table: G1 = (1/2)[[0,-E],[-E,0]] N^-gamma, G2 = [[0,0],[0,-E]] N^-gamma
    E = 1.5
    p = _params(E, E)
    rep = coupling_report(p)
    s = p.asymmetry
    assert np.allclose(rep.scaled("G1"), 0.5 * np.array([[0, -E], [-E, 0]]) * s, atol=1e-14)
    assert np.allclose(rep.scaled("G2"), np.array([[0, 0], [0, -E]]) * s, atol=1e-14)


def test_case_two_orientation():
    p = _params(3.0, 0.0)
    rep = coupling_report(p)
    taus = [rep.tau_plus, rep.tau_minus]
    with_a = [t for t in taus if abs(t[0]) > 1e-12]
    assert len(with_a) == 1 and np.allclose(with_a[0] / with_a[0][0] * 2, [2, -1])
    assert np.allclose(rep.R @ rep.R_inv, np.eye(2))


def test_closed_form_constants_share_the_coupling_pattern():
    p = _params(1.0, 2.5)
    rep = coupling_report(p)
    g1, g2 = g_constants_closed_form(p)
    pattern1 = np.array([[2 * g1, g2], [g2, 0]])
    pattern2 = np.array([[0, g1], [g1, 2 * g2]])
    factor = rep.G1[0, 1] / g2
    assert np.allclose(rep.G1, factor * pattern1, atol=1e-12)
    assert np.allclose(rep.G2, factor * pattern2, atol=1e-12)


def test_closed_form_constants_equal_coupling_entries():
    # the printed closed forms against the definitional matrices; differs by 2/delta
    p = _params(1.0, 2.5)
    rep = coupling_report(p)
    g1, g2 = g_constants_closed_form(p)
    assert np.allclose(rep.G1, [[2 * g1, g2], [g2, 0]], rtol=1e-10)
    assert np.allclose(rep.G2, [[0, g1], [g1, 2 * g2]], rtol=1e-10)


def test_equal_density_delta_and_constants():
    p = _params(1.2, -0.7, 0.3)
    ea, eb = 0.9, -1.0
    assert delta_equal(p) == pytest.approx(general_delta(EQUAL, ea, eb))
    cp, cm = c_constants(p)
    assert cp * cm == pytest.approx((p.E_A - p.E_B) ** 2 - 2.25 * delta_equal(p) ** 2)


@pytest.mark.parametrize("tag,e", [("I", (2.0, 2.0, 0.0)), ("II", (2.0, 0.5, 0.5)),
                                   ("III", (1.0, 2.5, 0.0)), ("III", (-1.5, 0.4, 0.2))])
def test_normal_modes_cancel_drift(tag, e):
    p = _params(*e)
    plus, minus = normal_mode_spec(tag, p)
    assert system_residual(plus, p) < 1e-14 and system_residual(minus, p) < 1e-14
    assert plus.v != minus.v


def test_case_constraints():
    assert check_case("I", _params(1.0, 2.0))
    assert check_case("II", _params(1.0, 2.0))
    assert check_case("III", _params(1.0, 1.0, 1.0))
    assert check_case("IV", _params(1.0, 2.0)) == ["unknown case tag 'IV'"]
    with pytest.raises(ValueError):
        normal_mode_spec("I", _params(1.0, 2.0))


def test_theorem_coefficients():
    p = _params(2.0, 2.0)
    assert theorem_coefficients("I", p) == (0.0, -2.0, 2 / 3, 2 / 9)
    assert theorem_coefficients("I", p, gamma=0.75)[1] == 0.0
    with pytest.raises(ValueError, match="gamma"):
        theorem_coefficients("I", p, gamma=0.4)
    plus, minus = normal_mode_spec("III", _params(1.0, 2.5))
    lp, lm, s2p, s2m = theorem_coefficients("III", _params(1.0, 2.5))
    assert (s2p, s2m) == pytest.approx((plus.sigma2, minus.sigma2))


def test_fibonacci_exponents():
    z = fibonacci_exponents(6)
    assert z == [Fraction(2), Fraction(3, 2), Fraction(5, 3), Fraction(8, 5), Fraction(13, 8),
                 Fraction(21, 13)]
    assert abs(float(fibonacci_exponents(40)[-1]) - GOLDEN) < 1e-15


def test_classification_patterns():
    assert classify_modes(np.diag([1.0, 0]), np.zeros((2, 2))) == (KPZ, EW)
    g1 = np.array([[0.0, 0.3], [0.3, 1.0]])
    g2 = np.array([[1.0, 0.2], [0.2, 0.0]])
    a, b = classify_modes(g1, g2)
    assert a.name == b.name == "LEVY" and a.z == pytest.approx(GOLDEN, abs=1e-12)
    # Levy mode coupled to a KPZ mode: z = 1 + 2/3
    a, b = classify_modes(np.array([[0.0, 0.1], [0.1, 1.0]]), np.array([[0.0, 0.0], [0.0, 1.0]]))
    assert b == KPZ and a.z == pytest.approx(5 / 3)


def test_symmetric_degenerate_point():
    v_p, v_m, tp, tm, R, R_inv = eigen_structure(np.zeros((2, 2)))
    assert v_p == v_m == 0 and np.allclose(R @ R_inv, np.eye(2))
    with pytest.raises(ValueError):
        eigen_structure(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        eigen_structure(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def test_report_text_and_rows():
    rep = coupling_report(_params(1.0, 2.5))
    txt = rep.as_text()
    assert "G1 = [" in txt and "class_plus" in txt
    names = {r[0] for r in rep.csv_rows()}
    assert {"J", "G1", "G2", "delta", "tau_plus"} <= names
