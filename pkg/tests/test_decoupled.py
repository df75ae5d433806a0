import math

import numpy as np
import pytest

from todafill import BaseSurface, ExtendedK, build_profile, check_smoothness_conditions, nut_profile
from todafill.decoupled import (
    coef_a,
    evaluate,
    identity_defect,
    profile_table,
    psi,
    toda_ode_residual,
)
from todafill.errors import NonAdmissible, NotNutAdmissible, OutOfRange

from conftest import admissible_sweep, canonical

PI = math.pi
XI = np.linspace(0.0, 0.5, 201)


def closed_form_generic(genus, deg, c, xi):
    """Closed-form e^w and We^w for deg != -chi, expanded independently of the profile code."""
    base = BaseSurface.of_genus(genus)
    chi, V = base.chi, base.volume
    den = V * (48 * c - 1) * (1 + 96 * c)
    ew = (
        -chi * (1 + 96 * c) * (xi**2 + 12 * c * (1 + 2 * xi))
        - 2 * deg * (1152 * c * c + xi**3 - 6 * c * (1 + 2 * xi) * (1 - 8 * xi + 4 * xi**2))
    ) * 2 * PI * (1 - 2 * xi) / den
    wew = 24 * c * PI * (-chi * (1 + 96 * c) - deg * (-1 + 192 * c * (1 - xi) + 4 * xi)) / den
    return ew, wew


@pytest.mark.parametrize(
    "genus, deg, k", [(1, -1, "1"), (1, 2, "0.22"), (2, -5, "2"), (2, 7, "0.2"), (0, -3, "1"), (0, 1, "0.1"), (3, -1, "-1")]
)
def test_generic_profile_matches_closed_form(genus, deg, k):
    t, base = canonical(genus, deg, k)
    v = evaluate(build_profile(t, base), XI)
    ew, wew = closed_form_generic(genus, deg, t.k.k3, XI)
    np.testing.assert_allclose(v.e_w, ew, atol=1e-13)
    np.testing.assert_allclose(v.We_w, wew, atol=1e-13)


@pytest.mark.parametrize("genus, deg", [(1, -2), (2, -3), (0, -4), (3, 1)])
@pytest.mark.parametrize("sign", [1, -1])
def test_asd_profile_matches_closed_form(genus, deg, sign):
    t, base = canonical(genus, deg, ExtendedK.inf(sign))
    chi, V = base.chi, base.volume
    v = evaluate(build_profile(t, base, override=True), XI)
    np.testing.assert_allclose(v.e_w, PI / (2 * V) * (1 - 2 * XI) * (-chi * (1 + 2 * XI) - 2 * deg), atol=1e-13)
    np.testing.assert_allclose(v.We_w, PI / (2 * V) * (-chi - 2 * deg * (1 - XI)), atol=1e-13)


@pytest.mark.parametrize("genus", [0, 1, 2, 3])
@pytest.mark.parametrize("area", [2.5, 9.0])
def test_special_k_profile_matches_closed_form(genus, area):
    t, base = canonical(genus, -(2 - 2 * genus), "1/cbrt48", area=area)
    chi, V = base.chi, base.volume
    v = evaluate(build_profile(t, base), XI)
    ew = (1 - 2 * XI) * (area * (1 + 2 * XI + 4 * XI**2) - 2 * PI * chi / 3 * XI * (2 + XI + 2 * XI**2)) / V
    np.testing.assert_allclose(v.e_w, ew, atol=1e-13)
    np.testing.assert_allclose(v.We_w, (area - 2 * PI * chi * XI / 3) / V, atol=1e-13)


def test_torus_degree_zero_profile():
    t, base = canonical(1, 0, "1/cbrt48", area=1.0)
    v = evaluate(build_profile(t, base), XI)
    np.testing.assert_allclose(v.e_w, (1 - 8 * XI**3) / (4 * PI**2), atol=1e-15)
    np.testing.assert_allclose(v.We_w, 1 / (4 * PI**2), atol=1e-15)


@pytest.mark.parametrize("tok", ["1", "0.1", "-1", "1/cbrt48", "5"])
def test_nut_profile_matches_closed_form(tok):
    k = ExtendedK.parse(tok)
    c = k.k3
    v = evaluate(nut_profile(k), XI[:-1])
    x = XI[:-1]
    np.testing.assert_allclose(v.e_w, (24 * c + x**2) * (1 - 2 * x) ** 2 / (96 * c + 1), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(v.We_w, 24 * c / (96 * c + 1) * (1 - 2 * x), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(1 / v.W, (1 - 2 * x) * (1 + x**2 / (24 * c)), rtol=1e-10, atol=1e-15)


@pytest.mark.parametrize("sign", [1, -1])
def test_hyperbolic_ball(sign):
    prof = nut_profile(ExtendedK.inf(sign))
    x = XI[:-1]
    v = evaluate(prof, x)
    np.testing.assert_allclose(v.W, 1 / (1 - 2 * x), rtol=1e-14)
    np.testing.assert_allclose(v.e_w, 0.25 * (1 - 2 * x) ** 2, rtol=1e-14, atol=1e-16)
    assert prof.beta == 1.0


def test_nut_beta_and_range():
    assert nut_profile(ExtendedK.parse("1")).beta == pytest.approx(96 / 97, rel=1e-15)
    with pytest.raises(NotNutAdmissible):
        nut_profile(ExtendedK.parse("-0.1"))


def test_nut_double_zero():
    prof = nut_profile(ExtendedK.parse("1"))
    assert prof.E(0.5) == pytest.approx(0.0, abs=1e-14)
    assert prof.E.deriv()(0.5) == pytest.approx(0.0, abs=1e-13)
    assert prof.E.deriv(2)(0.5) != 0.0
    # F vanishes once, so W^-1 = E/F has a simple zero
    lin = np.polynomial.Polynomial([-0.5, 1.0])
    E1, _ = divmod(prof.E, lin)
    F1, _ = divmod(prof.F, lin)
    assert prof.F(0.5) == pytest.approx(0.0, abs=1e-14)
    assert E1(0.5) == pytest.approx(0.0, abs=1e-13) and E1.deriv()(0.5) != 0.0
    assert F1(0.5) != 0.0
    rep = check_smoothness_conditions(prof)
    assert rep.nut_degenerate and not rep.bolt_smooth


def test_sweep_residual_and_identity():
    sweep = admissible_sweep()
    assert len(sweep) >= 100
    xs = np.linspace(0.0, 0.5, 1000)
    for label, prof in sweep:
        res = toda_ode_residual(prof, xs)
        scale = 1.0 + np.max(np.abs(prof.E_coeffs)) / prof.vol
        assert np.max(np.abs(res)) < 1e-10 * scale, label
        assert identity_defect(prof) < 1e-14, label


@pytest.mark.parametrize("genus, deg", [(1, -1), (2, -3), (0, -4)])
def test_asd_second_derivative(genus, deg):
    t, base = canonical(genus, deg, "inf")
    prof = build_profile(t, base)
    assert prof.E_coeffs[3] == 0.0 and prof.E_coeffs[4] == 0.0
    d2 = prof.E.deriv(2)(XI)
    np.testing.assert_allclose(d2, 2 * base.curvature_sign * base.volume, atol=1e-12)


def test_boundary_values():
    for label, prof in admissible_sweep():
        t = prof.tuple
        v = evaluate(prof, [0.0, 0.5])
        assert v.e_w[0] == pytest.approx(t.area_a / prof.vol, rel=1e-14), label
        assert v.W[0] == pytest.approx(1.0, rel=1e-14), label
        assert v.e_w[1] == 0.0
        if prof.kind == "bolt":
            assert v.We_w[1] == pytest.approx((0.5 * t.deg * t.period_p + t.area_a) / prof.vol, rel=1e-12)
            assert v.We_w[1] > 0


def test_smoothness_genus2():
    t, base = canonical(2, -3, "2")
    rep = check_smoothness_conditions(build_profile(t, base))
    assert rep.C1 and rep.C2 and rep.C3
    assert rep.cone_check < 1e-12


def test_smoothness_torus_small_k():
    t, base = canonical(1, -1, "0.1")
    with pytest.raises(NonAdmissible):
        build_profile(t, base)
    rep = check_smoothness_conditions(build_profile(t, base, override=True))
    assert rep.failures()


def test_lift_polynomial_factor():
    a = 3.0
    t, base = canonical(1, 0, "1/cbrt48", area=a)
    prof = build_profile(t, base)
    np.testing.assert_allclose(psi(prof, XI), a / (2 * PI**2) * (1 + 2 * XI + 4 * XI**2), rtol=1e-14)
    assert psi(prof, 0.5) == pytest.approx(3 * a / (2 * PI**2), rel=1e-14)
    assert coef_a(prof, 0.5) == pytest.approx(-4.0, rel=1e-14)


def test_asd_coefficients_vanish():
    t, base = canonical(1, -1, "inf")
    assert np.all(coef_a(build_profile(t, base), XI) == 0.0)


def test_out_of_range():
    t, base = canonical(1, -1, "1")
    prof = build_profile(t, base)
    for bad in (-0.01, 0.51, np.nan):
        with pytest.raises(OutOfRange):
            evaluate(prof, bad)


def test_profile_table_columns():
    t, base = canonical(1, -1, "1")
    tab = profile_table(build_profile(t, base), 11)
    assert set(tab) == {"xi", "e_w", "W", "We_w", "psi"}
    assert tab["W"][0] == pytest.approx(1.0)
    assert np.isinf(tab["W"][-1])
