import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublevel_lab.errors import MonotonicityError, OutOfRangeError
from sublevel_lab.phase_catalog import (
    make_flat_profile,
    make_grid_quadratic,
    make_power_profile,
    make_staircase_profile,
)
from sublevel_lab.sublevel_geometry import build_sublevel_table
from sublevel_lab.symmetrization import (
    build_rearrangement,
    build_T,
    check_equimeasurable,
    check_g_concave,
    check_g_inv_convex,
    equimeasurability_tolerance,
    gradient_sublevel_inclusion,
    round_trip_error,
    strictness_ratio,
)


def _rp(profile):
    t = build_sublevel_table(profile)
    return t, build_rearrangement(t)


def test_quadratic_rearrangement_is_identity():
    t, rp = _rp(make_power_profile(2, 1.0, 2))
    r = np.linspace(0, rp.B_radius, 9)
    np.testing.assert_allclose(rp.g_inv(r), r**2, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(rp.g(r**2), r, rtol=1e-12)
    assert float(rp(np.array([[0.3, 0.4]]))[0]) == pytest.approx(0.25)


@given(st.sampled_from([(3, 2), (4, 3), (2, 1), (5, 2)]), st.floats(0.01, 0.99))
def test_slope_of_radial_rearrangement_is_F_prime(mn, frac):
    # a radial phase is its own rearrangement, so the slope is F'(r)
    m, n = mn
    p = make_power_profile(m, 1.0, n)
    t, rp = _rp(p)
    r = frac * rp.B_radius
    assert float(rp.slope(r)) == pytest.approx(m * r ** (m - 1), rel=1e-10)


@pytest.mark.parametrize("profile", [
    make_power_profile(4, 1.0, 2), make_power_profile(2, 1.0, 3), make_flat_profile(),
    make_staircase_profile([1, 8], [0.5], 0.05).with_override(),
])
def test_radial_equimeasurable_and_shapes(profile):
    t, rp = _rp(profile)
    assert check_equimeasurable(rp, t) <= 1e-9 * t.t_l
    assert equimeasurability_tolerance(t) == 1e-9 * t.t_l
    assert check_g_concave(rp).passed
    assert check_g_inv_convex(rp).passed
    assert round_trip_error(rp) <= 1e-10


def test_grid_rearrangement_within_error():
    g = make_grid_quadratic(N=201)
    t, rp = _rp(g)
    assert check_equimeasurable(rp, t) <= equimeasurability_tolerance(t)
    assert check_g_concave(rp).passed and check_g_inv_convex(rp).passed
    # the ellipse rearranges to r^2 scaled by sqrt(ab) = sqrt(2)
    r = 0.5 * rp.B_radius
    y = math.sqrt(2) * r**2
    # a measure error e moves the height by about e / J
    tol = float(t.error_at(y)) / float(t.density(y))
    assert abs(float(rp.g_inv(r)) - y) <= tol


def test_mismatched_table_is_detected():
    t4, rp4 = _rp(make_power_profile(4, 1.0, 2))
    t2 = build_sublevel_table(make_power_profile(2, 1.0, 2))
    assert check_equimeasurable(rp4, t2) > 0.1


def test_radius_above_B_rejected():
    t, rp = _rp(make_power_profile(3, 1.0, 2))
    with pytest.raises(OutOfRangeError):
        rp.g_inv(2 * rp.B_radius)


@given(st.floats(1.5, 6.0), st.floats(0.05, 0.95))
def test_T_for_planar_powers(m, frac):
    # t(y) = pi y^{2/m}  =>  T(x) = x^{m-1}
    t = build_sublevel_table(make_power_profile(m, 1.0, 2))
    T = build_T(t)
    x = frac * T.B_radius
    assert float(T(x)) == pytest.approx(x ** (m - 1), rel=1e-10)
    assert float(T.derivative(x)) == pytest.approx((m - 1) * x ** (m - 2), rel=1e-8)
    assert float(T.inverse(x ** (m - 1))) == pytest.approx(x, rel=1e-10)


def test_strictness_ratio_of_powers_is_m():
    t = build_sublevel_table(make_power_profile(3, 1.0, 2))
    _, ratio = strictness_ratio(t)
    np.testing.assert_allclose(ratio, 3.0, rtol=1e-10)


def test_linear_measure_has_no_strict_T():
    # n = 1, m = 1: t is linear and T is constant
    t = build_sublevel_table(make_power_profile(1, 1.0, 1).with_override())
    with pytest.raises(MonotonicityError):
        build_T(t)


def test_T_inverse_range():
    T = build_T(build_sublevel_table(make_power_profile(3, 1.0, 2)))
    with pytest.raises(OutOfRangeError):
        T.inverse(10 * float(T(T.B_radius)))
    with pytest.raises(OutOfRangeError):
        T.inverse(-1.0)


@pytest.mark.parametrize("alpha_frac", [1e-3, 0.1, 0.5, 0.99])
def test_inclusion(alpha_frac):
    t = build_sublevel_table(make_power_profile(4, 1.0, 2))
    rp, T = build_rearrangement(t), build_T(t)
    alpha = alpha_frac * float(rp.slope(rp.B_radius))
    rep = gradient_sublevel_inclusion(rp, T, alpha)
    assert rep.passed and not rep.empty
    # slope 4 r^3 = alpha at L; T(x) = x^3 so T^{-1}(alpha) = alpha^{1/3}
    assert rep.L == pytest.approx((alpha / 4) ** (1 / 3), rel=1e-9)
    assert rep.Tinv == pytest.approx(min(alpha ** (1 / 3), T.B_radius), rel=1e-9)


def test_inclusion_when_slope_never_exceeds_alpha():
    t = build_sublevel_table(make_power_profile(3, 1.0, 2))
    rp, T = build_rearrangement(t), build_T(t)
    rep = gradient_sublevel_inclusion(rp, T, 10 * float(rp.slope(rp.B_radius)))
    assert rep.L == rp.B_radius and rep.passed
