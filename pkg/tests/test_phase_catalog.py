import math
import pickle

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import omega
from sublevel_lab.errors import PhaseValidationError, SublevelLabError
from sublevel_lab.phase_catalog import (
    BOUNDARY,
    CATALOG,
    FAIL,
    PASS,
    amplitude_from_callable,
    build_grid_phase,
    ball_volume,
    build_phase,
    constant_amplitude,
    linear_taper,
    make_flat_profile,
    make_grid_quadratic,
    make_power_profile,
    make_staircase_profile,
    sphere_area,
    tabulated_amplitude,
    validate_phase,
)


@pytest.mark.parametrize("n, expected", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3), (4, math.pi**2 / 2)])
def test_ball_volume_closed_forms(n, expected):
    assert ball_volume(n) == pytest.approx(expected, rel=1e-15)


def test_sphere_area():
    assert float(sphere_area(3, 2.0)) == pytest.approx(16 * math.pi)
    assert float(sphere_area(1, 0.3)) == pytest.approx(2.0)  # two endpoints


@pytest.mark.parametrize("m, n, verdict", [(3, 2, PASS), (2, 2, BOUNDARY), (1.5, 2, FAIL), (1, 1, BOUNDARY)])
def test_power_classification(m, n, verdict):
    assert make_power_profile(m, 1.0, n).classification == verdict


@given(st.floats(1.0, 6.0), st.integers(1, 4), st.floats(1e-12, 0.99))
def test_radial_inverse_round_trip(m, n, s):
    p = make_power_profile(m, 1.0, n)
    r = float(p.inverse(np.array([s]))[0])
    assert r == pytest.approx(s ** (1 / m), rel=1e-12)


def test_power_profile_evaluates_on_points():
    p = make_power_profile(3, 1.0, 2)
    assert float(p(np.array([0.3, 0.4]))) == pytest.approx(0.5**3)


def test_cone_needs_override():
    cone = make_power_profile(1, 1.0, 2)
    rep = validate_phase(cone)
    assert not rep.check("smooth_at_origin").passed
    with pytest.raises(PhaseValidationError):
        rep.require_usable()
    validate_phase(cone.with_override()).require_usable()


@pytest.mark.parametrize("phase", [
    make_power_profile(4, 1.0, 3), make_flat_profile(), make_grid_quadratic(N=201),
    make_staircase_profile([1, 8], [0.5], 0.05).with_override(),
])
def test_catalog_phases_are_usable(phase):
    validate_phase(phase).require_usable()


def test_flat_profile_is_classified_passing():
    assert make_flat_profile().classification == PASS


def test_staircase_is_classified_failing():
    assert make_staircase_profile([1, 8], [0.5], 0.05).classification == FAIL


@pytest.mark.parametrize("kwargs", [
    {"slopes": [8, 1], "breakpoints": [0.5], "smoothing_width": 0.05},
    {"slopes": [1, 8], "breakpoints": [], "smoothing_width": 0.05},
    {"slopes": [1, 8], "breakpoints": [0.5], "smoothing_width": 2.0},
    {"slopes": [0, 8], "breakpoints": [0.5], "smoothing_width": 0.05},
])
def test_staircase_rejects_bad_parameters(kwargs):
    with pytest.raises(SublevelLabError):
        make_staircase_profile(**kwargs)


def test_staircase_derivatives_are_consistent():
    p = make_staircase_profile([1, 8], [0.5], 0.05)
    assert validate_phase(p).check("derivative_consistency").passed


def test_non_convex_grid_is_rejected():
    # x^2 + y^2 - y^4/2 has a saddle ring near |y| = 1
    g = build_grid_phase(
        lambda x, y: x**2 + y**2 - 0.5 * y**4,
        lambda x, y: (2 * x, 2 * y - 2 * y**3),
        lambda x, y: (2.0 + 0 * x, 0.0 * x, 2 - 6 * y**2),
        (-1.0, 1.0, -1.0, 1.0), N=101,
    )
    rep = validate_phase(g)
    assert not rep.check("convexity").passed


def test_grid_p_below_two_is_refused():
    with pytest.raises(SublevelLabError):
        make_grid_quadratic(p=1.0, N=101)


def test_grid_quadratic_fields():
    g = make_grid_quadratic(a=1.0, b=2.0, N=101)
    X, Y = np.meshgrid(g.x, g.y, indexing="ij")
    np.testing.assert_allclose(g.f, X**2 + 2 * Y**2, atol=1e-15)
    np.testing.assert_allclose(g.gy, 4 * Y, atol=1e-14)
    assert np.all(g.hyy == 4.0) and np.all(g.hxy == 0.0)
    assert g.minimizer == pytest.approx((0.0, 0.0), abs=1e-12)
    assert g.omega == pytest.approx(math.pi)


def test_catalog_names_and_lookup():
    assert set(CATALOG) == {"power", "flat", "staircase", "grid2d"}
    p = build_phase("power", m=3, n=2)
    assert p.params["m"] == 3
    assert build_phase("staircase").allow_nonsmooth
    with pytest.raises(SublevelLabError, match="unknown catalog phase"):
        build_phase("spiral")
    with pytest.raises(SublevelLabError, match="unknown parameters"):
        build_phase("flat", m=3)


def test_phases_pickle():
    for name in CATALOG:
        ph = build_phase(name, **({"N": 61} if name == "grid2d" else {}))
        clone = pickle.loads(pickle.dumps(ph))
        assert type(clone) is type(ph)


def test_amplitude_norms():
    c = constant_amplitude(2.0, -3.0)
    assert (c.sup_norm, c.deriv_l1, c.norm_sum) == (3.0, 0.0, 3.0)
    t = linear_taper(2.0)
    assert (t.sup_norm, t.deriv_l1) == (1.0, 1.0)
    assert float(t.a(1.0)) == 0.5


def test_amplitude_from_callable_measures_norms():
    a = amplitude_from_callable(np.sin, np.cos, 2 * math.pi, name="sin")
    assert a.sup_norm == pytest.approx(1.0, abs=1e-6)
    assert a.deriv_l1 == pytest.approx(4.0, rel=1e-10)
    assert not a.monotone


def test_tabulated_amplitude_is_shape_preserving():
    s = np.linspace(0, 1, 11)
    a = tabulated_amplitude(s, 1 - s**2, 1.0)
    assert a.monotone
    assert a.sup_norm == pytest.approx(1.0)
    assert a.deriv_l1 == pytest.approx(1.0, rel=1e-6)


def test_omega_matches_oracle():
    for n in range(1, 7):
        assert make_power_profile(n, 1.0, n).omega == pytest.approx(omega(n), rel=1e-15)
