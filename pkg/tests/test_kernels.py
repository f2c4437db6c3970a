"""The numba kernels and their numpy fallbacks must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublevel_lab import _backend, kernels
from sublevel_lab.phase_catalog import make_grid_quadratic


@pytest.fixture(scope="module")
def g():
    return make_grid_quadratic(a=1.0, b=3.0, p=2.4, N=121)


def _fields(g, eta=None):
    eta = np.ones_like(g.f) if eta is None else eta
    return [np.ascontiguousarray(a, dtype=float) for a in (g.x, g.y, g.f, g.gx, g.gy, g.hxx, g.hxy, g.hyy, eta)]


@given(st.floats(0.02, 0.9))
def test_contour_parity(g, level):
    X, Y = np.meshgrid(g.x, g.y, indexing="ij")
    args = _fields(g, np.cos(X) * (1 + Y**2))
    a = kernels._contour_numba(*args, level)
    b = kernels._contour_numpy(*args, level)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@given(st.floats(0.02, 0.9), st.integers(1, 6))
def test_area_parity(g, level, k):
    hx, hy = g.spacing
    a = kernels._sublevel_area_numba(g.f, hx, hy, level, k)
    b = kernels._sublevel_area_numpy(g.f, hx, hy, level, k)
    assert a[1] == b[1]
    assert a[0] == pytest.approx(b[0], rel=1e-13)


@given(st.floats(0.02, 0.9))
def test_cell_fraction_parity(g, level):
    np.testing.assert_allclose(kernels._cell_fractions_numba(g.f, level),
                               kernels._cell_fractions_numpy(g.f, level), atol=1e-14)


def test_quad_fractions_agrees_with_cells(g):
    f = g.f
    want = kernels._cell_fractions_numpy(f, 0.3)
    got = kernels.quad_fractions(f[:-1, :-1], f[1:, :-1], f[1:, 1:], f[:-1, 1:], 0.3)
    np.testing.assert_allclose(got, want, atol=1e-15)


def test_circle_length_and_density():
    # f = x^2 + y^2: level s is a circle of radius sqrt(s); |grad f| = 2 sqrt(s)
    g = make_grid_quadratic(a=1.0, b=1.0, N=201)
    s = 0.49
    out = kernels.contour_integrals(*_fields(g), s)
    assert out[kernels.LEN_SLOT] == pytest.approx(2 * np.pi * 0.7, rel=1e-8)
    assert out[kernels.J_SLOT] == pytest.approx(np.pi, rel=1e-9)


def test_backend_flag_validation(monkeypatch):
    monkeypatch.setenv(_backend.BACKEND_ENV, "fortran")
    with pytest.raises(ValueError):
        _backend.requested_backend()
    monkeypatch.setenv(_backend.BACKEND_ENV, "numpy")
    assert not _backend.use_numba()


def test_numpy_backend_end_to_end():
    code = (
        "from sublevel_lab import _backend, build_sublevel_table, make_grid_quadratic;"
        "assert not _backend.use_numba();"
        "t = build_sublevel_table(make_grid_quadratic(N=121));"
        "print(repr(float(t.measure(0.5))))"
    )
    env = dict(os.environ, SUBLEVEL_LAB_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    env["SUBLEVEL_LAB_BACKEND"] = "numba"
    ref = subprocess.run([sys.executable, "-c", code.replace("assert not", "assert")], env=env,
                         capture_output=True, text=True, check=True)
    assert float(out.stdout) == pytest.approx(float(ref.stdout), rel=1e-13)
