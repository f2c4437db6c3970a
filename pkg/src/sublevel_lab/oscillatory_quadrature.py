"""Two independent evaluations of ``I(lambda) = int_{S(l)} a(f) e^{i lambda f}``.

The coarea route integrates ``e^{i lambda s} a(s) J(s)`` over heights.  The
direct route integrates over space: a radial integral for radial profiles, a
cellwise midpoint sum on a refined lattice for grid phases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .errors import OutOfRangeError, QuadratureError
from .phase_catalog import (
    AmplitudeProfile,
    GridPhase2D,
    RadialProfile,
    constant_amplitude,
    tabulated_amplitude,
)
from .quadrature import integrate_panels
from .sublevel_geometry import (
    GRID_S_MAX,
    GRID_S_MIN,
    SublevelTable,
    _grid_contour,
    _heights,
    choose_l,
)

DEFAULT_RTOL = 1e-12
# grid phases: spatial route limited to this many oscillation periods over [0, l]
GRID_MAX_PERIODS = 1e3
# heights below the log-to-linear switch are paneled geometrically
LOG_SWITCH_FRACTION = 0.05
LOG_PANELS_PER_DECADE = 4


@dataclass
class OscResult:
    value: complex
    err_estimate: float
    route: str
    lam: float
    panel_count: int
    converged: bool = True

    @property
    def abs(self) -> float:
        return abs(self.value)

    def row(self) -> dict:
        return {
            "lambda": self.lam,
            "re": self.value.real,
            "im": self.value.imag,
            "abs": abs(self.value),
            "err": self.err_estimate,
            "route": self.route,
        }


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if lam == 0.0 or not math.isfinite(lam):
        raise OutOfRangeError("lambda must be a finite nonzero frequency")
    return lam


def _check_trivial_bound(res: OscResult, bound: float) -> OscResult:
    if res.abs > bound * (1 + 1e-9) + res.err_estimate:
        raise QuadratureError(
            f"|I|={res.abs!r} exceeds the trivial bound {bound!r} (route {res.route})", res
        )
    return res


def _finish(res: OscResult, bound: float) -> OscResult:
    if not res.converged:
        raise QuadratureError(
            f"{res.route} quadrature did not converge at lambda={res.lam!r}", res
        )
    return _check_trivial_bound(res, bound)


# --------------------------------------------------------------------------
# coarea route
# --------------------------------------------------------------------------


def _coarea_integrand(table: SublevelTable, amplitude: AmplitudeProfile, lam: float):
    def in_s(s):
        return np.exp(1j * lam * s) * amplitude.a(s) * table.density(s)

    def in_u(u):
        s = np.exp(u)
        return in_s(s) * s

    return in_s, in_u


def oscint_coarea(table: SublevelTable, amplitude: AmplitudeProfile, lam: float,
                  lower: float = 0.0, upper: float | None = None,
                  rtol: float = DEFAULT_RTOL) -> OscResult:
    """``int_lower^upper e^{i lam s} a(s) J(s) ds`` by adaptive panels.

    Heights below ``min(0.05 l, 1/|lam|)`` are integrated in ``log s`` (the
    density may be integrably singular at 0); above, panels are at most half
    an oscillation period wide.  The mass below the first table node is
    taken in closed form.
    """
    lam = _check_lambda(lam)
    l = table.l
    upper = l if upper is None else float(upper)
    if not 0.0 <= lower < upper <= l * (1 + 1e-12):
        raise OutOfRangeError(f"need 0 <= lower < upper <= l, got [{lower!r}, {upper!r}]")
    upper = min(upper, l)
    in_s, in_u = _coarea_integrand(table, amplitude, lam)
    mass = amplitude.sup_norm * float(table.measure(upper) - table.measure(lower))
    atol = rtol * max(mass, 1e-300)

    value = 0.0 + 0.0j
    err = 0.0
    panels = 0
    converged = True
    start = lower
    if lower == 0.0:
        eps_lo = min(float(table.nodes[1]), 1e-9 / max(abs(lam), 1.0) * l)
        if table.density_nodes is not None:
            eps_lo = min(eps_lo, float(table.density_nodes[0]))
        cap = table.mass_below(eps_lo)
        a0, a1 = float(amplitude.a(0.0)), float(amplitude.a(eps_lo))
        value += a0 * cap * np.exp(0.5j * lam * eps_lo)
        err += cap * (0.5 * abs(lam) * eps_lo * amplitude.sup_norm + abs(a1 - a0))
        start = eps_lo

    s_switch = min(upper, max(start, min(LOG_SWITCH_FRACTION * l, 1.0 / abs(lam))))
    if s_switch > start:
        decades = math.log10(s_switch / start)
        k = max(2, int(math.ceil(decades * LOG_PANELS_PER_DECADE)))
        edges = np.linspace(math.log(start), math.log(s_switch), k + 1)
        r = integrate_panels(in_u, edges, rtol=0.0, atol=atol / 2)
        value += r.value
        err += r.err
        panels += r.panels
        converged &= r.converged
    if upper > s_switch:
        k = max(2, int(math.ceil(abs(lam) * (upper - s_switch) / math.pi)))
        edges = np.linspace(s_switch, upper, k + 1)
        r = integrate_panels(in_s, edges, rtol=0.0, atol=atol / 2)
        value += r.value
        err += r.err
        panels += r.panels
        converged &= r.converged

    if table.density_error is not None:
        # sampled density: fold its estimated error into the result
        s = np.linspace(max(lower, GRID_S_MIN * l), upper, 2049)
        err += amplitude.sup_norm * float(np.trapezoid(table.density_error_at(s), s))
        s1 = float(table.density_nodes[0])
        if lower < s1:
            # below the first contour the density is a power-law model; check
            # its mass against the cell-counted measure
            err += amplitude.sup_norm * abs(table.mass_below(s1) - float(table.measure(s1)))
    res = OscResult(complex(value), float(err), "coarea", lam, panels, converged)
    return _finish(res, amplitude.sup_norm * float(table.measure(upper)))


# --------------------------------------------------------------------------
# direct route
# --------------------------------------------------------------------------


def _radial_direct(profile: RadialProfile, amplitude: AmplitudeProfile, lam: float,
                   l: float, rtol: float) -> OscResult:
    n = profile.dim_n
    area_const = n * profile.omega

    def integrand(r):
        F = profile.F(r)
        return amplitude.a(F) * np.exp(1j * lam * F) * area_const * r ** (n - 1)

    # equal phase increments of pi/4 per panel
    k = max(4, int(math.ceil(4 * abs(lam) * l / math.pi)))
    heights = np.linspace(0.0, l, k + 1)
    edges = profile.inverse(heights)
    edges = np.unique(np.concatenate([edges, np.linspace(0.0, edges[-1], 9)]))
    mass = amplitude.sup_norm * profile.omega * edges[-1] ** n
    r = integrate_panels(integrand, edges, rtol=0.0, atol=rtol * mass)
    res = OscResult(r.value, r.err, "direct", lam, r.panels, r.converged)
    return _finish(res, mass)


def _lattice_box(phase: GridPhase2D, l: float):
    inside = phase.f <= l
    ii = np.flatnonzero(inside.any(1))
    jj = np.flatnonzero(inside.any(0))
    if ii.size == 0:
        raise OutOfRangeError("empty sublevel set")
    i0, i1 = max(ii[0] - 1, 0), min(ii[-1] + 1, phase.N - 1)
    j0, j1 = max(jj[0] - 1, 0), min(jj[-1] + 1, phase.N - 1)
    return phase.x[i0], phase.x[i1], phase.y[j0], phase.y[j1]


CUT_REFINE = 4  # sub-cells per axis in cells cut by the boundary of S(l)


def _lattice_sum(phase, weight, lam, l, corners, X, Y, hx, hy, xc, yc, fc):
    """Cellwise midpoint sum; cells cut by ``f = l`` are refined with exact samples."""
    frac = kernels.cell_fractions(corners, l)
    full = frac == 1.0
    total = np.sum(weight(xc[full], yc[full], fc[full]) * np.exp(1j * lam * fc[full])) * hx * hy
    ci, cj = np.nonzero((frac > 0.0) & (frac < 1.0))
    if ci.size:
        k = CUT_REFINE
        u = np.arange(k + 1) / k
        sx = X[ci, cj][:, None, None] + hx * u[None, :, None]
        sy = Y[ci, cj][:, None, None] + hy * u[None, None, :]
        sx, sy = np.broadcast_arrays(sx, sy)
        sf = np.asarray(phase.func(sx, sy), dtype=float)
        sub = kernels.quad_fractions(sf[:, :-1, :-1], sf[:, 1:, :-1], sf[:, 1:, 1:], sf[:, :-1, 1:], l)
        mx = 0.5 * (sx[:, :-1, :-1] + sx[:, 1:, 1:])
        my = 0.5 * (sy[:, :-1, :-1] + sy[:, 1:, 1:])
        mf = np.asarray(phase.func(mx, my), dtype=float)
        total += np.sum(sub * weight(mx, my, mf) * np.exp(1j * lam * mf)) * hx * hy / k ** 2
    return total


def _grid_direct_sum(phase: GridPhase2D, weight: Callable, lam: float, l: float,
                     h_max: float | None = None, rows_per_chunk: int = 256):
    """Midpoint sums at spacing ``h`` and ``2h`` over ``S(l)``; returns (I_h, I_2h, cells)."""
    if phase.func is None:
        raise OutOfRangeError("spatial quadrature needs the phase callable")
    x0, x1, y0, y1 = _lattice_box(phase, l)
    inside = phase.f <= l
    G = float(np.max(np.hypot(phase.gx, phase.gy)[inside]))
    hx, hy = phase.spacing
    h = min(hx, hy, math.pi / (4 * abs(lam) * max(G, 1e-300)))
    if h_max is not None:
        h = min(h, h_max)
    nx = 2 * int(math.ceil((x1 - x0) / (2 * h)))
    ny = 2 * int(math.ceil((y1 - y0) / (2 * h)))
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    xs = x0 + hx * np.arange(nx + 1)
    ys = y0 + hy * np.arange(ny + 1)
    xc = x0 + hx * (np.arange(nx) + 0.5)
    yc = y0 + hy * (np.arange(ny) + 0.5)
    fine = 0.0 + 0.0j
    coarse = 0.0 + 0.0j
    step = max(2, rows_per_chunk - rows_per_chunk % 2)
    for a in range(0, nx, step):
        b = min(a + step, nx)
        X, Y = np.meshgrid(xs[a:b + 1], ys, indexing="ij")
        corners = np.asarray(phase.func(X, Y), dtype=float)
        Xc, Yc = np.meshgrid(xc[a:b], yc, indexing="ij")
        fc = np.asarray(phase.func(Xc, Yc), dtype=float)
        fine += _lattice_sum(phase, weight, lam, l, corners, X[:-1, :-1], Y[:-1, :-1],
                             hx, hy, Xc, Yc, fc)
        # doubled cells: corners at even offsets, centres at odd lattice points
        c2 = corners[::2, ::2]
        coarse += _lattice_sum(phase, weight, lam, l, c2, X[:-1:2, :-1:2], Y[:-1:2, :-1:2],
                               2 * hx, 2 * hy, X[1::2, 1::2], Y[1::2, 1::2], corners[1::2, 1::2])
    return complex(fine), complex(coarse), nx * ny


def _grid_direct(phase: GridPhase2D, weight: Callable, sup: float, lam: float, l: float,
                 t_l: float) -> OscResult:
    if abs(lam) * l / (2 * math.pi) > GRID_MAX_PERIODS:
        raise OutOfRangeError(
            f"lambda={lam!r} exceeds {GRID_MAX_PERIODS:g} periods on [0, l]; use the coarea route"
        )
    fine, coarse, cells = _grid_direct_sum(phase, weight, lam, l)
    # second-order sums: Richardson extrapolation with the usual error estimate
    value = fine + (fine - coarse) / 3.0
    res = OscResult(value, abs(fine - coarse) / 3.0, "direct", lam, cells)
    return _check_trivial_bound(res, sup * t_l * (1 + 1e-3))


def _amp_weight(amplitude: AmplitudeProfile):
    def w(x, y, fv):
        return amplitude.a(fv)
    return w


def oscint_direct(phase, amplitude: AmplitudeProfile, lam: float, l: float | None = None,
                  rtol: float = DEFAULT_RTOL) -> OscResult:
    """``I(lambda)`` by spatial quadrature, independent of any sublevel table."""
    lam = _check_lambda(lam)
    if l is None:
        l = choose_l(phase)
    if isinstance(phase, RadialProfile):
        return _radial_direct(phase, amplitude, lam, l, rtol)
    t_l = kernels.sublevel_area(phase.f, *phase.spacing, l)[0]
    return _grid_direct(phase, _amp_weight(amplitude), amplitude.sup_norm, lam, l, t_l)


# --------------------------------------------------------------------------
# effective amplitude for weights that are not functions of f
# --------------------------------------------------------------------------


def _sample_eta(phase: GridPhase2D, eta: Callable) -> np.ndarray:
    X, Y = np.meshgrid(phase.x, phase.y, indexing="ij")
    return np.asarray(eta(X, Y), dtype=float) * np.ones_like(phase.f)


def effective_amplitude(phase: GridPhase2D, eta: Callable, s, l: float | None = None):
    """Average of ``eta`` over ``{f = s}`` weighted by ``1/|grad f|``."""
    scalar = np.ndim(s) == 0
    s = _heights(phase, s, l)
    eta_grid = _sample_eta(phase, eta)
    out = np.empty_like(s)
    for k, v in enumerate(s):
        c = _grid_contour(phase, v, eta_grid)
        out[k] = c[kernels.ETA_SLOT] / c[kernels.J_SLOT]
    return float(out[0]) if scalar else out


@dataclass
class Remark3Result:
    lam: float
    spatial_eta: complex
    spatial_avg: complex
    coarea_avg: complex
    residual: float
    coarea_residual: float
    sup_eta: float
    max_avg: float

    @property
    def averaging_ok(self) -> bool:
        return self.max_avg <= self.sup_eta * (1 + 1e-9)


def verify_remark3_identity(phase: GridPhase2D, eta: Callable, lam: float,
                            table: SublevelTable | None = None, nodes: int = 257) -> Remark3Result:
    """Compare ``int eta e^{i lam f}`` with ``int a(f) e^{i lam f}``, ``a`` the level-set average.

    ``residual`` compares the two spatial integrals on one lattice (so it
    vanishes identically when ``eta`` is constant); ``coarea_residual``
    compares the spatial ``eta`` integral with the 1D coarea evaluation of
    the averaged amplitude.
    """
    from .sublevel_geometry import build_sublevel_table_grid

    lam = _check_lambda(lam)
    if table is None:
        table = build_sublevel_table_grid(phase)
    l = table.l
    s = np.concatenate([
        np.geomspace(GRID_S_MIN * l, 0.05 * l, nodes // 4, endpoint=False),
        np.linspace(0.05 * l, GRID_S_MAX * l, nodes - nodes // 4),
    ])
    a_vals = effective_amplitude(phase, eta, s, l)
    eta_grid = _sample_eta(phase, eta)
    inside = phase.f <= l
    sup_eta = float(np.max(np.abs(eta_grid[inside])))
    heights = np.concatenate([[0.0], s, [l]])
    vals = np.concatenate([[a_vals[0]], a_vals, [a_vals[-1]]])
    amp = tabulated_amplitude(heights, vals, l, name="level-set average")

    def eta_weight(x, y, fv):
        return np.asarray(eta(x, y), dtype=float) * np.ones_like(fv)

    if _is_constant(eta_grid[inside]):
        amp_const = constant_amplitude(l, float(eta_grid[inside][0]))
        amp = amp_const
    t_l = float(table.t_l)
    direct_eta = _grid_direct(phase, eta_weight, sup_eta, lam, l, t_l)
    direct_avg = _grid_direct(phase, _amp_weight(amp), amp.sup_norm, lam, l, t_l)
    coarea_avg = oscint_coarea(table, amp, lam)
    scale = max(abs(direct_eta.value), 1e-300)
    return Remark3Result(
        lam=lam,
        spatial_eta=direct_eta.value,
        spatial_avg=direct_avg.value,
        coarea_avg=coarea_avg.value,
        residual=abs(direct_eta.value - direct_avg.value) / scale,
        coarea_residual=abs(direct_eta.value - coarea_avg.value) / scale,
        sup_eta=sup_eta,
        max_avg=float(np.max(np.abs(a_vals))),
    )


def _is_constant(v: np.ndarray) -> bool:
    return bool(np.all(v == v.flat[0]))
