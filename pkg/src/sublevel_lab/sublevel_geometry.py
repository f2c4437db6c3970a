"""Sublevel-set measures, the coarea density and the geometric assumption.

``t(eps) = |{f <= eps}|`` is stored as a :class:`SublevelTable`.  Radial
tables also carry exact evaluators derived from the profile (root-finding on
``F``); grid tables interpolate their samples with a shape-preserving cubic
in log-log coordinates, where power-law behaviour near the minimum becomes
linear.

The density ``J(s) = t'(s)`` and its derivative come either from closed
radial forms or from marching-squares contour integrals.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property, partial
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import GeometryError, MonotonicityError, OutOfRangeError
from .phase_catalog import (
    L_MARGIN,
    GridPhase2D,
    RadialProfile,
    ball_volume,
    radial_criterion_margin,
    sphere_area,
    validate_phase,
)
from .roots import invert_increasing

EPS = np.finfo(float).eps
DEFAULT_K = 512
CONCAVITY_RTOL = 1e-9
RADIAL_ATOL = 1e-12
GRID_DENSITY_RTOL = 1e-3
# grid contour quantities are trusted only on this fraction of (0, l)
GRID_S_MIN, GRID_S_MAX = 1e-3, 0.999


# --------------------------------------------------------------------------
# exact radial evaluators (module level so tables pickle)
# --------------------------------------------------------------------------


def _radial_measure(profile: RadialProfile, eps):
    eps = np.asarray(eps, dtype=float)
    return profile.omega * profile.inverse(np.maximum(eps, 0.0)) ** profile.dim_n


def _radial_measure_inverse(profile: RadialProfile, v):
    v = np.asarray(v, dtype=float)
    r = (np.maximum(v, 0.0) / profile.omega) ** (1.0 / profile.dim_n)
    return np.asarray(profile.F(r), dtype=float)


def _radial_density(profile: RadialProfile, s):
    r = profile.inverse(np.asarray(s, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        return sphere_area(profile.dim_n, r) / profile.dF(r)


def radial_divergence_terms(profile: RadialProfile, r):
    """Divergence-form integrand for ``J'`` on the sphere of radius ``r``.

    With ``grad f = F' e_r`` and ``H = F'' e_r e_r^T + (F'/r)(I - e_r e_r^T)``
    the integrand ``(|grad f|^2 lap f - 2 grad f H grad f^T)/|grad f|^5`` is
    constant on the sphere.  Returns ``(J', scale)`` where ``scale`` bounds
    the magnitude of the cancelling terms.
    """
    r = np.asarray(r, dtype=float)
    n = profile.dim_n
    d1 = np.asarray(profile.dF(r), dtype=float)
    d2 = np.asarray(profile.d2F(r), dtype=float)
    area = sphere_area(n, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        tangential = (n - 1) * d1 / r if n > 1 else np.zeros_like(r)
        lap = d2 + tangential
        g2 = d1 * d1
        num = g2 * lap - 2.0 * g2 * d2
        mag = g2 * (np.abs(d2) + tangential + 2.0 * np.abs(d2))
        den = d1 ** 5
        return area * num / den, area * mag / den


def radial_density_derivative(profile: RadialProfile, s):
    r = profile.inverse(np.asarray(s, dtype=float))
    return radial_divergence_terms(profile, r)[0]


def radial_density_derivative_chain(profile: RadialProfile, s):
    """``d/ds [n w r^{n-1}/F'(r)]`` through ``r = F^{-1}(s)`` (closed form)."""
    n = profile.dim_n
    r = profile.inverse(np.asarray(s, dtype=float))
    d1 = profile.dF(r)
    d2 = profile.d2F(r)
    w = ball_volume(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        return n * w * r ** (n - 2) * ((n - 1) * d1 - r * d2) / d1 ** 3


# --------------------------------------------------------------------------
# the table
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SublevelTable:
    """Samples ``t(nodes)`` of the sublevel measure on ``[0, l]``.

    ``exact_*`` evaluators, when present, take precedence over the
    interpolant.  ``abs_error`` holds a per-node error bound for estimated
    (grid) tables and is ``None`` for exact ones.
    """

    nodes: np.ndarray
    values: np.ndarray
    dim_n: int
    l: float
    kind: str = "radial"
    phase_name: str = ""
    abs_error: np.ndarray | None = None
    exact_measure: Callable | None = None
    exact_inverse: Callable | None = None
    exact_density: Callable | None = None
    density_nodes: np.ndarray | None = None
    density_values: np.ndarray | None = None
    density_slopes: np.ndarray | None = None
    density_error: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3 or nodes.shape != values.shape:
            raise GeometryError("table needs matching 1-D node and value arrays of length >= 3")
        if nodes[0] != 0.0 or values[0] != 0.0:
            raise GeometryError("table must start at t(0) = 0")
        if np.any(np.diff(nodes) <= 0):
            raise MonotonicityError("table nodes must be strictly increasing")
        if np.any(np.diff(values) <= 0):
            k = int(np.flatnonzero(np.diff(values) <= 0)[0])
            raise MonotonicityError(
                f"sublevel measure not strictly increasing near eps={nodes[k + 1]:.6g}"
            )
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "l", float(self.l))

    @property
    def omega(self) -> float:
        return ball_volume(self.dim_n)

    @property
    def t_l(self) -> float:
        return float(self.values[-1])

    @property
    def max_error(self) -> float:
        return 0.0 if self.abs_error is None else float(np.max(self.abs_error))

    # log-log interpolant phi(u) = log t(e^u) on the positive nodes
    @cached_property
    def _phi(self) -> PchipInterpolator:
        return PchipInterpolator(np.log(self.nodes[1:]), np.log(self.values[1:]), extrapolate=False)

    @cached_property
    def _dphi(self):
        return self._phi.derivative()

    @cached_property
    def _jlog(self) -> PchipInterpolator:
        return PchipInterpolator(np.log(self.density_nodes), np.log(self.density_values))

    def _sampled_density(self, s: np.ndarray) -> np.ndarray:
        # log-log interpolation of tabulated J, power-law continuation outside
        u = np.log(s)
        lo, hi = np.log(self.density_nodes[0]), np.log(self.density_nodes[-1])
        uc = np.clip(u, lo, hi)
        slope = self._jlog.derivative()(uc)
        return np.exp(self._jlog(uc) + slope * (u - uc))

    @cached_property
    def _tail_power(self) -> float:
        return float(self._dphi(np.log(self.nodes[1])))

    def _check_range(self, eps):
        if np.any(eps > self.l * (1 + 1e-12)):
            raise OutOfRangeError(f"height {float(np.max(eps))!r} above table cutoff l={self.l!r}")

    def measure(self, eps) -> np.ndarray:
        """``t(eps)``; zero for ``eps <= 0``."""
        eps = np.asarray(eps, dtype=float)
        self._check_range(eps)
        if self.exact_measure is not None:
            return np.asarray(self.exact_measure(eps), dtype=float)
        out = np.zeros_like(eps)
        e1, t1 = self.nodes[1], self.values[1]
        low = (eps > 0) & (eps < e1)
        mid = eps >= e1
        out[low] = t1 * (eps[low] / e1) ** self._tail_power
        u = np.log(np.minimum(eps[mid], self.l))
        out[mid] = np.exp(self._phi(u))
        return out

    def inverse(self, v) -> np.ndarray:
        """``t^{-1}(v)`` for ``0 <= v <= t(l)``."""
        v = np.asarray(v, dtype=float)
        if np.any(v > self.t_l * (1 + 1e-12)) or np.any(v < 0):
            raise OutOfRangeError(f"measure outside [0, t(l)={self.t_l!r}]")
        if self.exact_inverse is not None:
            return np.asarray(self.exact_inverse(v), dtype=float)
        out = np.zeros_like(v)
        e1, t1 = self.nodes[1], self.values[1]
        low = (v > 0) & (v < t1)
        mid = v >= t1
        out[low] = e1 * (v[low] / t1) ** (1.0 / self._tail_power)
        if np.any(mid):
            target = np.log(np.minimum(v[mid], self.t_l))
            u = invert_increasing(self._phi, target, np.log(e1), np.log(self.l), self._dphi)
            out[mid] = np.exp(u)
        return out

    def density(self, s) -> np.ndarray:
        """``J(s) = t'(s)`` for ``0 < s <= l``."""
        s = np.asarray(s, dtype=float)
        self._check_range(s)
        if self.exact_density is not None:
            return np.asarray(self.exact_density(s), dtype=float)
        if self.density_nodes is not None:
            out = np.full_like(s, np.nan)
            pos = s > 0
            out[pos] = self._sampled_density(s[pos])
            return out
        out = np.full_like(s, np.nan)
        e1, t1 = self.nodes[1], self.values[1]
        p = self._tail_power
        low = (s > 0) & (s < e1)
        mid = s >= e1
        out[low] = p * t1 * (s[low] / e1) ** p / s[low]
        u = np.log(np.minimum(s[mid], self.l))
        out[mid] = np.exp(self._phi(u)) * self._dphi(u) / s[mid]
        return out

    def mass_below(self, eps: float) -> float:
        """``int_0^eps J``; equals ``t(eps)`` except for sampled-density tables."""
        if self.density_nodes is None or self.exact_density is not None:
            return float(self.measure(eps))
        s1 = float(self.density_nodes[0])
        if eps > s1:
            raise OutOfRangeError("mass_below is only used below the first density node")
        p = float(self._jlog.derivative()(np.log(s1)))
        J1 = float(self.density_values[0])
        return J1 * s1 * (eps / s1) ** (p + 1) / (p + 1)

    def density_error_at(self, s) -> np.ndarray:
        """Estimated absolute error of ``J`` (zero for exact densities)."""
        s = np.asarray(s, dtype=float)
        if self.density_error is None:
            return np.zeros_like(s)
        return np.interp(s, self.density_nodes, self.density_error)

    def error_at(self, eps) -> np.ndarray:
        """Interpolated absolute error bound of ``t`` (zero for exact tables)."""
        eps = np.asarray(eps, dtype=float)
        if self.abs_error is None:
            return np.zeros_like(eps)
        return np.interp(eps, self.nodes, self.abs_error)

    def to_csv(self, path, jprime: np.ndarray | None = None) -> None:
        """Write ``epsilon,t,J,Jprime`` rows at the nodes (``nan`` where undefined)."""
        J = np.full_like(self.nodes, np.nan)
        with np.errstate(all="ignore"):
            J[1:] = self.density(self.nodes[1:])
        Jp = np.full_like(self.nodes, np.nan)
        if jprime is not None:
            Jp = np.asarray(jprime, dtype=float)
        elif self.density_slopes is not None:
            Jp[np.isin(self.nodes, self.density_nodes)] = self.density_slopes
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epsilon", "t", "J", "Jprime"])
            for row in zip(self.nodes, self.values, J, Jp):
                w.writerow([_fmt(v) for v in row])


def _fmt(v: float) -> str:
    return "%.17g" % v


def table_nodes(eps_lo: float, l: float, K: int = DEFAULT_K) -> np.ndarray:
    """``0``, then ``K//2`` log-spaced heights up to ``0.05 l``, then linear to ``l``."""
    if K < 8:
        raise GeometryError("need at least 8 table nodes")
    knee = 0.05 * l
    eps_lo = min(eps_lo, 1e-6 * l)
    n_log = K // 2
    logs = np.geomspace(eps_lo, knee, n_log, endpoint=False)
    lin = np.linspace(knee, l, K - n_log)
    return np.concatenate([[0.0], logs, lin])


def build_sublevel_table_radial(profile: RadialProfile, l: float | None = None,
                                K: int = DEFAULT_K) -> SublevelTable:
    """Exact radial table ``t(eps) = w_n F^{-1}(eps)^n``."""
    validate_phase(profile).require_usable()
    if l is None:
        l = choose_l(profile)
    FR = float(profile.F(profile.R))
    if not 0 < l < FR:
        raise OutOfRangeError(f"cutoff l={l!r} must lie in (0, F(R)={FR!r})")
    n = profile.dim_n
    r_l = float(profile.inverse(l))
    eps_lo = max(float(profile.F(r_l * 1e-16 ** (1.0 / n))), 1e-300)
    nodes = table_nodes(eps_lo, l, K)
    values = _radial_measure(profile, nodes)
    return SublevelTable(
        nodes=nodes, values=values, dim_n=n, l=l, kind="radial",
        phase_name=profile.name,
        exact_measure=partial(_radial_measure, profile),
        exact_inverse=partial(_radial_measure_inverse, profile),
        exact_density=partial(_radial_density, profile),
    )


def _check_interior(phase: GridPhase2D, l: float) -> None:
    f = phase.f
    ring = np.concatenate([f[0, :], f[-1, :], f[:, 0], f[:, -1]])
    if np.any(ring <= l):
        raise GeometryError(f"sublevel set S({l:.6g}) touches the domain boundary")


def build_sublevel_table_grid(phase: GridPhase2D, l: float | None = None,
                              K: int = DEFAULT_K) -> SublevelTable:
    """Grid table by cell counting with sub-cell refinement of cut cells."""
    validate_phase(phase).require_usable()
    if l is None:
        l = choose_l(phase)
    _check_interior(phase, l)
    hx, hy = phase.spacing
    nodes = table_nodes(1e-4 * l, l, K)
    values = np.zeros_like(nodes)
    err = np.zeros_like(nodes)
    for k, eps in enumerate(nodes[1:], start=1):
        area, nb = kernels.sublevel_area(phase.f, hx, hy, eps)
        values[k] = area
        err[k] = hx * hy * nb / 10.0
    inside = (nodes >= GRID_S_MIN * l) & (nodes <= GRID_S_MAX * l)
    jn = nodes[inside]
    contour = np.array([_grid_contour(phase, v) for v in jn])
    J = contour[:, kernels.J_SLOT]
    # error estimate: compare against the same rule on every other sample
    coarse = _coarsened(phase)
    J_half = np.array([_grid_contour(coarse, v)[kernels.J_SLOT] for v in jn])
    return SublevelTable(
        nodes=nodes, values=values, dim_n=2, l=l, kind="grid",
        phase_name=phase.name, abs_error=err,
        density_nodes=jn, density_values=J,
        density_slopes=contour[:, kernels.DIV_SLOT],
        density_error=np.abs(J - J_half),
    )


def _coarsened(phase: GridPhase2D) -> GridPhase2D:
    from dataclasses import replace

    sl = (slice(None, None, 2), slice(None, None, 2))
    return replace(
        phase, x=phase.x[::2], y=phase.y[::2], f=phase.f[sl], gx=phase.gx[sl], gy=phase.gy[sl],
        hxx=phase.hxx[sl], hxy=phase.hxy[sl], hyy=phase.hyy[sl],
    )


def build_sublevel_table(phase, l: float | None = None, K: int = DEFAULT_K) -> SublevelTable:
    if isinstance(phase, RadialProfile):
        return build_sublevel_table_radial(phase, l, K)
    return build_sublevel_table_grid(phase, l, K)


# --------------------------------------------------------------------------
# coarea density
# --------------------------------------------------------------------------


def _grid_contour(phase: GridPhase2D, s: float, eta=None) -> np.ndarray:
    if eta is None:
        eta = np.ones_like(phase.f)
    return kernels.contour_integrals(
        phase.x, phase.y, phase.f, phase.gx, phase.gy,
        phase.hxx, phase.hxy, phase.hyy, eta, s,
    )


def _heights(phase, s, l):
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if l is None:
        l = choose_l(phase)
    if np.any(s <= 0) or np.any(s > l):
        raise OutOfRangeError(f"height must lie in (0, l={l!r}]")
    if isinstance(phase, GridPhase2D):
        lo, hi = GRID_S_MIN * l, GRID_S_MAX * l
        if np.any(s < lo * (1 - 1e-12)) or np.any(s > hi * (1 + 1e-12)):
            raise OutOfRangeError(
                f"grid contour heights are limited to [{lo:.6g}, {hi:.6g}]"
            )
    return s


def coarea_density(phase, s, l: float | None = None):
    """``J(s) = int_{f = s} 1/|grad f|``; radial closed form or contour sum."""
    scalar = np.ndim(s) == 0
    s = _heights(phase, s, l)
    if isinstance(phase, RadialProfile):
        out = _radial_density(phase, s)
    else:
        out = np.array([_grid_contour(phase, v)[kernels.J_SLOT] for v in s])
    return float(out[0]) if scalar else out


def coarea_density_derivative(phase, s, l: float | None = None):
    """``J'(s)`` as the level-set integral of ``div X / |grad f|``."""
    scalar = np.ndim(s) == 0
    s = _heights(phase, s, l)
    if isinstance(phase, RadialProfile):
        out = radial_density_derivative(phase, s)
    else:
        out = np.array([_grid_contour(phase, v)[kernels.DIV_SLOT] for v in s])
    return float(out[0]) if scalar else out


# --------------------------------------------------------------------------
# the geometric assumption
# --------------------------------------------------------------------------


@dataclass
class RouteResult:
    name: str
    applicable: bool
    passed: bool | None
    worst: float
    where: float
    tolerance: float = 0.0
    note: str = ""


@dataclass
class AssumptionVerdict:
    concavity_route: RouteResult
    radial_route: RouteResult
    divergence_route: RouteResult

    @property
    def routes(self) -> list[RouteResult]:
        return [self.concavity_route, self.radial_route, self.divergence_route]

    @property
    def agree(self) -> bool:
        verdicts = {r.passed for r in self.routes if r.applicable}
        return len(verdicts) <= 1

    @property
    def overall(self) -> bool:
        return all(r.passed for r in self.routes if r.applicable)

    def as_dict(self) -> dict:
        return {
            "overall": "pass" if self.overall else "fail",
            "agree": self.agree,
            "routes": {
                r.name: {
                    "applicable": r.applicable,
                    "passed": r.passed,
                    "worst": r.worst,
                    "where": r.where,
                    "tolerance": r.tolerance,
                    "note": r.note,
                }
                for r in self.routes
            },
        }


def second_differences(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Jumps of the secant slope at interior nodes and their magnitude scale."""
    slope = np.diff(y) / np.diff(x)
    return np.diff(slope), np.abs(slope[1:]) + np.abs(slope[:-1])


def _concavity_route(table: SublevelTable) -> RouteResult:
    x, y = table.nodes, table.values
    if table.abs_error is None:
        d2, scale = second_differences(x, y)
        tol = CONCAVITY_RTOL * scale
        note = ""
    else:
        # estimated tables: coarse node subset, tolerance from the error bars
        idx = np.unique(np.concatenate([np.arange(0, x.size, 8), [x.size - 1]]))
        x, y, e = x[idx], y[idx], table.abs_error[idx]
        d2, scale = second_differences(x, y)
        h = np.diff(x)
        noise = (e[1:-1] + e[2:]) / h[1:] + (e[:-2] + e[1:-1]) / h[:-1]
        tol = CONCAVITY_RTOL * scale + noise
        note = "tolerance includes grid error bars"
    excess = d2 - tol
    k = int(np.argmax(excess))
    return RouteResult("concavity", True, bool(excess[k] <= 0), float(d2[k]), float(x[k + 1]),
                       float(tol[k]), note)


def _radial_route(phase, table: SublevelTable) -> RouteResult:
    if not isinstance(phase, RadialProfile):
        return RouteResult("radial", False, None, float("nan"), float("nan"),
                           note="phase is not radial")
    r_l = float(phase.inverse(table.l))
    r = np.unique(np.concatenate([np.geomspace(r_l * 1e-8, r_l, 2000), np.linspace(0, r_l, 2001)[1:]]))
    margin, scale = radial_criterion_margin(phase, r)
    tol = RADIAL_ATOL * (1 + scale)
    excess = margin - tol
    k = int(np.argmax(excess))
    return RouteResult("radial", True, bool(excess[k] <= 0), float(margin[k]), float(r[k]), float(tol[k]))


def _divergence_route(phase, table: SublevelTable) -> RouteResult:
    l = table.l
    if isinstance(phase, RadialProfile):
        s = table.nodes[1:-1]
        val, scale = radial_divergence_terms(phase, phase.inverse(s))
        # F' underflows for very flat profiles; those heights carry no information
        ok = np.isfinite(val) & np.isfinite(scale)
        s, val, scale = s[ok], val[ok], scale[ok]
        tol = CONCAVITY_RTOL * scale
        note = "" if ok.all() else f"{int((~ok).sum())} heights skipped (F' underflow)"
    else:
        s = np.geomspace(1e-2 * l, 0.99 * l, 40)
        out = np.array([_grid_contour(phase, v) for v in s])
        val = out[:, kernels.DIV_SLOT]
        tol = GRID_DENSITY_RTOL * out[:, kernels.J_SLOT] / s
        note = "grid contour heights in [0.01 l, 0.99 l]"
    excess = val - tol
    k = int(np.argmax(excess))
    return RouteResult("divergence", True, bool(excess[k] <= 0), float(val[k]), float(s[k]),
                       float(tol[k]), note)


def check_geometric_assumption(phase, table: SublevelTable) -> AssumptionVerdict:
    """Decide concavity of ``t`` on ``[0, l]`` by three independent routes."""
    return AssumptionVerdict(
        concavity_route=_concavity_route(table),
        radial_route=_radial_route(phase, table),
        divergence_route=_divergence_route(phase, table),
    )


@dataclass
class BandResult:
    passed: bool
    h: float
    worst_increase: float
    where: float


def band_measure_monotonicity(table: SublevelTable, h: float, samples: int = 513) -> BandResult:
    """Check that ``y -> t(y + h) - t(y)`` is non-increasing on ``[0, l - h]``."""
    l = table.l
    if not 0 < h <= l:
        raise OutOfRangeError(f"band width must lie in (0, l={l!r}]")
    if h >= l * (1 - 1e-12):
        return BandResult(True, h, 0.0, 0.0)
    y = np.linspace(0.0, l - h, samples)
    band = table.measure(np.minimum(y + h, l)) - table.measure(y)
    rise = np.diff(band)
    tol = CONCAVITY_RTOL * np.max(np.abs(band)) + 4 * table.max_error
    k = int(np.argmax(rise))
    return BandResult(bool(rise[k] <= tol), h, float(rise[k]), float(y[k]))


# --------------------------------------------------------------------------
# cutoff height
# --------------------------------------------------------------------------


def choose_l(phase) -> float:
    """Largest height whose sublevel set fits in the domain shrunk by 5%.

    Radial: ``F(0.95 R)``.  Grid: the minimum of ``f`` on the boundary of the
    rectangle scaled by 0.95 about the minimizer.
    """
    if isinstance(phase, RadialProfile):
        return float(phase.F(L_MARGIN * phase.R))
    x0, x1, y0, y1 = phase.domain
    mx, my = phase.minimizer
    hx, hy = phase.spacing
    if not (x0 + hx <= mx <= x1 - hx and y0 + hy <= my <= y1 - hy):
        raise GeometryError("minimizer lies on the domain boundary; no interior sublevel sets")
    a0, a1 = mx + L_MARGIN * (x0 - mx), mx + L_MARGIN * (x1 - mx)
    b0, b1 = my + L_MARGIN * (y0 - my), my + L_MARGIN * (y1 - my)
    func = phase.func
    if func is None:
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator((phase.x, phase.y), phase.f)

        def func(x, y):
            x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
            return interp(np.stack([x, y], -1))

    sides = [
        lambda u: func(u, b0), lambda u: func(u, b1),
        lambda u: func(a0, u), lambda u: func(a1, u),
    ]
    ranges = [(a0, a1), (a0, a1), (b0, b1), (b0, b1)]
    best = np.inf
    m = 4 * phase.N + 1
    for side, (lo, hi) in zip(sides, ranges):
        u = np.linspace(lo, hi, m)
        v = np.asarray(side(u), dtype=float)
        k = int(np.argmin(v))
        best = min(best, float(v[k]))
        ua, ub = u[max(k - 1, 0)], u[min(k + 1, m - 1)]
        if ub > ua:
            res = minimize_scalar(lambda q: float(side(np.asarray(q))), bounds=(ua, ub),
                                  method="bounded", options={"xatol": 1e-14})
            best = min(best, float(res.fun))
    if not best > 0:
        raise GeometryError("no positive cutoff height exists")
    return best
