"""Phase and amplitude representations plus the named catalog of test phases.

Radial phases are stored as a profile ``F`` with exact first and second
derivatives, so ``f(x) = F(|x|)``.  Derivatives are never obtained by
numerical differentiation; finite differences only appear in
:func:`validate_phase` as a consistency check.

All callables are module-level functions bound with ``functools.partial`` so
that profiles pickle cleanly into worker processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Any, Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import PhaseValidationError, SublevelLabError
from .roots import invert_increasing

Func = Callable[[np.ndarray], np.ndarray]

PASS, FAIL, BOUNDARY = "pass", "fail", "boundary"

# Fraction of the outer radius (or of the domain, about the minimizer) kept
# as the compact sublevel region S(l).
L_MARGIN = 0.95


def ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_area(n: int, radius) -> np.ndarray:
    """Hausdorff measure of the sphere of given radius in R^n (n=1: two points)."""
    return n * ball_volume(n) * np.asarray(radius, dtype=float) ** (n - 1)


# --------------------------------------------------------------------------
# radial profiles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """Convex radial phase ``f(x) = F(|x|)`` on the ball of radius ``R`` in R^n."""

    F: Func
    dF: Func
    d2F: Func
    R: float
    dim_n: int
    smooth_at_origin: bool
    name: str = "radial"
    params: dict = field(default_factory=dict)
    classification: str | None = None
    closed_form_measure: Func | None = None
    allow_nonsmooth: bool = False

    @property
    def omega(self) -> float:
        return ball_volume(self.dim_n)

    def __call__(self, x) -> np.ndarray:
        """Evaluate f at points with trailing coordinate axis of length n."""
        x = np.asarray(x, dtype=float)
        return self.F(np.linalg.norm(x, axis=-1))

    def inverse(self, s) -> np.ndarray:
        """Radius ``F^{-1}(s)`` by bracketed log-space Newton on ``[0, R]``."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        if np.any(pos):
            out[pos] = invert_increasing(
                self.F, s[pos], 0.0, self.R, self.dF, log=True,
                atol=1e-300,
            )
        return out

    def with_override(self) -> "RadialProfile":
        """Copy admitted downstream even if it is not C^2 at the origin."""
        return replace(self, allow_nonsmooth=True)


def _power_F(r, m):
    return np.asarray(r, dtype=float) ** m


def _power_dF(r, m):
    return m * np.asarray(r, dtype=float) ** (m - 1)


def _power_d2F(r, m):
    r = np.asarray(r, dtype=float)
    if m == 1:
        return np.zeros_like(r)
    with np.errstate(divide="ignore"):
        return m * (m - 1) * r ** (m - 2)


def _power_measure(eps, m, n):
    return ball_volume(n) * np.asarray(eps, dtype=float) ** (n / m)


def make_power_profile(m: float, R: float = 1.0, n: int = 2) -> RadialProfile:
    """``F(r) = r^m``; passes the geometric assumption iff ``m >= n``."""
    if not m >= 1:
        raise SublevelLabError(f"power profile needs m >= 1, got {m}")
    if not R > 0:
        raise SublevelLabError(f"outer radius must be positive, got {R}")
    n = _check_dim(n)
    if m > n:
        verdict = PASS
    elif m == n:
        verdict = BOUNDARY
    else:
        verdict = FAIL
    return RadialProfile(
        F=partial(_power_F, m=m),
        dF=partial(_power_dF, m=m),
        d2F=partial(_power_d2F, m=m),
        R=float(R),
        dim_n=n,
        smooth_at_origin=m >= 2,
        name="power",
        params={"m": m, "R": R, "n": n},
        classification=verdict,
        closed_form_measure=partial(_power_measure, m=m, n=n),
    )


def _flat_F(r):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(r > 0, np.exp(-1.0 / np.where(r > 0, r, 1.0)), 0.0)


def _flat_dF(r):
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, _flat_F(safe) / safe**2, 0.0)


def _flat_d2F(r):
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, _flat_F(safe) * (1 - 2 * safe) / safe**4, 0.0)


def _flat_measure(eps, n):
    eps = np.asarray(eps, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(eps > 0, ball_volume(n) * np.log(1 / np.where(eps > 0, eps, 0.5)) ** (-n), 0.0)


def make_flat_profile(R: float = 0.35, n: int = 2) -> RadialProfile:
    """``F(r) = exp(-1/r)``, flat to infinite order at the origin.

    F is convex only for ``r <= 1/2`` and satisfies the geometric assumption
    only for ``r <= 1/(n+1)``; the default radius keeps ``S(l)`` inside the
    passing region for n = 2.
    """
    if not R > 0:
        raise SublevelLabError(f"outer radius must be positive, got {R}")
    n = _check_dim(n)
    prof = RadialProfile(
        F=_flat_F,
        dF=_flat_dF,
        d2F=_flat_d2F,
        R=float(R),
        dim_n=n,
        smooth_at_origin=True,
        name="flat",
        params={"R": R, "n": n},
        closed_form_measure=partial(_flat_measure, n=n),
    )
    return replace(prof, classification=radial_classification(prof))


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3 - 2 * x)


def _smoothstep_integral(x):
    inside = np.clip(x, 0.0, 1.0)
    return inside**3 - inside**4 / 2 + np.maximum(x - 1.0, 0.0)


def _smoothstep_deriv(x):
    inside = (x > 0) & (x < 1)
    return np.where(inside, 6 * x * (1 - x), 0.0)


def _stair_F(r, slopes, breakpoints, width):
    r = np.asarray(r, dtype=float)
    out = slopes[0] * r
    for jump, b in zip(np.diff(slopes), breakpoints):
        out = out + jump * width * _smoothstep_integral((r - b + width / 2) / width)
    return out


def _stair_dF(r, slopes, breakpoints, width):
    r = np.asarray(r, dtype=float)
    out = np.full_like(r, slopes[0])
    for jump, b in zip(np.diff(slopes), breakpoints):
        out = out + jump * _smoothstep((r - b + width / 2) / width)
    return out


def _stair_d2F(r, slopes, breakpoints, width):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for jump, b in zip(np.diff(slopes), breakpoints):
        out = out + jump * _smoothstep_deriv((r - b + width / 2) / width) / width
    return out


def make_staircase_profile(
    slopes: Sequence[float],
    breakpoints: Sequence[float],
    smoothing_width: float | None = None,
    R: float = 1.0,
    n: int = 2,
) -> RadialProfile:
    """Piecewise-linear growth with C^2 (smoothstep) blends of ``F'``.

    Slope changes happen across windows of width ``smoothing_width`` centred
    on each breakpoint.  The profile starts with a nonzero slope, so it is a
    cone at the origin and needs :meth:`RadialProfile.with_override`
    downstream.
    """
    slopes = tuple(float(s) for s in slopes)
    n = _check_dim(n)
    if not slopes or min(slopes) <= 0:
        raise SublevelLabError("staircase slopes must be strictly positive")
    if any(b < a for a, b in zip(slopes, slopes[1:])):
        raise SublevelLabError("staircase slopes must be non-decreasing (convexity)")
    breakpoints = tuple(float(b) for b in breakpoints)[: len(slopes) - 1]
    if len(breakpoints) < len(slopes) - 1:
        raise SublevelLabError("need one breakpoint per slope change")
    edges = (0.0,) + breakpoints
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise SublevelLabError("breakpoints must be positive and strictly increasing")
    min_gap = min(np.diff(edges)) if breakpoints else R
    if smoothing_width is None:
        smoothing_width = 0.05 * min_gap
    if not 0 < smoothing_width < min_gap:
        raise SublevelLabError("smoothing width must be positive and below the minimal breakpoint gap")
    if breakpoints and breakpoints[-1] + smoothing_width / 2 >= R:
        raise SublevelLabError("last blend window must end inside the outer radius")
    kw = dict(slopes=slopes, breakpoints=breakpoints, width=float(smoothing_width))
    prof = RadialProfile(
        F=partial(_stair_F, **kw),
        dF=partial(_stair_dF, **kw),
        d2F=partial(_stair_d2F, **kw),
        R=float(R),
        dim_n=n,
        smooth_at_origin=False,
        name="staircase",
        params={"slopes": list(slopes), "breakpoints": list(breakpoints),
                "smoothing_width": float(smoothing_width), "R": R, "n": n},
    )
    return replace(prof, classification=radial_classification(prof))


def radial_criterion_margin(profile: RadialProfile, r) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(n-1)F'(r) - r F''(r)`` and a roundoff scale for it."""
    r = np.asarray(r, dtype=float)
    lhs = (profile.dim_n - 1) * profile.dF(r)
    rhs = r * profile.d2F(r)
    return lhs - rhs, np.abs(lhs) + np.abs(rhs)


def radial_classification(profile: RadialProfile, samples: int = 4001) -> str:
    """Verdict of the radial concavity criterion on ``(0, 0.95 R]``."""
    r = np.linspace(0, L_MARGIN * profile.R, samples)[1:]
    margin, scale = radial_criterion_margin(profile, r)
    tol = 1e-12 * (1 + scale)
    if np.any(margin > tol):
        return FAIL
    if np.all(np.abs(margin) <= tol):
        return BOUNDARY
    return PASS


def _check_dim(n) -> int:
    if int(n) != n or n < 1:
        raise SublevelLabError(f"dimension must be a positive integer, got {n}")
    return int(n)


# --------------------------------------------------------------------------
# grid phases
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GridPhase2D:
    """Convex phase sampled on a uniform N x N grid (``[i, j] <-> (x_i, y_j)``).

    ``func``/``grad_func`` are kept when the phase was built from callables;
    the spatial quadrature uses them to sample below the grid spacing.
    """

    x: np.ndarray
    y: np.ndarray
    f: np.ndarray
    gx: np.ndarray
    gy: np.ndarray
    hxx: np.ndarray
    hxy: np.ndarray
    hyy: np.ndarray
    minimizer: tuple[float, float]
    func: Callable | None = None
    grad_func: Callable | None = None
    name: str = "grid2d"
    params: dict = field(default_factory=dict)
    classification: str | None = None
    dim_n: int = 2

    @property
    def domain(self) -> tuple[float, float, float, float]:
        return (float(self.x[0]), float(self.x[-1]), float(self.y[0]), float(self.y[-1]))

    @property
    def N(self) -> int:
        return self.x.size

    @property
    def spacing(self) -> tuple[float, float]:
        return (float(self.x[1] - self.x[0]), float(self.y[1] - self.y[0]))

    @property
    def grad(self) -> np.ndarray:
        return np.stack([self.gx, self.gy], axis=-1)

    @property
    def hess(self) -> np.ndarray:
        return np.stack([np.stack([self.hxx, self.hxy], -1), np.stack([self.hxy, self.hyy], -1)], -2)

    @property
    def omega(self) -> float:
        return math.pi


def _shifted(func, c, x, y):
    return func(x, y) - c


def build_grid_phase(
    func: Callable,
    grad: Callable,
    hess: Callable,
    domain: tuple[float, float, float, float],
    N: int = 401,
    name: str = "grid2d",
    params: dict | None = None,
    classification: str | None = None,
) -> GridPhase2D:
    """Sample ``func`` with its exact gradient and Hessian and normalize min to 0.

    ``func(x, y)``, ``grad(x, y) -> (gx, gy)`` and
    ``hess(x, y) -> (hxx, hxy, hyy)`` must accept broadcastable arrays.  The
    continuous minimizer is located by Newton steps from the best sample.
    """
    x0, x1, y0, y1 = domain
    xs = np.linspace(x0, x1, N)
    ys = np.linspace(y0, y1, N)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    F = np.asarray(func(X, Y), dtype=float)
    i, j = np.unravel_index(np.argmin(F), F.shape)
    p = np.array([xs[i], ys[j]])
    for _ in range(50):
        g = np.array(grad(p[0], p[1]), dtype=float)
        hxx, hxy, hyy = (float(v) for v in hess(p[0], p[1]))
        H = np.array([[hxx, hxy], [hxy, hyy]])
        if np.linalg.norm(g) == 0:
            break
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        q = p - step
        if func(q[0], q[1]) > func(p[0], p[1]):
            break
        p = q
        if np.linalg.norm(step) <= 1e-15 * (1 + np.linalg.norm(p)):
            break
    cmin = float(min(func(p[0], p[1]), F.min()))
    gx, gy = (np.asarray(v, dtype=float) * np.ones_like(F) for v in grad(X, Y))
    hxx, hxy, hyy = (np.asarray(v, dtype=float) * np.ones_like(F) for v in hess(X, Y))
    return GridPhase2D(
        x=xs, y=ys, f=F - cmin, gx=gx, gy=gy, hxx=hxx, hxy=hxy, hyy=hyy,
        minimizer=(float(p[0]), float(p[1])),
        func=partial(_shifted, func, cmin), grad_func=grad,
        name=name, params=dict(params or {}), classification=classification,
    )


def _quad_form(x, y, a, b):
    return a * np.asarray(x, dtype=float) ** 2 + b * np.asarray(y, dtype=float) ** 2


def _qpow_f(x, y, a, b, p):
    return _quad_form(x, y, a, b) ** (p / 2)


def _qpow_grad(x, y, a, b, p):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q = _quad_form(x, y, a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(q > 0, (p / 2) * q ** (p / 2 - 1), 1.0 if p == 2 else 0.0)
    return c * 2 * a * x, c * 2 * b * y


def _qpow_hess(x, y, a, b, p):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q = _quad_form(x, y, a, b)
    qx, qy = 2 * a * x, 2 * b * y
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = np.where(q > 0, (p / 2) * q ** (p / 2 - 1), 1.0 if p == 2 else 0.0)
        c2 = np.where(q > 0, (p / 2) * (p / 2 - 1) * q ** (p / 2 - 2), 0.0)
    return c2 * qx * qx + c1 * 2 * a, c2 * qx * qy, c2 * qy * qy + c1 * 2 * b


def make_grid_quadratic(a: float = 1.0, b: float = 2.0, p: float = 2.0,
                        half_width: float = 1.0, N: int = 401) -> GridPhase2D:
    """``f(x, y) = (a x^2 + b y^2)^(p/2)`` on ``[-w, w]^2``.

    The sublevel measure is ``pi eps^(2/p) / sqrt(ab)``, so the geometric
    assumption holds for ``p >= 2`` with equality (boundary) at ``p = 2``.
    """
    if a <= 0 or b <= 0:
        raise SublevelLabError("quadratic coefficients must be positive")
    if p < 2:
        raise SublevelLabError("p < 2 is not C^2 at the minimum")
    kw = dict(a=a, b=b, p=p)
    verdict = BOUNDARY if p == 2 else PASS
    return build_grid_phase(
        partial(_qpow_f, **kw), partial(_qpow_grad, **kw), partial(_qpow_hess, **kw),
        (-half_width, half_width, -half_width, half_width), N,
        name="grid2d", params={"a": a, "b": b, "p": p, "half_width": half_width, "N": N},
        classification=verdict,
    )


# --------------------------------------------------------------------------
# amplitudes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AmplitudeProfile:
    """Amplitude ``eta(x) = a(f(x))`` constant on level sets, on heights [0, l]."""

    a: Func
    da: Func
    l: float
    sup_norm: float
    deriv_l1: float
    monotone: bool
    name: str = "custom"

    @property
    def norm_sum(self) -> float:
        """``||a||_inf + ||a'||_1``, the amplitude factor of the main bound."""
        return self.sup_norm + self.deriv_l1


def _const(s, c):
    return np.full_like(np.asarray(s, dtype=float), c)


def _taper(s, l):
    return 1.0 - np.asarray(s, dtype=float) / l


def constant_amplitude(l: float, c: float = 1.0) -> AmplitudeProfile:
    return AmplitudeProfile(partial(_const, c=c), partial(_const, c=0.0), l,
                            abs(c), 0.0, True, name="constant")


def linear_taper(l: float) -> AmplitudeProfile:
    """``a(s) = 1 - s/l``: monotone, ``||a||_inf = ||a'||_1 = 1``."""
    return AmplitudeProfile(partial(_taper, l=l), partial(_const, c=-1.0 / l), l,
                            1.0, 1.0, True, name="taper")


def amplitude_from_callable(a: Func, da: Func, l: float, samples: int = 8193,
                            name: str = "custom") -> AmplitudeProfile:
    """Wrap user callables, measuring the norms on a dense grid.

    ``||a'||_1`` uses composite Gauss-Legendre on 256 panels.
    """
    s = np.linspace(0.0, l, samples)
    vals = np.asarray(a(s), dtype=float)
    sup = float(np.max(np.abs(vals)))
    nodes, weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, l, 257)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    pts = mid + half * nodes
    l1 = float(np.sum(np.abs(da(pts)) * weights * half))
    d = np.asarray(da(s), dtype=float)
    monotone = bool(np.all(d >= 0) or np.all(d <= 0))
    return AmplitudeProfile(a, da, float(l), sup, l1, monotone, name=name)


def tabulated_amplitude(heights, values, l: float, name: str = "tabulated") -> AmplitudeProfile:
    """Shape-preserving cubic interpolant of sampled ``a(s)``."""
    interp = PchipInterpolator(np.asarray(heights, float), np.asarray(values, float), extrapolate=True)
    return amplitude_from_callable(interp, interp.derivative(), l, name=name)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    worst: float
    where: Any = None


@dataclass
class ValidationReport:
    phase: str
    checks: list[Check]
    override: bool = False

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def usable(self) -> bool:
        """All hypotheses hold, or only smoothness fails and the override is set."""
        failing = {c.name for c in self.checks if not c.passed}
        return not failing or (self.override and failing == {"smooth_at_origin"})

    def require_usable(self) -> None:
        if not self.usable:
            bad = ", ".join(c.name for c in self.checks if not c.passed)
            raise PhaseValidationError(f"{self.phase}: failed {bad}")


def validate_phase(phase, samples: int = 2001) -> ValidationReport:
    """Check the standing hypotheses (convexity, unique minimum, smoothness, f_min = 0)."""
    if isinstance(phase, RadialProfile):
        return _validate_radial(phase, samples)
    if isinstance(phase, GridPhase2D):
        return _validate_grid(phase)
    raise TypeError(f"cannot validate {type(phase).__name__}")


def _worst(values, where, pick=np.argmax):
    k = int(pick(values))
    return float(values[k]), float(where[k])


def _validate_radial(p: RadialProfile, samples: int) -> ValidationReport:
    R = p.R
    r = np.linspace(0.0, R, samples)[1:]
    checks = []

    f0 = float(p.F(np.array([0.0]))[0])
    checks.append(Check("normalization", abs(f0) <= 1e-14, abs(f0), 0.0))

    # heights below the float range round to 0; there only sign checks apply
    fr = p.F(r)
    d1 = p.dF(r)
    resolved = (fr > 0) | (d1 > 0)
    ok = bool(np.all(d1[resolved] > 0) and np.all(d1[~resolved] >= 0))
    w, at = _worst(d1, r, np.argmin)
    checks.append(Check("strictly_increasing", ok, w, at))

    d2 = p.d2F(r)
    scale = max(1.0, float(np.max(np.abs(d2[np.isfinite(d2)]), initial=0.0)))
    w, at = _worst(d2, r, np.argmin)
    checks.append(Check("convexity", bool(np.all(d2 >= -1e-10 * scale)), w, at))

    ok = bool(np.all(fr[resolved] > 0) and np.all(fr >= 0))
    w, at = _worst(fr, r, np.argmin)
    checks.append(Check("unique_minimum", ok, w, at))

    h = 1e-5 * R
    rc = np.linspace(R / 100, R, 100)
    fd1 = (p.F(rc + h) - p.F(rc - h)) / (2 * h)
    fd2 = (p.dF(rc + h) - p.dF(rc - h)) / (2 * h)
    err = np.maximum(np.abs(p.dF(rc) - fd1) / (1 + np.abs(p.dF(rc))),
                     np.abs(p.d2F(rc) - fd2) / (1 + np.abs(p.d2F(rc))))
    w, at = _worst(err, rc)
    checks.append(Check("derivative_consistency", bool(np.all(err <= 1e-6)), w, at))

    dF0 = float(p.dF(np.array([0.0]))[0])
    checks.append(Check("smooth_at_origin", abs(dF0) <= 1e-12, abs(dF0), 0.0))
    return ValidationReport(p.name, checks, override=p.allow_nonsmooth)


def _validate_grid(g: GridPhase2D) -> ValidationReport:
    checks = []
    F = g.f
    scale = max(float(np.max(np.abs(F))), 1e-300)
    fmin = float(F.min())
    checks.append(Check("normalization", fmin >= -1e-12 * scale and fmin <= 1e-12 * scale + _cell_rise(g),
                        fmin, g.minimizer))

    inner = F[1:-1, 1:-1]
    nbr = np.minimum.reduce([F[:-2, 1:-1], F[2:, 1:-1], F[1:-1, :-2], F[1:-1, 2:]])
    loc = np.argwhere(inner <= nbr) + 1
    single = loc.size > 0 and np.all(np.ptp(loc, axis=0) <= 1)
    i, j = np.unravel_index(np.argmin(F), F.shape)
    interior = 0 < i < g.N - 1 and 0 < j < g.N - 1
    checks.append(Check("unique_minimum", bool(single and interior), float(len(loc)), (int(i), int(j))))

    tr = g.hxx + g.hyy
    det = g.hxx * g.hyy - g.hxy**2
    lam_min = 0.5 * (tr - np.sqrt(np.maximum(tr**2 - 4 * det, 0.0)))
    hscale = max(float(np.max(np.abs([g.hxx, g.hxy, g.hyy]))), 1e-300)
    k = np.unravel_index(np.argmin(lam_min), lam_min.shape)
    checks.append(Check("convexity", bool(lam_min.min() >= -1e-10 * hscale), float(lam_min.min()),
                        (float(g.x[k[0]]), float(g.y[k[1]]))))

    fx, fy = np.gradient(F, g.x, g.y, edge_order=2)
    gscale = max(float(np.max(np.hypot(g.gx, g.gy))), 1e-300)
    gerr = np.max(np.abs(np.stack([fx - g.gx, fy - g.gy]))[:, 1:-1, 1:-1]) / gscale
    hxx, hxy = np.gradient(g.gx, g.x, g.y, edge_order=2)
    _, hyy = np.gradient(g.gy, g.x, g.y, edge_order=2)
    herr = np.max(np.abs(np.stack([hxx - g.hxx, hxy - g.hxy, hyy - g.hyy]))[:, 1:-1, 1:-1]) / hscale
    worst = float(max(gerr, herr))
    checks.append(Check("derivative_consistency", worst <= 1e-4, worst, None))
    return ValidationReport(g.name, checks)


def _cell_rise(g: GridPhase2D) -> float:
    # a minimizer between nodes leaves the best sample one cell-rise above 0
    hx, hy = g.spacing
    return float(np.max(np.hypot(g.gx, g.gy))) * math.hypot(hx, hy)


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    builder: Callable[..., Any]
    classification: str
    defaults: dict
    description: str
    needs_override: bool = False

    def build(self, **params):
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise SublevelLabError(f"{self.name}: unknown parameters {sorted(unknown)}")
        merged = {**self.defaults, **params}
        phase = self.builder(**merged)
        if self.needs_override and isinstance(phase, RadialProfile) and not phase.smooth_at_origin:
            phase = phase.with_override()
        return phase


CATALOG: dict[str, CatalogEntry] = {
    e.name: e
    for e in [
        CatalogEntry("power", make_power_profile, PASS, {"m": 4.0, "R": 1.0, "n": 2},
                     "F(r) = r^m; pass iff m >= n (boundary at m = n)", needs_override=True),
        CatalogEntry("flat", make_flat_profile, PASS, {"R": 0.35, "n": 2},
                     "F(r) = exp(-1/r), infinitely flat at 0; pass for 0.95 R <= 1/(n+1)"),
        CatalogEntry("staircase", make_staircase_profile, FAIL,
                     {"slopes": [1.0, 8.0], "breakpoints": [0.5], "smoothing_width": 0.05, "R": 1.0, "n": 2},
                     "slow linear growth, sharp rise, linear again (erratic sublevel growth)",
                     needs_override=True),
        CatalogEntry("grid2d", make_grid_quadratic, BOUNDARY,
                     {"a": 1.0, "b": 2.0, "p": 2.0, "half_width": 1.0, "N": 401},
                     "(a x^2 + b y^2)^(p/2) sampled on a uniform grid; boundary at p = 2"),
    ]
}


def build_phase(name: str, **params):
    """Construct a catalog phase by name (``power``, ``flat``, ``staircase``, ``grid2d``)."""
    try:
        entry = CATALOG[name]
    except KeyError:
        raise SublevelLabError(f"unknown catalog phase {name!r}; known: {sorted(CATALOG)}") from None
    return entry.build(**params)
