"""Schwarz rearrangement of a phase and the gradient-threshold machinery.

The rearranged phase is radial, ``fdot(x) = g^{-1}(|x|)`` with
``g(y) = (t(y)/w_n)^{1/n}``; it has the same sublevel measures as ``f``.
``T(x) = t^{-1}(w_n x^n)/x`` converts a slope threshold ``alpha`` into the
split height ``alpha * T^{-1}(alpha)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MonotonicityError, OutOfRangeError
from .roots import invert_increasing
from .sublevel_geometry import CONCAVITY_RTOL, SublevelTable, second_differences

ROUND_TRIP_RTOL = 1e-10


@dataclass(frozen=True)
class RearrangedPhase:
    """Radial rearrangement built on a :class:`SublevelTable`."""

    table: SublevelTable

    @property
    def dim_n(self) -> int:
        return self.table.dim_n

    @property
    def omega(self) -> float:
        return self.table.omega

    @property
    def B_radius(self) -> float:
        return (self.table.t_l / self.omega) ** (1.0 / self.dim_n)

    def g(self, y) -> np.ndarray:
        """Radius of the ball with the measure of ``S(y)``."""
        return (self.table.measure(y) / self.omega) ** (1.0 / self.dim_n)

    def g_inv(self, r) -> np.ndarray:
        """Height at which the sublevel ball has radius ``r``."""
        r = np.asarray(r, dtype=float)
        if np.any(r > self.B_radius * (1 + 1e-12)):
            raise OutOfRangeError(f"radius above B={self.B_radius!r}")
        v = np.minimum(self.omega * np.maximum(r, 0.0) ** self.dim_n, self.table.t_l)
        return self.table.inverse(v)

    def __call__(self, x) -> np.ndarray:
        """``fdot(x) = g^{-1}(|x|)`` with a trailing coordinate axis."""
        return self.g_inv(np.linalg.norm(np.asarray(x, dtype=float), axis=-1))

    def slope(self, r) -> np.ndarray:
        """Radial derivative of ``fdot`` at radius ``r`` (``n w r^{n-1} / J``)."""
        r = np.asarray(r, dtype=float)
        n = self.dim_n
        y = self.g_inv(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = n * self.omega * r ** (n - 1) / self.table.density(np.where(y > 0, y, self.table.l))
        # a height that underflows to 0 at r > 0 means a slope below any float scale
        return np.where(y > 0, out, np.where(r > 0, 0.0, out))


def build_rearrangement(table: SublevelTable) -> RearrangedPhase:
    """Rearrange the phase behind ``table``; rejects tables whose measure is not increasing."""
    if np.any(np.diff(table.values) <= 0):
        raise MonotonicityError("sublevel table is not strictly increasing")
    return RearrangedPhase(table)


def check_equimeasurable(rearranged: RearrangedPhase, table: SublevelTable) -> float:
    """Max over ``table`` nodes of ``|w_n g(y)^n - t(y)|``."""
    y = table.nodes[table.nodes <= rearranged.table.l]
    lhs = rearranged.omega * rearranged.g(y) ** rearranged.dim_n
    rhs = table.values[: y.size]
    return float(np.max(np.abs(lhs - rhs)))


def equimeasurability_tolerance(table: SublevelTable) -> float:
    """``1e-9 t(l)`` for exact tables, the reported error bound otherwise."""
    if table.abs_error is None:
        return 1e-9 * table.t_l
    return table.max_error


@dataclass
class ShapeCheck:
    name: str
    passed: bool
    worst: float
    where: float
    tolerance: float


def _g_noise(rearranged: RearrangedPhase, y: np.ndarray) -> np.ndarray:
    # propagate the measure error bound through g = (t/w)^{1/n}
    table = rearranged.table
    if table.abs_error is None:
        return np.zeros_like(y)
    t = np.maximum(table.measure(y), 1e-300)
    return rearranged.g(y) * table.error_at(y) / (rearranged.dim_n * t)


def _shape(name, x, v, noise, sign):
    # sign=+1: concave (second differences <= tol), -1: convex
    d2, scale = second_differences(x, v)
    h = np.diff(x)
    tol = CONCAVITY_RTOL * scale + (noise[1:-1] + noise[2:]) / h[1:] + (noise[:-2] + noise[1:-1]) / h[:-1]
    excess = sign * d2 - tol
    k = int(np.argmax(excess))
    return ShapeCheck(name, bool(excess[k] <= 0), float(sign * d2[k]), float(x[k + 1]), float(tol[k]))


def check_g_concave(rearranged: RearrangedPhase) -> ShapeCheck:
    y = rearranged.table.nodes
    if rearranged.table.abs_error is not None:
        y = y[::8]
    return _shape("g_concave", y, rearranged.g(y), _g_noise(rearranged, y), +1)


def check_g_inv_convex(rearranged: RearrangedPhase, samples: int = 513) -> ShapeCheck:
    B = rearranged.B_radius
    if rearranged.table.abs_error is None:
        r = np.concatenate([[0.0], np.geomspace(B * 1e-6, B, samples - 1)])
        noise = np.zeros_like(r)
    else:
        r = np.linspace(0.0, B, 65)
        # error in height from an error in radius: slope times radius error
        y = rearranged.g_inv(r)
        noise = rearranged.slope(np.maximum(r, B * 1e-3)) * _g_noise(rearranged, y)
    return _shape("g_inv_convex", r, rearranged.g_inv(r), noise, -1)


def round_trip_error(rearranged: RearrangedPhase, samples: int = 257) -> float:
    """Max ``|g(g_inv(r)) - r|`` relative to ``B``.

    Radii whose height underflows to zero (very flat phases) are skipped.
    """
    B = rearranged.B_radius
    r = np.linspace(0.0, B, samples)
    y = rearranged.g_inv(r)
    keep = (y > 0) | (r == 0)
    return float(np.max(np.abs(rearranged.g(y[keep]) - r[keep])) / B)


# --------------------------------------------------------------------------
# T-function
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TFunction:
    """``T(x) = t^{-1}(w_n x^n)/x`` on ``(0, B]`` and its inverse."""

    table: SublevelTable
    strict_ratio_min: float
    strict_ratio_where: float

    @property
    def B_radius(self) -> float:
        return (self.table.t_l / self.table.omega) ** (1.0 / self.table.dim_n)

    @property
    def x_min(self) -> float:
        return self.B_radius * 1e-12

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.table.dim_n
        v = np.minimum(self.table.omega * x ** n, self.table.t_l)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.table.inverse(v) / x

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.table.dim_n
        w = self.table.omega
        v = np.minimum(w * x ** n, self.table.t_l)
        y = self.table.inverse(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            return n * w * x ** (n - 2) / self.table.density(y) - y / (x * x)

    def inverse(self, alpha) -> np.ndarray:
        """``T^{-1}(alpha)``; ``alpha`` must lie in ``[T(x_min), T(B)]``."""
        alpha = np.asarray(alpha, dtype=float)
        lo, hi = self.x_min, self.B_radius
        Tlo, Thi = float(self(lo)), float(self(hi))
        if np.any(alpha <= 0) or np.any(alpha > Thi * (1 + 1e-12)) or np.any(alpha < Tlo):
            raise OutOfRangeError(f"alpha outside the range [{Tlo!r}, {Thi!r}] of T")
        return invert_increasing(self, alpha, lo, hi, self.derivative, log=True)


def strictness_ratio(table: SublevelTable, y: np.ndarray | None = None):
    """``n t(y) / (y J(y))`` at sampled heights; ``T`` increases iff it exceeds 1."""
    if y is None:
        y = table.nodes[1:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = table.dim_n * table.measure(y) / (y * table.density(y))
    ok = np.isfinite(ratio)
    return y[ok], ratio[ok]


def build_T(table: SublevelTable) -> TFunction:
    """Build ``T`` and verify it is strictly increasing at sampled points.

    Raises :class:`MonotonicityError` if ``n t(y)/(y J(y)) <= 1`` anywhere on
    the table or sampled ``T`` values fail to increase; both signal that the
    geometric assumption fails (or that ``n = 1``, where strictness is not
    guaranteed).
    """
    y, ratio = strictness_ratio(table)
    k = int(np.argmin(ratio))
    T = TFunction(table, float(ratio[k]), float(y[k]))
    if not ratio[k] > 1.0 + 1e-9:
        raise MonotonicityError(
            f"n t(y)/(y J(y)) = {ratio[k]:.12g} <= 1 at y={y[k]:.6g}; T is not strictly increasing"
        )
    x = np.geomspace(T.x_min, T.B_radius, 400)
    vals = T(x)
    pos = vals > 0
    if np.any(np.diff(vals[pos]) <= 0):
        raise MonotonicityError("sampled T values are not strictly increasing")
    return T


@dataclass
class InclusionReport:
    alpha: float
    L: float
    empty: bool
    inclusion_lhs: float  # w_n L^n
    inclusion_rhs: float  # t(L alpha)
    Tinv: float
    inclusion_margin: float
    L_margin: float

    @property
    def passed(self) -> bool:
        scale_i = max(abs(self.inclusion_lhs), abs(self.inclusion_rhs), 1e-300)
        return self.inclusion_margin >= -1e-8 * scale_i and self.L_margin >= -1e-8 * max(self.Tinv, 1e-300)


def slope_threshold_radius(rearranged: RearrangedPhase, alpha: float) -> tuple[float, bool]:
    """``L = sup{r : slope(r) <= alpha}``; also whether that set is empty."""
    B = rearranged.B_radius
    lo = B * 1e-12
    s_lo, s_hi = rearranged.slope(np.array([lo, B]))
    if s_lo > alpha:
        return 0.0, True
    if s_hi <= alpha:
        return B, False
    # slope is non-decreasing (g_inv convex): bisection in r
    a, b = lo, B
    for _ in range(200):
        m = np.sqrt(a * b) if b > 4 * a else 0.5 * (a + b)
        if rearranged.slope(m) <= alpha:
            a = m
        else:
            b = m
        if b - a <= 4 * np.finfo(float).eps * b:
            break
    return float(a), False


def gradient_sublevel_inclusion(rearranged: RearrangedPhase, T: TFunction, alpha: float) -> InclusionReport:
    """Locate ``A_alpha`` and test ``w_n L^n <= t(L alpha)`` and ``L <= T^{-1}(alpha)``."""
    table = rearranged.table
    L, empty = slope_threshold_radius(rearranged, alpha)
    lhs = rearranged.omega * L ** rearranged.dim_n
    rhs = float(table.measure(min(L * alpha, table.l)))
    if alpha > float(T(T.B_radius)):
        Tinv = T.B_radius
    elif alpha < float(T(T.x_min)):
        Tinv = T.x_min
    else:
        Tinv = float(T.inverse(alpha))
    return InclusionReport(
        alpha=float(alpha), L=L, empty=empty,
        inclusion_lhs=lhs, inclusion_rhs=rhs, Tinv=Tinv,
        inclusion_margin=rhs - lhs, L_margin=Tinv - L,
    )
