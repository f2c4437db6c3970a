"""Main bound, split-height selection, inequality ledger and decay fits.

The bound under test is

    |I(lambda)| <= 5n (||a||_inf + ||a'||_1) t(w_n^{-1/n} / |lambda|),

obtained by splitting ``I`` at the height ``eps0 = alpha T^{-1}(alpha)``
with ``alpha`` chosen so that ``t(eps0) = (|lambda| alpha)^{-n}``.  Every
inequality used along the way is evaluated and stored with its margin.
"""
from __future__ import annotations

import math
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import MonotonicityError, OutOfRangeError, SublevelLabError
from .oscillatory_quadrature import oscint_coarea
from .phase_catalog import AmplitudeProfile, sphere_area
from .sublevel_geometry import SublevelTable, build_sublevel_table, check_geometric_assumption
from .symmetrization import (
    RearrangedPhase,
    TFunction,
    build_rearrangement,
    build_T,
    gradient_sublevel_inclusion,
)

LEDGER_RTOL = 1e-8
ALPHA_RTOL = 1e-8
RATIO_SLACK = 1e-6
# width of the envelope windows used when fitting decay exponents (decades)
ENVELOPE_DECADES = 0.5


# --------------------------------------------------------------------------
# result types
# --------------------------------------------------------------------------


@dataclass
class LedgerEntry:
    """One inequality ``lhs <= rhs`` (or identity ``lhs == rhs``) with its margin.

    ``asserted`` entries must satisfy ``margin >= -1e-8 * scale`` on phases
    that pass the geometric assumption; the rest are recorded for
    inspection only.  ``available`` is false when an ingredient (usually
    ``T``) could not be built; lhs/rhs are then NaN.
    """

    name: str
    lhs: float
    rhs: float
    margin: float
    scale: float
    asserted: bool = True
    available: bool = True
    note: str = ""

    @property
    def ok(self) -> bool:
        if not (self.asserted and self.available):
            return True
        return bool(self.margin >= -LEDGER_RTOL * self.scale)


def _ineq(name, lhs, rhs, asserted=True, note=""):
    lhs, rhs = float(lhs), float(rhs)
    return LedgerEntry(name, lhs, rhs, rhs - lhs, max(abs(lhs), abs(rhs), 1e-300), asserted, True, note)


def _ident(name, lhs, rhs, asserted=True, note=""):
    lhs, rhs = float(lhs), float(rhs)
    return LedgerEntry(name, lhs, rhs, -abs(lhs - rhs), max(abs(lhs), abs(rhs), 1e-300), asserted, True, note)


def _missing(name, note):
    nan = float("nan")
    return LedgerEntry(name, nan, nan, nan, nan, True, False, note)


@dataclass
class BoundReport:
    lam: float
    I_abs: float
    rhs: float
    ratio: float
    alpha: float | None
    eps0: float | None
    ledger: list[LedgerEntry] = field(default_factory=list)
    I_re: float = float("nan")
    I_im: float = float("nan")
    I_err: float = float("nan")
    saturated: bool = False
    normalized: float = float("nan")  # |I| / t(min(1/|lambda|, l))
    alpha_residual: float | None = None
    error: str | None = None

    @property
    def ledger_ok(self) -> bool:
        return all(e.ok for e in self.ledger)

    @property
    def failed(self) -> bool:
        return self.error is not None

    def row(self) -> dict:
        return {
            "lambda": self.lam,
            "I_re": self.I_re,
            "I_im": self.I_im,
            "I_abs": self.I_abs,
            "I_err": self.I_err,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "alpha": self.alpha,
            "eps0": self.eps0,
            "saturated": self.saturated,
            "normalized": self.normalized,
            "alpha_residual": self.alpha_residual,
            "ledger_ok": self.ledger_ok,
            "error": self.error,
        }

    def as_dict(self) -> dict:
        d = self.row()
        d["ledger"] = [asdict(e) for e in self.ledger]
        return d


@dataclass
class SweepResult:
    reports: list[BoundReport]
    verdict: dict | None
    phase_name: str
    amplitude_name: str

    @property
    def max_ratio(self) -> float:
        vals = [r.ratio for r in self.reports if not r.failed]
        return max(vals) if vals else float("nan")

    @property
    def assumption_passed(self) -> bool | None:
        return None if self.verdict is None else self.verdict["overall"] == "pass"

    def spread(self) -> float:
        """sup/inf over the grid of ``|I(lambda)| / t(1/|lambda|)``."""
        v = np.array([r.normalized for r in self.reports if not r.failed])
        v = v[np.isfinite(v)]
        return float(v.max() / v.min()) if v.size and v.min() > 0 else float("inf")


@dataclass
class Prop1Report:
    delta: float
    A: float
    worst_C: float
    worst_c: float
    worst_eps: float
    rows: list[tuple[float, float, float, float]]  # (c, eps, band, C)


# --------------------------------------------------------------------------
# bound right-hand side and alpha
# --------------------------------------------------------------------------


def split_height(n: int, omega: float, lam: float) -> float:
    """``w_n^{-1/n} / |lambda|``."""
    return omega ** (-1.0 / n) / abs(lam)


def theorem_rhs(table: SublevelTable, amplitude: AmplitudeProfile, lam: float,
                saturate: bool = False) -> tuple[float, bool]:
    """Right-hand side ``5n N t(w_n^{-1/n}/|lambda|)`` and whether it saturated.

    ``N = ||a||_inf + ||a'||_1``, both norms taken over ``[0, l]``.  If the
    height exceeds ``l`` the table cannot evaluate it: an
    :class:`OutOfRangeError` is raised unless ``saturate``, in which case
    ``t(l)`` is used (a larger value, since ``t`` increases).
    """
    lam = float(lam)
    if lam == 0.0 or not math.isfinite(lam):
        raise OutOfRangeError("lambda must be finite and nonzero")
    n = table.dim_n
    y = split_height(n, table.omega, lam)
    saturated = y > table.l
    if saturated and not saturate:
        raise OutOfRangeError(
            f"split height {y!r} exceeds l={table.l!r}; lambda={lam!r} is too small for this table"
        )
    t = float(table.measure(min(y, table.l)))
    return 5 * n * amplitude.norm_sum * t, bool(saturated)


def solve_alpha(table: SublevelTable, lam: float, T: TFunction | None = None) -> tuple[float, float, float | None]:
    """Closed-form ``alpha`` with its split height and defining residual.

    Returns ``(alpha, eps0, residual)``.  When ``T`` is given (or can be
    built) ``eps0 = alpha T^{-1}(alpha)`` and ``residual`` is the relative
    defect ``|t(eps0) - (|lambda| alpha)^{-n}| / (|lambda| alpha)^{-n}``;
    otherwise ``eps0`` is the closed-form value and ``residual`` is None.
    Raises :class:`OutOfRangeError` if the split height is not in ``(0, l)``
    and :class:`MonotonicityError` if the residual exceeds ``1e-8``.
    """
    n = table.dim_n
    y = split_height(n, table.omega, lam)
    if not 0.0 < y < table.l:
        raise OutOfRangeError(f"split height {y!r} outside (0, l={table.l!r})")
    t_y = float(table.measure(y))
    alpha = t_y ** (-1.0 / n) / abs(lam)
    if T is None:
        try:
            T = build_T(table)
        except MonotonicityError:
            return alpha, y, None
    eps0 = alpha * float(T.inverse(alpha))
    target = (abs(lam) * alpha) ** (-n)
    residual = abs(float(table.measure(eps0)) - target) / target
    if residual > ALPHA_RTOL:
        raise MonotonicityError(f"alpha residual {residual:.3e} exceeds {ALPHA_RTOL:g}")
    return alpha, eps0, residual


# --------------------------------------------------------------------------
# the ledger
# --------------------------------------------------------------------------


def _total_variation(table: SublevelTable, a: float, b: float, samples: int = 4097) -> float:
    s = np.unique(np.concatenate([np.geomspace(a, b, samples // 2), np.linspace(a, b, samples // 2)]))
    return float(np.sum(np.abs(np.diff(table.density(s)))))


def proof_ledger(table: SublevelTable, rearranged: RearrangedPhase, T: TFunction | None,
                 amplitude: AmplitudeProfile, lam: float, alpha: float, eps0: float,
                 I_full=None) -> list[LedgerEntry]:
    """Evaluate each inequality of the split-and-integrate-by-parts argument.

    ``I_full`` may carry a precomputed coarea result for the whole range.
    Entries needing ``T`` (inclusion and slope facts) are marked unavailable
    when ``T`` is None.
    """
    n = table.dim_n
    w = table.omega
    N = amplitude.norm_sum
    sup = amplitude.sup_norm
    l = table.l
    t0 = float(table.measure(eps0))
    J0 = float(table.density(eps0))
    Jl = float(table.density(l))
    if I_full is None:
        I_full = oscint_coarea(table, amplitude, lam)
    head = oscint_coarea(table, amplitude, lam, 0.0, eps0)
    tail = oscint_coarea(table, amplitude, lam, eps0, l)
    out: list[LedgerEntry] = []

    split_err = I_full.err_estimate + head.err_estimate + tail.err_estimate
    out.append(_ineq("split", abs(I_full.value - head.value - tail.value), split_err + 1e-14 * sup * table.t_l,
                     note="I = head + tail within quadrature error"))
    out.append(_ineq("head_bound", head.abs, sup * t0))
    out.append(_ineq("ibp_tail_bound", tail.abs, 4 * N * J0 / abs(lam)))
    out.append(_ineq("J_endpoint_monotone", Jl, J0))
    out.append(_ineq("J_variation", _total_variation(table, eps0, l), 2 * J0))

    bare_area = n * t0 ** ((n - 1) / n)
    true_area = n * w ** (1.0 / n) * t0 ** ((n - 1) / n)
    radius = float(rearranged.g(eps0))
    out.append(_ident("sphere_area", float(sphere_area(n, radius)), true_area))
    out.append(_ident("sphere_area_bare", float(sphere_area(n, radius)), bare_area, asserted=False,
                      note="identity without the w_n^{1/n} factor; holds only when w_n = 1"))
    out.append(_ineq("density_bound", J0, bare_area / alpha, asserted=n >= 2,
                     note="" if n >= 2 else "not implied for n = 1; see density_bound_sphere and chain_total"))
    out.append(_ineq("density_bound_sphere", J0, true_area / alpha))
    out.append(_ident("alpha_balance", t0, (abs(lam) * alpha) ** (-n)))

    if T is None:
        for name in ("slope_at_sphere", "inclusion_measure", "L_le_Tinv"):
            out.append(_missing(name, "T is not strictly increasing on this table"))
    else:
        r0 = float(T.inverse(alpha))
        out.append(_ineq("slope_at_sphere", alpha, float(rearranged.slope(r0))))
        inc = gradient_sublevel_inclusion(rearranged, T, alpha)
        out.append(_ineq("inclusion_measure", inc.inclusion_lhs, inc.inclusion_rhs))
        out.append(_ineq("L_le_Tinv", inc.L, inc.Tinv))

    # n = 1: concavity gives J(eps0) <= t(eps0)/eps0, and eps0 = 1/(2|lambda|)
    const = 5 * n if n >= 2 else 1 + 4 * n * w ** (1.0 / n)
    out.append(_ineq("chain_total", I_full.abs, const * N * t0,
                     note=f"head + tail chain with constant {const:g}"))
    return out


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------


@dataclass
class _Context:
    table: SublevelTable
    rearranged: RearrangedPhase
    T: TFunction | None
    amplitude: AmplitudeProfile
    with_ledger: bool = True


def _bound_at(ctx: _Context, lam: float) -> BoundReport:
    table, amp = ctx.table, ctx.amplitude
    lam = float(lam)
    nan = float("nan")
    try:
        res = oscint_coarea(table, amp, lam)
    except SublevelLabError as exc:
        partial = getattr(exc, "result", None)
        return BoundReport(lam, nan if partial is None else partial.abs, nan, nan, None, None,
                           error=f"{type(exc).__name__}: {exc}")
    rhs, saturated = theorem_rhs(table, amp, lam, saturate=True)
    y1 = min(1.0 / abs(lam), table.l)
    rep = BoundReport(
        lam=lam, I_abs=res.abs, rhs=rhs, ratio=res.abs / rhs, alpha=None, eps0=None,
        I_re=res.value.real, I_im=res.value.imag, I_err=res.err_estimate,
        saturated=saturated, normalized=res.abs / float(table.measure(y1)),
    )
    if saturated:
        return rep
    try:
        alpha, eps0, residual = solve_alpha(table, lam, ctx.T)
        rep.alpha, rep.eps0, rep.alpha_residual = alpha, eps0, residual
        if ctx.with_ledger:
            rep.ledger = proof_ledger(table, ctx.rearranged, ctx.T, amp, lam, alpha, eps0, res)
            rep.ledger.append(_ineq("theorem", res.abs, rhs))
    except SublevelLabError as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    return rep


def _context(table: SublevelTable, amplitude: AmplitudeProfile, with_ledger: bool) -> _Context:
    rearranged = build_rearrangement(table)
    try:
        T = build_T(table)
    except MonotonicityError:
        T = None
    return _Context(table, rearranged, T, amplitude, with_ledger)


_WORKER_CTX: _Context | None = None


def _init_worker(blob: bytes) -> None:
    global _WORKER_CTX
    _WORKER_CTX = pickle.loads(blob)


def _worker(lam: float) -> BoundReport:
    return _bound_at(_WORKER_CTX, lam)


def verify_bound_sweep(phase, amplitude: AmplitudeProfile, lam_grid, table: SublevelTable | None = None,
                       jobs: int = 1, with_ledger: bool = True, check_assumption: bool = True) -> SweepResult:
    """Bound reports for every frequency in ``lam_grid``, sorted by frequency.

    The geometric-assumption verdict is attached but never used as a gate.
    Per-frequency failures are stored in ``BoundReport.error``.  With
    ``jobs > 1`` the frequencies are spread over worker processes; the
    output is identical to a serial run.
    """
    if table is None:
        table = build_sublevel_table(phase)
    verdict = check_geometric_assumption(phase, table).as_dict() if check_assumption else None
    ctx = _context(table, amplitude, with_ledger)
    lams = sorted(float(v) for v in np.atleast_1d(lam_grid))
    reports = None
    if jobs > 1 and len(lams) > 1:
        try:
            blob = pickle.dumps(ctx)
        except (pickle.PicklingError, AttributeError, TypeError):
            blob = None  # unpicklable callables: fall back to a serial run
        if blob is not None:
            with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(blob,)) as ex:
                reports = list(ex.map(_worker, lams))
    if reports is None:
        reports = [_bound_at(ctx, v) for v in lams]
    reports.sort(key=lambda r: r.lam)
    return SweepResult(reports, verdict, table.phase_name, amplitude.name)


def default_lambda_grid(lo: float = 10.0, hi: float = 1e4, count: int = 25) -> np.ndarray:
    return np.geomspace(lo, hi, count)


# --------------------------------------------------------------------------
# decay exponents and the sublevel direction
# --------------------------------------------------------------------------


def _as_pairs(reports) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(reports, SweepResult):
        reports = reports.reports
    rows = [(r.lam, r.I_abs) for r in reports if not getattr(r, "failed", False)]
    lam, val = (np.array(v, dtype=float) for v in zip(*rows)) if rows else (np.array([]), np.array([]))
    return np.abs(lam), val


def fit_decay_exponent(reports, window_decades: float = ENVELOPE_DECADES) -> tuple[float, float]:
    """Fit ``|I(lambda)| <= A lambda^{-delta}`` through an upper envelope.

    Each sample is replaced by the maximum of ``|I|`` over the window of
    ``window_decades`` centred on it (zeros of ``I`` would otherwise
    dominate a log fit); the distinct envelope points are fitted by least
    squares in log-log coordinates.  ``A`` is then the smallest constant
    with ``|I| <= A lambda^{-delta}`` at every sample.  Accepts a list of
    :class:`BoundReport`, a :class:`SweepResult`, or ``(lambdas, |I|)``.
    """
    if isinstance(reports, tuple) and len(reports) == 2:
        lam, val = (np.abs(np.asarray(v, dtype=float)) for v in reports)
    else:
        lam, val = _as_pairs(reports)
    if lam.size < 10:
        raise OutOfRangeError(f"need at least 10 samples, got {lam.size}")
    if np.log10(lam.max() / lam.min()) < 2 - 1e-9:
        raise OutOfRangeError("frequencies must span at least two decades")
    order = np.argsort(lam)
    lam, val = lam[order], val[order]
    if not np.all(val > 0) or np.ptp(np.log(val)) < 1e-12:
        raise OutOfRangeError("degenerate fit: |I| vanishes or does not decay")
    x = np.log10(lam)
    half = window_decades / 2
    picks = set()
    lo_edge, hi_edge = x[0] + half, x[-1] - half
    for k, xk in enumerate(x):
        if xk < lo_edge - 1e-12 or xk > hi_edge + 1e-12:
            continue  # window would be truncated by the grid
        sel = np.nonzero(np.abs(x - xk) <= half + 1e-12)[0]
        picks.add(int(sel[np.argmax(val[sel])]))
    idx = np.array(sorted(picks))
    if idx.size < 2:
        raise OutOfRangeError("too few envelope points for a fit")
    slope, _ = np.polyfit(np.log(lam[idx]), np.log(val[idx]), 1)
    delta = -float(slope)
    A = float(np.max(val * lam ** delta))
    return delta, A


def band_measure(table: SublevelTable, c, eps) -> np.ndarray:
    """``|{|f - c| <= eps}|`` from the sublevel table.

    Heights are clipped to ``[0, l]``; with ``l`` the supremum of ``f`` on
    the domain, bands entirely above ``l`` have measure zero.
    """
    c, eps = np.broadcast_arrays(np.asarray(c, dtype=float), np.asarray(eps, dtype=float))
    hi = np.clip(c + eps, 0.0, table.l)
    lo = np.clip(c - eps, 0.0, table.l)
    return np.where(c - eps >= 0.0, table.measure(hi) - table.measure(lo), table.measure(hi))


def proposition1_check(table: SublevelTable, delta: float, A: float, c_grid, eps_grid) -> Prop1Report:
    """Worst ratio ``band / (A eps^delta)`` over a grid of centres and widths."""
    if not 0.0 < delta < 1.0:
        raise OutOfRangeError(f"delta={delta!r} is outside (0, 1)")
    if not A > 0:
        raise OutOfRangeError("A must be positive")
    rows = []
    worst = (-1.0, float("nan"), float("nan"))
    for c in np.atleast_1d(c_grid):
        for e in np.atleast_1d(eps_grid):
            b = float(band_measure(table, c, e))
            C = b / (A * float(e) ** delta)
            rows.append((float(c), float(e), b, C))
            if C > worst[0]:
                worst = (C, float(c), float(e))
    return Prop1Report(float(delta), float(A), worst[0], worst[1], worst[2], rows)
