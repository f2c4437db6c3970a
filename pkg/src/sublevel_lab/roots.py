"""Vectorized bracketed inversion of monotone maps.

Every inverse in the package (radius from height, height from measure, the
T-function inverse) goes through :func:`invert_increasing`: a safeguarded
Newton iteration that falls back to bisection whenever the Newton step
leaves the current bracket.  The bracket always contains the root, so the
method cannot diverge; Newton only accelerates it.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import RootFindingError

EPS = np.finfo(float).eps

ArrayFunc = Callable[[np.ndarray], np.ndarray]


def invert_increasing(
    fun: ArrayFunc,
    y,
    lo,
    hi,
    dfun: ArrayFunc | None = None,
    *,
    log: bool = False,
    rtol: float = 4 * EPS,
    atol: float = 0.0,
    maxiter: int = 200,
) -> np.ndarray:
    """Solve ``fun(x) = y`` for ``x`` in ``[lo, hi]`` with ``fun`` increasing.

    Parameters
    ----------
    fun, dfun
        Vectorized map and (optionally) its derivative.
    y
        Targets; any shape.  Each must lie in ``[fun(lo), fun(hi)]``.
    log
        Take Newton steps on ``log fun(x) - log y``.  This converges in one
        step for power laws and keeps relative accuracy for tiny targets;
        requires ``fun > 0`` on ``(lo, hi]`` and ``y > 0``.
    rtol, atol
        Stop when the Newton step or the bracket width falls below
        ``atol + rtol * |x|``.

    Raises
    ------
    RootFindingError
        If a target lies outside the bracket image or the iteration does
        not converge within ``maxiter`` steps.
    """
    y = np.asarray(y, dtype=float)
    shape = y.shape
    y = y.ravel().copy()
    lo = np.broadcast_to(np.asarray(lo, dtype=float), shape).ravel().copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), shape).ravel().copy()
    x = np.empty_like(y)
    if y.size == 0:
        return x.reshape(shape)

    flo = np.asarray(fun(lo), dtype=float)
    fhi = np.asarray(fun(hi), dtype=float)
    slack = 8 * EPS * np.maximum(np.abs(flo), np.abs(fhi))
    bad = ~np.isfinite(y) | (y < flo - slack) | (y > fhi + slack)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise RootFindingError(
            f"target {y[k]!r} outside bracket image [{flo[k]!r}, {fhi[k]!r}]"
        )

    done = np.zeros(y.size, dtype=bool)
    at_lo = y <= flo
    at_hi = ~at_lo & (y >= fhi)
    x[at_lo] = lo[at_lo]
    x[at_hi] = hi[at_hi]
    done |= at_lo | at_hi
    if log and np.any(~done & (y <= 0)):
        raise RootFindingError("log-space inversion needs positive targets")

    idx = np.flatnonzero(~done)
    if dfun is not None and log:
        xc = hi[idx].copy()
    else:
        xc = 0.5 * (lo[idx] + hi[idx])
    a, b, yt = lo[idx], hi[idx], y[idx]

    for _ in range(maxiter):
        if idx.size == 0:
            break
        fx = np.asarray(fun(xc), dtype=float)
        below = fx < yt
        a = np.where(below, xc, a)
        b = np.where(below, b, xc)
        exact = fx == yt

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if dfun is None:
                cand = np.full_like(xc, np.nan)
            else:
                dfx = np.asarray(dfun(xc), dtype=float)
                if log:
                    cand = xc - (np.log(fx) - np.log(yt)) * fx / dfx
                else:
                    cand = xc - (fx - yt) / dfx
            inside = np.isfinite(cand) & (cand > a) & (cand < b)
            geometric = (a > 0) & (b > 4 * a)
            mid = np.where(geometric, np.sqrt(a * b), 0.5 * (a + b))
        xn = np.where(inside, cand, mid)

        tol = atol + rtol * np.abs(xn)
        conv = exact | (inside & (np.abs(xn - xc) <= tol)) | (b - a <= tol)
        xn = np.where(exact, xc, xn)

        x[idx[conv]] = xn[conv]
        keep = ~conv
        idx, xc, a, b, yt = idx[keep], xn[keep], a[keep], b[keep], yt[keep]
    else:
        if idx.size:
            raise RootFindingError(
                f"{idx.size} inversions did not converge in {maxiter} iterations"
            )
    return x.reshape(shape)
