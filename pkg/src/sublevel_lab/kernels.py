"""Grid kernels: marching-squares contour integrals and sublevel areas.

Each kernel exists twice: an explicit cell loop compiled with numba, and a
vectorized numpy version.  The public wrappers pick one according to
:func:`sublevel_lab._backend.use_numba`; both are importable directly for the
parity tests and the benchmark.

Conventions: sample arrays are indexed ``[i, j] <-> (x[i], y[j])`` on a
uniform grid.  Cell ``(i, j)`` has corners c0=(i,j), c1=(i+1,j),
c2=(i+1,j+1), c3=(i,j+1) and edges e0=c0c1, e1=c1c2, e2=c2c3, e3=c3c0.
"""
from __future__ import annotations

import numpy as np

from ._backend import njit, use_numba

# contour integral slots
J_SLOT, DIV_SLOT, ETA_SLOT, LEN_SLOT = 0, 1, 2, 3

REFINE = 4  # sub-cells per axis on boundary cells of the area kernel


# --------------------------------------------------------------------------
# shared scalar helpers (compiled by numba, plain Python otherwise)
# --------------------------------------------------------------------------


@njit
def _tri_fraction(a, b, c, s):
    # fraction of a linear triangle with vertex values a, b, c lying in {f <= s}
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
    if a > b:
        a, b = b, a
    if s <= a:
        return 0.0
    if s >= c:
        return 1.0
    if s <= b:
        return (s - a) * (s - a) / ((b - a) * (c - a))
    return 1.0 - (c - s) * (c - s) / ((c - a) * (c - b))


@njit
def _quad_fraction(v0, v1, v2, v3, s):
    # corners in c0..c3 order; split along the c0-c2 diagonal
    return 0.5 * (_tri_fraction(v0, v1, v2, s) + _tri_fraction(v0, v2, v3, s))


@njit
def _bilinear(q00, q10, q11, q01, u, v):
    return (q00 * (1 - u) * (1 - v) + q10 * u * (1 - v)
            + q11 * u * v + q01 * (1 - u) * v)


# --------------------------------------------------------------------------
# sublevel area
# --------------------------------------------------------------------------


@njit
def _sublevel_area_numba(f, hx, hy, level, k):
    nx, ny = f.shape
    full = 0.0
    partial_area = 0.0
    nboundary = 0
    cell = hx * hy
    inv = 1.0 / k
    for i in range(nx - 1):
        for j in range(ny - 1):
            v0 = f[i, j]
            v1 = f[i + 1, j]
            v2 = f[i + 1, j + 1]
            v3 = f[i, j + 1]
            lo = min(min(v0, v1), min(v2, v3))
            hi = max(max(v0, v1), max(v2, v3))
            if hi <= level:
                full += cell
                continue
            if lo > level:
                continue
            nboundary += 1
            acc = 0.0
            for a in range(k):
                u0 = a * inv
                u1 = (a + 1) * inv
                for b in range(k):
                    w0 = b * inv
                    w1 = (b + 1) * inv
                    s0 = _bilinear(v0, v1, v2, v3, u0, w0)
                    s1 = _bilinear(v0, v1, v2, v3, u1, w0)
                    s2 = _bilinear(v0, v1, v2, v3, u1, w1)
                    s3 = _bilinear(v0, v1, v2, v3, u0, w1)
                    acc += _quad_fraction(s0, s1, s2, s3, level)
            partial_area += acc * cell * inv * inv
    return full + partial_area, nboundary


def _tri_fraction_np(a, b, c, s):
    v = np.sort(np.stack([a, b, c]), axis=0)
    a, b, c = v[0], v[1], v[2]
    out = np.where(s >= c, 1.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        low = (s - a) ** 2 / ((b - a) * (c - a))
        high = 1.0 - (c - s) ** 2 / ((c - a) * (c - b))
    out = np.where((s > a) & (s <= b) & (s < c), low, out)
    out = np.where((s > b) & (s < c), high, out)
    return out


def _quad_fraction_np(v0, v1, v2, v3, s):
    return 0.5 * (_tri_fraction_np(v0, v1, v2, s) + _tri_fraction_np(v0, v2, v3, s))


def _sublevel_area_numpy(f, hx, hy, level, k):
    v0, v1, v2, v3 = f[:-1, :-1], f[1:, :-1], f[1:, 1:], f[:-1, 1:]
    lo = np.minimum(np.minimum(v0, v1), np.minimum(v2, v3))
    hi = np.maximum(np.maximum(v0, v1), np.maximum(v2, v3))
    cell = hx * hy
    full = np.count_nonzero(hi <= level) * cell
    mask = (hi > level) & (lo <= level)
    nboundary = int(np.count_nonzero(mask))
    if nboundary == 0:
        return full, 0
    c0, c1, c2, c3 = (v[mask][:, None, None] for v in (v0, v1, v2, v3))
    t = np.linspace(0.0, 1.0, k + 1)
    U, W = np.meshgrid(t, t, indexing="ij")
    lat = c0 * (1 - U) * (1 - W) + c1 * U * (1 - W) + c2 * U * W + c3 * (1 - U) * W
    frac = _quad_fraction_np(lat[:, :-1, :-1], lat[:, 1:, :-1], lat[:, 1:, 1:], lat[:, :-1, 1:], level)
    return full + frac.sum() * cell / (k * k), nboundary


def sublevel_area(f: np.ndarray, hx: float, hy: float, level: float, k: int = REFINE):
    """Area of ``{f <= level}`` and the number of cells cut by its boundary.

    Cells fully below the level count whole; cut cells are refined into
    ``k x k`` sub-cells of the bilinear interpolant, each split into two
    linear triangles whose sublevel fraction is exact.
    """
    f = np.ascontiguousarray(f, dtype=float)
    if use_numba():
        area, nb = _sublevel_area_numba(f, float(hx), float(hy), float(level), int(k))
    else:
        area, nb = _sublevel_area_numpy(f, float(hx), float(hy), float(level), int(k))
    return float(area), int(nb)


# --------------------------------------------------------------------------
# cell fractions (used by the spatial quadrature on refined lattices)
# --------------------------------------------------------------------------


@njit
def _cell_fractions_numba(f, level):
    nx, ny = f.shape
    out = np.empty((nx - 1, ny - 1))
    for i in range(nx - 1):
        for j in range(ny - 1):
            out[i, j] = _quad_fraction(f[i, j], f[i + 1, j], f[i + 1, j + 1], f[i, j + 1], level)
    return out


def _cell_fractions_numpy(f, level):
    v0, v1, v2, v3 = f[:-1, :-1], f[1:, :-1], f[1:, 1:], f[:-1, 1:]
    lo = np.minimum(np.minimum(v0, v1), np.minimum(v2, v3))
    hi = np.maximum(np.maximum(v0, v1), np.maximum(v2, v3))
    out = (hi <= level).astype(float)
    cut = (hi > level) & (lo <= level)
    if np.any(cut):
        out[cut] = _quad_fraction_np(v0[cut], v1[cut], v2[cut], v3[cut], level)
    return out


def cell_fractions(f: np.ndarray, level: float) -> np.ndarray:
    """Per-cell fraction of area in ``{f <= level}`` (piecewise-linear on two triangles)."""
    f = np.ascontiguousarray(f, dtype=float)
    if use_numba():
        return _cell_fractions_numba(f, float(level))
    return _cell_fractions_numpy(f, float(level))


# --------------------------------------------------------------------------
# marching-squares contour integrals
# --------------------------------------------------------------------------
#
# Crossings on cell edges solve the cubic Hermite interpolant of f built from
# the sampled directional derivatives, and the gradient at a crossing is the
# Hermite interpolant of the gradient samples with the Hessian as slope, so
# both are fourth-order accurate.  Each segment integral uses the chord
# length corrected to arc length by the mean curvature, and the density
# 1/|grad f| is integrated by the endpoint-corrected trapezoid rule; eta/|grad f|
# reuses that correction with eta frozen at the endpoints, and the divergence
# term uses the plain trapezoid rule on the corrected length.

# edge e of a cell: start corner offset, axis (0 = x, 1 = y), direction
_EDGE_DI = (0, 1, 1, 0)
_EDGE_DJ = (0, 0, 1, 1)
_EDGE_AXIS = (0, 1, 0, 1)
_EDGE_SIGN = (1.0, 1.0, -1.0, -1.0)
NFIELD = 8  # px, py, gx, gy, hxx, hxy, hyy, eta


def _hermite_py(p0, p1, d0, d1, t):
    t2 = t * t
    t3 = t2 * t
    return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * d0 + (3 * t2 - 2 * t3) * p1 + (t3 - t2) * d1


def _hermite_slope_py(p0, p1, d0, d1, t):
    t2 = t * t
    return (6 * t2 - 6 * t) * (p0 - p1) + (3 * t2 - 4 * t + 1) * d0 + (3 * t2 - 2 * t) * d1


_hermite = njit(_hermite_py)
_hermite_slope = njit(_hermite_slope_py)


@njit
def _hermite_root(p0, p1, d0, d1, level):
    # p0 and p1 lie on opposite sides of level (p0 <= level < p1 or reverse)
    lo = 0.0
    hi = 1.0
    rising = p1 > p0
    t = (level - p0) / (p1 - p0)
    for _ in range(60):
        v = _hermite(p0, p1, d0, d1, t) - level
        if v == 0.0:
            return t
        if (v < 0.0) == rising:
            lo = t
        else:
            hi = t
        dv = _hermite_slope(p0, p1, d0, d1, t)
        tn = t - v / dv if dv != 0.0 else -1.0
        if not (lo < tn < hi):
            tn = 0.5 * (lo + hi)
        if abs(tn - t) <= 1e-15:
            return tn
        t = tn
    return t


@njit
def _edge_point(out, e, i, j, xs, ys, hx, hy, f, gx, gy, hxx, hxy, hyy, eta, level):
    ia = i + _EDGE_DI[e]
    ja = j + _EDGE_DJ[e]
    sgn = _EDGE_SIGN[e]
    if _EDGE_AXIS[e] == 0:
        ib = ia + int(sgn)
        jb = ja
        step = sgn * hx
        fa, fb = gx[ia, ja], gx[ib, jb]
        ga0, ga1 = hxx[ia, ja], hxx[ib, jb]
        gb0, gb1 = hxy[ia, ja], hxy[ib, jb]
    else:
        ib = ia
        jb = ja + int(sgn)
        step = sgn * hy
        fa, fb = gy[ia, ja], gy[ib, jb]
        ga0, ga1 = hxy[ia, ja], hxy[ib, jb]
        gb0, gb1 = hyy[ia, ja], hyy[ib, jb]
    t = _hermite_root(f[ia, ja], f[ib, jb], step * fa, step * fb, level)
    if _EDGE_AXIS[e] == 0:
        out[0] = xs[ia] + t * step
        out[1] = ys[ja]
    else:
        out[0] = xs[ia]
        out[1] = ys[ja] + t * step
    out[2] = _hermite(gx[ia, ja], gx[ib, jb], step * ga0, step * ga1, t)
    out[3] = _hermite(gy[ia, ja], gy[ib, jb], step * gb0, step * gb1, t)
    out[4] = (1 - t) * hxx[ia, ja] + t * hxx[ib, jb]
    out[5] = (1 - t) * hxy[ia, ja] + t * hxy[ib, jb]
    out[6] = (1 - t) * hyy[ia, ja] + t * hyy[ib, jb]
    out[7] = (1 - t) * eta[ia, ja] + t * eta[ib, jb]


@njit
def _point_terms(p, ux, uy):
    # returns 1/|g|, its arc-length slope along +/-tangent aligned with u,
    # level-curve curvature, divergence integrand, eta/|g|
    ax = p[2]
    ay = p[3]
    g2 = ax * ax + ay * ay
    g = np.sqrt(g2)
    tx = -ay / g
    ty = ax / g
    if tx * ux + ty * uy < 0.0:
        tx = -tx
        ty = -ty
    bxx = p[4]
    bxy = p[5]
    byy = p[6]
    w = 1.0 / g
    hgx = bxx * ax + bxy * ay
    hgy = bxy * ax + byy * ay
    dw = -(tx * hgx + ty * hgy) / (g2 * g)
    kap = (tx * tx * bxx + 2.0 * tx * ty * bxy + ty * ty * byy) / g
    ghg = ax * hgx + ay * hgy
    div = (g2 * (bxx + byy) - 2.0 * ghg) / (g2 * g2 * g)
    return w, dw, kap, div, p[7] * w


@njit
def _accumulate_segment(out, p, q):
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    chord = np.sqrt(dx * dx + dy * dy)
    if chord == 0.0:
        return
    ux = dx / chord
    uy = dy / chord
    wp, dwp, kp, divp, ep = _point_terms(p, ux, uy)
    wq, dwq, kq, divq, eq = _point_terms(q, ux, uy)
    km = 0.5 * (kp + kq)
    arc = chord * (1.0 + chord * chord * km * km / 24.0)
    out[0] += 0.5 * arc * (wp + wq) + arc * arc * (dwp - dwq) / 12.0
    out[1] += 0.5 * arc * (divp + divq)
    # endpoint correction without the eta' term: exact ratio eta/J for constant eta
    out[2] += 0.5 * arc * (ep + eq) + arc * arc * (p[7] * dwp - q[7] * dwq) / 12.0
    out[3] += arc


@njit
def _contour_numba(xs, ys, f, gx, gy, hxx, hxy, hyy, eta, level):
    nx, ny = f.shape
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    out = np.zeros(4)
    pts = np.empty((4, NFIELD))
    cross = np.zeros(4, dtype=np.bool_)
    vals = np.empty(4)
    below = np.zeros(4, dtype=np.bool_)
    for i in range(nx - 1):
        for j in range(ny - 1):
            vals[0] = f[i, j]
            vals[1] = f[i + 1, j]
            vals[2] = f[i + 1, j + 1]
            vals[3] = f[i, j + 1]
            lo = min(min(vals[0], vals[1]), min(vals[2], vals[3]))
            hi = max(max(vals[0], vals[1]), max(vals[2], vals[3]))
            if hi <= level or lo > level:
                continue
            for c in range(4):
                below[c] = vals[c] <= level
            ncross = 0
            for e in range(4):
                cross[e] = below[e] != below[(e + 1) % 4]
                if cross[e]:
                    ncross += 1
                    _edge_point(pts[e], e, i, j, xs, ys, hx, hy, f, gx, gy,
                                hxx, hxy, hyy, eta, level)
            if ncross == 2:
                first = -1
                second = -1
                for e in range(4):
                    if cross[e]:
                        if first < 0:
                            first = e
                        else:
                            second = e
                _accumulate_segment(out, pts[first], pts[second])
            elif ncross == 4:
                center_below = 0.25 * (vals[0] + vals[1] + vals[2] + vals[3]) <= level
                for c in range(4):
                    if below[c] != center_below:
                        _accumulate_segment(out, pts[(c + 3) % 4], pts[c])
    return out


def _hermite_root_np(p0, p1, d0, d1, level):
    lo = np.zeros_like(p0)
    hi = np.ones_like(p0)
    rising = p1 > p0
    t = (level - p0) / (p1 - p0)
    for _ in range(60):
        v = _hermite_py(p0, p1, d0, d1, t) - level
        move_lo = (v < 0.0) == rising
        lo = np.where(move_lo & (v != 0), t, lo)
        hi = np.where(~move_lo & (v != 0), t, hi)
        dv = _hermite_slope_py(p0, p1, d0, d1, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - v / dv
        tn = np.where(v == 0, t, tn)
        bad = ~((lo < tn) & (tn < hi)) & (v != 0)
        tn = np.where(bad, 0.5 * (lo + hi), tn)
        if np.all(np.abs(tn - t) <= 1e-15):
            return tn
        t = tn
    return t


def _edge_points_np(e, ii, jj, xs, ys, hx, hy, f, gx, gy, hxx, hxy, hyy, eta, level):
    ia = ii + _EDGE_DI[e]
    ja = jj + _EDGE_DJ[e]
    sgn = _EDGE_SIGN[e]
    if _EDGE_AXIS[e] == 0:
        ib, jb, step = ia + int(sgn), ja, sgn * hx
        fd, ga, gb = gx, hxx, hxy
    else:
        ib, jb, step = ia, ja + int(sgn), sgn * hy
        fd, ga, gb = gy, hxy, hyy
    t = _hermite_root_np(f[ia, ja], f[ib, jb], step * fd[ia, ja], step * fd[ib, jb], level)
    out = np.empty((ii.size, NFIELD))
    if _EDGE_AXIS[e] == 0:
        out[:, 0] = xs[ia] + t * step
        out[:, 1] = ys[ja]
    else:
        out[:, 0] = xs[ia]
        out[:, 1] = ys[ja] + t * step
    out[:, 2] = _hermite_py(gx[ia, ja], gx[ib, jb], step * ga[ia, ja], step * ga[ib, jb], t)
    out[:, 3] = _hermite_py(gy[ia, ja], gy[ib, jb], step * gb[ia, ja], step * gb[ib, jb], t)
    for k, q in ((4, hxx), (5, hxy), (6, hyy), (7, eta)):
        out[:, k] = (1 - t) * q[ia, ja] + t * q[ib, jb]
    return out


def _point_terms_np(p, ux, uy):
    ax, ay = p[:, 2], p[:, 3]
    g2 = ax * ax + ay * ay
    g = np.sqrt(g2)
    tx, ty = -ay / g, ax / g
    flip = tx * ux + ty * uy < 0
    tx = np.where(flip, -tx, tx)
    ty = np.where(flip, -ty, ty)
    bxx, bxy, byy = p[:, 4], p[:, 5], p[:, 6]
    w = 1.0 / g
    hgx = bxx * ax + bxy * ay
    hgy = bxy * ax + byy * ay
    dw = -(tx * hgx + ty * hgy) / (g2 * g)
    kap = (tx * tx * bxx + 2 * tx * ty * bxy + ty * ty * byy) / g
    div = (g2 * (bxx + byy) - 2 * (ax * hgx + ay * hgy)) / (g2 * g2 * g)
    return w, dw, kap, div, p[:, 7] * w


def _contour_numpy(xs, ys, f, gx, gy, hxx, hxy, hyy, eta, level):
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    v = np.stack([f[:-1, :-1], f[1:, :-1], f[1:, 1:], f[:-1, 1:]], axis=-1)
    ii, jj = np.nonzero((v.max(-1) > level) & (v.min(-1) <= level))
    out = np.zeros(4)
    if ii.size == 0:
        return out
    vals = v[ii, jj]
    below = vals <= level
    cross = below != np.roll(below, -1, axis=1)
    pts = np.full((ii.size, 4, NFIELD), np.nan)
    for e in range(4):
        sel = np.flatnonzero(cross[:, e])
        if sel.size:
            pts[sel, e] = _edge_points_np(e, ii[sel], jj[sel], xs, ys, hx, hy, f, gx, gy,
                                          hxx, hxy, hyy, eta, level)
    ncross = cross.sum(1)
    p_list, q_list = [], []
    two = np.flatnonzero(ncross == 2)
    if two.size:
        order = np.argsort(~cross[two], axis=1, kind="stable")
        p_list.append(pts[two, order[:, 0]])
        q_list.append(pts[two, order[:, 1]])
    four = np.flatnonzero(ncross == 4)
    if four.size:
        center_below = vals[four].mean(1) <= level
        for c in range(4):
            sel = four[below[four, c] != center_below]
            p_list.append(pts[sel, (c + 3) % 4])
            q_list.append(pts[sel, c])
    p = np.concatenate(p_list)
    q = np.concatenate(q_list)
    d = q[:, :2] - p[:, :2]
    chord = np.hypot(d[:, 0], d[:, 1])
    keep = chord > 0
    p, q, d, chord = p[keep], q[keep], d[keep], chord[keep]
    ux, uy = d[:, 0] / chord, d[:, 1] / chord
    wp, dwp, kp, divp, ep = _point_terms_np(p, ux, uy)
    wq, dwq, kq, divq, eq = _point_terms_np(q, ux, uy)
    km = 0.5 * (kp + kq)
    arc = chord * (1 + chord * chord * km * km / 24)
    out[0] = np.sum(0.5 * arc * (wp + wq) + arc * arc * (dwp - dwq) / 12)
    out[1] = np.sum(0.5 * arc * (divp + divq))
    out[2] = np.sum(0.5 * arc * (ep + eq) + arc * arc * (p[:, 7] * dwp - q[:, 7] * dwq) / 12)
    out[3] = np.sum(arc)
    return out


def contour_integrals(xs, ys, f, gx, gy, hxx, hxy, hyy, eta, level) -> np.ndarray:
    """Integrals over the level set ``{f = level}`` by marching squares.

    Returns ``[int 1/|grad f|, int div(X)/|grad f|, int eta/|grad f|, length]``
    with ``div X = (|grad f|^2 lap f - 2 grad f H grad f^T)/|grad f|^4``.
    Saddle cells are resolved by the cell-average value.
    """
    args = [np.ascontiguousarray(a, dtype=float) for a in (xs, ys, f, gx, gy, hxx, hxy, hyy, eta)]
    if use_numba():
        return _contour_numba(*args, float(level))
    return _contour_numpy(*args, float(level))


def quad_fractions(v0, v1, v2, v3, level) -> np.ndarray:
    """Vectorized sublevel fraction of cells with corner values ``v0..v3`` (c0..c3 order)."""
    return _quad_fraction_np(*(np.asarray(v, dtype=float) for v in (v0, v1, v2, v3)), float(level))
