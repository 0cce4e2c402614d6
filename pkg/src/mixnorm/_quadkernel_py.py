"""Pure-Python twin of the compiled ``_quadkernel`` extension.

Same algorithm step for step (grid mode search, golden-section refinement,
curvature scaling, adaptive Gauss-Kronrod 21 in a rational map of the
log-mixing variable); only slower. Used when the extension is not built or
when ``MIXNORM_PURE_PYTHON=1``.
"""

from __future__ import annotations

import math

import numpy as np

from .special import GK21_GAUSS, GK21_KRONROD, GK21_NODES

LOG2PI = math.log(2.0 * math.pi)
GR = 0.6180339887498949
NGRID = 161
UGRID_LO = -40.0
UGRID_STEP = 0.5
_EPS = np.finfo(float).eps
EDGE_DROP = 60.0
_TINY = np.finfo(float).tiny


class _Ctx:
    __slots__ = ("dy", "b", "dd", "p", "base", "kind", "tag", "p0", "p1", "p2",
                 "w_shift", "q_const", "sqrt_dy", "sqrt_dd")


def _prepare(c):
    c.w_shift = 0.0
    c.q_const = 0.0
    c.sqrt_dy = math.sqrt(c.dy) if c.dy > 0 else 0.0
    c.sqrt_dd = math.sqrt(c.dd) if c.dd > 0 else 0.0
    if c.kind == 1 and c.dd > 0:
        c.w_shift = c.b / c.dd
        c.q_const = 0.5 * (c.b * c.w_shift - c.dy)
    elif c.kind == 2 and c.dd > 0 and c.dy > 0:
        c.q_const = c.b - c.sqrt_dy * c.sqrt_dd


def _softplus(x):
    return np.logaddexp(0.0, x)


def _logmix(c, u, w):
    if c.tag == 0:
        return -(c.p0 + 1.0) * u - c.p1 * np.exp(-u)
    if c.tag == 1:
        r = (c.p2 - 1.0) * u
        if c.p0 > 0:
            r = r - 0.5 * c.p0 * w
        if c.p1 > 0:
            r = r - 0.5 * c.p1 * np.exp(-u)
        return r
    if c.tag == 2:
        return -0.5 * (w - c.p0) ** 2 / c.p1
    if c.tag == 3:
        return -c.p0 * w
    if c.tag == 4:
        return -0.5 * u + _softplus(-u) - (w + np.exp(-u) - 2.0) / (2.0 * c.p0 * c.p0)
    return _softplus(u) - c.p0 * w


def _logint(c, u):
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        w = np.exp(u)
        if c.kind == 1:
            if c.dd > 0:
                q = -0.5 * c.dd * (c.w_shift - w) ** 2 + c.q_const
            else:
                q = w * c.b - 0.5 * c.dy
        else:
            q = -0.5 * c.p * u
            if c.kind == 2 and c.dd > 0 and c.dy > 0:
                r = c.sqrt_dy * np.exp(-0.5 * u) - c.sqrt_dd * np.exp(0.5 * u)
                q = q - 0.5 * r * r + c.q_const
            else:
                if c.dy > 0:
                    q = q - 0.5 * c.dy * np.exp(-u)
                if c.kind == 2:
                    q = q + c.b
                    if c.dd > 0:
                        q = q - 0.5 * w * c.dd
        g = c.base + q + _logmix(c, u, w) + u
    return np.where((np.abs(u) > 745.0) | np.isnan(g), -np.inf, g)


def _scalar(c, u):
    return float(_logint(c, np.array([u]))[0])


def _panel(c, ustar, gstar, sigma, a, b):
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * GK21_NODES
    d = 1.0 - x * x
    g = _logint(c, ustar + sigma * (x / d))
    with np.errstate(over="ignore", invalid="ignore"):
        fx = np.where(g == -np.inf, 0.0, np.exp(g - gstar) * sigma * (1.0 + x * x) / (d * d))
    if not np.all(np.isfinite(fx)):
        return math.nan, math.inf
    resk = float(GK21_KRONROD @ fx)
    resg = float(GK21_GAUSS @ fx)
    resabs = float(GK21_KRONROD @ np.abs(fx)) * abs(half)
    resasc = float(GK21_KRONROD @ np.abs(fx - 0.5 * resk)) * abs(half)
    e = abs((resk - resg) * half)
    if resasc != 0.0 and e != 0.0:
        e = resasc * min(1.0, (200.0 * e / resasc) ** 1.5)
    if resabs > _TINY / (50.0 * _EPS):
        e = max(50.0 * _EPS * resabs, e)
    return resk * half, e


def _one(c, rel_tol, max_intervals):
    grid = UGRID_LO + UGRID_STEP * np.arange(NGRID)
    gg = _logint(c, grid)
    kmax = int(np.argmax(gg))
    gmax = float(gg[kmax])
    if not math.isfinite(gmax):
        return -math.inf, 2
    a = UGRID_LO + UGRID_STEP * (kmax - 1)
    b = UGRID_LO + UGRID_STEP * (kmax + 1)
    m1 = b - GR * (b - a)
    m2 = a + GR * (b - a)
    f1 = _scalar(c, m1)
    f2 = _scalar(c, m2)
    for _ in range(80):
        if b - a < 1e-12:
            break
        if f1 < f2:
            a, m1, f1 = m1, m2, f2
            m2 = a + GR * (b - a)
            f2 = _scalar(c, m2)
        else:
            b, m2, f2 = m2, m1, f1
            m1 = b - GR * (b - a)
            f1 = _scalar(c, m1)
    ustar = 0.5 * (a + b)
    gstar = _scalar(c, ustar)
    if gmax > gstar:
        ustar, gstar = UGRID_LO + UGRID_STEP * kmax, gmax
    h = 1e-3
    sigma = 1.0
    for _ in range(3):
        curv = (_scalar(c, ustar + h) - 2.0 * gstar + _scalar(c, ustar - h)) / (h * h)
        if curv < 0 and math.isfinite(curv):
            sigma = 1.0 / math.sqrt(-curv)
        else:
            break
        if sigma >= 10.0 * h:
            break
        h = 0.1 * sigma
    sigma = min(max(sigma, 1e-8), 10.0)

    lo = [-1.0, -0.5, 0.0, 0.5]
    hi = [-0.5, 0.0, 0.5, 1.0]
    val, er = [], []
    for a_, b_ in zip(lo, hi):
        v, e = _panel(c, ustar, gstar, sigma, a_, b_)
        val.append(v)
        er.append(e)
    total = sum(val)
    total_err = sum(er)
    status = 0
    tol = max(rel_tol, 16.0 * _EPS * abs(gstar))
    while total_err > tol * abs(total):
        if not (math.isfinite(total_err) and math.isfinite(total)):
            status = 2
            break
        if len(val) >= max_intervals:
            status = 1
            break
        j = int(np.argmax(er))
        mid = 0.5 * (lo[j] + hi[j])
        if not lo[j] < mid < hi[j]:
            status = 1
            break
        v1, e1 = _panel(c, ustar, gstar, sigma, lo[j], mid)
        v2, e2 = _panel(c, ustar, gstar, sigma, mid, hi[j])
        total += v1 + v2 - val[j]
        total_err += e1 + e2 - er[j]
        lo.append(mid)
        hi.append(hi[j])
        val.append(v2)
        er.append(e2)
        hi[j] = mid
        val[j] = v1
        er[j] = e1
    total = sum(val)
    if not (total > 0) or not math.isfinite(total):
        return -math.inf, 2
    # mass still present where the integrand is cut off: the integral diverges
    if max(_scalar(c, -700.0), _scalar(c, 700.0)) > gstar - EDGE_DROP:
        status = 1
    return gstar + math.log(total), status


def mixture_logpdf(dy, b, dd, p, logdet, kind, tag, params, lognorm,
                   rel_tol=1e-11, max_intervals=400):
    dy = np.asarray(dy, dtype=float)
    b = np.asarray(b, dtype=float)
    c = _Ctx()
    c.dd = float(dd)
    c.p = float(p)
    c.base = -0.5 * p * LOG2PI - 0.5 * logdet + lognorm
    c.kind = int(kind)
    c.tag = int(tag)
    c.p0, c.p1, c.p2 = (float(v) for v in params)
    out = np.empty(dy.size)
    status = np.zeros(dy.size, dtype=np.intc)
    for i in range(dy.size):
        c.dy = float(dy[i])
        c.b = float(b[i])
        _prepare(c)
        out[i], status[i] = _one(c, rel_tol, max_intervals)
    return out, status
