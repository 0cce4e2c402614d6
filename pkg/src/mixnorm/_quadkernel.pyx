# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled mixture log-density kernel.

For every observation the integrand of the mixture density depends on y
only through three scalars: ``dy = (y-mu)' S^-1 (y-mu)``,
``b = delta' S^-1 (y-mu)`` and ``dd = delta' S^-1 delta``. The integral
over w is taken in ``u = log w``, centred at the mode of the log-integrand
and scaled by its curvature, then mapped to (-1, 1) and integrated with
adaptive Gauss-Kronrod 21. Must stay numerically identical in structure
to ``_quadkernel_py``.
"""

import numpy as np

from libc.math cimport exp, log, log1p, sqrt, fabs, pow, isfinite, INFINITY

cdef double LOG2PI = 1.8378770664093453
cdef double GR = 0.6180339887498949
cdef int NGRID = 161
cdef double UGRID_LO = -40.0
cdef double UGRID_STEP = 0.5

cdef double XGK[21]
cdef double WGK[21]
cdef double WG[21]

_xgk = (0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
        0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
        0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
        0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
        0.294392862701460198131126603103866, 0.148874338981631210884826001129720, 0.0)
_wgk = (0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
        0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
        0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
        0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
        0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
        0.149445554002916905664936468389821)
_wg = (0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
       0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
       0.295524224714752870173892994651338)

cdef int _i
for _i in range(11):
    XGK[_i] = _xgk[_i]
    WGK[_i] = _wgk[_i]
    XGK[20 - _i] = -_xgk[_i]
    WGK[20 - _i] = _wgk[_i]
for _i in range(21):
    WG[_i] = 0.0
for _i in range(5):
    WG[2 * _i + 1] = _wg[_i]
    WG[19 - 2 * _i] = _wg[_i]

cdef double EPS = 2.220446049250313e-16

ctypedef struct Ctx:
    double dy
    double b
    double dd
    double p
    double base
    int kind
    int tag
    double p0
    double p1
    double p2
    double w_shift
    double q_const
    double sqrt_dy
    double sqrt_dd


cdef inline double _softplus(double x) nogil:
    if x > 30.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef double _logmix(Ctx* c, double u, double w) nogil:
    cdef double r = 0.0
    if c.tag == 0:  # inverse gamma (shape, rate)
        return -(c.p0 + 1.0) * u - c.p1 * exp(-u)
    elif c.tag == 1:  # GIG (psi, chi, lambda)
        r = (c.p2 - 1.0) * u
        if c.p0 > 0:
            r -= 0.5 * c.p0 * w
        if c.p1 > 0:
            r -= 0.5 * c.p1 * exp(-u)
        return r
    elif c.tag == 2:  # truncated normal (mean, var)
        return -0.5 * (w - c.p0) * (w - c.p0) / c.p1
    elif c.tag == 3:  # exponential (rate)
        return -c.p0 * w
    elif c.tag == 4:  # Birnbaum-Saunders (alpha)
        return -0.5 * u + _softplus(-u) - (w + exp(-u) - 2.0) / (2.0 * c.p0 * c.p0)
    else:  # Lindley (alpha)
        return _softplus(u) - c.p0 * w


cdef double _logint(Ctx* c, double u) nogil:
    """Log of integrand times the Jacobian ``w`` at ``u = log w``."""
    cdef double w, q, r
    if u > 745.0 or u < -745.0:
        return -INFINITY
    w = exp(u)
    if c.kind == 1:  # MMN
        # completed square: the w-dependent part vanishes at its peak, so
        # evaluating it never cancels large terms
        if c.dd > 0:
            q = c.w_shift - w
            q = -0.5 * c.dd * q * q + c.q_const
        else:
            q = w * c.b - 0.5 * c.dy
    else:
        q = -0.5 * c.p * u
        if c.kind == 2 and c.dd > 0 and c.dy > 0:
            # -(dy/w + dd w)/2 written as a square plus its minimum -sqrt(dy dd)
            r = c.sqrt_dy * exp(-0.5 * u) - c.sqrt_dd * exp(0.5 * u)
            q += -0.5 * r * r + c.q_const
        else:
            if c.dy > 0:
                q -= 0.5 * c.dy * exp(-u)
            if c.kind == 2:
                q += c.b
                if c.dd > 0:
                    q -= 0.5 * w * c.dd
    q = c.base + q + _logmix(c, u, w) + u
    if q != q:  # indeterminate far-tail overflow; the integrand vanishes there
        return -INFINITY
    return q


cdef void _prepare(Ctx* c) nogil:
    """Per-observation constants of the rewritten quadratic forms."""
    c.w_shift = 0.0
    c.q_const = 0.0
    c.sqrt_dy = sqrt(c.dy) if c.dy > 0 else 0.0
    c.sqrt_dd = sqrt(c.dd) if c.dd > 0 else 0.0
    if c.kind == 1 and c.dd > 0:
        c.w_shift = c.b / c.dd
        c.q_const = 0.5 * (c.b * c.w_shift - c.dy)
    elif c.kind == 2 and c.dd > 0 and c.dy > 0:
        c.q_const = c.b - c.sqrt_dy * c.sqrt_dd


cdef double _panel(Ctx* c, double ustar, double gstar, double sigma,
                   double a, double bb, double* err) nogil:
    cdef double half = 0.5 * (bb - a)
    cdef double center = 0.5 * (a + bb)
    cdef double fx[21]
    cdef double x, t, d, g, resk = 0.0, resg = 0.0, resabs = 0.0, resasc = 0.0, mean
    cdef double e
    cdef int k
    for k in range(21):
        x = center + half * XGK[k]
        d = 1.0 - x * x
        t = x / d
        g = _logint(c, ustar + sigma * t)
        if g == -INFINITY:
            fx[k] = 0.0
        else:
            fx[k] = exp(g - gstar) * sigma * (1.0 + x * x) / (d * d)
        if not isfinite(fx[k]):
            err[0] = INFINITY
            return 0.0 / 0.0
        resk += WGK[k] * fx[k]
        resg += WG[k] * fx[k]
        resabs += WGK[k] * fabs(fx[k])
    mean = 0.5 * resk
    for k in range(21):
        resasc += WGK[k] * fabs(fx[k] - mean)
    resabs *= fabs(half)
    resasc *= fabs(half)
    e = fabs((resk - resg) * half)
    if resasc != 0.0 and e != 0.0:
        e = resasc * min(1.0, pow(200.0 * e / resasc, 1.5))
    if resabs > 2.2250738585072014e-308 / (50.0 * EPS):
        e = max(50.0 * EPS * resabs, e)
    err[0] = e
    return resk * half


DEF EDGE_DROP = 60.0


cdef double _one(Ctx* c, double rel_tol, int max_intervals,
                 double* lo, double* hi, double* val, double* er, int* status) nogil:
    cdef int k, kmax = -1, n, j, jmax
    cdef double g, gmax = -INFINITY, a, bb, m1, m2, f1, f2, ustar, gstar
    cdef double h, curv, sigma, tol, total, total_err, e1, e2, v1, v2, mid
    # coarse grid for the mode
    for k in range(NGRID):
        g = _logint(c, UGRID_LO + UGRID_STEP * k)
        if g > gmax:
            gmax = g
            kmax = k
    if kmax < 0 or not isfinite(gmax):
        status[0] = 2
        return -INFINITY
    a = UGRID_LO + UGRID_STEP * (kmax - 1)
    bb = UGRID_LO + UGRID_STEP * (kmax + 1)
    # golden-section refinement
    m1 = bb - GR * (bb - a)
    m2 = a + GR * (bb - a)
    f1 = _logint(c, m1)
    f2 = _logint(c, m2)
    for k in range(80):
        if bb - a < 1e-12:
            break
        if f1 < f2:
            a = m1
            m1 = m2
            f1 = f2
            m2 = a + GR * (bb - a)
            f2 = _logint(c, m2)
        else:
            bb = m2
            m2 = m1
            f2 = f1
            m1 = bb - GR * (bb - a)
            f1 = _logint(c, m1)
    ustar = 0.5 * (a + bb)
    gstar = _logint(c, ustar)
    if gmax > gstar:
        ustar = UGRID_LO + UGRID_STEP * kmax
        gstar = gmax
    # curvature scale
    h = 1e-3
    sigma = 1.0
    for k in range(3):
        curv = (_logint(c, ustar + h) - 2.0 * gstar + _logint(c, ustar - h)) / (h * h)
        if curv < 0 and isfinite(curv):
            sigma = 1.0 / sqrt(-curv)
        else:
            # lost to rounding at a finer step: keep the previous estimate
            break
        if sigma >= 10.0 * h:
            break
        h = 0.1 * sigma
    if sigma > 10.0:
        sigma = 10.0
    if sigma < 1e-8:
        sigma = 1e-8
    # adaptive Gauss-Kronrod on x in (-1, 1), u = ustar + sigma x / (1 - x^2)
    n = 4
    total = 0.0
    total_err = 0.0
    for k in range(4):
        lo[k] = -1.0 + 0.5 * k
        hi[k] = lo[k] + 0.5
        val[k] = _panel(c, ustar, gstar, sigma, lo[k], hi[k], &er[k])
        total += val[k]
        total_err += er[k]
    status[0] = 0
    # the integrand is only known to about eps |g| relative accuracy
    tol = max(rel_tol, 16.0 * EPS * fabs(gstar))
    while total_err > tol * fabs(total):
        if not isfinite(total_err) or not isfinite(total):
            status[0] = 2
            break
        if n >= max_intervals:
            status[0] = 1
            break
        jmax = 0
        for j in range(1, n):
            if er[j] > er[jmax]:
                jmax = j
        mid = 0.5 * (lo[jmax] + hi[jmax])
        if not (lo[jmax] < mid and mid < hi[jmax]):
            status[0] = 1
            break
        v1 = _panel(c, ustar, gstar, sigma, lo[jmax], mid, &e1)
        v2 = _panel(c, ustar, gstar, sigma, mid, hi[jmax], &e2)
        total += v1 + v2 - val[jmax]
        total_err += e1 + e2 - er[jmax]
        lo[n] = mid
        hi[n] = hi[jmax]
        val[n] = v2
        er[n] = e2
        hi[jmax] = mid
        val[jmax] = v1
        er[jmax] = e1
        n += 1
    total = 0.0
    for j in range(n):
        total += val[j]
    if not (total > 0) or not isfinite(total):
        status[0] = 2
        return -INFINITY
    # mass still present where the integrand is cut off: the integral diverges
    if _logint(c, -700.0) > gstar - EDGE_DROP or _logint(c, 700.0) > gstar - EDGE_DROP:
        status[0] = 1
    return gstar + log(total)


def mixture_logpdf(double[:] dy, double[:] b, double dd, int p, double logdet,
                   int kind, int tag, params, double lognorm,
                   double rel_tol=1e-11, int max_intervals=400):
    """Log-density of a normal mixture at each observation.

    ``kind`` is 0 (VMN), 1 (MMN) or 2 (MVMN); ``tag``/``params``/``lognorm``
    describe the mixing law as produced by ``MixingSpec.kernel_code``.
    Returns ``(logpdf, status)`` with status 0 (converged), 1 (tolerance not
    met) or 2 (non-finite / empty integrand).
    """
    cdef Py_ssize_t n = dy.shape[0], i
    out_arr = np.empty(n)
    st_arr = np.zeros(n, dtype=np.intc)
    cdef double[:] out = out_arr
    cdef int[:] st = st_arr
    cdef Ctx c
    work = np.empty((4, max_intervals + 2))
    cdef double[:, :] wk = work
    c.dd = dd
    c.p = p
    c.base = -0.5 * p * LOG2PI - 0.5 * logdet + lognorm
    c.kind = kind
    c.tag = tag
    c.p0 = params[0]
    c.p1 = params[1]
    c.p2 = params[2]
    with nogil:
        for i in range(n):
            c.dy = dy[i]
            c.b = b[i]
            _prepare(&c)
            out[i] = _one(&c, rel_tol, max_intervals, &wk[0, 0], &wk[1, 0],
                          &wk[2, 0], &wk[3, 0], &st[i])
    return out_arr, st_arr
