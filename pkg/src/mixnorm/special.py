"""Scalar special functions and adaptive Gauss-Kronrod quadrature.

The normal CDF, digamma and the exponentially scaled Bessel function come
from :mod:`scipy.special`; this module wraps them with the domain checks
and log-space handling the rest of the package relies on.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np
from scipy import special as sc

from .exceptions import (
    DomainError,
    NonFiniteIntegrand,
    NumericalUnderflow,
    ToleranceNotMet,
)

# Gauss-Kronrod 10/21 rule (QUADPACK qk21).
GK21_NODES = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
    -0.148874338981631210884826001129720, -0.294392862701460198131126603103866,
    -0.433395394129247190799265943165784, -0.562757134668604683339000099272694,
    -0.679409568299024406234327365114874, -0.780817726586416897063717578345042,
    -0.865063366688984510732096688423493, -0.930157491355708226001207180059508,
    -0.973906528517171720077964012084452, -0.995657163025808080735527280689003,
])
GK21_KRONROD = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
    0.147739104901338491374841515972068, 0.142775938577060080797094273138717,
    0.134709217311473325928054001771707, 0.123491976262065851077958109831074,
    0.109387158802297641899210590325805, 0.093125454583697605535065465083366,
    0.075039674810919952767043140916190, 0.054755896574351996031381300244580,
    0.032558162307964727478818972459390, 0.011694638867371874278064396062192,
])
_G10 = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])
GK21_GAUSS = np.zeros(21)
GK21_GAUSS[1:10:2] = _G10
GK21_GAUSS[11:20:2] = _G10[::-1]

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def std_normal_cdf(x):
    """Standard normal distribution function (elementwise)."""
    return sc.ndtr(x)


def log_std_normal_cdf(x):
    return sc.log_ndtr(x)


def digamma(x):
    """Digamma function on the positive half-line."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("digamma is only defined here for x > 0")
    out = sc.digamma(x)
    return float(out) if out.ndim == 0 else out


def log_bessel_k(order, x):
    """``log K_order(x)`` for the modified Bessel function of the second kind.

    Uses the exponentially scaled ``kve`` where it is representable and
    falls back to the integral ``K_v(x) = int_0^inf exp(-x cosh t) cosh(v t) dt``
    evaluated in log space where ``kve`` overflows or underflows (small x,
    large order).
    """
    order = np.asarray(order, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("log_bessel_k requires x > 0")
    order, x = np.broadcast_arrays(np.abs(order), x)
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        kv = sc.kve(order, x)
        out = np.log(kv) - x
    bad = ~np.isfinite(out) | ~(kv > 1e-290) | ~(kv < 1e290)
    if np.any(bad):
        out = np.array(out, dtype=float)
        for i in zip(*np.nonzero(bad)) if out.ndim else [()]:
            out[i] = _log_bessel_k_integral(float(order[i]), float(x[i]))
    return float(out) if out.ndim == 0 else out


def _log_bessel_k_integral(v: float, x: float) -> float:
    v = abs(v)  # K_{-v} = K_v; the peak below assumes v >= 0
    tstar = math.asinh(v / x)
    peak = -x * math.cosh(tstar) + v * tstar

    def f(t):
        e = -x * np.cosh(t) + v * t - peak
        return np.exp(e) * 0.5 * (1.0 + np.exp(-2.0 * v * t))

    width = 1.0 / math.sqrt(math.hypot(x, v))
    hi = tstar + width
    while -x * math.cosh(hi) + v * hi - peak > -800.0:
        hi = tstar + 2.0 * (hi - tstar)
    spec = QuadratureSpec(abs_tol=0.0, rel_tol=1e-14, max_subdivisions=400)
    total = 0.0
    for lo_, hi_ in ((0.0, tstar), (tstar, hi)):
        if hi_ > lo_:
            total += integrate(f, spec.with_domain((lo_, hi_)), strict=False)[0]
    return math.log(total) + peak


def _inv_mills_excess(alpha):
    """``E[X - alpha]`` and ``E[(X - alpha)^2]`` for X ~ N(0,1) conditioned on X > alpha."""
    alpha = np.asarray(alpha, dtype=float)
    big = alpha > 30.0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        r = SQRT_2_OVER_PI / sc.erfcx(alpha / math.sqrt(2.0))
        e1 = r - alpha
        e2 = 1.0 - alpha * e1
    if np.any(big):
        a = alpha[big]
        u = 1.0 / (a * a)
        # asymptotic inverse Mills ratio; truncation error < 1e-11 relative for alpha > 30
        series = 1.0 + u * (-2.0 + u * (10.0 + u * (-74.0 + u * (706.0 + u * (-8162.0 + u * 110410.0)))))
        e1 = np.array(e1)
        e2 = np.array(e2)
        e1[big] = series / a
        e2[big] = u * (2.0 + u * (-10.0 + u * (74.0 + u * (-706.0 + u * (8162.0 - u * 110410.0)))))
    return e1, e2


def trunc_normal_moments(mean, var):
    """First two raw moments of N(mean, var) truncated to (0, inf).

    Works elementwise. With ``alpha = -mean / sd`` and ``Y = X - alpha`` for
    a standard normal X truncated below at alpha, ``W = sd * Y`` exactly, so
    ``E[W] = sd * E[Y]`` and ``E[W^2] = sd^2 * E[Y^2]``; this avoids the
    cancellation in ``mean * E[W] + var`` when the mass sits at the boundary.
    """
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    if np.any(~(var > 0)):
        raise DomainError("truncated normal variance must be positive")
    sd = np.sqrt(var)
    alpha = -mean / sd
    e1, e2 = _inv_mills_excess(alpha)
    m1 = sd * e1
    m2 = var * e2
    if np.any(~np.isfinite(m1) | ~(m1 > 0) | ~np.isfinite(m2) | ~(m2 > 0)):
        raise NumericalUnderflow("truncated normal moments lost all precision")
    if m1.ndim == 0:
        return float(m1), float(m2)
    return m1, m2


Domain = Union[str, Tuple[float, float]]


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for :func:`integrate`.

    ``domain`` is ``"half_line"`` for (0, inf), ``"real_line"`` for the whole
    line, or a ``(lo, hi)`` pair for a finite interval.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200
    domain: Domain = "half_line"
    initial_intervals: int = 4

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0 or (self.abs_tol == 0 and self.rel_tol == 0):
            raise ValueError("tolerances must be nonnegative and not both zero")
        if self.max_subdivisions < 1 or self.initial_intervals < 1:
            raise ValueError("max_subdivisions and initial_intervals must be >= 1")
        if not isinstance(self.domain, str):
            lo, hi = self.domain
            if not lo < hi:
                raise ValueError(f"empty interval {self.domain}")
        elif self.domain not in ("half_line", "real_line"):
            raise ValueError(f"unknown domain {self.domain!r}")

    def with_domain(self, domain: Domain) -> "QuadratureSpec":
        return QuadratureSpec(self.abs_tol, self.rel_tol, self.max_subdivisions,
                              domain, self.initial_intervals)


def _mapped(f: Callable, domain: Domain):
    if domain == "half_line":
        def g(s):
            one_m = 1.0 - s
            # a node can round onto the singular endpoint; it carries no mass
            ok = one_m > 0
            safe = np.where(ok, one_m, 1.0)
            return np.where(ok, f(np.where(ok, s / safe, 0.0)) / (safe * safe), 0.0)
        return g, 0.0, 1.0
    if domain == "real_line":
        def g(t):
            d = 1.0 - t * t
            ok = d > 0
            safe = np.where(ok, d, 1.0)
            return np.where(ok, f(np.where(ok, t / safe, 0.0)) * (1.0 + t * t) / (safe * safe), 0.0)
        return g, -1.0, 1.0
    lo, hi = domain
    return f, float(lo), float(hi)


def gk21(g: Callable, a: float, b: float):
    """One Gauss-Kronrod 21 panel with the QUADPACK error heuristic."""
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    fx = np.asarray(g(center + half * GK21_NODES), dtype=float)
    if fx.shape != GK21_NODES.shape:
        fx = np.broadcast_to(fx, GK21_NODES.shape)
    if not np.all(np.isfinite(fx)):
        raise NonFiniteIntegrand(f"integrand not finite on [{a}, {b}]")
    resk = float(GK21_KRONROD @ fx)
    resg = float(GK21_GAUSS @ fx)
    mean = 0.5 * resk
    resabs = float(GK21_KRONROD @ np.abs(fx)) * abs(half)
    resasc = float(GK21_KRONROD @ np.abs(fx - mean)) * abs(half)
    value = resk * half
    err = abs((resk - resg) * half)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > _TINY / (50.0 * _EPS):
        err = max(50.0 * _EPS * resabs, err)
    return value, err


def integrate(f: Callable, spec: QuadratureSpec = QuadratureSpec(), strict: bool = True):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``spec.domain``.

    ``f`` is called with 1-d arrays of abscissae and must return an array of
    the same shape. Infinite domains are mapped onto finite ones by rational
    substitutions before subdivision. Returns ``(value, err_estimate)``;
    raises :class:`ToleranceNotMet` (with the best estimate attached) when
    the subdivision budget runs out, unless ``strict`` is false.
    """
    g, a, b = _mapped(f, spec.domain)
    edges = np.linspace(a, b, spec.initial_intervals + 1)
    heap = []
    total = 0.0
    total_err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = gk21(g, lo, hi)
        total += v
        total_err += e
        heapq.heappush(heap, (-e, lo, hi, v))
    n_sub = len(heap)
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n_sub >= max(spec.max_subdivisions, spec.initial_intervals):
            if strict:
                raise ToleranceNotMet(
                    f"quadrature error {total_err:.3g} exceeds tolerance after "
                    f"{spec.max_subdivisions} subdivisions", total, total_err)
            break
        neg_e, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            if strict:
                raise ToleranceNotMet("interval too small to bisect", total, total_err)
            break
        v1, e1 = gk21(g, lo, mid)
        v2, e2 = gk21(g, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        n_sub += 1
    # re-sum to shed accumulated cancellation from the running updates
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    return total, total_err
