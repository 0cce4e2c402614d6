"""Slow, independent reference implementations used to check the fast paths.

Nothing here calls ``families.logpdf`` or ``closed_forms``. Densities are
assembled from the full conditional normal ``N(mu + c1(w) delta, c(w) Sigma)``
with dense linear algebra and integrated over ``w`` on the half-line with
the generic adaptive quadrature; Monte Carlo draws are assembled from raw
mixing draws and a fresh Cholesky factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .exceptions import DivergentMoment, DomainError, NonFiniteIntegrand, ToleranceNotMet
from .mixing import mixing_sample
from .special import QuadratureSpec, integrate

_GRID = np.linspace(-40.0, 40.0, 1601)
# log-integrand drop that marks the edges of the bulk around the mode
_BULK_DROP = 25.0
_SPEC = QuadratureSpec(abs_tol=0.0, rel_tol=1e-12, max_subdivisions=2000, initial_intervals=8)


def _scales(kind, w):
    w = np.asarray(w, dtype=float)
    if kind == "vmn":
        return np.zeros_like(w), w
    if kind == "mmn":
        return w, np.ones_like(w)
    return w, w


class _Integrand:
    """``log phi_p(y; mu + c1(w) delta, c(w) Sigma) + log h(w)`` for a vector of w."""

    def __init__(self, fam, y):
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != fam.mu.size:
            raise DomainError("y has the wrong dimension")
        self.kind = fam.kind
        self.mixing = fam.mixing
        self.p = y.size
        self.sigma = np.array(fam.sigma.entries, dtype=float)
        sign, self.logdet = np.linalg.slogdet(self.sigma)
        self.r0 = y - fam.mu
        self.delta = np.zeros(self.p) if fam.delta is None else np.array(fam.delta, dtype=float)

    def log_normal(self, w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        c1, c = _scales(self.kind, w)
        resid = self.r0[:, None] - np.outer(self.delta, c1)  # p x m
        quad = np.sum(resid * np.linalg.solve(self.sigma, resid), axis=0) / c
        return -0.5 * (self.p * (math.log(2.0 * math.pi) + np.log(c)) + self.logdet + quad)

    def __call__(self, w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        out = np.full(w.shape, -np.inf)
        ok = (w > 0) & np.isfinite(w)
        if np.any(ok):
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                val = self.log_normal(w[ok]) + self.mixing.logpdf(w[ok])
            out[ok] = np.where(np.isnan(val), -np.inf, val)
        return out


def _split_points(logf):
    """Mode and bulk edges of ``logf`` located on a log-spaced grid."""
    w = np.exp(_GRID)
    g = logf(w) + _GRID  # density in u = log w
    k = int(np.argmax(g))
    gmax = g[k]
    if not math.isfinite(gmax):
        raise DomainError("integrand vanishes on the whole grid")
    below = np.nonzero(g[:k] < gmax - _BULK_DROP)[0]
    above = np.nonzero(g[k:] < gmax - _BULK_DROP)[0]
    lo = w[below[-1]] if below.size else w[0]
    hi = w[k + above[0]] if above.size else w[-1]
    return lo, w[k], hi, float(logf(np.array([w[k]]))[0])


def _half_line_integral(logf, weight=None):
    """``log of int_0^inf weight(w) exp(logf(w)) dw`` split around the bulk.

    The bulk is integrated first; the small pieces near zero and in the
    tail are then held to an absolute tolerance relative to the bulk.
    """
    lo, mode, hi, shift = _split_points(logf)

    def f(w):
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.exp(logf(w) - shift)
            return v if weight is None else weight(w) * v

    bulk = math.fsum(integrate(f, _SPEC.with_domain(d))[0] for d in [(lo, mode), (mode, hi)])
    edge = QuadratureSpec(abs_tol=_SPEC.rel_tol * abs(bulk), rel_tol=_SPEC.rel_tol,
                          max_subdivisions=_SPEC.max_subdivisions)
    head = integrate(f, edge.with_domain((0.0, lo)))[0] if lo > 0 else 0.0
    tail, _ = integrate(lambda v: f(hi + v), edge.with_domain("half_line"))
    return math.fsum([head, bulk, tail]), shift


def _diverges(logf, weight):
    """True when ``weight(w) exp(logf(w)) w`` fails to vanish at either end of the half-line."""
    with np.errstate(all="ignore"):
        def mass(w):
            return weight(w) * np.exp(logf(w) - logf(np.array([1.0]))[0]) * w
        near = mass(np.array([1e-30, 1e-60, 1e-120]))
        far = mass(np.array([1e30, 1e60, 1e120]))
    return any(not np.all(np.diff(np.abs(m)) < 0) and np.any(np.abs(m) > 0)
               or not np.all(np.isfinite(m)) for m in (near, far))


def quadrature_pdf(fam, y) -> float:
    """Density of ``fam`` at ``y`` by direct integration of the mixture definition."""
    integrand = _Integrand(fam, y)
    if fam.mixing.atomic:
        atoms, logw = fam.mixing.atoms_and_logweights()
        return float(np.sum(np.exp(logw + integrand.log_normal(atoms))))
    value, shift = _half_line_integral(integrand)
    return value * math.exp(shift)


_MOMENT_FUNCS = {
    "w": lambda w: w,
    "w2": lambda w: w * w,
    "inv": lambda w: 1.0 / w,
    "log": np.log,
}
_ALIASES = {"w^2": "w2", "w²": "w2", "1/w": "inv", "ln w": "log", "logw": "log", "ln_w": "log"}


def posterior_expectation_quadrature(fam, y, k: str) -> float:
    """``E[g_k(W) | Y = y]`` for ``k`` in ``{"w", "w2", "inv", "log"}``."""
    key = _ALIASES.get(k, k)
    if key not in _MOMENT_FUNCS:
        raise ValueError(f"unknown posterior moment {k!r}")
    g = _MOMENT_FUNCS[key]
    integrand = _Integrand(fam, y)
    if fam.mixing.atomic:
        atoms, logw = fam.mixing.atoms_and_logweights()
        lp = logw + integrand.log_normal(atoms)
        post = np.exp(lp - sc.logsumexp(lp))
        return float(np.sum(post * g(atoms)))
    den, shift = _half_line_integral(integrand)
    if key == "log":
        # split log w into its signs so each piece is a positive integral
        weights = [lambda w: np.maximum(np.log(w), 0.0), lambda w: np.maximum(-np.log(w), 0.0)]
    else:
        weights = [g]
    parts = []
    for wt in weights:
        try:
            parts.append(_half_line_integral(integrand, wt)[0])
        except (ToleranceNotMet, NonFiniteIntegrand):
            if _diverges(integrand, wt):
                raise DivergentMoment(f"posterior E[{key}] is not finite") from None
            raise
    num = parts[0] - parts[1] if key == "log" else parts[0]
    out = num / den
    if not math.isfinite(out):
        raise DivergentMoment(f"posterior E[{key}] is not finite")
    return out


@dataclass(frozen=True)
class MCReport:
    estimate: object
    std_error: object
    n: int
    seed: int


def _draws(fam, n, seed):
    rng = np.random.default_rng(seed)
    w = mixing_sample(fam.mixing, rng, n)
    z = rng.standard_normal((n, fam.mu.size))
    chol = np.linalg.cholesky(np.array(fam.sigma.entries))
    c1, c = _scales(fam.kind, w)
    y = fam.mu + np.sqrt(c)[:, None] * (z @ chol.T)
    if fam.delta is not None:
        y = y + c1[:, None] * fam.delta
    return y


def mc_mean_cov(fam, n: int, seed: int):
    """Monte Carlo mean and covariance with plug-in standard errors.

    Returns ``(mean_report, cov_report)``.
    """
    if n < 100:
        raise ValueError("n must be at least 100")
    y = _draws(fam, n, seed)
    mean = y.mean(axis=0)
    mean_se = y.std(axis=0, ddof=1) / math.sqrt(n)
    r = y - mean
    prods = r[:, :, None] * r[:, None, :]
    cov = prods.sum(axis=0) / (n - 1)
    cov_se = prods.std(axis=0, ddof=1) / math.sqrt(n)
    return MCReport(mean, mean_se, n, seed), MCReport(cov, cov_se, n, seed)


def mc_expectation(fam, func, n: int, seed: int) -> MCReport:
    """Monte Carlo average of ``func(Y)`` (vectorized over rows) with its standard error."""
    vals = np.asarray(func(_draws(fam, n, seed)), dtype=float)
    return MCReport(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)), n, seed)
