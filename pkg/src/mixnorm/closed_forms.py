"""Quadrature-free log-densities for the named special cases.

All functions accept a single point ``y`` of shape (p,) or a batch of shape
(n, p) and return a float or an (n,) array.

Two printed formulas are ambiguous and the readings fixed here were chosen
because they reproduce the defining mixture integral:

* MMN with standard exponential mixing uses the normal *density*
  ``phi_p(y; mu, Sigma)`` as the middle factor (the CDF reading does not
  integrate to one).
* The generalized hyperbolic normalizer is ``K_lambda(sqrt(chi psi))``, the
  normalizer of the GIG mixing law, and the skewness factor is
  ``exp(+delta' Sigma^-1 (y - mu))`` in the numerator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .exceptions import DegenerateShape, DimensionMismatch, DomainError
from .linalg import LOG_2PI, PDMatrix, as_vector, cholesky, mvn_logpdf, quad_form
from .special import log_bessel_k

MMNE_READING = "phi_p (normal density)"
GH_NORMALIZER_READING = "K_lambda(sqrt(chi*psi))"


def _prep(y, mu, sigma):
    mu = as_vector(mu, "mu")
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != mu.size or sigma.dim != mu.size:
        raise DimensionMismatch("y, mu and sigma dimensions disagree")
    return y, mu


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def mvt_logpdf(y, mu, sigma: PDMatrix, nu: float):
    """Multivariate t log-density with ``nu`` degrees of freedom and scale ``sigma``."""
    nu = float(nu)
    if not nu > 0:
        raise DomainError("degrees of freedom must be positive")
    y, mu = _prep(y, mu, sigma)
    p = mu.size
    d = quad_form(sigma, y - mu)
    const = (sc.gammaln(0.5 * (nu + p)) - sc.gammaln(0.5 * nu)
             - 0.5 * p * math.log(nu * math.pi) - 0.5 * sigma.logdet)
    return _out(const - 0.5 * (nu + p) * np.log1p(d / nu))


def sn_logpdf(y, mu, sigma: PDMatrix, delta):
    """Skew-normal log-density ``2 phi_p(y; mu, Omega) Phi(delta' Omega^-1 (y-mu) / sqrt(1 - delta' Omega^-1 delta))``."""
    y, mu = _prep(y, mu, sigma)
    delta = as_vector(delta, "delta")
    if delta.size != mu.size:
        raise DimensionMismatch("delta has the wrong length")
    omega = cholesky(sigma.entries + np.outer(delta, delta))
    oinv_delta = omega.solve(delta)
    # 1 - delta' Omega^-1 delta = 1 / (1 + delta' Sigma^-1 delta)
    scale2 = 1.0 / (1.0 + quad_form(sigma, delta))
    arg = (y - mu) @ oinv_delta / math.sqrt(scale2)
    return _out(math.log(2.0) + mvn_logpdf(y, mu, omega) + sc.log_ndtr(arg))


def mmne_logpdf(y, mu, sigma: PDMatrix, delta):
    """Log-density of the mean mixture with standard exponential mixing.

    ``log(sqrt(2 pi)/a) + b^2/2 + log phi_p(y; mu, Sigma) + log Phi(b)`` with
    ``a^2 = delta' Sigma^-1 delta`` and ``b = (delta' Sigma^-1 (y - mu) - 1) / a``.
    """
    y, mu = _prep(y, mu, sigma)
    delta = as_vector(delta, "delta")
    if delta.size != mu.size:
        raise DimensionMismatch("delta has the wrong length")
    a2 = quad_form(sigma, delta)
    if not a2 > 0:
        raise DegenerateShape("exponential mean mixture needs a nonzero shape vector")
    a = math.sqrt(a2)
    beta = ((y - mu) @ sigma.solve(delta) - 1.0) / a
    return _out(0.5 * LOG_2PI - math.log(a) + 0.5 * beta * beta
                + mvn_logpdf(y, mu, sigma) + sc.log_ndtr(beta))


@dataclass(frozen=True)
class GHParams:
    """GIG mixing parameters of a generalized hyperbolic law (interior only)."""

    psi: float
    chi: float
    lam: float

    def __post_init__(self):
        if not (self.psi > 0 and self.chi > 0 and math.isfinite(self.lam)):
            raise DomainError("closed-form GH density needs psi > 0, chi > 0, finite lambda")


def gh_logpdf(y, mu, sigma: PDMatrix, delta, params: GHParams):
    """Generalized hyperbolic log-density, evaluated entirely in log space."""
    y, mu = _prep(y, mu, sigma)
    delta = as_vector(delta, "delta")
    if delta.size != mu.size:
        raise DimensionMismatch("delta has the wrong length")
    psi, chi, lam = params.psi, params.chi, params.lam
    p = mu.size
    r = y - mu
    d_y = quad_form(sigma, r)
    sinv_delta = sigma.solve(delta)
    d_delta = float(delta @ sinv_delta)
    skew = r @ sinv_delta
    a = psi + d_delta
    bb = chi + d_y
    out = (0.5 * lam * (math.log(psi) - math.log(chi))
           + log_bessel_k(lam - 0.5 * p, np.sqrt(a * bb))
           - 0.5 * p * LOG_2PI - 0.5 * sigma.logdet
           - log_bessel_k(lam, math.sqrt(chi * psi))
           + skew
           + (0.5 * lam - 0.25 * p) * (np.log(bb) - math.log(a)))
    return _out(out)
