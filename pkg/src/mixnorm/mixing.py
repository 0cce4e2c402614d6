"""Mixing laws for the scalar latent variable W.

Every law has support on (0, inf). The GIG convention is the one used by
the generalized hyperbolic density::

    h(w; psi, chi, lam) = (psi/chi)^(lam/2) / (2 K_lam(sqrt(chi psi)))
                          * w^(lam - 1) * exp(-(psi w + chi / w) / 2)

Beware: several incompatible (a, b, p) / (lambda, omega) conventions exist
elsewhere. Boundary cases are allowed: ``chi = 0`` with ``lam > 0`` is a
gamma law with rate ``psi / 2``; ``psi = 0`` with ``lam < 0`` is an inverse
gamma law with shape ``-lam`` and rate ``chi / 2``.

Divergent moments and mgf values are returned as ``math.inf`` rather than
raised, so family-level formulas can report "undefined" gracefully.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import special as sc
from scipy import stats

from .exceptions import DomainError, NoDensity, ParseError
from .special import QuadratureSpec, integrate, log_bessel_k

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# integer tags shared with the compiled quadrature kernel
TAG_INVGAMMA, TAG_GIG, TAG_TN, TAG_EXP, TAG_BS, TAG_LINDLEY = range(6)

# E[log W] central difference step in lambda
_LOGW_STEP = 1e-5


def _positive(name, value):
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value}")
    return value


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


class _Law:
    atomic = False
    support = "positive"

    def logpdf(self, w):
        w = np.asarray(w, dtype=float)
        if np.any(~(w > 0)):
            raise DomainError("mixing density is only defined for w > 0")
        out = self._logpdf(w)
        return float(out) if np.ndim(out) == 0 else out

    def pdf(self, w):
        return np.exp(self.logpdf(w))

    def _mgf_quadrature(self, s: float, upper: float = math.inf) -> float:
        """``E[exp(sW)]`` by half-line quadrature; ``upper`` is the divergence abscissa."""
        if s >= upper:
            return math.inf
        val, _ = integrate(lambda w: np.exp(s * w + self._logpdf(w)),
                           QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=2000,
                                          initial_intervals=16))
        return val


@dataclass(frozen=True)
class InverseGamma(_Law):
    """Inverse gamma with density ``rate^shape / Gamma(shape) w^(-shape-1) e^(-rate/w)``."""

    shape: float
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive("shape", self.shape))
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    @classmethod
    def from_nu(cls, nu: float) -> "InverseGamma":
        """Mixing law of the multivariate t with ``nu`` degrees of freedom."""
        return cls(nu / 2.0, nu / 2.0)

    def _logpdf(self, w):
        a, b = self.shape, self.rate
        return a * math.log(b) - sc.gammaln(a) - (a + 1.0) * np.log(w) - b / w

    def sample(self, rng, n):
        return self.rate / rng.gamma(self.shape, 1.0, size=n)

    def moment(self, k):
        a, b = self.shape, self.rate
        if a <= k:
            return math.inf
        return math.exp(k * math.log(b) + sc.gammaln(a - k) - sc.gammaln(a))

    def mgf(self, s):
        if s == 0:
            return 1.0
        if s > 0:
            return math.inf
        a, b = self.shape, self.rate
        z = b * (-s)
        return math.exp(math.log(2.0) + 0.5 * a * math.log(z)
                        + log_bessel_k(a, 2.0 * math.sqrt(z)) - sc.gammaln(a))

    def kernel_code(self):
        a, b = self.shape, self.rate
        return TAG_INVGAMMA, (a, b, 0.0), a * math.log(b) - float(sc.gammaln(a))

    def canonical(self):
        return f"invgamma(shape={_fmt(self.shape)},rate={_fmt(self.rate)})"


@dataclass(frozen=True)
class GIG(_Law):
    """Generalized inverse Gaussian in the (psi, chi, lambda) convention."""

    psi: float
    chi: float
    lam: float

    def __post_init__(self):
        psi, chi, lam = float(self.psi), float(self.chi), float(self.lam)
        if not all(math.isfinite(v) for v in (psi, chi, lam)) or psi < 0 or chi < 0:
            raise DomainError(f"invalid GIG parameters psi={psi}, chi={chi}, lambda={lam}")
        if psi == 0 and not (chi > 0 and lam < 0):
            raise DomainError("GIG with psi = 0 needs chi > 0 and lambda < 0")
        if chi == 0 and not (psi > 0 and lam > 0):
            raise DomainError("GIG with chi = 0 needs psi > 0 and lambda > 0")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "lam", lam)

    @property
    def boundary(self):
        if self.chi == 0:
            return "gamma"
        if self.psi == 0:
            return "invgamma"
        return None

    def log_normalizer(self) -> float:
        psi, chi, lam = self.psi, self.chi, self.lam
        if self.boundary == "gamma":
            return lam * math.log(psi / 2.0) - float(sc.gammaln(lam))
        if self.boundary == "invgamma":
            return -lam * math.log(chi / 2.0) - float(sc.gammaln(-lam))
        omega = math.sqrt(psi * chi)
        return 0.5 * lam * math.log(psi / chi) - math.log(2.0) - log_bessel_k(lam, omega)

    def _logpdf(self, w):
        return (self.log_normalizer() + (self.lam - 1.0) * np.log(w)
                - 0.5 * (self.psi * w + self.chi / w))

    def sample(self, rng, n):
        if self.boundary == "gamma":
            return rng.gamma(self.lam, 2.0 / self.psi, size=n)
        if self.boundary == "invgamma":
            return (self.chi / 2.0) / rng.gamma(-self.lam, 1.0, size=n)
        return sample_gig(self.psi, self.chi, self.lam, rng, n)

    def moment(self, k):
        psi, chi, lam = self.psi, self.chi, self.lam
        if self.boundary == "gamma":
            return math.exp(sc.gammaln(lam + k) - sc.gammaln(lam) + k * math.log(2.0 / psi))
        if self.boundary == "invgamma":
            return InverseGamma(-lam, chi / 2.0).moment(k)
        omega = math.sqrt(psi * chi)
        return math.exp(0.5 * k * math.log(chi / psi)
                        + log_bessel_k(lam + k, omega) - log_bessel_k(lam, omega))

    def mgf(self, s):
        if s == 0:
            return 1.0
        psi, chi, lam = self.psi, self.chi, self.lam
        if self.boundary == "invgamma":
            return InverseGamma(-lam, chi / 2.0).mgf(s)
        if s >= psi / 2.0:
            return math.inf
        if self.boundary == "gamma":
            return math.exp(-lam * math.log1p(-2.0 * s / psi))
        shifted = psi - 2.0 * s
        return math.exp(0.5 * lam * math.log(psi / shifted)
                        + log_bessel_k(lam, math.sqrt(chi * shifted))
                        - log_bessel_k(lam, math.sqrt(chi * psi)))

    def kernel_code(self):
        return TAG_GIG, (self.psi, self.chi, self.lam), self.log_normalizer()

    def canonical(self):
        return f"gig(psi={_fmt(self.psi)},chi={_fmt(self.chi)},lambda={_fmt(self.lam)})"


@dataclass(frozen=True)
class TruncNormalPos(_Law):
    """N(mean, var) truncated to (0, inf); ``TruncNormalPos()`` is the half-normal."""

    mean: float = 0.0
    var: float = 1.0

    def __post_init__(self):
        if not math.isfinite(float(self.mean)):
            raise DomainError("truncated normal mean must be finite")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "var", _positive("var", self.var))

    def _lognorm(self):
        sd = math.sqrt(self.var)
        return -LOG_SQRT_2PI - math.log(sd) - float(sc.log_ndtr(self.mean / sd))

    def _logpdf(self, w):
        return self._lognorm() - 0.5 * (w - self.mean) ** 2 / self.var

    def sample(self, rng, n):
        sd = math.sqrt(self.var)
        return stats.truncnorm.rvs(-self.mean / sd, np.inf, loc=self.mean, scale=sd,
                                   size=n, random_state=rng)

    def moment(self, k):
        from .special import trunc_normal_moments
        m1, m2 = trunc_normal_moments(self.mean, self.var)
        if k == 1:
            return m1
        if k == 2:
            return m2
        return self._moment_quadrature(k)

    def _moment_quadrature(self, k):
        return integrate(lambda w: w ** k * np.exp(self._logpdf(w)),
                         QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=1000))[0]

    def mgf(self, s):
        m, v = self.mean, self.var
        sd = math.sqrt(v)
        return math.exp(s * m + 0.5 * s * s * v + sc.log_ndtr((m + s * v) / sd)
                        - sc.log_ndtr(m / sd))

    def kernel_code(self):
        return TAG_TN, (self.mean, self.var, 0.0), self._lognorm()

    def canonical(self):
        return f"tn(mean={_fmt(self.mean)},var={_fmt(self.var)})"


@dataclass(frozen=True)
class Exponential(_Law):
    rate: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    def _logpdf(self, w):
        return math.log(self.rate) - self.rate * w

    def sample(self, rng, n):
        return rng.exponential(1.0 / self.rate, size=n)

    def moment(self, k):
        return math.factorial(k) / self.rate ** k

    def mgf(self, s):
        if s >= self.rate:
            return math.inf
        return self.rate / (self.rate - s)

    def kernel_code(self):
        return TAG_EXP, (self.rate, 0.0, 0.0), math.log(self.rate)

    def canonical(self):
        return f"exp(rate={_fmt(self.rate)})"


@dataclass(frozen=True)
class BirnbaumSaunders(_Law):
    """Birnbaum-Saunders law with shape ``alpha`` and unit scale."""

    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))

    def _logpdf(self, w):
        a = self.alpha
        logw = np.log(w)
        # log(w^{-1/2} + w^{-3/2}) = -logw/2 + softplus(-logw)
        return (-math.log(2.0 * a) - LOG_SQRT_2PI - 0.5 * logw + np.logaddexp(0.0, -logw)
                - (w + 1.0 / w - 2.0) / (2.0 * a * a))

    def sample(self, rng, n):
        h = 0.5 * self.alpha * rng.standard_normal(n)
        return (h + np.sqrt(h * h + 1.0)) ** 2

    def moment(self, k):
        a2 = self.alpha ** 2
        if k == 1:
            return 1.0 + 0.5 * a2
        if k == 2:
            return 1.0 + 2.0 * a2 + 1.5 * a2 * a2
        return integrate(lambda w: w ** k * np.exp(self._logpdf(w)),
                         QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=1000))[0]

    def mgf(self, s):
        if s == 0:
            return 1.0
        return self._mgf_quadrature(s, upper=1.0 / (2.0 * self.alpha ** 2))

    def kernel_code(self):
        return TAG_BS, (self.alpha, 0.0, 0.0), -math.log(2.0 * self.alpha) - LOG_SQRT_2PI

    def canonical(self):
        return f"bs(alpha={_fmt(self.alpha)})"


@dataclass(frozen=True)
class Lindley(_Law):
    """Lindley law: mixture of Exp(alpha) and Gamma(2, alpha) with weights alpha/(1+alpha), 1/(1+alpha)."""

    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))

    def _logpdf(self, w):
        a = self.alpha
        return 2.0 * math.log(a) - math.log1p(a) + np.log1p(w) - a * w

    def sample(self, rng, n):
        a = self.alpha
        first = rng.random(n) < a / (1.0 + a)
        return np.where(first, rng.exponential(1.0 / a, size=n), rng.gamma(2.0, 1.0 / a, size=n))

    def moment(self, k):
        a = self.alpha
        # k!/a^k from the exponential part, (k+1)!/a^k from the gamma(2) part
        return (a * math.factorial(k) + math.factorial(k + 1)) / ((1.0 + a) * a ** k)

    def mgf(self, s):
        a = self.alpha
        if s >= a:
            return math.inf
        d = a - s
        return a * a / (1.0 + a) * (1.0 / d + 1.0 / (d * d))

    def kernel_code(self):
        a = self.alpha
        return TAG_LINDLEY, (a, 0.0, 0.0), 2.0 * math.log(a) - math.log1p(a)

    def canonical(self):
        return f"lindley(alpha={_fmt(self.alpha)})"


class _Atomic(_Law):
    atomic = True

    def logpdf(self, w):
        raise NoDensity(f"{type(self).__name__} has no density")

    def atoms_and_logweights(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def moment(self, k):
        atoms, logw = self.atoms_and_logweights()
        return float(np.sum(np.exp(logw) * atoms ** k))

    def mgf(self, s):
        atoms, logw = self.atoms_and_logweights()
        return float(np.exp(sc.logsumexp(logw + s * atoms)))


@dataclass(frozen=True)
class PointMass(_Atomic):
    atom: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "atom", _positive("atom", self.atom))

    def atoms_and_logweights(self):
        return np.array([self.atom]), np.array([0.0])

    def sample(self, rng, n):
        return np.full(n, self.atom)

    def moment(self, k):
        return self.atom ** k

    def mgf(self, s):
        return math.exp(s * self.atom)

    def canonical(self):
        return f"point(atom={_fmt(self.atom)})"


@dataclass(frozen=True)
class FiniteDiscrete(_Atomic):
    atoms: tuple
    weights: tuple

    def __post_init__(self):
        atoms = tuple(_positive("atom", a) for a in self.atoms)
        weights = tuple(float(x) for x in self.weights)
        if not atoms or len(atoms) != len(weights):
            raise DomainError("atoms and weights must be nonempty and of equal length")
        if any(not (x >= 0) for x in weights) or abs(math.fsum(weights) - 1.0) > 1e-12:
            raise DomainError("weights must be nonnegative and sum to one")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def atoms_and_logweights(self):
        with np.errstate(divide="ignore"):
            return np.array(self.atoms), np.log(np.array(self.weights))

    def sample(self, rng, n):
        return rng.choice(np.array(self.atoms), size=n, p=np.array(self.weights))

    def canonical(self):
        a = ";".join(_fmt(x) for x in self.atoms)
        w = ";".join(_fmt(x) for x in self.weights)
        return f"discrete(atoms={a},weights={w})"


MixingSpec = Union[InverseGamma, GIG, TruncNormalPos, Exponential, BirnbaumSaunders,
                   Lindley, PointMass, FiniteDiscrete]


def mixing_logpdf(spec: MixingSpec, w):
    return spec.logpdf(w)


def mixing_sample(spec: MixingSpec, stream: np.random.Generator, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be at least 1")
    return np.asarray(spec.sample(stream, n), dtype=float)


def mixing_moment(spec: MixingSpec, k: int) -> float:
    if int(k) != k or k < 1:
        raise ValueError("moment order must be a positive integer")
    return float(spec.moment(int(k)))


def mixing_mgf(spec: MixingSpec, s: float) -> float:
    if s == 0:
        return 1.0
    return float(spec.mgf(float(s)))


def mixing_variance(spec: MixingSpec) -> float:
    m1 = mixing_moment(spec, 1)
    m2 = mixing_moment(spec, 2)
    if math.isinf(m2):
        return math.inf
    return max(m2 - m1 * m1, 0.0)


def gig_expectations(psi, chi, lam):
    """``(E[W], E[1/W], E[log W])`` under GIG(psi, chi, lambda).

    Works elementwise on arrays for interior parameters (psi, chi > 0). The
    log-moment is ``d/dlambda log K_lambda(omega) + log(chi/psi)/2``, taken
    by central difference.
    """
    psi, chi, lam = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (psi, chi, lam)))
    if np.any(psi < 0) or np.any(chi < 0):
        raise DomainError("GIG parameters psi, chi must be nonnegative")
    interior = (psi > 0) & (chi > 0)
    if not np.all(interior):
        if psi.ndim:
            raise DomainError("boundary GIG expectations are only supported for scalars")
        return _gig_boundary_expectations(float(psi), float(chi), float(lam))
    omega = np.sqrt(psi * chi)
    ratio = np.sqrt(chi / psi)
    lk = log_bessel_k(lam, omega)
    e_w = ratio * np.exp(log_bessel_k(lam + 1.0, omega) - lk)
    e_inv = np.exp(log_bessel_k(lam - 1.0, omega) - lk) / ratio
    h = _LOGW_STEP
    dlk = (log_bessel_k(lam + h, omega) - log_bessel_k(lam - h, omega)) / (2.0 * h)
    e_log = dlk + np.log(ratio)
    if e_w.ndim == 0:
        return float(e_w), float(e_inv), float(e_log)
    return e_w, e_inv, e_log


def _gig_boundary_expectations(psi, chi, lam):
    if chi == 0:
        if not (psi > 0 and lam > 0):
            raise DomainError("invalid gamma-boundary GIG")
        if lam <= 1:
            raise DomainError("E[1/W] diverges for the gamma boundary with lambda <= 1")
        return 2.0 * lam / psi, psi / (2.0 * (lam - 1.0)), float(sc.digamma(lam)) - math.log(psi / 2.0)
    if not (chi > 0 and lam < 0):
        raise DomainError("invalid inverse-gamma-boundary GIG")
    a, b = -lam, chi / 2.0
    if a <= 1:
        raise DomainError("E[W] diverges for the inverse-gamma boundary with -lambda <= 1")
    return b / (a - 1.0), a / b, math.log(b) - float(sc.digamma(a))


# --- GIG sampling ----------------------------------------------------------

def _gig_mode(lam, omega):
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega ** 2) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega ** 2) + (1.0 - lam))


def sample_gig(psi: float, chi: float, lam: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw from GIG(psi, chi, lambda) with psi, chi > 0.

    Reduces to the two-parameter law ``x^(lam-1) exp(-omega (x + 1/x) / 2)``
    with ``omega = sqrt(psi chi)`` and ``lam >= 0`` (reciprocal for negative
    lambda), then uses ratio-of-uniforms with mode shift when ``lam > 1`` or
    ``omega > 1``, plain ratio-of-uniforms for moderate omega, and a
    dominating three-piece hat for small omega (Hoermann & Leydold's scheme).
    """
    omega = math.sqrt(psi * chi)
    scale = math.sqrt(chi / psi)
    abs_lam = abs(lam)
    if abs_lam > 1.0 or omega > 1.0:
        x = _rou_shift(abs_lam, omega, rng, n)
    elif omega >= min(0.5, 2.0 / 3.0 * math.sqrt(1.0 - abs_lam)):
        x = _rou_noshift(abs_lam, omega, rng, n)
    else:
        x = _concave_hat(abs_lam, omega, rng, n)
    if lam < 0:
        x = 1.0 / x
    return scale * x


def _fill(n, draw):
    """Collect ``n`` accepted values from a batch rejection sampler."""
    out = np.empty(n)
    filled = 0
    batch = max(n, 16)
    while filled < n:
        acc = draw(batch)
        take = min(acc.size, n - filled)
        out[filled:filled + take] = acc[:take]
        filled += take
        batch = max(int(1.3 * (n - filled)) + 16, 16)
    return out


def _rou_shift(lam, omega, rng, n):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    # extremes of (x - xm) sqrt(f(x)) from the depressed cubic
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    fi = math.acos(-q / (2.0 * math.sqrt(-(p ** 3) / 27.0)))
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)

    def draw(m):
        u = uminus + rng.random(m) * (uplus - uminus)
        v = rng.random(m)
        x = u / v + xm
        ok = x > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            ok &= np.log(v) <= t * np.log(x) - s * (x + 1.0 / x) - nc
        return x[ok]

    return _fill(n, draw)


def _rou_noshift(lam, omega, rng, n):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega ** 2)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)

    def draw(m):
        u = um * rng.random(m)
        v = rng.random(m)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = u / v
            ok = (x > 0) & (np.log(v) <= t * np.log(x) - s * (x + 1.0 / x) - nc)
        return x[ok]

    return _fill(n, draw)


def _concave_hat(lam, omega, rng, n):
    xm = _gig_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    k0 = math.exp((lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm))
    A0 = k0 * x0
    if x0 >= 2.0 / omega:
        k1, A1 = 0.0, 0.0
        k2 = x0 ** (lam - 1.0)
        A2 = k2 * 2.0 * math.exp(-omega * x0 / 2.0) / omega
    else:
        k1 = math.exp(-omega)
        if lam == 0:
            A1 = k1 * math.log(2.0 / (omega * omega))
        else:
            A1 = k1 / lam * ((2.0 / omega) ** lam - x0 ** lam)
        k2 = (2.0 / omega) ** (lam - 1.0)
        A2 = k2 * 2.0 * math.exp(-1.0) / omega
    total = A0 + A1 + A2
    edge = max(x0, 2.0 / omega)

    def draw(m):
        v = total * rng.random(m)
        x = np.empty(m)
        hx = np.empty(m)
        r0 = v <= A0
        x[r0] = x0 * v[r0] / A0
        hx[r0] = k0
        v1 = v - A0
        r1 = ~r0 & (v1 <= A1)
        if np.any(r1):
            if lam == 0:
                x[r1] = omega * np.exp(math.exp(omega) * v1[r1])
                hx[r1] = k1 / x[r1]
            else:
                x[r1] = (x0 ** lam + lam / k1 * v1[r1]) ** (1.0 / lam)
                hx[r1] = k1 * x[r1] ** (lam - 1.0)
        r2 = ~r0 & ~r1
        v2 = v1[r2] - A1
        with np.errstate(divide="ignore", invalid="ignore"):
            x[r2] = -2.0 / omega * np.log(math.exp(-omega / 2.0 * edge) - omega / (2.0 * k2) * v2)
        hx[r2] = k2 * np.exp(-omega / 2.0 * x[r2])
        u = rng.random(m) * hx
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = np.isfinite(x) & (x > 0) & (
                np.log(u) <= (lam - 1.0) * np.log(x) - omega / 2.0 * (x + 1.0 / x))
        return x[ok]

    return _fill(n, draw)


# --- names -----------------------------------------------------------------

_CALL = re.compile(r"^\s*([a-z0-9_]+)\s*(?:\((.*)\))?\s*$", re.IGNORECASE)


def _parse_args(text):
    pos, kw = [], {}
    if text is None or not text.strip():
        return pos, kw
    for part in text.split(","):
        part = part.strip()
        if "=" in part:
            k, v = part.split("=", 1)
            kw[k.strip().lower()] = v.strip()
        else:
            pos.append(part)
    return pos, kw


def _num(value, name):
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"cannot parse number {value!r}", field=name) from None
    if not math.isfinite(x):
        raise ParseError(f"non-finite value {value!r}", field=name)
    return x


_ARGNAMES = {
    "invgamma": ("shape", "rate"),
    "gig": ("psi", "chi", "lambda"),
    "tn": ("mean", "var"),
    "exp": ("rate",),
    "bs": ("alpha",),
    "lindley": ("alpha",),
    "point": ("atom",),
}


def parse_mixing(text: str) -> MixingSpec:
    """Parse a mixing law name such as ``gig(psi=1,chi=1,lambda=0.5)``.

    Sugar: ``invgamma(nu=4)`` is IG(2, 2), ``tn01`` the half-normal,
    ``exp(1)`` / ``point(1)`` take a positional parameter.
    """
    m = _CALL.match(text)
    if not m:
        raise ParseError(f"cannot parse mixing law {text!r}", field="mixing")
    name = m.group(1).lower()
    pos, kw = _parse_args(m.group(2))
    try:
        if name == "tn01":
            if pos or kw:
                raise ParseError("tn01 takes no arguments", field="mixing")
            return TruncNormalPos(0.0, 1.0)
        if name == "discrete":
            if pos or set(kw) != {"atoms", "weights"}:
                raise ParseError("discrete needs atoms=...;... and weights=...;...", field="mixing")
            atoms = tuple(_num(v, "atoms") for v in kw["atoms"].split(";"))
            weights = tuple(_num(v, "weights") for v in kw["weights"].split(";"))
            return FiniteDiscrete(atoms, weights)
        if name == "invgamma" and "nu" in kw:
            if pos or set(kw) != {"nu"}:
                raise ParseError("invgamma(nu=...) takes only nu", field="mixing")
            return InverseGamma.from_nu(_num(kw["nu"], "nu"))
        if name not in _ARGNAMES:
            raise ParseError(f"unknown mixing law {name!r}", field="mixing")
        names = _ARGNAMES[name]
        values = {}
        for nm, v in zip(names, pos):
            values[nm] = _num(v, nm)
        if len(pos) > len(names):
            raise ParseError(f"too many arguments for {name}", field="mixing")
        for k, v in kw.items():
            if k not in names or k in values:
                raise ParseError(f"unexpected or repeated argument {k!r} for {name}", field="mixing")
            values[k] = _num(v, k)
        missing = [nm for nm in names if nm not in values]
        defaults = {"tn": {"mean": 0.0, "var": 1.0}, "exp": {"rate": 1.0}, "point": {"atom": 1.0}}
        for nm in missing:
            if nm in defaults.get(name, {}):
                values[nm] = defaults[name][nm]
            else:
                raise ParseError(f"missing argument {nm!r} for {name}", field="mixing")
        args = [values[nm] for nm in names]
        return {
            "invgamma": InverseGamma, "gig": GIG, "tn": TruncNormalPos, "exp": Exponential,
            "bs": BirnbaumSaunders, "lindley": Lindley, "point": PointMass,
        }[name](*args)
    except DomainError as exc:
        raise ParseError(str(exc), field="mixing") from None


def format_mixing(spec: MixingSpec) -> str:
    return spec.canonical()
