"""Variance, mean and mean-variance mixtures of multivariate normals.

A family is described by its stochastic representation::

    VMN:   Y = mu           + sqrt(W) L Z
    MMN:   Y = mu + W delta +         L Z
    MVMN:  Y = mu + W delta + sqrt(W) L Z

with ``Sigma = L L'``, ``Z`` standard normal and ``W`` drawn from the
mixing law. Given ``W = w`` the law of ``Y`` is normal with mean
``mu + c1(w) delta`` and covariance ``c(w) Sigma`` where
``(c1, c) = (0, w), (w, 1), (w, w)`` for the three kinds.

Log-densities dispatch to a closed form when the (kind, mixing) pair has
one and otherwise integrate over ``w`` with the compiled kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special as sc

from . import _backend
from .closed_forms import GHParams, gh_logpdf, mmne_logpdf, mvt_logpdf, sn_logpdf
from .exceptions import (
    DimensionMismatch,
    KindShapeMismatch,
    SupportMismatch,
    ToleranceNotMet,
    UnsupportedCombination,
)
from .linalg import (
    LOG_2PI,
    AffineMap,
    PartitionIndex,
    PDMatrix,
    as_vector,
    cholesky,
    ensure_pd,
    mvn_logpdf,
    partition,
    quad_form,
)
from .mixing import (
    GIG,
    Exponential,
    InverseGamma,
    MixingSpec,
    PointMass,
    TruncNormalPos,
    mixing_mgf,
    mixing_moment,
    mixing_sample,
    mixing_variance,
)
from .special import QuadratureSpec, integrate

VMN, MMN, MVMN = "vmn", "mmn", "mvmn"
KINDS = (VMN, MMN, MVMN)
_KIND_CODE = {VMN: 0, MMN: 1, MVMN: 2}


class _Undefined:
    """Marker for a moment that does not exist."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "undefined"

    def __bool__(self):
        return False


UNDEFINED = _Undefined()


def _mean_scale(kind, w):
    """``(c1(w), c(w))``: multiplier of delta in the mean, and of Sigma in the covariance."""
    w = np.asarray(w, dtype=float)
    if kind == VMN:
        return np.zeros_like(w), w
    if kind == MMN:
        return w, np.ones_like(w)
    return w, w


@dataclass(frozen=True, eq=False)
class NormalMixture:
    kind: str
    mu: np.ndarray
    sigma: PDMatrix
    delta: Optional[np.ndarray]
    mixing: MixingSpec

    @property
    def p(self) -> int:
        return self.mu.size

    @property
    def shape_vector(self) -> np.ndarray:
        """``delta``, or zeros for VMN."""
        return np.zeros(self.p) if self.delta is None else self.delta

    @property
    def route(self) -> str:
        return dispatch_route(self)

    def logpdf(self, y):
        return logpdf(self, y)

    def pdf(self, y):
        return np.exp(logpdf(self, y))

    def sample(self, stream, n):
        return sample(self, stream, n)

    def moments(self):
        return moments(self)

    def mgf(self, t):
        return mgf(self, t)

    def __eq__(self, other):
        if not isinstance(other, NormalMixture):
            return NotImplemented
        same_delta = (self.delta is None and other.delta is None) or (
            self.delta is not None and other.delta is not None
            and np.array_equal(self.delta, other.delta))
        return (self.kind == other.kind and np.array_equal(self.mu, other.mu)
                and np.array_equal(self.sigma.entries, other.sigma.entries)
                and same_delta and self.mixing == other.mixing)

    __hash__ = None

    def __repr__(self):
        d = "" if self.delta is None else f", delta={self.delta.tolist()}"
        return (f"NormalMixture({self.kind}, mu={self.mu.tolist()}, "
                f"sigma={self.sigma.entries.tolist()}{d}, mixing={self.mixing.canonical()})")


def make_family(kind: str, mu, sigma, delta=None, mixing: MixingSpec = PointMass(1.0)) -> NormalMixture:
    """Validate and build a :class:`NormalMixture`."""
    kind = str(kind).lower()
    if kind not in KINDS:
        raise ValueError(f"unknown family kind {kind!r}")
    mu = as_vector(mu, "mu")
    sigma = ensure_pd(np.atleast_2d(sigma) if not isinstance(sigma, PDMatrix) else sigma)
    if sigma.dim != mu.size:
        raise DimensionMismatch(f"sigma is {sigma.dim}x{sigma.dim} but mu has length {mu.size}")
    if kind == VMN and delta is not None:
        raise KindShapeMismatch("a VMN family takes no shape vector")
    if kind != VMN:
        if delta is None:
            raise KindShapeMismatch(f"an {kind.upper()} family needs a shape vector")
        delta = as_vector(delta, "delta")
        if delta.size != mu.size:
            raise DimensionMismatch(f"delta has length {delta.size}, expected {mu.size}")
    if kind in (VMN, MVMN) and getattr(mixing, "support", None) != "positive":
        raise SupportMismatch(f"{kind.upper()} needs a mixing law on (0, inf)")
    return NormalMixture(kind, mu, sigma, delta, mixing)


# --- density ---------------------------------------------------------------

def _effective_kind(fam: NormalMixture) -> str:
    if fam.kind == MVMN and not np.any(fam.delta):
        return VMN
    return fam.kind


def dispatch_route(fam: NormalMixture) -> str:
    """Name of the evaluation path ``logpdf`` takes for this family."""
    mix = fam.mixing
    kind = _effective_kind(fam)
    if isinstance(mix, PointMass):
        return "normal"
    if mix.atomic:
        return "finite-normal-mixture"
    if kind == MMN and not np.any(fam.delta):
        return "normal"
    if kind == VMN and isinstance(mix, InverseGamma):
        return "t"
    if kind == VMN and isinstance(mix, GIG) and mix.boundary == "invgamma":
        return "t"
    if isinstance(mix, GIG) and mix.boundary is None and kind in (VMN, MVMN):
        return "gh"
    if kind == MMN and isinstance(mix, TruncNormalPos) and mix.mean == 0.0:
        return "sn"
    if kind == MMN and isinstance(mix, Exponential):
        return "mmne"
    return "quadrature"


def _as_rows(fam, y):
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (fam.p,) or y.ndim > 2:
        raise DimensionMismatch(f"expected points of dimension {fam.p}, got shape {y.shape}")
    return y


def logpdf(fam: NormalMixture, y):
    """Log-density at a point (p,) or at each row of an (n, p) array."""
    y = _as_rows(fam, y)
    route = dispatch_route(fam)
    mix = fam.mixing
    mu, sigma, delta = fam.mu, fam.sigma, fam.shape_vector
    if route == "normal":
        if isinstance(mix, PointMass):
            c1, c = _mean_scale(fam.kind, mix.atom)
            return mvn_logpdf(y, mu + float(c1) * delta, sigma.scaled(float(c)))
        return mvn_logpdf(y, mu, sigma)
    if route == "finite-normal-mixture":
        return _atomic_logpdf(fam.kind, mu, sigma, delta, mix, y)
    if route == "t":
        ig = mix if isinstance(mix, InverseGamma) else InverseGamma(-mix.lam, mix.chi / 2.0)
        return mvt_logpdf(y, mu, sigma.scaled(ig.rate / ig.shape), 2.0 * ig.shape)
    if route == "gh":
        return gh_logpdf(y, mu, sigma, delta, GHParams(mix.psi, mix.chi, mix.lam))
    if route == "sn":
        return sn_logpdf(y, mu, sigma, delta * math.sqrt(mix.var))
    if route == "mmne":
        return mmne_logpdf(y, mu, sigma, delta / mix.rate)
    return quadrature_logpdf(fam, y)


def _atomic_logpdf(kind, mu, sigma, delta, mix, y):
    atoms, logw = mix.atoms_and_logweights()
    parts = []
    for a, lw in zip(atoms, logw):
        c1, c = _mean_scale(kind, a)
        parts.append(lw + mvn_logpdf(y, mu + float(c1) * delta, sigma.scaled(float(c))))
    out = sc.logsumexp(np.stack(parts), axis=0)
    return float(out) if np.ndim(out) == 0 else out


def _kernel_call(kind_code, dy, b, dd, p, logdet, mixing):
    tag, params, lognorm = mixing.kernel_code()
    vals, status = _backend.mixture_logpdf(
        np.ascontiguousarray(dy, dtype=float), np.ascontiguousarray(b, dtype=float),
        float(dd), int(p), float(logdet), kind_code, tag,
        np.asarray(params, dtype=float), float(lognorm))
    if np.any(status != 0):
        raise ToleranceNotMet(
            f"mixture quadrature failed at {int(np.sum(status != 0))} point(s)",
            value=vals, err_estimate=math.inf)
    return vals


def quadrature_logpdf(fam: NormalMixture, y):
    """Log-density by integrating over the mixing variable (no closed-form dispatch)."""
    y = _as_rows(fam, y)
    single = y.ndim == 1
    rows = np.atleast_2d(y)
    r = rows - fam.mu
    z = fam.sigma.whiten(r)
    dy = np.sum(z * z, axis=1)
    zd = fam.sigma.whiten(fam.shape_vector)
    b = z @ zd
    dd = float(zd @ zd)
    out = _kernel_call(_KIND_CODE[fam.kind], dy, b, dd, fam.p, fam.sigma.logdet, fam.mixing)
    return float(out[0]) if single else out


# --- sampling and moments ---------------------------------------------------

def sample(fam: NormalMixture, stream: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` rows from the family; the mixing draws come first on the stream."""
    w = mixing_sample(fam.mixing, stream, n)
    z = stream.standard_normal((n, fam.p))
    c1, c = _mean_scale(fam.kind, w)
    out = fam.mu + np.sqrt(c)[:, None] * (z @ fam.sigma.chol.T)
    if fam.delta is not None:
        out += c1[:, None] * fam.delta
    return out


def _has_moment(mix, k: float) -> bool:
    if isinstance(mix, InverseGamma):
        return mix.shape > k
    if isinstance(mix, GIG) and mix.boundary == "invgamma":
        return -mix.lam > k
    return True


def moments(fam: NormalMixture):
    """``(mean, cov)``; either slot is :data:`UNDEFINED` when it diverges."""
    mix = fam.mixing
    kind = _effective_kind(fam)
    if kind == MMN and not np.any(fam.delta):
        return fam.mu.copy(), fam.sigma.entries.copy()
    if kind == VMN:
        mean = fam.mu.copy() if _has_moment(mix, 0.5) else UNDEFINED
        cov = mixing_moment(mix, 1) * fam.sigma.entries if _has_moment(mix, 1) else UNDEFINED
        return mean, cov
    dd = np.outer(fam.delta, fam.delta)
    if not _has_moment(mix, 1):
        return UNDEFINED, UNDEFINED
    ew = mixing_moment(mix, 1)
    mean = fam.mu + ew * fam.delta
    if not _has_moment(mix, 2):
        return mean, UNDEFINED
    vw = mixing_variance(mix)
    if kind == MMN:
        cov = fam.sigma.entries + vw * dd
    else:
        cov = vw * dd + ew * fam.sigma.entries
    return mean, cov


def mgf(fam: NormalMixture, t) -> float:
    """``E[exp(t'Y)]``; ``math.inf`` where the mixing mgf diverges."""
    t = as_vector(t, "t")
    if t.size != fam.p:
        raise DimensionMismatch("t has the wrong dimension")
    if not np.any(t):
        return 1.0
    tmu = float(t @ fam.mu)
    tst = float(t @ fam.sigma.entries @ t)
    tdelta = float(t @ fam.shape_vector)
    if fam.kind == VMN:
        m, lin = mixing_mgf(fam.mixing, 0.5 * tst), tmu
    elif fam.kind == MMN:
        m, lin = mixing_mgf(fam.mixing, tdelta), tmu + 0.5 * tst
    else:
        m, lin = mixing_mgf(fam.mixing, tdelta + 0.5 * tst), tmu
    if math.isinf(m):
        return math.inf
    return math.exp(lin) * m


# --- closure algebra ----------------------------------------------------------

def _sym(m):
    return 0.5 * (m + m.T)


def affine(fam: NormalMixture, amap: AffineMap) -> NormalMixture:
    """Law of ``A Y + a``."""
    A, a = amap.A, amap.a
    if A.shape[1] != fam.p:
        raise DimensionMismatch(f"A has {A.shape[1]} columns, family dimension is {fam.p}")
    sig = _sym(A @ fam.sigma.entries @ A.T)
    delta = None if fam.delta is None else A @ fam.delta
    return NormalMixture(fam.kind, A @ fam.mu + a, cholesky(sig), delta, fam.mixing)


def add_independent_normal(fam: NormalMixture, amap: AffineMap, mu_star, sigma_star,
                           shared_mixing: bool = False) -> NormalMixture:
    """Law of ``A Y + X``.

    With ``shared_mixing=False``, X ~ N(mu_star, sigma_star) independent of
    Y; the result stays in the family only for MMN. With
    ``shared_mixing=True``, X | W ~ N(mu_star, W sigma_star) with the *same*
    realized W as Y; the result stays in the family for VMN and MVMN.
    Other combinations raise :class:`UnsupportedCombination`.
    """
    A = amap.A
    if A.shape[1] != fam.p:
        raise DimensionMismatch(f"A has {A.shape[1]} columns, family dimension is {fam.p}")
    mu_star = as_vector(mu_star, "mu_star")
    sigma_star = ensure_pd(sigma_star)
    q = A.shape[0]
    if mu_star.size != q or sigma_star.dim != q:
        raise DimensionMismatch("mu_star / sigma_star do not match the rows of A")
    if fam.kind == MMN and shared_mixing:
        raise UnsupportedCombination("MMN plus a W-scaled normal is not an MMN law")
    if fam.kind in (VMN, MVMN) and not shared_mixing:
        raise UnsupportedCombination(
            f"{fam.kind.upper()} plus an independent normal is not a {fam.kind.upper()} law; "
            "pass shared_mixing=True for an addend scaled by the same W")
    sig = _sym(A @ fam.sigma.entries @ A.T + sigma_star.entries)
    delta = None if fam.delta is None else A @ fam.delta
    return NormalMixture(fam.kind, A @ fam.mu + mu_star, cholesky(sig), delta, fam.mixing)


def marginal(fam: NormalMixture, idx: PartitionIndex) -> NormalMixture:
    """Law of the coordinates ``idx.block1`` (in that order)."""
    idx.check(fam.p, allow_full=True)
    b1 = list(idx.block1)
    sig = fam.sigma.entries[np.ix_(b1, b1)]
    delta = None if fam.delta is None else fam.delta[b1]
    if b1 == list(range(fam.p)):
        return NormalMixture(fam.kind, fam.mu.copy(), fam.sigma, delta, fam.mixing)
    return NormalMixture(fam.kind, fam.mu[b1], cholesky(sig), delta, fam.mixing)


@dataclass(frozen=True, eq=False)
class TiltedMixing:
    """Posterior law of W after observing the block ``y2``.

    ``h(w | y2) = h(w) phi_p2(y2; mu2 + c1(w) delta2, c(w) Sigma22) / f(y2)``
    with ``f(y2)`` the marginal density cached as ``log_normalizer``.
    """

    base: MixingSpec
    kind: str
    y2: np.ndarray
    mu2: np.ndarray
    delta2: Optional[np.ndarray]
    sigma22: PDMatrix
    log_normalizer: float

    @property
    def is_flat(self) -> bool:
        """True when the evidence does not depend on w (MMN with zero delta2)."""
        return self.kind == MMN and (self.delta2 is None or not np.any(self.delta2))

    def _evidence(self, w):
        w = np.asarray(w, dtype=float)
        c1, c = _mean_scale(self.kind, w)
        z = self.sigma22.whiten(self.y2 - self.mu2)
        dy = float(z @ z)
        if self.delta2 is None:
            b = dd = 0.0
        else:
            zd = self.sigma22.whiten(self.delta2)
            b, dd = float(z @ zd), float(zd @ zd)
        p2 = self.y2.size
        q = (dy - 2.0 * c1 * b + c1 * c1 * dd) / c
        return -0.5 * p2 * (LOG_2PI + np.log(c)) - 0.5 * self.sigma22.logdet - 0.5 * q

    def logpdf(self, w):
        return self.base.logpdf(w) + self._evidence(w) - self.log_normalizer

    def atoms_and_logweights(self):
        atoms, logw = self.base.atoms_and_logweights()
        return atoms, logw + self._evidence(atoms) - self.log_normalizer

    def moment(self, k: float) -> float:
        if self.base.atomic:
            atoms, logw = self.atoms_and_logweights()
            return float(np.sum(np.exp(logw) * atoms ** k))
        val, _ = integrate(lambda w: w ** k * np.exp(self.logpdf(w)),
                           QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10, max_subdivisions=1000,
                                          initial_intervals=16))
        return val


@dataclass(frozen=True, eq=False)
class ConditionalResult:
    family_kind: str
    mu_cond: np.ndarray
    sigma_cond: PDMatrix
    delta_cond: Optional[np.ndarray]
    tilted: TiltedMixing

    def logpdf(self, y1):
        """Conditional log-density of the retained block at a point or rows."""
        y1 = np.asarray(y1, dtype=float)
        p1 = self.mu_cond.size
        if y1.shape[-1:] != (p1,) or y1.ndim > 2:
            raise DimensionMismatch(f"expected points of dimension {p1}")
        single = y1.ndim == 1
        rows = np.atleast_2d(y1)
        delta1 = np.zeros(p1) if self.delta_cond is None else self.delta_cond
        tilt = self.tilted
        if tilt.base.atomic:
            atoms, logw = tilt.atoms_and_logweights()
            parts = []
            for a, lw in zip(atoms, logw):
                c1, c = _mean_scale(self.family_kind, a)
                parts.append(lw + mvn_logpdf(rows, self.mu_cond + float(c1) * delta1,
                                             self.sigma_cond.scaled(float(c))))
            out = sc.logsumexp(np.stack(parts), axis=0)
        elif tilt.is_flat:
            cond = NormalMixture(self.family_kind, self.mu_cond, self.sigma_cond,
                                 delta1, tilt.base)
            out = np.atleast_1d(logpdf(cond, rows))
        else:
            # the joint integrand factorizes into the conditional block times the
            # evidence block; both share c(w), so their scalar summaries add
            z1 = self.sigma_cond.whiten(rows - self.mu_cond)
            zd1 = self.sigma_cond.whiten(delta1)
            z2 = tilt.sigma22.whiten(tilt.y2 - tilt.mu2)
            zd2 = (np.zeros_like(z2) if tilt.delta2 is None
                   else tilt.sigma22.whiten(tilt.delta2))
            dy = np.sum(z1 * z1, axis=1) + float(z2 @ z2)
            b = z1 @ zd1 + float(z2 @ zd2)
            dd = float(zd1 @ zd1 + zd2 @ zd2)
            out = _kernel_call(_KIND_CODE[self.family_kind], dy, b, dd, p1 + tilt.y2.size,
                               self.sigma_cond.logdet + tilt.sigma22.logdet, tilt.base)
            out = out - tilt.log_normalizer
        return float(out[0]) if single else out


def conditional(fam: NormalMixture, idx: PartitionIndex, y2) -> ConditionalResult:
    """Conditional law of block1 given block2 = ``y2``, carried by a tilted mixing law."""
    idx.check(fam.p)
    y2 = as_vector(y2, "y2")
    if y2.size != len(idx.block2):
        raise DimensionMismatch(f"y2 has length {y2.size}, expected {len(idx.block2)}")
    blocks = partition(fam.sigma, idx)
    b1, b2 = list(idx.block1), list(idx.block2)
    mu1, mu2 = fam.mu[b1], fam.mu[b2]
    mu_cond = mu1 + blocks.regression @ (y2 - mu2)
    delta2 = None if fam.delta is None else fam.delta[b2]
    delta_cond = None if fam.delta is None else fam.delta[b1] - blocks.regression @ delta2
    marg = NormalMixture(fam.kind, mu2, blocks.s22, delta2, fam.mixing)
    if fam.kind == MMN and not np.any(delta2):
        lognorm = float(mvn_logpdf(y2, mu2, blocks.s22))
    else:
        lognorm = float(logpdf(marg, y2))
    tilt = TiltedMixing(fam.mixing, fam.kind, y2, mu2, delta2, blocks.s22, lognorm)
    return ConditionalResult(fam.kind, mu_cond, blocks.schur, delta_cond, tilt)
