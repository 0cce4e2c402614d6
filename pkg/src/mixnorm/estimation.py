"""EM maximum-likelihood fitting for the t, SN, MMNE and GH families.

Every fitter alternates a conjugate E-step, which gives posterior
expectations of the latent mixing variable per observation, with
closed-form conditional maximizations. A parameter update is kept only if
the observed log-likelihood does not drop, so the stored trace is
monotone by construction as well as by theory.

Posterior laws of W given one observation (with ``d_y``, ``b`` and ``d_d``
the whitened quadratic forms of ``y - mu`` and ``delta``)::

    t    (VMN, IG(a, r))   : IG(a + p/2, r + d_y/2)
    SN   (MMN, TN(m0, v0)) : TN((m0/v0 + b) / (1/v0 + d_d), 1 / (1/v0 + d_d))
    MMNE (MMN, Exp(rate))  : TN((b - rate) / d_d, 1 / d_d)
    GH   (MVMN, GIG)       : GIG(psi + d_d, chi + d_y, lambda - p/2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import optimize
from scipy import special as sc

from .exceptions import (
    DegenerateGIG,
    DimensionMismatch,
    DomainError,
    NotPositiveDefinite,
    NotSymmetric,
    SingularScatter,
)
from .families import MMN, MVMN, VMN, NormalMixture, logpdf, make_family
from .linalg import PDMatrix, cholesky
from .mixing import GIG, Exponential, InverseGamma, TruncNormalPos, gig_expectations, mixing_moment, mixing_variance
from .special import log_bessel_k, trunc_normal_moments

NU_BRACKET = (0.1, 1e6)
LAMBDA_BRACKET = (-20.0, 20.0)
LOG_OMEGA_BRACKET = (math.log(1e-6), math.log(1e6))


@dataclass(frozen=True)
class FitConfig:
    """Stopping rule and start for the EM fitters.

    ``init`` is ``"moments"`` or a :class:`NormalMixture` to start from.
    ``fix_lambda`` pins the GIG index of a GH fit; ``None`` lets it move.
    """

    max_iter: int = 500
    ll_tol: float = 1e-8
    init: Union[str, NormalMixture] = "moments"
    fix_lambda: Optional[float] = None

    def __post_init__(self):
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.ll_tol > 0:
            raise ValueError("ll_tol must be positive")
        if isinstance(self.init, str) and self.init != "moments":
            raise ValueError("init must be 'moments' or a NormalMixture")


@dataclass(frozen=True, eq=False)
class FitResult:
    family: NormalMixture
    loglik_trace: list
    iterations: int
    converged: bool
    notes: tuple = ()

    @property
    def loglik(self) -> float:
        return self.loglik_trace[-1]


@dataclass(frozen=True, eq=False)
class EStepStats:
    """Per-observation posterior expectations of W; unused slots are None."""

    e_w: Optional[np.ndarray] = None
    e_w2: Optional[np.ndarray] = None
    e_inv: Optional[np.ndarray] = None
    e_logw: Optional[np.ndarray] = None


def loglik(fam: NormalMixture, data) -> float:
    """Sum of log-densities, added with exact (order-independent) summation."""
    data = _as_data(data)
    if data.shape[1] != fam.p:
        raise DimensionMismatch("data columns do not match the family dimension")
    return math.fsum(np.atleast_1d(logpdf(fam, data)))


def _as_data(data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2 or data.shape[0] < 1:
        raise DimensionMismatch("data must be an (n, p) array with n >= 1")
    if not np.all(np.isfinite(data)):
        raise DomainError("data contain non-finite values")
    return data


def _summaries(fam: NormalMixture, data: np.ndarray):
    z = fam.sigma.whiten(data - fam.mu)
    zd = fam.sigma.whiten(fam.shape_vector)
    return np.sum(z * z, axis=1), z @ zd, float(zd @ zd)


# --- E-steps ------------------------------------------------------------------

def estep_t(fam: NormalMixture, data) -> EStepStats:
    """``E[1/W | y]`` for a VMN family with inverse-gamma mixing."""
    mix = fam.mixing
    if fam.kind != VMN or not isinstance(mix, InverseGamma):
        raise DomainError("t E-step needs a VMN family with inverse-gamma mixing")
    dy, _, _ = _summaries(fam, _as_data(data))
    return EStepStats(e_inv=(mix.shape + 0.5 * fam.p) / (mix.rate + 0.5 * dy))


def _mmn_posterior(fam: NormalMixture, data):
    mix = fam.mixing
    if fam.kind != MMN:
        raise DomainError("MMN E-step needs an MMN family")
    _, b, dd = _summaries(fam, _as_data(data))
    if isinstance(mix, TruncNormalPos):
        prec = 1.0 / mix.var + dd
        return (mix.mean / mix.var + b) / prec, np.full_like(b, 1.0 / prec)
    if isinstance(mix, Exponential):
        if not dd > 0:
            raise DomainError("exponential-mixing E-step needs a nonzero shape vector")
        return (b - mix.rate) / dd, np.full_like(b, 1.0 / dd)
    raise DomainError("MMN E-step supports truncated-normal and exponential mixing")


def estep_mmn(fam: NormalMixture, data) -> EStepStats:
    """``E[W | y]`` and ``E[W^2 | y]`` for MMN with TN or exponential mixing."""
    m, v = _mmn_posterior(fam, data)
    e_w, e_w2 = trunc_normal_moments(m, v)
    return EStepStats(e_w=np.atleast_1d(e_w), e_w2=np.atleast_1d(e_w2))


estep_sn = estep_mmn
estep_mmne = estep_mmn


def estep_gh(fam: NormalMixture, data) -> EStepStats:
    """``E[W]``, ``E[1/W]``, ``E[log W]`` given y for MVMN with interior GIG mixing."""
    mix = fam.mixing
    if fam.kind not in (MVMN, VMN) or not isinstance(mix, GIG) or mix.boundary is not None:
        raise DomainError("GH E-step needs an MVMN family with interior GIG mixing")
    dy, _, dd = _summaries(fam, _as_data(data))
    e_w, e_inv, e_log = gig_expectations(mix.psi + dd, mix.chi + dy, mix.lam - 0.5 * fam.p)
    return EStepStats(e_w=np.atleast_1d(e_w), e_inv=np.atleast_1d(e_inv),
                      e_logw=np.atleast_1d(e_log))


# --- shared pieces --------------------------------------------------------------

def _scatter(m: np.ndarray) -> PDMatrix:
    try:
        return cholesky(0.5 * (m + m.T))
    except (NotPositiveDefinite, NotSymmetric) as exc:
        raise SingularScatter(f"scatter update is not positive definite: {exc}") from exc


def _sample_moments(data):
    n, p = data.shape
    mean = data.mean(axis=0)
    r = data - mean
    cov = r.T @ r / n
    sd = np.sqrt(np.diag(cov))
    skew = np.mean(r ** 3, axis=0) / sd ** 3
    return mean, cov, sd, skew


def _skew_start(data, ew, vw):
    """Moment start for a skewed family: returns ``(mu, Sigma, delta)``.

    ``delta`` follows the coordinate-wise cube root of the sample skewness,
    halved until ``cov - var(W) delta delta'`` stays safely positive definite.
    """
    mean, cov, sd, skew = _sample_moments(data)
    delta = np.cbrt(skew) * sd
    floor = 0.05 * np.linalg.eigvalsh(cov)[0]
    for _ in range(60):
        sig = cov - vw * np.outer(delta, delta)
        if np.linalg.eigvalsh(sig)[0] > floor:
            break
        delta = 0.5 * delta
    else:
        delta = np.zeros_like(delta)
        sig = cov
    return mean - ew * delta, sig, delta


def _check_n(data, need):
    if data.shape[0] <= need:
        raise DimensionMismatch(f"need more than {need} observations, got {data.shape[0]}")


def _converged(ll_old, ll_new, tol):
    return abs(ll_new - ll_old) <= tol * max(abs(ll_new), 1.0)


class _Tracker:
    """Keeps the best family seen and its trace; rejects non-ascending proposals."""

    def __init__(self, fam, data):
        self.data = data
        self.fam = fam
        self.ll = loglik(fam, data)
        self.trace = [self.ll]

    def propose(self, fam) -> bool:
        try:
            ll = loglik(fam, self.data)
        except ArithmeticError:
            return False
        if math.isfinite(ll) and ll >= self.ll:
            self.fam, self.ll = fam, ll
            return True
        return False

    def close_iteration(self):
        self.trace.append(self.ll)


# --- multivariate t -------------------------------------------------------------

def _t_nu_score(nu, dy, p):
    """Derivative (times 2/n) of the observed t log-likelihood in nu at fixed mu, Sigma."""
    return (sc.digamma(0.5 * (nu + p)) - sc.digamma(0.5 * nu)
            + np.mean((dy - p) / (nu + dy) - np.log1p(dy / nu)))


def _t_update_nu(dy, p):
    lo, hi = NU_BRACKET
    f_lo, f_hi = _t_nu_score(lo, dy, p), _t_nu_score(hi, dy, p)
    if f_hi >= 0:
        return hi, "nu at upper bracket"
    if f_lo <= 0:
        return lo, "nu at lower bracket"
    return optimize.brentq(_t_nu_score, lo, hi, args=(dy, p), xtol=1e-12, rtol=1e-14), None


def fit_t_em(data, config: FitConfig = FitConfig()) -> FitResult:
    """Multivariate t by ECME: weighted location/scatter, then nu on the observed likelihood."""
    data = _as_data(data)
    n, p = data.shape
    _check_n(data, p)
    if isinstance(config.init, NormalMixture):
        fam = config.init
    else:
        mean, cov, _, _ = _sample_moments(data)
        nu0 = 10.0
        fam = make_family(VMN, mean, cov * (nu0 - 2.0) / nu0, None, InverseGamma.from_nu(nu0))
    track = _Tracker(fam, data)
    notes = set()
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        prev = track.ll
        cur = track.fam
        tau = estep_t(cur, data).e_inv
        mu = tau @ data / tau.sum()
        r = data - mu
        sig = _scatter((tau[:, None] * r).T @ r / n)
        track.propose(NormalMixture(VMN, mu, sig, None, cur.mixing))
        cur = track.fam
        dy, _, _ = _summaries(cur, data)
        nu, note = _t_update_nu(dy, p)
        if track.propose(NormalMixture(VMN, cur.mu, cur.sigma, None, InverseGamma.from_nu(nu))) and note:
            notes.add(note)
        track.close_iteration()
        if _converged(prev, track.ll, config.ll_tol):
            converged = True
            break
    return FitResult(track.fam, track.trace, it, converged, tuple(sorted(notes)))


def fitted_nu(fam: NormalMixture) -> float:
    """Degrees of freedom of a VMN inverse-gamma family with shape = rate."""
    return 2.0 * fam.mixing.shape


# --- SN and MMNE ----------------------------------------------------------------

def _mmn_mstep(data, e_w, e_w2):
    n = data.shape[0]
    s1, s2 = e_w.sum(), e_w2.sum()
    sy = data.sum(axis=0)
    swy = e_w @ data
    det = n * s2 - s1 * s1
    if not det > 0:
        raise SingularScatter("location/shape normal equations are singular")
    mu = (s2 * sy - s1 * swy) / det
    delta = (n * swy - s1 * sy) / det
    r = data - mu
    wr = e_w @ r
    m = (r.T @ r - np.outer(wr, delta) - np.outer(delta, wr) + s2 * np.outer(delta, delta)) / n
    return mu, _scatter(m), delta


def _fit_mmn(data, config, mixing):
    data = _as_data(data)
    n, p = data.shape
    _check_n(data, p + 1)
    if isinstance(config.init, NormalMixture):
        fam = config.init
    else:
        mu, sig, delta = _skew_start(data, mixing_moment(mixing, 1), mixing_variance(mixing))
        if isinstance(mixing, Exponential) and not np.any(delta):
            delta = np.full(p, 1e-3)
        fam = make_family(MMN, mu, sig, delta, mixing)
    track = _Tracker(fam, data)
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        prev = track.ll
        st = estep_mmn(track.fam, data)
        mu, sig, delta = _mmn_mstep(data, st.e_w, st.e_w2)
        track.propose(NormalMixture(MMN, mu, sig, delta, mixing))
        track.close_iteration()
        if _converged(prev, track.ll, config.ll_tol):
            converged = True
            break
    return FitResult(track.fam, track.trace, it, converged)


def fit_sn_em(data, config: FitConfig = FitConfig()) -> FitResult:
    """Skew-normal (MMN with standard half-normal mixing) by EM."""
    return _fit_mmn(data, config, TruncNormalPos(0.0, 1.0))


def fit_mmne_em(data, config: FitConfig = FitConfig()) -> FitResult:
    """MMN with standard exponential mixing by EM."""
    return _fit_mmn(data, config, Exponential(1.0))


# --- generalized hyperbolic ---------------------------------------------------------

def _gig_q(lam, log_omega, n, s_w, s_inv, s_log):
    """Expected complete-data GIG log-likelihood maximized over eta at fixed (lam, omega).

    Returns ``(value, psi, chi)``.
    """
    omega = math.exp(log_omega)
    eta = (-n * lam + math.sqrt(n * n * lam * lam + omega * omega * s_w * s_inv)) / (omega * s_inv)
    psi, chi = omega / eta, omega * eta
    val = (-n * lam * math.log(eta) - n * (math.log(2.0) + float(log_bessel_k(lam, omega)))
           + (lam - 1.0) * s_log - 0.5 * (psi * s_w + chi * s_inv))
    return val, psi, chi


def _gig_mstep(st: EStepStats, lam, fix_lambda):
    n = st.e_w.size
    s_w, s_inv, s_log = float(st.e_w.sum()), float(st.e_inv.sum()), float(st.e_logw.sum())
    notes = []

    def best_omega(lm):
        res = optimize.minimize_scalar(lambda lo: -_gig_q(lm, lo, n, s_w, s_inv, s_log)[0],
                                       bounds=LOG_OMEGA_BRACKET, method="bounded",
                                       options={"xatol": 1e-10})
        return res.x, -res.fun

    if fix_lambda is None:
        res = optimize.minimize_scalar(lambda lm: -best_omega(lm)[1], bounds=LAMBDA_BRACKET,
                                       method="bounded", options={"xatol": 1e-8})
        lam = float(res.x)
        if min(lam - LAMBDA_BRACKET[0], LAMBDA_BRACKET[1] - lam) < 1e-5:
            notes.append("lambda at search bound")
    log_omega, _ = best_omega(lam)
    if min(log_omega - LOG_OMEGA_BRACKET[0], LOG_OMEGA_BRACKET[1] - log_omega) < 1e-6:
        raise DegenerateGIG(f"GIG iterate reached the support boundary (omega = {math.exp(log_omega):.3g})")
    _, psi, chi = _gig_q(lam, log_omega, n, s_w, s_inv, s_log)
    return psi, chi, lam, notes


def _renormalize(fam: NormalMixture) -> NormalMixture:
    """Rescale W so that psi = chi; the law of Y is unchanged."""
    g = fam.mixing
    k = math.sqrt(g.psi / g.chi)
    omega = math.sqrt(g.psi * g.chi)
    return NormalMixture(MVMN, fam.mu, fam.sigma.scaled(1.0 / k), fam.delta / k,
                         GIG(omega, omega, g.lam))


def fit_gh_em(data, config: FitConfig = FitConfig()) -> FitResult:
    """Generalized hyperbolic (MVMN with GIG mixing) by MCECM.

    Each iteration: E-step, closed-form (mu, delta, Sigma); E-step again,
    then the GIG parameters (and lambda unless fixed). The GIG is kept at
    psi = chi, which removes the scale ambiguity between W and (delta, Sigma).
    """
    data = _as_data(data)
    n, p = data.shape
    _check_n(data, p + 1)
    lam0 = -0.5 if config.fix_lambda is None else float(config.fix_lambda)
    if isinstance(config.init, NormalMixture):
        fam = config.init
        if config.fix_lambda is not None:
            g = fam.mixing
            fam = NormalMixture(MVMN, fam.mu, fam.sigma, fam.delta, GIG(g.psi, g.chi, lam0))
    else:
        mix = GIG(1.0, 1.0, lam0)
        ew, vw = mixing_moment(mix, 1), mixing_variance(mix)
        mu, cov, delta = _skew_start(data, ew, vw)
        fam = make_family(MVMN, mu, cov / ew, delta, mix)
    track = _Tracker(fam, data)
    notes = set()
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        prev = track.ll
        cur = track.fam
        st = estep_gh(cur, data)
        a_bar, b_bar = st.e_w.mean(), st.e_inv.mean()
        ybar = data.mean(axis=0)
        by = st.e_inv @ data / n
        denom = 1.0 - a_bar * b_bar
        if denom < 0:
            delta = (by - ybar * b_bar) / denom
            mu = ybar - a_bar * delta
            r = data - mu
            sig = _scatter((st.e_inv[:, None] * r).T @ r / n - a_bar * np.outer(delta, delta))
            track.propose(NormalMixture(MVMN, mu, sig, delta, cur.mixing))
        cur = track.fam
        st = estep_gh(cur, data)
        try:
            psi, chi, lam, extra = _gig_mstep(st, cur.mixing.lam, config.fix_lambda)
        except DegenerateGIG as exc:
            notes.add(str(exc))
            track.close_iteration()
            return FitResult(track.fam, track.trace, it, False, tuple(sorted(notes)))
        notes.update(extra)
        cand = NormalMixture(MVMN, cur.mu, cur.sigma, cur.delta, GIG(psi, chi, lam))
        if track.propose(cand):
            track.fam = _renormalize(track.fam)
        track.close_iteration()
        if _converged(prev, track.ll, config.ll_tol):
            converged = True
            break
    return FitResult(track.fam, track.trace, it, converged, tuple(sorted(notes)))


FITTERS = {"t": fit_t_em, "sn": fit_sn_em, "mmne": fit_mmne_em, "gh": fit_gh_em}
