import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixnorm.estimation import (
    NU_BRACKET,
    EStepStats,
    FitConfig,
    estep_gh,
    estep_mmn,
    estep_t,
    fit_gh_em,
    fit_mmne_em,
    fit_sn_em,
    fit_t_em,
    fitted_nu,
    loglik,
)
from mixnorm.exceptions import DimensionMismatch, DomainError
from mixnorm.families import MMN, MVMN, VMN, logpdf, make_family, sample
from mixnorm.linalg import mvn_logpdf
from mixnorm.mixing import GIG, Exponential, InverseGamma, PointMass, TruncNormalPos
from mixnorm.oracle import posterior_expectation_quadrature

from .conftest import random_pd

S = np.array([[1.0, 0.3], [0.3, 2.0]])
T5 = make_family(VMN, [1.0, -1.0], S, None, InverseGamma.from_nu(5.0))
SN = make_family(MMN, [0.0, 0.0], S, [1.5, 0.0], TruncNormalPos(0.0, 1.0))
MMNE1 = make_family(MMN, [0.5], [[1.0]], [2.0], Exponential(1.0))
GH = make_family(MVMN, [0.0, 0.0], S, [0.5, 0.0], GIG(1.0, 1.0, 1.0))
NORMAL = make_family(VMN, [1.0, -1.0], S, None, PointMass(1.0))
GH_LAMBDA = FitConfig(fix_lambda=1.0)

# every dataset below is drawn with default_rng(0)


def _data(fam, n, seed=0):
    return sample(fam, np.random.default_rng(seed), n)


def _kahan(values):
    total = comp = 0.0
    for v in values:
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


class TestLoglik:
    def test_standard_normal_mode(self):
        fam = make_family(VMN, [0.0], [[1.0]])
        assert loglik(fam, [[0.0]]) == pytest.approx(-0.9189385332046727, abs=1e-15)

    def test_duplicated_data_doubles_exactly(self, rng):
        y = rng.normal(size=(37, 2))
        assert loglik(T5, np.vstack([y, y])) == 2.0 * loglik(T5, y)

    def test_summation_oracle(self, rng):
        y = sample(T5, rng, 5000)
        vals = logpdf(T5, y)
        got = loglik(T5, y)
        assert got == pytest.approx(_kahan(vals), abs=1e-9)
        assert got == pytest.approx(float(np.sum(vals)), abs=1e-9)

    def test_order_independent(self, rng):
        y = sample(GH, rng, 500)
        assert loglik(GH, y) == loglik(GH, y[rng.permutation(500)])

    def test_dimension_check(self):
        with pytest.raises(DimensionMismatch):
            loglik(T5, np.zeros((3, 3)))


class TestEStep:
    """Closed-form posterior expectations against direct quadrature."""

    def test_t_weights(self, rng):
        fam = make_family(VMN, [0.2, -0.1, 0.0], random_pd(rng, 3), None, InverseGamma.from_nu(4.0))
        y = fam.mu + 1.5 * rng.normal(size=(8, 3))
        st_ = estep_t(fam, y)
        for yi, e in zip(y, st_.e_inv):
            assert e == pytest.approx(posterior_expectation_quadrature(fam, yi, "inv"), abs=1e-8)

    @pytest.mark.parametrize("mixing", [TruncNormalPos(0.0, 1.0), Exponential(1.0)],
                             ids=["sn", "mmne"])
    def test_mmn_moments(self, rng, mixing):
        fam = make_family(MMN, [0.1, 0.3], random_pd(rng, 2), [1.2, -0.7], mixing)
        y = sample(fam, rng, 8)
        st_ = estep_mmn(fam, y)
        for yi, e1, e2 in zip(y, st_.e_w, st_.e_w2):
            assert e1 == pytest.approx(posterior_expectation_quadrature(fam, yi, "w"), abs=1e-8)
            assert e2 == pytest.approx(posterior_expectation_quadrature(fam, yi, "w2"), abs=1e-8)

    def test_gh_moments(self, rng):
        fam = make_family(MVMN, [0.0, 0.5], random_pd(rng, 2), [0.4, 0.2], GIG(0.8, 1.5, -0.7))
        y = sample(fam, rng, 6)
        st_ = estep_gh(fam, y)
        for i, yi in enumerate(y):
            for key, arr in (("w", st_.e_w), ("inv", st_.e_inv), ("log", st_.e_logw)):
                assert arr[i] == pytest.approx(posterior_expectation_quadrature(fam, yi, key), abs=1e-7)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10 ** 6))
    def test_jensen_bounds(self, seed):
        rng = np.random.default_rng(seed)
        y = 3.0 * rng.normal(size=(10, 2))
        sn = estep_mmn(make_family(MMN, [0, 0], S, rng.normal(size=2), TruncNormalPos(0.0, 1.0)), y)
        assert np.all(sn.e_w2 >= sn.e_w ** 2 * (1 - 1e-12))
        assert np.all(sn.e_w >= 0)
        gh = estep_gh(make_family(MVMN, [0, 0], S, rng.normal(size=2), GIG(1.0, 2.0, 0.3)), y)
        assert np.all(gh.e_w * gh.e_inv >= 1 - 1e-12)

    def test_wrong_family(self):
        with pytest.raises(DomainError):
            estep_t(SN, np.zeros((2, 2)))
        with pytest.raises(DomainError):
            estep_gh(T5, np.zeros((2, 2)))


@pytest.fixture(scope="module")
def fits():
    return {
        "t": (T5, fit_t_em(_data(T5, 2000))),
        "sn": (SN, fit_sn_em(_data(SN, 2000))),
        "mmne": (MMNE1, fit_mmne_em(_data(MMNE1, 2000))),
        "gh": (GH, fit_gh_em(_data(GH, 4000), GH_LAMBDA)),
    }


class TestRecovery:
    def test_t(self, fits):
        truth, res = fits["t"]
        assert res.converged
        assert np.all(np.abs(res.family.mu - truth.mu) <= 0.1)
        assert abs(fitted_nu(res.family) - 5.0) <= 0.25 * 5.0

    def test_skew_normal(self, fits):
        truth, res = fits["sn"]
        assert np.all(np.abs(res.family.delta - truth.delta) <= 0.15)

    def test_mmn_exponential(self, fits):
        truth, res = fits["mmne"]
        assert abs(res.family.delta[0] - 2.0) <= 0.2

    def test_gh(self, fits):
        truth, res = fits["gh"]
        assert np.all(np.abs(res.family.mu - truth.mu) <= 0.15)
        assert np.all(np.abs(res.family.delta - truth.delta) <= 0.25)
        g = res.family.mixing
        assert g.lam == 1.0 and g.psi == pytest.approx(g.chi, rel=1e-12)

    @pytest.mark.parametrize("name", ["t", "sn", "mmne", "gh"])
    def test_trace_is_monotone(self, fits, name):
        trace = np.array(fits[name][1].loglik_trace)
        assert np.all(np.diff(trace) >= -1e-8)
        assert fits[name][1].loglik == trace[-1]

    def test_symmetric_gh_has_small_shape(self):
        sym = make_family(MVMN, [0.0, 0.0], S, [0.0, 0.0], GIG(1.0, 1.0, 1.0))
        res = fit_gh_em(_data(sym, 4000), GH_LAMBDA)
        assert np.linalg.norm(res.family.delta) <= 0.15

    def test_free_lambda_gh_ascends(self):
        res = fit_gh_em(_data(GH, 1000), FitConfig(max_iter=40))
        assert np.all(np.diff(res.loglik_trace) >= -1e-8)
        assert res.loglik >= loglik(GH, _data(GH, 1000)) - 1e-6


def test_normal_data_push_nu_to_the_bracket():
    y = _data(NORMAL, 2000)
    res = fit_t_em(y)
    assert fitted_nu(res.family) == NU_BRACKET[1]
    assert "nu at upper bracket" in res.notes
    normal = mvn_logpdf(y, res.family.mu, res.family.sigma)
    assert np.max(np.abs(logpdf(res.family, y) - normal)) < 1e-3


def test_skew_normal_on_normal_data_gains_little():
    # the shape of a skew-normal is weakly identified at the normal; the
    # likelihood-ratio gain over the normal MLE stays small
    y = _data(NORMAL, 2000)
    res = fit_sn_em(y)
    mean = y.mean(axis=0)
    cov = np.cov(y.T, bias=True)
    ll_normal = float(np.sum(mvn_logpdf(y, mean, make_family(VMN, mean, cov).sigma)))
    gain = res.loglik - ll_normal
    assert -1e-6 <= gain < 3.0


def _perturbed(fam):
    """The same family with location and shape moved off the truth."""
    delta = None if fam.delta is None else fam.delta + 0.7
    return make_family(fam.kind, fam.mu + 0.8, 1.5 * fam.sigma.entries, delta, fam.mixing)


@pytest.mark.parametrize("name,fam,fit,cfg", [
    ("t", T5, fit_t_em, FitConfig(max_iter=1)),
    ("sn", SN, fit_sn_em, FitConfig(max_iter=1)),
    ("mmne", MMNE1, fit_mmne_em, FitConfig(max_iter=1)),
    ("gh", GH, fit_gh_em, FitConfig(max_iter=1, fix_lambda=1.0)),
])
def test_one_step_strictly_ascends(name, fam, fit, cfg):
    y = _data(fam, 500)
    start = _perturbed(fam)
    res = fit(y, FitConfig(max_iter=1, init=start, fix_lambda=cfg.fix_lambda))
    assert res.iterations == 1 and len(res.loglik_trace) == 2
    assert res.loglik_trace[0] == loglik(start, y)
    assert res.loglik_trace[1] > res.loglik_trace[0]


@pytest.mark.parametrize("name,fam,fit", [
    ("t", T5, fit_t_em), ("sn", SN, fit_sn_em),
    ("mmne", make_family(MMN, [0, 0], S, [1.0, 0.5], Exponential(1.0)), fit_mmne_em),
    ("gh", GH, fit_gh_em),
])
def test_affine_equivariance(name, fam, fit):
    A = np.array([[2.0, 0.5], [-0.3, 1.2]])
    a = np.array([1.0, -2.0])
    cfg = FitConfig(max_iter=5000, ll_tol=1e-13, fix_lambda=1.0 if name == "gh" else None)
    y = _data(fam, 1000)
    r1 = fit(y, cfg)
    r2 = fit(y @ A.T + a, cfg)
    expected = r1.loglik - y.shape[0] * math.log(abs(np.linalg.det(A)))
    assert r2.loglik == pytest.approx(expected, abs=1e-4)


@pytest.mark.parametrize("name,fam,fit", [("t", T5, fit_t_em), ("sn", SN, fit_sn_em),
                                          ("mmne", MMNE1, fit_mmne_em)])
def test_parametric_bootstrap_self_consistency(name, fam, fit):
    first = fit(_data(fam, 1500)).family
    boot = fit(_data(first, 1500, seed=1)).family
    held_out = _data(first, 5000, seed=2)
    drop = np.mean(logpdf(first, held_out)) - np.mean(logpdf(boot, held_out))
    assert drop <= 0.05


def test_degenerate_gig_stops_the_fit():
    # Cauchy data under a GH with lambda pinned at 1 drive omega to zero
    cauchy = make_family(VMN, [0.0, 0.0], S, None, InverseGamma.from_nu(1.0))
    res = fit_gh_em(_data(cauchy, 500), FitConfig(fix_lambda=1.0, max_iter=300))
    assert not res.converged and res.iterations < 300
    assert np.all(np.diff(res.loglik_trace) >= -1e-8)
    assert any("support boundary" in note for note in res.notes)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            FitConfig(max_iter=0)
        with pytest.raises(ValueError):
            FitConfig(ll_tol=0.0)
        with pytest.raises(ValueError):
            FitConfig(init="random")

    def test_too_few_observations(self):
        with pytest.raises(DimensionMismatch):
            fit_t_em(np.zeros((2, 2)))
        with pytest.raises(DimensionMismatch):
            fit_sn_em(np.ones((3, 2)))

    def test_max_iter_reports_no_convergence(self):
        res = fit_sn_em(_data(SN, 300), FitConfig(max_iter=2))
        assert res.iterations == 2 and not res.converged

    def test_estep_stats_defaults(self):
        assert EStepStats().e_w is None
