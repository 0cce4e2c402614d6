import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixnorm.exceptions import (
    DimensionMismatch,
    KindShapeMismatch,
    RankDeficient,
    ToleranceNotMet,
    UnsupportedCombination,
)
from mixnorm.families import (
    MMN,
    MVMN,
    UNDEFINED,
    VMN,
    add_independent_normal,
    affine,
    conditional,
    dispatch_route,
    logpdf,
    make_family,
    marginal,
    mgf,
    moments,
    quadrature_logpdf,
    sample,
)
from mixnorm.linalg import AffineMap, PartitionIndex, mvn_logpdf
from mixnorm.mixing import (
    GIG,
    BirnbaumSaunders,
    Exponential,
    FiniteDiscrete,
    InverseGamma,
    Lindley,
    PointMass,
    TruncNormalPos,
)
from mixnorm.oracle import mc_expectation, mc_mean_cov
from mixnorm.special import QuadratureSpec, integrate

from .conftest import random_pd

SIGMA2 = np.array([[1.0, 0.4], [0.4, 1.5]])

# every (kind, mixing) pair the package ships, in 2-d
PAIRS = [
    (VMN, None, PointMass(1.0)),
    (VMN, None, InverseGamma(0.5, 0.5)),
    (VMN, None, InverseGamma(3.0, 2.0)),
    (VMN, None, GIG(1.0, 2.0, 0.5)),
    (VMN, None, BirnbaumSaunders(0.7)),
    (VMN, None, Lindley(1.5)),
    (VMN, None, Exponential(2.0)),
    (VMN, None, FiniteDiscrete((0.5, 2.0), (0.4, 0.6))),
    (MMN, [1.0, -0.5], TruncNormalPos(0.0, 1.0)),
    (MMN, [1.0, -0.5], TruncNormalPos(0.8, 0.5)),
    (MMN, [1.0, -0.5], Exponential(1.0)),
    (MMN, [1.0, -0.5], Lindley(2.0)),
    (MMN, [1.0, -0.5], GIG(1.0, 1.0, 1.0)),
    (MVMN, [1.0, -0.5], GIG(1.0, 1.0, 1.0)),
    (MVMN, [0.5, 0.5], GIG(2.0, 0.0, 2.0)),
    (MVMN, [0.5, 0.5], GIG(0.0, 3.0, -3.0)),
    (MVMN, [1.0, -0.5], Exponential(1.0)),
    (MVMN, [1.0, -0.5], BirnbaumSaunders(0.5)),
    (MVMN, [1.0, -0.5], FiniteDiscrete((0.5, 2.0), (0.4, 0.6))),
]


def _ids(case):
    kind, _, mix = case
    return f"{kind}-{mix.canonical()}"


def _family(case, mu=(0.3, -0.2), sigma=SIGMA2):
    kind, delta, mix = case
    return make_family(kind, list(mu), sigma, delta, mix)


class TestConstruction:
    def test_kind_shape_rules(self):
        with pytest.raises(KindShapeMismatch):
            make_family(VMN, [0.0], [[1.0]], [1.0], PointMass(1.0))
        with pytest.raises(KindShapeMismatch):
            make_family(MMN, [0.0], [[1.0]], None, Exponential(1.0))
        with pytest.raises(DimensionMismatch):
            make_family(MVMN, [0.0, 0.0], [[1.0]], [0.0, 0.0], Exponential(1.0))
        with pytest.raises(ValueError):
            make_family("xyz", [0.0], [[1.0]], None, PointMass(1.0))

    def test_zero_shape_mvmn_behaves_as_vmn(self):
        fam = make_family(MVMN, [0.0], [[1.0]], [0.0], GIG(1.0, 1.0, 1.0))
        vmn = make_family(VMN, [0.0], [[1.0]], None, GIG(1.0, 1.0, 1.0))
        y = np.linspace(-3, 3, 7)[:, None]
        np.testing.assert_allclose(logpdf(fam, y), logpdf(vmn, y), rtol=1e-13)

    def test_equality_is_fieldwise(self):
        a = _family(PAIRS[8])
        b = _family(PAIRS[8])
        assert a == b
        assert a != _family(PAIRS[9])


@pytest.mark.parametrize("case", PAIRS, ids=_ids)
def test_dispatch_agrees_with_direct_quadrature(case):
    fam = _family(case)
    y = np.random.default_rng(4).normal(size=(6, 2)) * 1.5
    if fam.mixing.atomic:
        pytest.skip("atomic mixing has no integral form")
    np.testing.assert_allclose(logpdf(fam, y), quadrature_logpdf(fam, y), atol=1e-9)


@pytest.mark.parametrize("case", PAIRS, ids=_ids)
def test_univariate_density_normalizes(case):
    kind, delta, mix = case
    fam = make_family(kind, [0.2], [[1.3]], None if delta is None else [delta[0]], mix)
    spec = QuadratureSpec(abs_tol=0.0, rel_tol=1e-10, max_subdivisions=400, domain="real_line",
                          initial_intervals=8)
    total, _ = integrate(lambda x: np.exp(logpdf(fam, x[:, None])), spec)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_routes():
    assert dispatch_route(_family(PAIRS[0])) == "normal"
    assert dispatch_route(_family(PAIRS[1])) == "t"
    assert dispatch_route(_family(PAIRS[3])) == "gh"
    assert dispatch_route(_family(PAIRS[4])) == "quadrature"
    assert dispatch_route(_family(PAIRS[7])) == "finite-normal-mixture"
    assert dispatch_route(_family(PAIRS[8])) == "sn"
    assert dispatch_route(_family(PAIRS[10])) == "mmne"
    assert dispatch_route(_family(PAIRS[13])) == "gh"
    assert dispatch_route(make_family(MMN, [0.0], [[1.0]], [0.0], Lindley(1.0))) == "normal"


def test_point_mass_is_normal(rng):
    fam = make_family(VMN, [0.1, 0.2], SIGMA2, None, PointMass(1.0))
    y = rng.normal(size=(20, 2))
    np.testing.assert_array_equal(logpdf(fam, y), mvn_logpdf(y, fam.mu, fam.sigma))


def test_cauchy_peak_and_skew_normal_origin():
    cauchy = make_family(VMN, [0.0], [[1.0]], None, InverseGamma(0.5, 0.5))
    assert logpdf(cauchy, [0.0]) == pytest.approx(-math.log(math.pi), abs=1e-13)
    sn = make_family(MMN, [0.0], [[1.0]], [1.0], TruncNormalPos(0.0, 1.0))
    assert logpdf(sn, [0.0]) == pytest.approx(math.log(1 / (2 * math.sqrt(math.pi))), abs=1e-13)


def test_logpdf_dimension_check():
    with pytest.raises(DimensionMismatch):
        logpdf(_family(PAIRS[0]), [0.0, 0.0, 0.0])


def test_tolerance_failure_carries_estimate():
    # at the centre of a 2-d exponential variance mixture the density is infinite
    fam = make_family(VMN, [0.0, 0.0], np.eye(2), None, Exponential(1.0))
    with pytest.raises(ToleranceNotMet) as info:
        logpdf(fam, [0.0, 0.0])
    assert info.value.value is not None


class TestSampling:
    def test_deterministic_per_seed(self):
        fam = _family(PAIRS[13])
        a = sample(fam, np.random.default_rng(9), 50)
        b = sample(fam, np.random.default_rng(9), 50)
        np.testing.assert_array_equal(a, b)

    def test_half_normal_mean(self):
        fam = make_family(MMN, [0.0], [[1.0]], [1.0], TruncNormalPos(0.0, 1.0))
        y = sample(fam, np.random.default_rng(1), 1_000_000)[:, 0]
        assert abs(y.mean() - math.sqrt(2 / math.pi)) < 4 * y.std() / 1000

    def test_mvmn_exponential_covariance(self):
        fam = make_family(MVMN, [0.0, 0.0], SIGMA2, [1.0, 0.0], Exponential(1.0))
        mean, cov = mc_mean_cov(fam, 1_000_000, 3)
        target = np.outer([1.0, 0.0], [1.0, 0.0]) + SIGMA2
        assert np.all(np.abs(cov.estimate - target) < 4 * cov.std_error)


class TestMoments:
    def test_t4_covariance(self):
        fam = make_family(VMN, [0.0, 0.0], SIGMA2, None, InverseGamma.from_nu(4.0))
        mean, cov = moments(fam)
        np.testing.assert_allclose(cov, 2 * SIGMA2)

    def test_cauchy_undefined(self):
        mean, cov = moments(make_family(VMN, [0.0], [[1.0]], None, InverseGamma(0.5, 0.5)))
        assert mean is UNDEFINED and cov is UNDEFINED

    def test_t_with_two_degrees_has_mean_only(self):
        mean, cov = moments(make_family(VMN, [1.0], [[1.0]], None, InverseGamma.from_nu(2.0)))
        assert mean[0] == 1.0 and cov is UNDEFINED

    def test_skew_normal_moments(self):
        mean, cov = moments(make_family(MMN, [0.0], [[1.0]], [1.0], TruncNormalPos(0.0, 1.0)))
        assert mean[0] == pytest.approx(math.sqrt(2 / math.pi))
        assert cov[0, 0] == pytest.approx(1 + 1 - 2 / math.pi)

    @pytest.mark.parametrize("case", [c for c in PAIRS if c[2] != InverseGamma(0.5, 0.5)], ids=_ids)
    def test_monte_carlo_agreement(self, case):
        fam = _family(case)
        mean, cov = moments(fam)
        if cov is UNDEFINED:
            pytest.skip("infinite second moment")
        mrep, crep = mc_mean_cov(fam, 200_000, 21)
        assert np.all(np.abs(mrep.estimate - mean) < 4 * mrep.std_error)
        assert np.all(np.abs(crep.estimate - cov) < 4 * crep.std_error)


class TestMgf:
    def test_origin(self):
        for case in PAIRS:
            assert mgf(_family(case), [0.0, 0.0]) == 1.0

    def test_mmn_exponential_value(self):
        fam = make_family(MMN, [0.0], [[1.0]], [1.0], Exponential(1.0))
        assert mgf(fam, [0.5]) == pytest.approx(2 * math.exp(1 / 8))

    def test_inverse_gamma_diverges(self):
        fam = make_family(VMN, [0.0, 0.0], SIGMA2, None, InverseGamma(3.0, 2.0))
        assert math.isinf(mgf(fam, [0.1, 0.0]))

    @pytest.mark.parametrize("case", [PAIRS[0], PAIRS[3], PAIRS[8], PAIRS[10], PAIRS[13], PAIRS[17]], ids=_ids)
    def test_monte_carlo(self, case):
        fam = _family(case)
        t = np.array([0.12, -0.1])
        rep = mc_expectation(fam, lambda y: np.exp(y @ t), 400_000, 8)
        assert abs(rep.estimate - mgf(fam, t)) < 3 * rep.std_error + 1e-12


class TestClosure:
    def test_identity_map_gives_equal_family(self):
        for case in PAIRS:
            fam = _family(case)
            assert affine(fam, AffineMap(np.eye(2), np.zeros(2))) == fam

    def test_selection_equals_marginal(self):
        fam = _family(PAIRS[13])
        idx = PartitionIndex.from_block1(2, [0])
        assert affine(fam, AffineMap.selection(2, [0])) == marginal(fam, idx)

    def test_full_marginal_is_identity(self):
        fam = _family(PAIRS[10])
        assert marginal(fam, PartitionIndex.from_block1(2, [0, 1])) == fam

    def test_scaled_cauchy(self):
        fam = make_family(VMN, [0.0], [[1.0]], None, InverseGamma(0.5, 0.5))
        out = affine(fam, AffineMap(np.array([[2.0]]), np.array([3.0])))
        assert logpdf(out, [3.0]) == pytest.approx(math.log(1 / (2 * math.pi)), abs=1e-13)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            AffineMap(np.array([[1.0, 1.0], [2.0, 2.0]]), np.zeros(2))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 100_000), which=st.sampled_from([1, 3, 8, 10, 13, 17]))
    def test_change_of_variables(self, seed, which):
        rng = np.random.default_rng(seed)
        fam = _family(PAIRS[which])
        A = rng.normal(size=(2, 2)) + 2 * np.eye(2)
        a = rng.normal(size=2)
        y = rng.normal(size=2)
        out = affine(fam, AffineMap(A, a))
        lhs = logpdf(out, A @ y + a)
        rhs = logpdf(fam, y) - math.log(abs(np.linalg.det(A)))
        assert lhs == pytest.approx(rhs, abs=1e-8)

    def test_add_normal_degenerate_addend(self, rng):
        fam = _family(PAIRS[10])
        out = add_independent_normal(fam, AffineMap(np.eye(2), np.zeros(2)), np.zeros(2), 1e-12 * np.eye(2))
        y = rng.normal(size=(5, 2))
        assert np.max(np.abs(logpdf(out, y) - logpdf(fam, y))) < 1e-6

    def test_add_normal_mmn_moments(self):
        fam = _family(PAIRS[8])
        mu_s, sig_s = np.array([1.0, 2.0]), np.array([[0.5, 0.1], [0.1, 0.3]])
        out = add_independent_normal(fam, AffineMap(np.eye(2), np.zeros(2)), mu_s, sig_s)
        rng = np.random.default_rng(17)
        total = sample(fam, rng, 1_000_000) + rng.multivariate_normal(mu_s, sig_s, 1_000_000)
        m_out, c_out = moments(out)
        se = total.std(axis=0) / 1000
        assert np.all(np.abs(total.mean(axis=0) - m_out) < 4 * se)
        np.testing.assert_allclose(np.cov(total.T), c_out, atol=0.01)

    def test_add_normal_mvmn_shared_mixing(self):
        # X | W ~ N(mu*, W Sigma*) with the same W as Y
        fam = _family(PAIRS[13])
        mu_s, sig_s = np.array([1.0, 2.0]), np.array([[0.5, 0.1], [0.1, 0.3]])
        out = add_independent_normal(fam, AffineMap(np.eye(2), np.zeros(2)), mu_s, sig_s,
                                     shared_mixing=True)
        rng = np.random.default_rng(5)
        n = 400_000
        w = fam.mixing.sample(rng, n)
        z = rng.standard_normal((n, 2))
        x = rng.standard_normal((n, 2)) @ np.linalg.cholesky(sig_s).T
        total = (fam.mu + w[:, None] * fam.delta + np.sqrt(w)[:, None] * (z @ fam.sigma.chol.T)
                 + mu_s + np.sqrt(w)[:, None] * x)
        m_out, c_out = moments(out)
        r = total - total.mean(axis=0)
        prods = r[:, :, None] * r[:, None, :]
        assert np.all(np.abs(total.mean(axis=0) - m_out) < 4 * total.std(axis=0) / math.sqrt(n))
        assert np.all(np.abs(prods.mean(axis=0) - c_out) < 4 * prods.std(axis=0) / math.sqrt(n))

    def test_add_normal_unsupported(self):
        eye = AffineMap(np.eye(2), np.zeros(2))
        with pytest.raises(UnsupportedCombination):
            add_independent_normal(_family(PAIRS[1]), eye, np.zeros(2), np.eye(2))
        with pytest.raises(UnsupportedCombination):
            add_independent_normal(_family(PAIRS[13]), eye, np.zeros(2), np.eye(2))
        with pytest.raises(UnsupportedCombination):
            add_independent_normal(_family(PAIRS[8]), eye, np.zeros(2), np.eye(2), shared_mixing=True)


def _coordinate_integral(fam, y1):
    spec = QuadratureSpec(abs_tol=0.0, rel_tol=1e-10, max_subdivisions=400, domain="real_line",
                          initial_intervals=8)
    pts = lambda x: np.column_stack([np.full(x.size, y1), x])
    return integrate(lambda x: np.exp(logpdf(fam, pts(x))), spec)[0]


class TestMarginalConditional:
    @pytest.mark.parametrize("case", [(VMN, None, InverseGamma.from_nu(4.0)), PAIRS[13], PAIRS[17], PAIRS[8]], ids=_ids)
    def test_marginal_matches_coordinate_integration(self, case):
        fam = _family(case)
        marg = marginal(fam, PartitionIndex.from_block1(2, [0]))
        for y1 in (-1.3, 0.2, 2.1):
            assert logpdf(marg, [y1]) == pytest.approx(math.log(_coordinate_integral(fam, y1)), abs=1e-5)

    @pytest.mark.parametrize("case", PAIRS, ids=_ids)
    def test_joint_factorization(self, case):
        fam = _family(case)
        rng = np.random.default_rng(2)
        idx = PartitionIndex.from_block1(2, [0])
        y2 = np.array([0.7])
        cond = conditional(fam, idx, y2)
        marg2 = marginal(fam, PartitionIndex.from_block1(2, [1]))
        y1 = rng.normal(size=(10, 1))
        joint = logpdf(fam, np.column_stack([y1[:, 0], np.full(10, 0.7)]))
        np.testing.assert_allclose(joint, cond.logpdf(y1) + logpdf(marg2, y2), atol=1e-6)

    def test_point_mass_conditional_is_gaussian(self):
        fam = make_family(VMN, [0.3, -0.2], SIGMA2, None, PointMass(1.0))
        cond = conditional(fam, PartitionIndex.from_block1(2, [0]), [1.0])
        reg = SIGMA2[0, 1] / SIGMA2[1, 1]
        assert cond.mu_cond[0] == pytest.approx(0.3 + reg * 1.2, abs=1e-15)
        assert cond.sigma_cond.entries[0, 0] == pytest.approx(SIGMA2[0, 0] - reg * SIGMA2[0, 1], abs=1e-15)

    def test_flat_tilt_for_mmn_with_zero_block_shape(self):
        fam = make_family(MMN, [0.0, 0.0], SIGMA2, [1.0, 0.0], Exponential(1.0))
        cond = conditional(fam, PartitionIndex.from_block1(2, [0]), [0.4])
        assert cond.tilted.is_flat
        w = np.linspace(0.05, 6, 30)
        np.testing.assert_allclose(cond.tilted.logpdf(w), fam.mixing.logpdf(w), atol=1e-12)

    @pytest.mark.parametrize("case", [PAIRS[2], PAIRS[4], PAIRS[9], PAIRS[13], PAIRS[17]], ids=_ids)
    def test_tilted_law_and_conditional_normalize(self, case):
        fam = _family(case)
        cond = conditional(fam, PartitionIndex.from_block1(2, [0]), [-0.6])
        assert cond.tilted.moment(0) == pytest.approx(1.0, abs=1e-7)
        spec = QuadratureSpec(abs_tol=0.0, rel_tol=1e-10, max_subdivisions=400, domain="real_line",
                              initial_intervals=8)
        total, _ = integrate(lambda x: np.exp(cond.logpdf(x[:, None])), spec)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_higher_dimensional_conditional(self, rng):
        sig = random_pd(rng, 4)
        fam = make_family(MVMN, rng.normal(size=4), sig, rng.normal(size=4), GIG(1.5, 0.8, -0.3))
        idx = PartitionIndex.from_block1(4, [3, 1])
        y = rng.normal(size=4)
        cond = conditional(fam, idx, y[[0, 2]])
        marg = marginal(fam, PartitionIndex.from_block1(4, [0, 2]))
        assert logpdf(fam, y) == pytest.approx(cond.logpdf(y[[3, 1]]) + logpdf(marg, y[[0, 2]]), abs=1e-8)
