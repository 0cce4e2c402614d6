import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mixnorm.exceptions import DimensionMismatch, NotPositiveDefinite, NotSymmetric, RankDeficient
from mixnorm.linalg import (
    AffineMap,
    PartitionIndex,
    cholesky,
    mvn_logpdf,
    partition,
    quad_form,
)

from .conftest import random_pd


def test_cholesky_logdet_and_solve(rng):
    m = random_pd(rng, 4)
    f = cholesky(m)
    assert f.logdet == pytest.approx(np.linalg.slogdet(m)[1], rel=1e-13)
    x = rng.normal(size=4)
    np.testing.assert_allclose(f.solve(x), np.linalg.solve(m, x), rtol=1e-11)
    np.testing.assert_allclose(f.inverse(), np.linalg.inv(m), rtol=1e-10, atol=1e-12)


def test_cholesky_rejects_bad_input():
    with pytest.raises(NotSymmetric):
        cholesky([[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(NotPositiveDefinite):
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveDefinite):
        cholesky([[1.0, 1.0], [1.0, 1.0]])


@settings(max_examples=40, deadline=None)
@given(p=st.integers(1, 5), seed=st.integers(0, 10_000))
def test_quad_form_matches_dense_solve(p, seed):
    rng = np.random.default_rng(seed)
    m = random_pd(rng, p, cond=100.0)
    x = rng.normal(size=(6, p))
    expect = np.einsum("ij,ij->i", x, np.linalg.solve(m, x.T).T)
    np.testing.assert_allclose(quad_form(cholesky(m), x), expect, rtol=1e-9)


def test_mvn_logpdf_matches_scipy(rng):
    m = random_pd(rng, 3)
    mu = rng.normal(size=3)
    y = rng.normal(size=(10, 3))
    np.testing.assert_allclose(mvn_logpdf(y, mu, cholesky(m)),
                               stats.multivariate_normal(mu, m).logpdf(y), rtol=1e-12)


def test_affine_map_rank_checks():
    with pytest.raises(RankDeficient):
        AffineMap(np.array([[1.0, 2.0], [2.0, 4.0]]), np.zeros(2))
    with pytest.raises(DimensionMismatch):
        AffineMap(np.eye(2), np.zeros(3))
    sel = AffineMap.selection(3, [2, 0])
    np.testing.assert_array_equal(sel(np.array([1.0, 2.0, 3.0])), [3.0, 1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.integers(2, 5))
def test_schur_complement_is_inverse_block(seed, p):
    rng = np.random.default_rng(seed)
    m = random_pd(rng, p)
    k = int(rng.integers(1, p))
    idx = PartitionIndex.from_block1(p, list(rng.permutation(p)[:k]))
    blocks = partition(cholesky(m), idx)
    b1 = list(idx.block1)
    inv_block = np.linalg.inv(m)[np.ix_(b1, b1)]
    np.testing.assert_allclose(np.linalg.inv(blocks.schur.entries), inv_block, rtol=1e-8, atol=1e-10)


def test_partition_index_validation():
    with pytest.raises(DimensionMismatch):
        PartitionIndex.from_block1(3, [0, 0])
    with pytest.raises(DimensionMismatch):
        PartitionIndex.from_block1(3, [3])
    with pytest.raises(DimensionMismatch):
        PartitionIndex.from_block1(2, [0, 1]).check(2)
    PartitionIndex.from_block1(2, [0, 1]).check(2, allow_full=True)
