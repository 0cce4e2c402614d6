"""Dense symmetric positive-definite linear algebra.

Everything here works on plain numpy arrays; :class:`PDMatrix` caches the
lower Cholesky factor and log-determinant so that densities, solves and
quadratic forms never refactorize.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import qr, solve_triangular

from .exceptions import (
    DimensionMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
)

SYMMETRY_RTOL = 1e-12
PIVOT_RTOL = 1e-12
RANK_RTOL = 1e-10
LOG_2PI = float(np.log(2.0 * np.pi))


def as_vector(x, name="vector") -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {v.shape}")
    if v.size < 1:
        raise DimensionMismatch(f"{name} must have at least one entry")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def as_matrix(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class PDMatrix:
    """Symmetric positive-definite matrix with its Cholesky factor.

    Attributes
    ----------
    entries : ndarray, shape (p, p)
        The symmetrized matrix.
    chol : ndarray, shape (p, p)
        Lower-triangular ``L`` with ``entries = L @ L.T``.
    logdet : float
        ``2 * sum(log(diag(L)))``.
    """

    entries: np.ndarray
    chol: np.ndarray
    logdet: float

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def whiten(self, x) -> np.ndarray:
        """Return ``L^{-1} x`` for a vector or for each row of an (n, p) array."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"expected trailing dimension {self.dim}, got {x.shape[-1]}"
            )
        if x.ndim == 1:
            return solve_triangular(self.chol, x, lower=True, check_finite=False)
        return solve_triangular(self.chol, x.T, lower=True, check_finite=False).T

    def solve(self, x) -> np.ndarray:
        """Return ``entries^{-1} x`` (vector or row-wise)."""
        z = self.whiten(x)
        if z.ndim == 1:
            return solve_triangular(self.chol.T, z, lower=False, check_finite=False)
        return solve_triangular(self.chol.T, z.T, lower=False, check_finite=False).T

    def inverse(self) -> np.ndarray:
        inv = self.solve(np.eye(self.dim))
        return 0.5 * (inv + inv.T)

    def scaled(self, c: float) -> "PDMatrix":
        """Exact rescaling ``c * entries`` without refactorizing."""
        if not c > 0:
            raise NotPositiveDefinite(f"scale factor must be positive, got {c}")
        return PDMatrix(
            self.entries * c, self.chol * np.sqrt(c), self.logdet + self.dim * np.log(c)
        )

    def __repr__(self) -> str:
        return f"PDMatrix({self.entries.tolist()!r})"


def cholesky(m) -> PDMatrix:
    """Factorize a symmetric positive-definite matrix.

    The input is symmetrized as ``(m + m.T) / 2`` after the asymmetry check.
    Nearly singular matrices (smallest squared pivot below ``1e-12`` times
    the largest) are rejected rather than regularized.
    """
    a = as_matrix(m, "sigma")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny)
    if np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("matrix is not symmetric within relative tolerance 1e-12")
    a = 0.5 * (a + a.T)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    piv = np.diag(chol) ** 2
    if not np.all(piv > 0) or piv.min() < PIVOT_RTOL * piv.max():
        raise NotPositiveDefinite(
            "matrix is numerically singular (pivot ratio below 1e-12)"
        )
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return PDMatrix(a, chol, logdet)


def ensure_pd(m) -> PDMatrix:
    return m if isinstance(m, PDMatrix) else cholesky(m)


def quad_form(s: PDMatrix, x) -> np.ndarray | float:
    """Mahalanobis form ``x' s^{-1} x`` via one triangular solve.

    Accepts a single vector or an (n, p) array of rows.
    """
    z = s.whiten(x)
    out = np.sum(z * z, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def mvn_logpdf(y, mu, sigma: PDMatrix):
    """Log-density of N_p(mu, sigma) at a vector or each row of ``y``."""
    mu = as_vector(mu, "mu")
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != mu.size or sigma.dim != mu.size:
        raise DimensionMismatch("y, mu and sigma dimensions disagree")
    d = quad_form(sigma, y - mu)
    return -0.5 * mu.size * LOG_2PI - 0.5 * sigma.logdet - 0.5 * d


@dataclass(frozen=True, eq=False)
class AffineMap:
    """Full-row-rank affine map ``y -> A y + a``."""

    A: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        a = as_vector(self.a, "a") if np.size(self.a) else np.zeros(0)
        if a.shape != (A.shape[0],):
            raise DimensionMismatch(
                f"shift has length {a.size}, expected {A.shape[0]}"
            )
        q, p = A.shape
        if q > p:
            raise RankDeficient(f"A has more rows ({q}) than columns ({p})")
        if matrix_rank(A) < q:
            raise RankDeficient("A does not have full row rank")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "a", a)

    @property
    def shape(self):
        return self.A.shape

    @classmethod
    def selection(cls, p: int, idx: Sequence[int]) -> "AffineMap":
        A = np.zeros((len(idx), p))
        A[np.arange(len(idx)), list(idx)] = 1.0
        return cls(A, np.zeros(len(idx)))

    def __call__(self, y):
        return np.asarray(y, dtype=float) @ self.A.T + self.a


def matrix_rank(A: np.ndarray) -> int:
    """Rank from a column-pivoted QR of ``A.T`` with tolerance 1e-10 * ||A||_2."""
    A = np.asarray(A, dtype=float)
    norm = np.linalg.norm(A, 2)
    if norm == 0:
        return 0
    r = qr(A.T, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    return int(np.sum(diag > RANK_RTOL * norm))


@dataclass(frozen=True)
class PartitionIndex:
    """Zero-based split of ``range(p)`` into two nonempty blocks."""

    block1: tuple
    block2: tuple

    @classmethod
    def from_block1(cls, p: int, block1: Sequence[int]) -> "PartitionIndex":
        b1 = tuple(int(i) for i in block1)
        if len(set(b1)) != len(b1) or any(i < 0 or i >= p for i in b1):
            raise DimensionMismatch(f"invalid block indices {b1} for p = {p}")
        b2 = tuple(i for i in range(p) if i not in b1)
        return cls(b1, b2)

    @property
    def p(self) -> int:
        return len(self.block1) + len(self.block2)

    def check(self, p: int, allow_full: bool = False) -> None:
        joined = sorted(self.block1 + self.block2)
        if joined != list(range(p)):
            raise DimensionMismatch(f"partition {self} does not cover range({p})")
        if not self.block1 or (not self.block2 and not allow_full):
            raise DimensionMismatch("both partition blocks must be nonempty")


@dataclass(frozen=True, eq=False)
class Blocks:
    s11: PDMatrix
    s12: np.ndarray
    s22: PDMatrix
    regression: np.ndarray
    schur: PDMatrix


def partition(sigma: PDMatrix, idx: PartitionIndex) -> Blocks:
    """Split ``sigma`` into blocks plus regression ``S12 S22^{-1}`` and Schur complement."""
    idx.check(sigma.dim)
    b1, b2 = list(idx.block1), list(idx.block2)
    m = sigma.entries
    s11 = m[np.ix_(b1, b1)]
    s12 = m[np.ix_(b1, b2)]
    s22 = cholesky(m[np.ix_(b2, b2)])
    regression = s22.solve(s12)  # rows of S12 solved against S22
    schur = s11 - regression @ s12.T
    return Blocks(cholesky(s11), s12, s22, regression, cholesky(0.5 * (schur + schur.T)))
