"""Dense kernels for small real matrices.

Factorizations with the sign conventions the flow formulas rely on
(QR with positive-diagonal R, LU with unit lower / positive-diagonal upper,
the equal-diagonal triangular split), a symmetric eigensolver with a
deterministic eigenvector sign convention, spectral matrix functions, and
the skew/triangular splittings.

All functions are pure, work on plain float ndarrays, and target small
dimensions (n up to ~50).  LAPACK (via numpy) backs the QR factorization
and the eigensolver; the factorizations specific to positivity conventions
are implemented directly.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateSpectrumError,
    FactorizationError,
    LeadingMinorError,
)

__all__ = [
    "QRFactors",
    "LUFactors",
    "EigenDecomposition",
    "check_square",
    "check_symmetric",
    "qr_positive",
    "qr_factor",
    "lu_positive_factor",
    "cholesky_like_factor",
    "symmetric_eigen",
    "require_simple_spectrum",
    "apply_spectral",
    "matrix_function",
    "split_skew_upper",
    "split_strictlower_upper",
]


class QRFactors(NamedTuple):
    q: np.ndarray  # orthogonal
    r: np.ndarray  # upper triangular, nonnegative diagonal


class LUFactors(NamedTuple):
    l: np.ndarray  # lower triangular, unit diagonal
    u: np.ndarray  # upper triangular, positive diagonal


class EigenDecomposition(NamedTuple):
    values: np.ndarray  # ascending
    vectors: np.ndarray  # orthogonal; column i pairs with values[i]

    def min_gap(self) -> float:
        """Smallest gap between consecutive eigenvalues (inf for 1x1)."""
        if len(self.values) < 2:
            return np.inf
        return float(np.diff(self.values).min())


def check_square(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def check_symmetric(m, tol: float = 1e-10) -> np.ndarray:
    """Validate symmetry to ``tol`` (relative) and return a symmetrized copy."""
    a = check_square(m)
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > tol * scale:
        raise ValueError("matrix is not symmetric to tolerance")
    return 0.5 * (a + a.T)


def qr_positive(m) -> QRFactors:
    """QR factorization normalized so diag(r) >= 0, q orthogonal.

    Householder-based (LAPACK) with a final diagonal sign fix.  This is the
    convention under which the factorization of an invertible matrix is
    unique; no determinant restriction is placed on the input.
    """
    a = check_square(m)
    q, r = np.linalg.qr(a)
    d = np.sign(np.diag(r))
    d[d == 0.0] = 1.0
    return QRFactors(q * d, d[:, None] * r)


def qr_factor(m) -> QRFactors:
    """Unique QR factorization of an invertible matrix with positive determinant.

    Returns q in SO(n) and upper triangular r with strictly positive diagonal.
    Raises FactorizationError for singular or negative-determinant input.
    """
    a = check_square(m)
    sign, _ = np.linalg.slogdet(a)
    if sign <= 0.0:
        raise FactorizationError(
            "QR normalization requires an invertible input with positive determinant"
        )
    q, r = qr_positive(a)
    scale = max(1.0, float(np.abs(a).max()))
    if np.min(np.diag(r)) <= 1e-13 * scale:
        raise FactorizationError("input is numerically singular")
    return QRFactors(q, r)


def lu_positive_factor(m, pos_tol: float | None = None) -> LUFactors:
    """LU factorization without pivoting: l unit lower, u with positive diagonal.

    Exists iff every leading principal minor is strictly positive; the first
    failing minor (1-based order) is reported otherwise.  ``pos_tol`` is the
    pivot positivity threshold, default 1e-12 * ||m||_F.
    """
    a = check_square(m)
    n = a.shape[0]
    if pos_tol is None:
        pos_tol = 1e-12 * max(1.0, float(np.linalg.norm(a)))
    low = np.eye(n)
    up = a.copy()
    for k in range(n):
        piv = up[k, k]
        if piv <= pos_tol:
            raise LeadingMinorError(k + 1)
        if k + 1 < n:
            low[k + 1 :, k] = up[k + 1 :, k] / piv
            up[k + 1 :, k:] -= np.outer(low[k + 1 :, k], up[k, k:])
            up[k + 1 :, k] = 0.0
    return LUFactors(low, np.triu(up))


def cholesky_like_factor(m, pos_tol: float | None = None):
    """Factor m = mL @ mU with mL lower, mU upper, equal positive diagonals.

    Obtained from the LU positive factorization by moving the square root of
    each pivot onto both factors.  Same domain (and errors) as
    lu_positive_factor; for symmetric positive definite input this is the
    ordinary Cholesky pair (L, L^T).
    """
    low, up = lu_positive_factor(m, pos_tol=pos_tol)
    root = np.sqrt(np.diag(up))
    return low * root[None, :], up / root[:, None]


def symmetric_eigen(s, tol: float = 1e-10) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix with deterministic signs.

    Values ascending; each eigenvector column is flipped so that its first
    entry of magnitude above 1e-12 is positive.  Reconstruction
    q @ diag(values) @ q.T matches the input to LAPACK accuracy.
    """
    a = check_symmetric(s, tol=tol)
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed to converge: {exc}") from exc
    vectors = vectors.copy()
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        lead = nz[0] if len(nz) else int(np.argmax(np.abs(col)))
        if col[lead] < 0.0:
            vectors[:, j] = -col
    return EigenDecomposition(values, vectors)


def require_simple_spectrum(values, gap_tol: float = 1e-8) -> None:
    """Reject spectra with a gap below ``gap_tol``."""
    vals = np.asarray(values, dtype=float)
    if len(vals) >= 2:
        gap = float(np.diff(np.sort(vals)).min())
        if gap < gap_tol:
            raise DegenerateSpectrumError(
                f"minimal eigenvalue gap {gap:.3e} below {gap_tol:.1e}"
            )


def apply_spectral(s, fn: Callable, tol: float = 1e-10) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its eigenbasis."""
    values, vectors = symmetric_eigen(s, tol=tol)
    fvals = np.asarray(fn(values), dtype=float)
    out = (vectors * fvals) @ vectors.T
    return 0.5 * (out + out.T)


def matrix_function(s, f: Callable, tol: float = 1e-10) -> np.ndarray:
    """Spectral evaluation q @ f(diag) @ q.T of a flow function (or any callable)."""
    return apply_spectral(s, f, tol=tol)


def split_skew_upper(m):
    """Split m = skew + upper with skew sharing the strictly-lower part of m.

    The skew part is skew-symmetric, the other part upper triangular; the
    zero patterns are exact.
    """
    a = check_square(m)
    low = np.tril(a, -1)
    skew = low - low.T
    upper = np.triu(a + low.T)
    return skew, upper


def split_strictlower_upper(m):
    """Split m into its strictly lower and upper (diagonal included) parts."""
    a = check_square(m)
    return np.tril(a, -1), np.triu(a)
