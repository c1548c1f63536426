"""Bidiagonal coordinate charts on the isospectral tridiagonal manifold.

For a fixed simple spectrum and a permutation pi, a tridiagonal matrix T in
the chart domain has a unique spectral decomposition T = Q^T Lambda_pi Q
whose eigenvector matrix Q (rows ordered by pi, signs fixed so every leading
minor of Q is positive) admits an LU positive factorization Q = L U.  Then
B = L^{-1} Lambda_pi L is lower bidiagonal with diagonal Lambda_pi, and its
subdiagonal supplies the n-1 chart coordinates.  Unlike norming constants,
these charts extend across matrices with vanishing off-diagonal entries.

Permutations are 0-based throughout (entry i names the master eigenvalue
index placed at position i).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ChartDomainError, ConsistencyError
from .factorcore import (
    lu_positive_factor,
    qr_positive,
    require_simple_spectrum,
    symmetric_eigen,
)
from .flowfunc import FlowFunction
from .flows import SymTridiagonal

__all__ = [
    "BidiagonalChart",
    "to_chart",
    "from_chart",
    "chart_flow",
    "chart_transition",
    "momentum_map",
]

_GAP_TOL = 1e-8
_MINOR_TOL = 1e-10
_PATTERN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BidiagonalChart:
    """A chart point: permutation pi, the fixed ascending spectrum, n-1 betas."""

    pi: tuple
    lambdas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        pi = tuple(int(p) for p in self.pi)
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        betas = np.asarray(self.betas, dtype=float)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "betas", betas)
        n = len(lam)
        if sorted(pi) != list(range(n)):
            raise ValueError(f"pi must be a permutation of 0..{n - 1}")
        if len(betas) != n - 1:
            raise ValueError("need n-1 chart coordinates")
        if n >= 2 and np.min(np.diff(lam)) < _GAP_TOL:
            raise ValueError("master spectrum must increase with decent gaps")
        if not np.all(np.isfinite(betas)):
            raise ValueError("chart coordinates must be finite")

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def lambdas_permuted(self) -> np.ndarray:
        return self.lambdas[list(self.pi)]

    def to_json(self) -> str:
        return json.dumps(
            {
                "pi": list(self.pi),
                "lambdas": list(map(float, self.lambdas)),
                "betas": list(map(float, self.betas)),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "BidiagonalChart":
        doc = json.loads(text)
        return cls(tuple(doc["pi"]), np.asarray(doc["lambdas"]), np.asarray(doc["betas"]))


def _ordered_sign_fixed_eigenvectors(t_mat: SymTridiagonal, pi) -> tuple[np.ndarray, np.ndarray]:
    """Rows of Q are the eigenvectors in pi order, signs fixed minor by minor.

    Row k's sign is chosen greedily so the k-th leading minor of Q comes out
    positive (each minor is linear in its last row); a minor within
    _MINOR_TOL of zero means T is outside this chart's domain.
    """
    values, vectors = symmetric_eigen(t_mat.to_dense())
    require_simple_spectrum(values, _GAP_TOL)
    pi = list(pi)
    q = vectors[:, pi].T.copy()
    for k in range(1, len(pi) + 1):
        minor = float(np.linalg.det(q[:k, :k]))
        if abs(minor) < _MINOR_TOL:
            raise ChartDomainError(k)
        if minor < 0.0:
            q[k - 1, :] = -q[k - 1, :]
    return q, values


def to_chart(t_mat: SymTridiagonal, pi) -> BidiagonalChart:
    """Chart coordinates of a tridiagonal matrix with simple spectrum.

    Raises ChartDomainError (naming the minor) when the sign-adjusted
    eigenvector matrix has no LU positive factorization.
    """
    q, values = _ordered_sign_fixed_eigenvectors(t_mat, pi)
    pi = tuple(int(p) for p in pi)
    lam_pi = values[list(pi)]
    low, _up = lu_positive_factor(q)
    b_mat = scipy.linalg.solve_triangular(low, lam_pi[:, None] * low, lower=True)
    scale = max(1.0, float(np.abs(lam_pi).max()))
    pattern = np.abs(b_mat - np.diag(lam_pi) - np.diag(np.diag(b_mat, -1), -1))
    if pattern.max() > _PATTERN_TOL * scale:
        raise ConsistencyError(
            f"chart matrix is not lower bidiagonal (residual {pattern.max():.3e})"
        )
    return BidiagonalChart(pi, values, np.diag(b_mat, -1).copy())


def from_chart(c: BidiagonalChart) -> SymTridiagonal:
    """Rebuild the tridiagonal matrix from chart coordinates.

    Solves B = L^{-1} Lambda_pi L for the unit lower triangular L column by
    column (the eigenvalue gaps make the forward substitution well posed),
    takes the orthogonal factor of L, and conjugates Lambda_pi back.
    """
    n = c.n
    lam_pi = c.lambdas_permuted
    low = np.eye(n)
    for j in range(n - 2, -1, -1):
        for i in range(j + 1, n):
            low[i, j] = c.betas[j] * low[i, j + 1] / (lam_pi[i] - lam_pi[j])
    q, _r = qr_positive(low)
    t = q.T @ (lam_pi[:, None] * q)
    t = 0.5 * (t + t.T)
    return SymTridiagonal.from_dense(t, tol=_PATTERN_TOL)


def chart_flow(c: BidiagonalChart, f: FlowFunction, t: float) -> BidiagonalChart:
    """The flow in chart coordinates: each beta scales by one exponential.

    beta_i(t) = exp(t (f(lam_{pi(i+1)}) - f(lam_{pi(i)}))) beta_i(0); the log
    kind is evaluated signlessly (ln|x|), which is the chart reading of the
    QR-interpolating flow for spectra of either sign.
    """
    lam_pi = c.lambdas_permuted
    w = np.asarray(f(lam_pi, signless=True), dtype=float)
    factors = np.exp(t * (w[1:] - w[:-1]))
    return BidiagonalChart(c.pi, c.lambdas.copy(), c.betas * factors)


def chart_transition(c: BidiagonalChart, pi_new) -> BidiagonalChart:
    """Express the same matrix in another chart (inverse map then forward map)."""
    return to_chart(from_chart(c), pi_new)


def momentum_map(t_mat: SymTridiagonal) -> np.ndarray:
    """diag(Q Lambda Q^T) for the ascending eigendecomposition T = Q^T Lambda Q.

    The image lies in the permutohedron of the spectrum: the output is
    majorized by the eigenvalues and sums to the trace.
    """
    values, vectors = symmetric_eigen(t_mat.to_dense())
    require_simple_spectrum(values, _GAP_TOL)
    return (vectors**2).T @ values
