"""Inverse spectral variables for Jacobi matrices.

A Jacobi matrix is determined by its (simple, ordered) eigenvalues together
with the positive first components of its unit eigenvectors, the norming
constants.  This module provides the forward map, the reconstruction by
orthogonalizing the Krylov sequence of the diagonalized operator, and the
closed-form evolution of the norming constants under any flow in the family:
normalize exp(t f(Lambda)) v.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, DegenerateSpectrumError, ReconstructionError
from .factorcore import require_simple_spectrum, symmetric_eigen
from .flowfunc import FlowFunction
from .flows import SymTridiagonal

__all__ = ["SpectralData", "norming_constants", "reconstruct", "moser_evolve"]

_GAP_TOL = 1e-8
_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Strictly increasing eigenvalues paired with positive unit-norm norming constants."""

    lambdas: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "v", v)
        if lam.shape != v.shape or lam.ndim != 1:
            raise ValueError("lambdas and v must be 1-d of equal length")
        if len(lam) >= 2 and np.min(np.diff(lam)) < _GAP_TOL:
            raise DegenerateSpectrumError(
                f"eigenvalues must increase with gaps >= {_GAP_TOL:.1e}"
            )
        if np.any(v <= 0.0):
            raise DegeneracyError("norming constants must be strictly positive")
        if abs(float(v @ v) - 1.0) > _NORM_TOL:
            raise ValueError("norming constants must have unit Euclidean norm")

    @property
    def n(self) -> int:
        return len(self.lambdas)

    def to_json(self) -> str:
        return json.dumps(
            {"lambdas": list(map(float, self.lambdas)), "v": list(map(float, self.v))}
        )

    @classmethod
    def from_json(cls, text: str) -> "SpectralData":
        doc = json.loads(text)
        return cls(np.asarray(doc["lambdas"]), np.asarray(doc["v"]))


def norming_constants(j: SymTridiagonal) -> SpectralData:
    """Eigenvalues and first eigenvector components of a Jacobi matrix.

    The first component of each eigenvector of an unreduced Jacobi matrix is
    nonzero, so the positive normalization is well defined; the components
    form a unit vector because they are a row of an orthogonal matrix.
    """
    if not j.is_jacobi:
        raise ValueError("norming constants require a Jacobi matrix (b_k > 0)")
    values, vectors = symmetric_eigen(j.to_dense())
    require_simple_spectrum(values, _GAP_TOL)
    first = vectors[0, :].copy()
    if np.any(np.abs(first) < _NORM_TOL):
        raise DegeneracyError(
            "an eigenvector first component vanished numerically"
        )
    v = np.abs(first)
    return SpectralData(values, v / np.linalg.norm(v))


def reconstruct(sd: SpectralData) -> SymTridiagonal:
    """Rebuild the Jacobi matrix from its spectral data.

    Orthonormalizes the Krylov sequence v, Lambda v, Lambda^2 v, ... of the
    diagonal operator (three-term recurrence with a full re-orthogonalization
    pass for stability); the recurrence coefficients are exactly the entries
    of J = Q^T Lambda Q.
    """
    lam = sd.lambdas
    n = sd.n
    a = np.empty(n)
    b = np.empty(max(n - 1, 0))
    basis = np.zeros((n, n))
    q = sd.v / np.linalg.norm(sd.v)
    basis[0] = q
    for k in range(n):
        w = lam * q
        a[k] = q @ w
        w = w - a[k] * q
        if k > 0:
            w = w - b[k - 1] * basis[k - 1]
        # re-orthogonalize twice against everything built so far
        for _ in range(2):
            w = w - basis[: k + 1].T @ (basis[: k + 1] @ w)
        if k == n - 1:
            break
        norm = np.linalg.norm(w)
        if norm < _NORM_TOL:
            raise ReconstructionError(
                f"Krylov breakdown at step {k + 1}: residual norm {norm:.3e}"
            )
        b[k] = norm
        q = w / norm
        basis[k + 1] = q
    return SymTridiagonal(a, b)


def moser_evolve(sd: SpectralData, f: FlowFunction, t: float) -> SpectralData:
    """Closed-form flow on spectral data: v(t) = normalize(exp(t f(Lambda)) v).

    The eigenvalues stay put.  The largest exponent is factored out before
    exponentiating, so large t never overflows.
    """
    if t == 0.0:
        return SpectralData(sd.lambdas.copy(), sd.v.copy())
    w = t * np.asarray(f(sd.lambdas), dtype=float)
    v = sd.v * np.exp(w - w.max())
    return SpectralData(sd.lambdas.copy(), v / np.linalg.norm(v))
