"""Lax-pair vector fields and their solutions.

The central object is the isospectral flow T' = [T, skew(f(T))] for a scalar
flow function f.  Two independent solvers are provided: adaptive numerical
integration of the matrix ODE, and the exact solution by factorization
(conjugate the initial condition by the orthogonal factor of exp(t f(T0))).
Around them: the change of variables between the particle chain and Jacobi
matrices, and the conserved / monotone quantities of the flow.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field as _field

import numpy as np
import scipy.linalg

from . import rk
from .errors import ConsistencyError, SingularPencilError
from .factorcore import (
    apply_spectral,
    check_square,
    check_symmetric,
    qr_positive,
    symmetric_eigen,
)
from .flowfunc import FlowFunction

__all__ = [
    "SymTridiagonal",
    "PhaseState",
    "Trajectory",
    "AsymptoticsReport",
    "FlowFunction",
    "flow_matrix_value",
    "lax_field",
    "integrate",
    "symes_solve",
    "flaschka",
    "inverse_flaschka",
    "physical_hamiltonian",
    "hamiltonian_field",
    "trace_invariants",
    "chop_invariants",
    "morse_function",
    "partial_traces",
    "asymptotic_diagnosis",
    "trajectory_csv_text",
    "trajectory_json_text",
]


@dataclass(frozen=True, eq=False)
class SymTridiagonal:
    """Symmetric tridiagonal matrix stored as diagonal a and off-diagonal b.

    Entry (k, k+1) = (k+1, k) = b[k].  The matrix is a Jacobi matrix when
    every b[k] is strictly positive.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float)) if np.size(self.b) else np.zeros(0)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.ndim != 1 or b.ndim != 1 or len(b) != max(len(a) - 1, 0):
            raise ValueError("need n diagonal entries and n-1 off-diagonal entries")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("tridiagonal entries must be finite")

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def is_jacobi(self) -> bool:
        return bool(np.all(self.b > 0.0))

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.a)
        if len(self.b):
            m += np.diag(self.b, 1) + np.diag(self.b, -1)
        return m

    @classmethod
    def from_dense(cls, m, tol: float = 1e-9) -> "SymTridiagonal":
        """Extract (a, b), requiring the off-tridiagonal residue to be below tol."""
        a = check_symmetric(m, tol=max(tol, 1e-10))
        n = a.shape[0]
        band = np.diag(np.diag(a))
        if n > 1:
            sup = 0.5 * (np.diag(a, 1) + np.diag(a, -1))
            band += np.diag(sup, 1) + np.diag(sup, -1)
        scale = max(1.0, float(np.abs(a).max()))
        resid = float(np.abs(a - band).max())
        if resid > tol * scale:
            raise ValueError(
                f"matrix is not tridiagonal: off-band residue {resid:.3e}"
            )
        return cls(np.diag(a), np.diag(band, 1) if n > 1 else np.zeros(0))


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Positions and velocities of the particle chain."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("positions and velocities must be 1-d and equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("phase state entries must be finite")

    @property
    def n(self) -> int:
        return len(self.x)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution of a matrix flow: strictly increasing times, states, stats."""

    times: np.ndarray
    states: np.ndarray
    meta: rk.IntegratorStats = _field(default_factory=rk.IntegratorStats)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)
        if len(t) != len(s):
            raise ValueError("one state per sample time required")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def n(self) -> int:
        return self.states.shape[-1]


def flow_matrix_value(t_mat: np.ndarray, f: FlowFunction) -> np.ndarray:
    """f(T) for a symmetric T.

    Identity and polynomials are evaluated directly (exactly the spectral
    result, without the eigendecomposition); log kinds go through the
    eigenbasis and inherit its domain checks.
    """
    if f.kind == "identity":
        return np.array(t_mat, dtype=float)
    if f.kind == "poly":
        t = check_square(t_mat)
        out = np.eye(t.shape[0]) * f.coeffs[-1]
        for c in f.coeffs[-2::-1]:
            out = out @ t
            out[np.diag_indices_from(out)] += c
        return out
    return apply_spectral(t_mat, f)


def lax_field(t_mat, f: FlowFunction) -> np.ndarray:
    """The commutator field [T, skew(f(T))] at a symmetric matrix T.

    The result is symmetric, and tridiagonal whenever the input is (the flow
    is tangent to the tridiagonal family); the zero pattern is checked.
    """
    t = check_symmetric(t_mat)
    value = flow_matrix_value(t, f)
    low = np.tril(value, -1)
    a = low - low.T
    out = t @ a - a @ t
    out = 0.5 * (out + out.T)
    if _is_tridiagonal(t):
        scale = max(1.0, float(np.abs(out).max()))
        resid = _off_band_max(out)
        if resid > 1e-9 * scale:
            raise ConsistencyError(
                f"field at a tridiagonal point is not tridiagonal ({resid:.3e})"
            )
    return out


def _is_tridiagonal(m, tol=1e-12) -> bool:
    scale = max(1.0, float(np.abs(m).max()))
    return _off_band_max(m) <= tol * scale


def _off_band_max(m) -> float:
    n = m.shape[0]
    if n < 3:
        return 0.0
    mask = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) > 1
    return float(np.abs(m[mask]).max())


def _sample_grid(t_end: float, samples) -> np.ndarray:
    if np.isscalar(samples):
        count = max(2, int(samples))
        return np.linspace(0.0, t_end, count)
    grid = np.asarray(samples, dtype=float)
    if grid[0] != 0.0 or grid[-1] != t_end:
        raise ValueError("sample grid must run from 0 to t_end")
    return grid


def integrate(
    s0,
    f: FlowFunction,
    t_end: float,
    tol: float = 1e-10,
    samples=17,
    max_steps: int = 2_000_000,
) -> Trajectory:
    """Numerically integrate T' = [T, skew(f(T))] from a symmetric start.

    Adaptive embedded Runge-Kutta with per-step local error below ``tol``;
    the trajectory stores the states at the requested sample grid (default:
    uniform with ``samples`` points).  ``t_end`` may be negative.  The
    returned times are always increasing; for backward runs the initial
    condition therefore sits at the last index.
    """
    s = check_symmetric(s0)
    flow_matrix_value(s, f)  # fail fast if f is undefined on the spectrum
    if t_end == 0.0:
        return Trajectory(np.zeros(1), s[None, :, :].copy())
    grid = _sample_grid(float(t_end), samples)

    def field(y):
        sym = 0.5 * (y + y.T)
        value = flow_matrix_value(sym, f)
        low = np.tril(value, -1)
        a = low - low.T
        return sym @ a - a @ sym

    def post(y):
        return 0.5 * (y + y.T)

    states, stats = rk.integrate_adaptive(
        field, s, grid, tol=tol, max_steps=max_steps, post_step=post
    )
    states = np.array(states)
    if t_end < 0:
        return Trajectory(grid[::-1].copy(), states[::-1].copy(), stats)
    return Trajectory(grid, states, stats)


def symes_solve(
    s0,
    f: FlowFunction,
    t: float,
    max_exp_span: float = 30.0,
    reorth_tol: float = 1e-10,
) -> np.ndarray:
    """Exact flow solution by factorization.

    Writes exp(t f(S0)) = Q R with positive-diagonal R and returns
    Q^T S0 Q.  Large t Q R factorizations degrade once the spread of
    t f(spectrum) is large, so the time interval is split into checkpoints
    with spread at most ``max_exp_span`` each, chained by the semigroup
    property; the largest exponent is factored out of each checkpoint so
    the exponential never overflows.  Q is re-orthogonalized whenever
    ||Q^T Q - I|| exceeds ``reorth_tol``.
    """
    s = check_symmetric(s0)
    if t == 0.0:
        return s.copy()
    values, _ = symmetric_eigen(s)
    w = f(values)
    span = abs(t) * (float(w.max()) - float(w.min()))
    chunks = max(1, int(np.ceil(span / max_exp_span)))
    dt = t / chunks
    for _ in range(chunks):
        values, vectors = symmetric_eigen(s)
        w = dt * f(values)
        g = np.exp(w - w.max())
        expm = (vectors * g) @ vectors.T
        q, _r = qr_positive(0.5 * (expm + expm.T))
        if np.abs(q.T @ q - np.eye(len(q))).max() > reorth_tol:
            q, _ = qr_positive(q)
        s = q.T @ s @ q
        s = 0.5 * (s + s.T)
    return s


def flaschka(p: PhaseState) -> SymTridiagonal:
    """Change of variables from the particle chain to a Jacobi matrix.

    a_k = -y_k / 2 and b_k = exp((x_k - x_{k+1}) / 2) / 2; the off-diagonal
    is positive by construction.
    """
    half_gaps = 0.5 * (p.x[:-1] - p.x[1:])
    if np.any(half_gaps > 700.0):
        raise OverflowError("position gap too large: exp overflow in b_k")
    return SymTridiagonal(-0.5 * p.y, 0.5 * np.exp(half_gaps))


def inverse_flaschka(j: SymTridiagonal, center: float = 0.0) -> PhaseState:
    """Invert the change of variables; the translation gauge sets mean(x) = center."""
    if not j.is_jacobi:
        raise ValueError("inverse transform needs positive off-diagonal entries")
    y = -2.0 * j.a
    gaps = 2.0 * np.log(2.0 * j.b)  # x_k - x_{k+1}
    x = np.concatenate(([0.0], -np.cumsum(gaps)))
    x += center - x.mean()
    return PhaseState(x, y)


def physical_hamiltonian(p: PhaseState) -> float:
    """Total energy of the chain: kinetic plus exponential neighbor potential."""
    return float(0.5 * np.sum(p.y**2) + np.sum(np.exp(p.x[:-1] - p.x[1:])))


def hamiltonian_field(p: PhaseState) -> PhaseState:
    """Hamilton's equations for the chain (free ends)."""
    force = np.exp(p.x[:-1] - p.x[1:])
    ydot = np.zeros_like(p.y)
    ydot[:-1] -= force
    ydot[1:] += force
    return PhaseState(p.y.copy(), ydot)


def trace_invariants(s, k_max: int) -> np.ndarray:
    """Power traces tr(s^k), k = 1..k_max (each one a conserved quantity)."""
    a = check_square(s)
    if not 1 <= k_max <= a.shape[0]:
        raise ValueError("k_max must lie in 1..n")
    out = np.empty(k_max)
    power = a.copy()
    out[0] = np.trace(power)
    for k in range(1, k_max):
        power = power @ a
        out[k] = np.trace(power)
    return out


def chop_invariants(s, k: int) -> np.ndarray:
    """Roots of the k-chopped characteristic pencil, sorted by real part.

    Chopping removes the first k rows and last k columns of S - lambda I;
    the n - 2k roots of the resulting determinant are conserved by the dense
    symmetric flow.  They are computed as the finite eigenvalues of the
    pencil (chop(S), chop(I)) and may come in complex conjugate pairs.
    """
    a = check_square(s)
    n = a.shape[0]
    if not 1 <= k <= (n - 1) // 2:
        raise ValueError("chop order k must satisfy 1 <= k <= (n-1)/2")
    rows = slice(k, n)
    cols = slice(0, n - k)
    top = a[rows, cols]
    ident = np.eye(n)[rows, cols]

    scale = max(1.0, float(np.abs(a).max()))
    probe = scale * np.array([0.317, -0.911, 1.733])
    dets = [np.linalg.det(top - lam * ident) for lam in probe]
    if max(abs(d) for d in dets) < 1e-12 * scale ** (n - k):
        raise SingularPencilError("chopped pencil is numerically singular")

    w = scipy.linalg.eig(top, ident, right=False)
    finite = w[np.isfinite(w)]
    if len(finite) != n - 2 * k:
        raise SingularPencilError(
            f"expected {n - 2 * k} finite roots, found {len(finite)}"
        )
    order = np.lexsort((finite.imag, finite.real))
    return finite[order]


def morse_function(s) -> float:
    """Weighted diagonal sum with weights n, n-1, ..., 1.

    Equals the sum of all leading partial traces; strictly increasing along
    non-equilibrium Toda orbits and maximal at the sorted-decreasing
    diagonal.
    """
    a = check_square(s)
    n = a.shape[0]
    return float(np.arange(n, 0, -1) @ np.diag(a))


def partial_traces(s) -> np.ndarray:
    """Leading partial traces sum_{j<=k} s_jj, k = 1..n."""
    return np.cumsum(np.diag(check_square(s)))


@dataclass(frozen=True)
class AsymptoticsReport:
    """Diagnosis of convergence toward a sorted diagonal matrix."""

    time: float
    max_offdiagonal: float
    diagonal: np.ndarray
    strictly_decreasing: bool
    strictly_increasing: bool
    converged: bool


def asymptotic_diagnosis(traj: Trajectory, tol: float = 1e-6) -> AsymptoticsReport:
    """Inspect the trajectory endpoint farthest from t = 0.

    Reports the largest off-diagonal magnitude, the diagonal, and whether it
    is sorted strictly decreasing / increasing within ``tol`` (the expected
    limits as t -> +inf / -inf for Jacobi initial conditions).
    """
    idx = int(np.argmax(np.abs(traj.times)))
    state = traj.states[idx]
    diag = np.diag(state).copy()
    off = float(np.abs(state - np.diag(diag)).max())
    diffs = np.diff(diag)
    return AsymptoticsReport(
        time=float(traj.times[idx]),
        max_offdiagonal=off,
        diagonal=diag,
        strictly_decreasing=bool(np.all(diffs < tol)),
        strictly_increasing=bool(np.all(diffs > -tol)),
        converged=off <= tol,
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_csv_text(traj: Trajectory, timestamp: bool = True) -> str:
    """CSV export: header ``t, m_1_1, ..., m_n_n`` then one row per sample."""
    n = traj.n
    lines = []
    if timestamp:
        lines.append(f"# generated: {_dt.datetime.now().isoformat()}")
    header = ["t"] + [f"m_{i + 1}_{j + 1}" for i in range(n) for j in range(n)]
    lines.append(", ".join(header))
    for t, state in zip(traj.times, traj.states):
        row = [_fmt(t)] + [_fmt(v) for v in state.ravel()]
        lines.append(", ".join(row))
    return "\n".join(lines) + "\n"


def trajectory_json_text(traj: Trajectory, timestamp: bool = True) -> str:
    """JSON export carrying the integrator statistics."""
    doc = {
        "n": traj.n,
        "times": [float(_fmt(t)) for t in traj.times],
        "states": [[float(_fmt(v)) for v in s.ravel()] for s in traj.states],
        "meta": {
            "steps": traj.meta.steps,
            "rejected": traj.meta.rejected,
            "max_error_estimate": float(traj.meta.max_error_estimate),
        },
    }
    if timestamp:
        doc["generated"] = _dt.datetime.now().isoformat()
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
