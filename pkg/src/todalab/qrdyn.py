"""QR-family eigenvalue iterations and their flow-interpolation identities.

The basic step factors the (shifted) matrix as QR with positive-diagonal R
and recombines in reverse order; bidiagonal chart coordinates respond to a
step with shift s by the multipliers |(lam_{pi(i+1)} - s) / (lam_{pi(i)} - s)|.
Shift strategies, deflation bookkeeping, convergence-order measurement, and
the checks tying the iteration to the log-flow are collected here.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field as _field

import numpy as np

from .errors import (
    DeflationSignal,
    FactorizationError,
    NotEnoughDataError,
    SpectralDomainError,
)
from .factorcore import apply_spectral, check_symmetric, qr_positive
from .flowfunc import FlowFunction
from .flows import SymTridiagonal, integrate, symes_solve

__all__ = [
    "ShiftStrategy",
    "StepRecord",
    "DeflationEvent",
    "IterationTrace",
    "qr_step",
    "shifted_qr_step",
    "compute_shift",
    "qr_iterate",
    "interpolation_check",
    "power_qr_identity_check",
    "toda_exp_qr_check",
    "cholesky_step",
    "estimate_order",
    "trace_csv_text",
    "trace_json_text",
]

_SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class ShiftStrategy:
    """Shift selection rule: none, rayleigh, wilkinson, or a fixed value."""

    kind: str
    value: float = 0.0

    _KINDS = ("none", "rayleigh", "wilkinson", "fixed")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown shift strategy {self.kind!r}")
        if not np.isfinite(self.value):
            raise ValueError("fixed shift must be finite")

    @classmethod
    def none(cls) -> "ShiftStrategy":
        return cls("none")

    @classmethod
    def rayleigh(cls) -> "ShiftStrategy":
        return cls("rayleigh")

    @classmethod
    def wilkinson(cls) -> "ShiftStrategy":
        return cls("wilkinson")

    @classmethod
    def fixed(cls, s: float) -> "ShiftStrategy":
        return cls("fixed", float(s))

    @classmethod
    def parse(cls, text: str) -> "ShiftStrategy":
        head, _, tail = text.strip().lower().partition(":")
        if head in ("none", "rayleigh", "wilkinson"):
            return cls(head)
        if head == "fixed":
            return cls.fixed(float(tail))
        raise ValueError(f"unknown shift strategy {text!r}")


@dataclass(frozen=True, eq=False)
class StepRecord:
    """Snapshot after one shifted step: compressed matrix, shift, bottom entry."""

    diag: np.ndarray
    offdiag: np.ndarray
    shift: float
    b_bottom: float
    block: tuple


@dataclass(frozen=True)
class DeflationEvent:
    """A split: after ``step`` steps, off-diagonal ``position`` was declared zero.

    ``eigenvalue`` is the diagonal entry isolated by the split (nan when the
    split produces two blocks of size >= 2).
    """

    step: int
    position: int
    eigenvalue: float


@dataclass(eq=False)
class IterationTrace:
    steps: list = _field(default_factory=list)
    deflations: list = _field(default_factory=list)
    converged: bool = False
    fixed_point: bool = False

    def bottom_sequences(self) -> list[np.ndarray]:
        """Per-block runs of the bottom off-diagonal magnitude, in step order."""
        runs: list[np.ndarray] = []
        current: list[float] = []
        current_block = None
        for rec in self.steps:
            if rec.block != current_block and current:
                runs.append(np.array(current))
                current = []
            current_block = rec.block
            current.append(rec.b_bottom)
        if current:
            runs.append(np.array(current))
        return runs


def qr_step(s) -> np.ndarray:
    """One QR step on a symmetric matrix: factor S = QR, return RQ = Q^T S Q.

    R carries the positive-diagonal convention (for positive-determinant
    input this is the unique SO(n) factorization).  Singular input is
    rejected; use a shifted step there instead.
    """
    a = check_symmetric(s)
    q, r = qr_positive(a)
    scale = max(1.0, float(np.abs(a).max()))
    if np.min(np.diag(r)) <= 1e-13 * scale:
        raise FactorizationError("singular input to qr_step; use a shifted step")
    out = r @ q
    return 0.5 * (out + out.T)


def _pivot_signs(w: np.ndarray) -> np.ndarray:
    """Signs of the elimination pivots of w (no pivoting)."""
    n = w.shape[0]
    u = w.copy()
    signs = np.empty(n)
    scale = max(1.0, float(np.abs(w).max()))
    for k in range(n):
        piv = u[k, k]
        if abs(piv) < 1e-13 * scale:
            raise FactorizationError(
                "vanishing leading minor: the smooth sign pattern is undefined here"
            )
        signs[k] = 1.0 if piv > 0 else -1.0
        if k + 1 < n:
            u[k + 1 :, k:] -= np.outer(u[k + 1 :, k] / piv, u[k, k:])
    return signs


def shifted_qr_step(
    t_mat: SymTridiagonal,
    s: float,
    on_singular: str = "signal",
    signless: bool = False,
) -> SymTridiagonal:
    """One explicit shifted step: factor T - sI = QR (diag R > 0), return RQ + sI.

    Isospectral and tridiagonal-preserving.  When T - sI is numerically
    singular the shift is an eigenvalue: a DeflationSignal carrying s is
    raised, unless ``on_singular="proceed"`` forces the step through (after
    which the bottom off-diagonal collapses and the caller can deflate).

    ``signless=True`` selects the smooth variant of the iteration: the
    diagonal of R is given the sign pattern of the elimination pivots of
    T - sI instead of being forced positive, which removes the absolute
    values from the chart multipliers near convergence.
    """
    w = t_mat.to_dense()
    idx = np.diag_indices_from(w)
    w[idx] -= s
    q, r = qr_positive(w)
    if on_singular not in ("signal", "proceed"):
        raise ValueError("on_singular must be 'signal' or 'proceed'")
    if on_singular == "signal":
        scale = max(1.0, float(np.linalg.norm(w)))
        if np.min(np.diag(r)) <= _SINGULAR_TOL * scale:
            raise DeflationSignal(s)
    out = r @ q
    out[idx] += s
    out = 0.5 * (out + out.T)
    if signless:
        d = _pivot_signs(w)
        out = out * np.outer(d, d)
    return SymTridiagonal.from_dense(out, tol=1e-9)


def compute_shift(t_mat: SymTridiagonal, strategy: ShiftStrategy) -> float:
    """Shift value for the next step on ``t_mat`` (which must be at least 2x2).

    Rayleigh: the trailing diagonal entry.  Wilkinson: the eigenvalue of the
    trailing 2x2 block closer to it, ties broken toward the smaller one.
    """
    if t_mat.n < 2:
        raise ValueError("shift computation needs n >= 2")
    if strategy.kind == "none":
        return 0.0
    if strategy.kind == "fixed":
        return strategy.value
    corner = float(t_mat.a[-1])
    if strategy.kind == "rayleigh":
        return corner
    # wilkinson
    upper = float(t_mat.a[-2])
    off = float(t_mat.b[-1])
    delta = 0.5 * (upper - corner)
    sgn = 1.0 if delta >= 0 else -1.0
    return corner - sgn * off * off / (abs(delta) + np.hypot(delta, off))


def qr_iterate(
    t0: SymTridiagonal,
    strategy: ShiftStrategy,
    deflation_tol: float = 1e-12,
    max_steps: int | None = None,
):
    """Run shifted QR with deflation until the matrix splits into 1x1 blocks.

    An off-diagonal entry deflates when |b_k| < deflation_tol (|a_k| +
    |a_{k+1}|); the problem then splits and the blocks are processed bottom
    up.  Returns (sorted eigenvalues, IterationTrace); if the step budget is
    exhausted (or a fixed point of the iteration is detected, as happens for
    the Rayleigh strategy on the zero-diagonal 2x2 matrix) the trace is
    flagged non-converged and the eigenvalues are the current best guesses.
    """
    n = t0.n
    if max_steps is None:
        max_steps = 50 * n
    a = t0.a.copy()
    b = t0.b.copy()
    trace = IterationTrace()
    active: list[tuple[int, int]] = [(0, n)]
    step_count = 0
    out_of_budget = False

    while active:
        lo, hi = active.pop()
        if hi - lo <= 1:
            continue
        pos = None
        for k in range(hi - 2, lo - 1, -1):
            if abs(b[k]) < deflation_tol * (abs(a[k]) + abs(a[k + 1])):
                pos = k
                break
        if pos is not None:
            b[pos] = 0.0
            isolated = a[pos + 1] if pos + 2 == hi else np.nan
            trace.deflations.append(DeflationEvent(step_count, pos, float(isolated)))
            if hi - (pos + 1) >= 2:
                active.append((pos + 1, hi))
            if (pos + 1) - lo >= 2:
                active.append((lo, pos + 1))
            continue
        if step_count >= max_steps:
            active.append((lo, hi))
            out_of_budget = True
            break
        sub = SymTridiagonal(a[lo:hi], b[lo : hi - 1])
        shift = compute_shift(sub, strategy)
        try:
            nxt = shifted_qr_step(sub, shift)
        except DeflationSignal:
            nxt = shifted_qr_step(sub, shift, on_singular="proceed")
        scale = max(1.0, float(np.abs(sub.a).max()), float(np.abs(sub.b).max()))
        same = (
            float(np.abs(nxt.a - sub.a).max()) <= 1e-14 * scale
            and float(np.abs(nxt.b - sub.b).max()) <= 1e-14 * scale
        )
        a[lo:hi] = nxt.a
        b[lo : hi - 1] = nxt.b
        step_count += 1
        trace.steps.append(
            StepRecord(a.copy(), b.copy(), shift, float(abs(b[hi - 2])), (lo, hi))
        )
        if same:
            trace.fixed_point = True
            break
        active.append((lo, hi))

    trace.converged = not active and not out_of_budget and not trace.fixed_point
    return np.sort(a.copy()), trace


@dataclass(frozen=True)
class InterpolationReport:
    """Pairwise deviations between the integrated log-flow at time 1, the
    factorization solution, and one QR step."""

    integrate_vs_symes: float
    integrate_vs_qr: float
    symes_vs_qr: float

    @property
    def max_deviation(self) -> float:
        return max(self.integrate_vs_symes, self.integrate_vs_qr, self.symes_vs_qr)


def interpolation_check(s0, tol: float = 1e-10) -> InterpolationReport:
    """Check that the log-function flow interpolates the QR iteration at t=1."""
    a = check_symmetric(s0)
    if np.min(np.linalg.eigvalsh(a)) <= 0.0:
        raise SpectralDomainError("interpolation check needs positive definite input")
    log = FlowFunction.log()
    by_ode = integrate(a, log, 1.0, tol=tol, samples=2).states[-1]
    by_factor = symes_solve(a, log, 1.0)
    by_qr = qr_step(a)
    dev = lambda u, v: float(np.abs(u - v).max())
    return InterpolationReport(
        dev(by_ode, by_factor), dev(by_ode, by_qr), dev(by_factor, by_qr)
    )


@dataclass(frozen=True)
class PowerIdentityReport:
    deviation: float
    n_steps: int


def power_qr_identity_check(s0, n_steps: int) -> PowerIdentityReport:
    """n repeated QR steps against the one-shot QR factorization of S0^n."""
    a = check_symmetric(s0)
    if not 0 <= n_steps <= 6:
        raise ValueError("n_steps must lie in 0..6 to keep S0^n well conditioned")
    stepped = a.copy()
    for _ in range(n_steps):
        stepped = qr_step(stepped)
    q, _r = qr_positive(np.linalg.matrix_power(a, n_steps))
    direct = q.T @ a @ q
    return PowerIdentityReport(float(np.abs(stepped - direct).max()), n_steps)


@dataclass(frozen=True)
class TodaExpQRReport:
    deviation: float
    n_steps: int


def toda_exp_qr_check(j0: SymTridiagonal, n_steps: int) -> TodaExpQRReport:
    """exp of the Toda solution at integer times against the QR orbit of exp(J0)."""
    dense = j0.to_dense()
    identity = FlowFunction.identity()
    e_mat = apply_spectral(dense, np.exp)
    worst = 0.0
    for k in range(1, n_steps + 1):
        e_mat = qr_step(e_mat)
        j_k = symes_solve(dense, identity, float(k))
        worst = max(worst, float(np.abs(apply_spectral(j_k, np.exp) - e_mat).max()))
    return TodaExpQRReport(worst, n_steps)


def cholesky_step(m) -> np.ndarray:
    """One step of the triangular iteration: factor M = mL mU, return mU mL.

    Requires positive leading minors; repeated steps may leave that domain
    (blowups are possible for indefinite input), which surfaces as a
    LeadingMinorError from the factorization.
    """
    from .factorcore import cholesky_like_factor

    m_low, m_up = cholesky_like_factor(m)
    return m_up @ m_low


def estimate_order(b_seq, upper: float = 1e-2, lower: float = 1e-200) -> float:
    """Convergence order from consecutive bottom-entry magnitudes.

    Least-squares slope of ln b_{m+1} against ln b_m over the longest
    consecutive run of entries strictly inside (lower, upper); at least three
    qualifying points are required.  A cubically convergent sequence gives 3.
    """
    b = np.asarray(b_seq, dtype=float)
    if b.ndim != 1 or np.any(b <= 0.0):
        raise ValueError("need a 1-d sequence of positive magnitudes")
    qual = (b < upper) & (b > lower)
    best_lo, best_hi = 0, 0
    i = 0
    while i < len(b):
        if qual[i]:
            j = i
            while j + 1 < len(b) and qual[j + 1]:
                j += 1
            if (j + 1) - i > best_hi - best_lo:
                best_lo, best_hi = i, j + 1
            i = j + 1
        else:
            i += 1
    run = b[best_lo:best_hi]
    if len(run) < 3:
        raise NotEnoughDataError(
            f"need >= 3 consecutive magnitudes in ({lower:.0e}, {upper:.0e}), "
            f"found {len(run)}"
        )
    if np.any(np.diff(run) >= 0.0):
        raise NotEnoughDataError("qualifying run is not strictly decreasing")
    x = np.log(run[:-1])
    y = np.log(run[1:])
    x_c = x - x.mean()
    return float((x_c @ (y - y.mean())) / (x_c @ x_c))


def trace_csv_text(trace: IterationTrace, timestamp: bool = True) -> str:
    """CSV export: ``step, shift, b_bottom, deflated_at`` (one row per step).

    Deflations that fire after step k are listed in column ``deflated_at``
    of row k (semicolon-joined positions); ones that fire before any step
    appear on a leading row with empty shift and magnitude fields.
    """
    by_step: dict[int, list[int]] = {}
    for ev in trace.deflations:
        by_step.setdefault(ev.step, []).append(ev.position)
    lines = []
    if timestamp:
        lines.append(f"# generated: {_dt.datetime.now().isoformat()}")
    lines.append("step, shift, b_bottom, deflated_at")
    if 0 in by_step:
        lines.append("0, , , " + ";".join(str(p) for p in by_step[0]))
    for i, rec in enumerate(trace.steps, start=1):
        defl = ";".join(str(p) for p in by_step.get(i, []))
        lines.append(
            f"{i}, {format(rec.shift, '.17g')}, {format(rec.b_bottom, '.17g')}, {defl}"
        )
    return "\n".join(lines) + "\n"


def trace_json_text(
    trace: IterationTrace, snapshots: bool = False, timestamp: bool = True
) -> str:
    doc = {
        "converged": trace.converged,
        "fixed_point": trace.fixed_point,
        "n_steps": len(trace.steps),
        "deflations": [
            {
                "step": ev.step,
                "position": ev.position,
                "eigenvalue": None if np.isnan(ev.eigenvalue) else ev.eigenvalue,
            }
            for ev in trace.deflations
        ],
        "steps": [
            {
                "step": i + 1,
                "shift": rec.shift,
                "b_bottom": rec.b_bottom,
                "block": list(rec.block),
                **(
                    {
                        "diag": [float(v) for v in rec.diag],
                        "offdiag": [float(v) for v in rec.offdiag],
                    }
                    if snapshots
                    else {}
                ),
            }
            for i, rec in enumerate(trace.steps)
        ],
    }
    if timestamp:
        doc["generated"] = _dt.datetime.now().isoformat()
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=True) + "\n"
