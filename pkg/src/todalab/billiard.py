"""Billiard inside an ellipsoid, in two equivalent forms.

The geometric map follows the chord to the far boundary intersection and
reflects in the tangent plane.  The matrix-polynomial map encodes a state
(x, y) as the quadratic polynomial L(s) = y(x)y + s x^y - s^2 C^2, factors
it into linear matrix factors, intertwines them QR-style, and refactors;
coefficient matching pins the next state up to a root choice, which is
selected by forward motion along the chord and then asserted against the
geometric map.  Agreement of the two is the content of the factorization
form of the billiard.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConsistencyError, DegenerateTrajectoryError
from .factorcore import check_square

__all__ = [
    "Ellipsoid",
    "BilliardState",
    "MatrixPolynomial",
    "geometric_step",
    "mv_polynomial",
    "intertwined_polynomial",
    "mv_step",
    "orbit",
    "det_samples",
    "orbit_csv_text",
    "DET_SAMPLE_POINTS",
]

#: Fixed evaluation points for determinant invariants of the state polynomial.
DET_SAMPLE_POINTS = (-2.0, -1.0, 0.5, 1.5, 3.0)

_BOUNDARY_TOL = 1e-10
_UNIT_TOL = 1e-12
_FORWARD_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """The region {x : (x, C^-2 x) <= 1} for a symmetric positive definite C."""

    c: np.ndarray

    def __post_init__(self):
        c = check_square(self.c)
        c = 0.5 * (c + c.T)
        vals = np.linalg.eigvalsh(c)
        if vals.min() <= 1e-12 * max(1.0, vals.max()):
            raise ValueError("C must be symmetric positive definite")
        object.__setattr__(self, "c", c)
        inv = np.linalg.inv(c)
        object.__setattr__(self, "c2", c @ c)
        object.__setattr__(self, "inv_c", 0.5 * (inv + inv.T))
        object.__setattr__(self, "inv_c2", 0.5 * (inv @ inv + (inv @ inv).T))

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @classmethod
    def from_semiaxes(cls, axes) -> "Ellipsoid":
        return cls(np.diag(np.asarray(axes, dtype=float)))


@dataclass(frozen=True, eq=False)
class BilliardState:
    """Boundary point x and unit direction y (pointing into the ellipsoid)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("state entries must be finite")

    @property
    def n(self) -> int:
        return len(self.x)


def validate_state(e: Ellipsoid, st: BilliardState, boundary_tol: float = _BOUNDARY_TOL):
    """Check the state invariants: on the boundary, unit speed, moving inward."""
    resid = abs(float(st.x @ e.inv_c2 @ st.x) - 1.0)
    if resid > boundary_tol:
        raise ValueError(f"state is off the boundary by {resid:.3e}")
    if abs(float(np.linalg.norm(st.y)) - 1.0) > _UNIT_TOL:
        raise ValueError("direction must be a unit vector")
    if float(st.y @ e.inv_c2 @ st.x) >= 0.0:
        raise ValueError("direction must point inward")


def _project_to_boundary(e: Ellipsoid, x: np.ndarray) -> np.ndarray:
    """One Newton step for (x, C^-2 x) = 1 along the gradient direction C^-2 x."""
    grad = e.inv_c2 @ x
    g = float(x @ grad) - 1.0
    return x - (g / (2.0 * float(grad @ grad))) * grad


def geometric_step(e: Ellipsoid, st: BilliardState) -> BilliardState:
    """Follow the chord to the far intersection and reflect off the boundary."""
    w = e.inv_c2
    qa = float(st.y @ w @ st.y)
    qb = float(st.x @ w @ st.y)
    qc = float(st.x @ w @ st.x) - 1.0
    if qb >= -1e-12 * np.sqrt(qa):
        raise DegenerateTrajectoryError("chord is tangent or points outward")
    disc = qb * qb - qa * qc
    if disc <= 0.0:
        raise DegenerateTrajectoryError("degenerate chord: no far intersection")
    tau = (-qb + np.sqrt(disc)) / qa
    if tau <= _FORWARD_TOL:
        raise DegenerateTrajectoryError("chord length is numerically zero")
    x1 = _project_to_boundary(e, st.x + tau * st.y)
    normal = w @ x1
    normal = normal / np.linalg.norm(normal)
    y1 = st.y - 2.0 * float(st.y @ normal) * normal
    return BilliardState(x1, y1 / np.linalg.norm(y1))


class MatrixPolynomial(NamedTuple):
    """Quadratic matrix polynomial constant + s * linear + s^2 * quadratic."""

    constant: np.ndarray
    linear: np.ndarray
    quadratic: np.ndarray

    def __call__(self, s: float) -> np.ndarray:
        return self.constant + s * self.linear + s * s * self.quadratic


def mv_polynomial(e: Ellipsoid, st: BilliardState) -> MatrixPolynomial:
    """The state polynomial y(x)y + s x^y - s^2 C^2 (outer and wedge products)."""
    yy = np.outer(st.y, st.y)
    wedge = np.outer(st.x, st.y) - np.outer(st.y, st.x)
    return MatrixPolynomial(yy, wedge, -e.c2)


def intertwined_polynomial(e: Ellipsoid, st: BilliardState) -> MatrixPolynomial:
    """The polynomial with the two linear factors multiplied in reverse order.

    For xi = C^-1 x it expands to |y|^2 xi(x)xi + s (xi ^ C y) - s^2 C^2.
    """
    xi = e.inv_c @ st.x
    cy = e.c @ st.y
    const = float(st.y @ st.y) * np.outer(xi, xi)
    linear = np.outer(xi, cy) - np.outer(cy, xi)
    return MatrixPolynomial(const, linear, -e.c2)


def det_samples(e: Ellipsoid, st: BilliardState, points=DET_SAMPLE_POINTS) -> np.ndarray:
    """det of the state polynomial at the fixed sample points (orbit invariants)."""
    poly = mv_polynomial(e, st)
    return np.array([np.linalg.det(poly(s)) for s in points])


def _half_refactor(e: Ellipsoid, u: np.ndarray, v: np.ndarray, nonzero_root: bool):
    """Refactor the intertwined product of the factor pair (u, v).

    For factors (s C + u (x) v)(-s C + v (x) u), multiplying them in the
    opposite order and matching coefficients against the same form forces
    the new pair (u', v') = (v, -u + alpha C^-1 v); the unit-norm
    constraint on v' is quadratic in alpha with roots 0 and
    2 (u . C^-1 v) / |C^-1 v|^2.
    """
    w = e.inv_c @ v
    alpha = 2.0 * float(u @ w) / float(w @ w) if nonzero_root else 0.0
    v_new = -u + alpha * w
    nrm = float(np.linalg.norm(v_new))
    if nrm < 1e-12:
        raise DegenerateTrajectoryError("refactorization collapsed to zero")
    return v.copy(), v_new / nrm


def mv_step(e: Ellipsoid, st: BilliardState, tol: float = 1e-8) -> BilliardState:
    """Billiard map by matrix-polynomial refactorization.

    Two successive refactorizations compose to the billiard map.  Among the
    (at most eight) root/sign combinations, the admissible one is selected
    by forward motion along the chord through (x, y); the result must agree
    with the geometric map to ``tol`` or a ConsistencyError is raised.
    """
    xi0 = e.inv_c @ st.x
    nrm = float(np.linalg.norm(xi0))
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError("state is too far off the boundary (|C^-1 x| != 1)")
    xi0 = xi0 / nrm
    if abs(float(st.y @ (e.inv_c @ xi0))) < 1e-12:
        raise DegenerateTrajectoryError("tangential state: no admissible root")

    # The state enters through its intertwined factor data (xi, y); two
    # refactorizations followed by a global sign flip compose to the full
    # bounce.  All root/sign combinations are formed and the admissible one
    # is picked by forward motion along the chord.
    candidates = []
    for first_nonzero in (True, False):
        u1, v1 = _half_refactor(e, xi0, st.y, first_nonzero)
        for second_nonzero in (True, False):
            u2, v2 = _half_refactor(e, u1, v1, second_nonzero)
            for sign in (1.0, -1.0):
                candidates.append((sign * u2, sign * v2))

    forward = []
    for xi_c, y_c in candidates:
        x_c = e.c @ xi_c
        delta = x_c - st.x
        tau = float(delta @ st.y)
        if tau <= _FORWARD_TOL:
            continue
        if np.linalg.norm(delta - tau * st.y) > 1e-8 * max(1.0, tau):
            continue
        if float(y_c @ e.inv_c2 @ x_c) >= 0.0:
            continue
        forward.append((x_c, y_c))
    if not forward:
        raise DegenerateTrajectoryError("no refactorization root moves forward")
    x_c, y_c = forward[0]
    for other_x, other_y in forward[1:]:
        if np.abs(other_x - x_c).max() > tol or np.abs(other_y - y_c).max() > tol:
            raise ConsistencyError("ambiguous refactorization root selection")

    oracle = geometric_step(e, st)
    dev = max(float(np.abs(x_c - oracle.x).max()), float(np.abs(y_c - oracle.y).max()))
    if dev > tol:
        raise ConsistencyError(
            f"refactorization step deviates from the geometric map by {dev:.3e}"
        )
    x_c = _project_to_boundary(e, x_c)
    return BilliardState(x_c, y_c / np.linalg.norm(y_c))


def orbit(
    e: Ellipsoid,
    st: BilliardState,
    bounces: int,
    stepper: Callable[[Ellipsoid, BilliardState], BilliardState] = geometric_step,
) -> list[BilliardState]:
    """The first ``bounces`` iterates of a step map, initial state included."""
    states = [st]
    for _ in range(bounces):
        states.append(stepper(e, states[-1]))
    return states


def orbit_csv_text(states, timestamp: bool = True) -> str:
    """CSV export: ``k, x_1..x_n, y_1..y_n`` per bounce."""
    n = states[0].n
    lines = []
    if timestamp:
        lines.append(f"# generated: {_dt.datetime.now().isoformat()}")
    header = ["k"] + [f"x_{i + 1}" for i in range(n)] + [f"y_{i + 1}" for i in range(n)]
    lines.append(", ".join(header))
    for k, st in enumerate(states):
        vals = [str(k)] + [format(v, ".17g") for v in np.concatenate([st.x, st.y])]
        lines.append(", ".join(vals))
    return "\n".join(lines) + "\n"
