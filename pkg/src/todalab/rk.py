"""Adaptive embedded Runge-Kutta stepping on ndarray-valued states.

Dormand-Prince 5(4): six effective stages per accepted step (first-same-as-
last), 5th-order propagation, 4th-order error estimate, standard step-size
controller.  The state may be any float ndarray shape; trajectories through
matrix space use it directly on n x n arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntegrationError

# Dormand-Prince extended Butcher tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b5 - b4: weights of the local error estimate.
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


@dataclass
class IntegratorStats:
    steps: int = 0
    rejected: int = 0
    max_error_estimate: float = 0.0


def integrate_adaptive(
    field: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    sample_times,
    tol: float = 1e-10,
    max_steps: int = 2_000_000,
    post_step: Callable[[np.ndarray], np.ndarray] | None = None,
):
    """Integrate y' = field(y) from sample_times[0], landing on every sample.

    ``sample_times`` must be strictly monotone (increasing or decreasing);
    integration runs in that direction.  ``post_step`` may normalize each
    accepted state (e.g. re-symmetrize).  Returns (list of states aligned
    with sample_times, IntegratorStats).  Raises IntegrationError, carrying
    the last accepted time and state, if the step size underflows.
    """
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or len(times) < 1:
        raise ValueError("sample_times must be a non-empty 1-d sequence")
    direction = 1.0
    if len(times) > 1:
        dts = np.diff(times)
        if np.all(dts > 0):
            direction = 1.0
        elif np.all(dts < 0):
            direction = -1.0
        else:
            raise ValueError("sample_times must be strictly monotone")
    if tol <= 0:
        raise ValueError("tol must be positive")

    y = np.array(y0, dtype=float)
    t = float(times[0])
    stats = IntegratorStats()
    out = [y.copy()]
    if len(times) == 1:
        return out, stats

    span = abs(times[-1] - times[0])
    h_min = 1e-14 * max(1.0, span)
    k = np.empty((7,) + y.shape)
    k[0] = field(y)
    f_scale = float(np.abs(k[0]).max())
    h = direction * min(
        max(span * 1e-4, h_min * 10),
        (tol ** 0.2) / max(f_scale, 1e-8),
        span,
    )

    next_sample = 1
    while next_sample < len(times):
        if stats.steps + stats.rejected >= max_steps:
            raise IntegrationError("step budget exhausted", t, y)
        target = float(times[next_sample])
        if direction * (t + h - target) > 0.0:
            h = target - t
        # stage sweep
        for i in range(1, 7):
            yi = y + h * np.tensordot(_A[i], k[:i], axes=(0, 0))
            k[i] = field(yi)
        y_new = y + h * np.tensordot(_B5, k, axes=(0, 0))
        err = float(np.abs(h * np.tensordot(_E, k, axes=(0, 0))).max())

        if err <= tol:
            t = t + h
            y = y_new if post_step is None else post_step(y_new)
            stats.steps += 1
            stats.max_error_estimate = max(stats.max_error_estimate, err)
            k[0] = k[6] if post_step is None else field(y)
            while next_sample < len(times) and (
                direction * (t - times[next_sample]) >= -1e-14 * max(1.0, abs(t))
            ):
                out.append(y.copy())
                next_sample += 1
        else:
            stats.rejected += 1
        factor = _MAX_FACTOR if err == 0.0 else _SAFETY * (tol / err) ** 0.2
        h = h * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        if abs(h) < h_min:
            raise IntegrationError("step size underflow", t, y)
    return out, stats
