"""Scalar functions that drive isospectral flows.

A flow function f defines the matrix vector field T' = [T, skew(f(T))].
The supported family: identity (the plain Toda field), natural log (whose
time-1 map is the QR step), polynomials, and the shifted log
x -> ln|x - s| (whose time-1 map is the QR step with shift s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpectralDomainError

_KINDS = ("identity", "log", "poly", "shiftlog")


@dataclass(frozen=True)
class FlowFunction:
    """Tagged choice of scalar function, evaluated with strict domain checks.

    ``coeffs`` (low degree first) is used for kind "poly" only; ``shift``
    for kind "shiftlog" only.
    """

    kind: str
    coeffs: tuple[float, ...] = ()
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown flow function kind {self.kind!r}")
        if self.kind == "poly" and len(self.coeffs) < 1:
            raise ValueError("polynomial flow function needs at least one coefficient")
        if not np.isfinite(self.shift):
            raise ValueError("shift must be finite")

    @classmethod
    def identity(cls) -> "FlowFunction":
        return cls("identity")

    @classmethod
    def log(cls) -> "FlowFunction":
        return cls("log")

    @classmethod
    def polynomial(cls, coeffs) -> "FlowFunction":
        return cls("poly", coeffs=tuple(float(c) for c in coeffs))

    @classmethod
    def shifted_log(cls, shift: float) -> "FlowFunction":
        return cls("shiftlog", shift=float(shift))

    @classmethod
    def parse(cls, text: str) -> "FlowFunction":
        """Parse a CLI-style spec: identity | log | poly:c0,c1,... | shiftlog:s."""
        head, _, tail = text.strip().partition(":")
        head = head.lower()
        if head == "identity":
            return cls.identity()
        if head == "log":
            return cls.log()
        if head == "poly":
            try:
                coeffs = [float(c) for c in tail.split(",") if c.strip()]
            except ValueError as exc:
                raise ValueError(f"bad polynomial coefficients {tail!r}") from exc
            return cls.polynomial(coeffs)
        if head == "shiftlog":
            try:
                return cls.shifted_log(float(tail))
            except ValueError as exc:
                raise ValueError(f"bad shift {tail!r}") from exc
        raise ValueError(f"unknown flow function {text!r}")

    @property
    def label(self) -> str:
        if self.kind == "poly":
            return "poly:" + ",".join(repr(c) for c in self.coeffs)
        if self.kind == "shiftlog":
            return f"shiftlog:{self.shift!r}"
        return self.kind

    def __call__(self, x, signless: bool = False):
        """Evaluate elementwise.

        ``signless`` replaces ln(x) by ln|x| for the "log" kind, which is the
        correct reading of the flow in bidiagonal charts when eigenvalues can
        be negative.  "shiftlog" carries the absolute value by definition.
        """
        arr = np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = arr.copy()
        elif self.kind == "log":
            if signless:
                if np.any(arr == 0.0):
                    raise SpectralDomainError("ln|x| undefined at x = 0")
                out = np.log(np.abs(arr))
            else:
                if np.any(arr <= 0.0):
                    raise SpectralDomainError(
                        "ln undefined on a non-positive spectrum"
                    )
                out = np.log(arr)
        elif self.kind == "poly":
            out = np.full_like(arr, self.coeffs[-1])
            for c in self.coeffs[-2::-1]:
                out = out * arr + c
        else:  # shiftlog
            d = arr - self.shift
            if np.any(d == 0.0):
                raise SpectralDomainError(
                    f"ln|x - s| undefined at the shift s = {self.shift}"
                )
            out = np.log(np.abs(d))
        if np.isscalar(x):
            return float(out)
        return out
