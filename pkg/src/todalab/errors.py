"""Exception types shared across the package."""

from __future__ import annotations


class FactorizationError(ValueError):
    """QR factorization is not defined for the given input."""


class LeadingMinorError(ValueError):
    """A leading principal minor fails the positivity requirement.

    ``minor_index`` is 1-based: the order of the first failing minor.
    """

    def __init__(self, minor_index: int, message: str | None = None):
        self.minor_index = minor_index
        super().__init__(
            message or f"leading principal minor {minor_index} is not positive"
        )


class SpectralDomainError(ValueError):
    """A scalar flow function is undefined somewhere on the spectrum."""


class ConvergenceError(RuntimeError):
    """An iterative kernel exhausted its iteration budget."""


class DegenerateSpectrumError(ValueError):
    """Eigenvalues too close together for an operation that needs a simple spectrum."""


class DegeneracyError(ValueError):
    """Numerically degenerate inverse-spectral data (vanishing norming constant)."""


class ReconstructionError(RuntimeError):
    """Krylov breakdown while rebuilding a Jacobi matrix from spectral data."""


class ChartDomainError(ValueError):
    """The matrix lies outside the requested bidiagonal chart domain.

    ``minor_index`` (1-based) names the first vanishing leading minor of the
    sign-adjusted eigenvector matrix.
    """

    def __init__(self, minor_index: int, message: str | None = None):
        self.minor_index = minor_index
        super().__init__(
            message
            or f"leading minor {minor_index} of the eigenvector matrix is too close to zero"
        )


class SingularPencilError(ValueError):
    """The chopped pencil is singular; chop invariants are undefined."""


class IntegrationError(RuntimeError):
    """Adaptive integration failed; carries the last accepted time and state."""

    def __init__(self, message: str, t: float, state):
        self.t = t
        self.state = state
        super().__init__(message)


class DeflationSignal(Exception):
    """A shifted step hit a (near-)exact eigenvalue; deflate immediately.

    Control-flow signal, not an error: ``eigenvalue`` is the shift that
    exposed the singularity.
    """

    def __init__(self, eigenvalue: float):
        self.eigenvalue = eigenvalue
        super().__init__(f"shift {eigenvalue} is numerically an eigenvalue")


class DegenerateTrajectoryError(RuntimeError):
    """Billiard chord is tangent to the boundary or otherwise degenerate."""


class NotEnoughDataError(ValueError):
    """Too few qualifying points for the requested estimate."""


class ConsistencyError(RuntimeError):
    """An internal cross-check failed beyond tolerance."""
