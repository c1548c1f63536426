"""todalab: a numerical laboratory for isospectral matrix flows.

Lax-pair flows on symmetric (tridiagonal) matrices, their exact solution by
factorization, inverse spectral variables, bidiagonal chart coordinates,
QR-family eigenvalue iterations with shifts, and the ellipsoid billiard map
with its matrix-polynomial refactorization form.
"""

from .errors import (
    ChartDomainError,
    ConsistencyError,
    ConvergenceError,
    DeflationSignal,
    DegeneracyError,
    DegenerateSpectrumError,
    DegenerateTrajectoryError,
    FactorizationError,
    IntegrationError,
    LeadingMinorError,
    NotEnoughDataError,
    ReconstructionError,
    SingularPencilError,
    SpectralDomainError,
)
from .flowfunc import FlowFunction
from .factorcore import (
    EigenDecomposition,
    LUFactors,
    QRFactors,
    cholesky_like_factor,
    lu_positive_factor,
    matrix_function,
    qr_factor,
    split_skew_upper,
    split_strictlower_upper,
    symmetric_eigen,
)
from .flows import (
    PhaseState,
    SymTridiagonal,
    Trajectory,
    asymptotic_diagnosis,
    chop_invariants,
    flaschka,
    integrate,
    inverse_flaschka,
    lax_field,
    morse_function,
    physical_hamiltonian,
    symes_solve,
    trace_invariants,
)
from .invspec import SpectralData, moser_evolve, norming_constants, reconstruct
from .atlas import (
    BidiagonalChart,
    chart_flow,
    chart_transition,
    from_chart,
    momentum_map,
    to_chart,
)
from .qrdyn import (
    IterationTrace,
    ShiftStrategy,
    cholesky_step,
    compute_shift,
    estimate_order,
    interpolation_check,
    power_qr_identity_check,
    qr_iterate,
    qr_step,
    shifted_qr_step,
    toda_exp_qr_check,
)
from .billiard import (
    BilliardState,
    Ellipsoid,
    geometric_step,
    mv_polynomial,
    mv_step,
)

__version__ = "0.1.0"
