"""Seeded random generators for matrices, spectra and billiard states.

All randomness flows through numpy's PCG64 generator so that every ensemble
in the test and self-check suites is reproducible from a single integer
seed, bit for bit, across platforms.
"""

from __future__ import annotations

import numpy as np

from .factorcore import qr_positive

DEFAULT_GAP = 1e-8


def rng(seed: int) -> np.random.Generator:
    """The package-wide generator: PCG64 seeded with ``seed``."""
    return np.random.default_rng(int(seed))


def random_jacobi_entries(gen, n, diag_range=(-1.0, 1.0), off_range=(0.2, 1.0)):
    """Diagonal and (positive) off-diagonal entries of a random Jacobi matrix."""
    a = gen.uniform(*diag_range, size=n)
    b = gen.uniform(*off_range, size=n - 1)
    return a, b


def random_spectrum(gen, n, min_gap=0.1, max_gap=1.0, center=0.0):
    """Strictly increasing eigenvalues with controlled consecutive gaps."""
    gaps = gen.uniform(min_gap, max_gap, size=n - 1)
    lam = np.concatenate(([0.0], np.cumsum(gaps)))
    return lam - lam.mean() + center

def random_unit_positive(gen, n):
    """A point of the positive octant of the unit sphere, bounded away from 0."""
    v = gen.uniform(0.1, 1.0, size=n)
    return v / np.linalg.norm(v)


def random_symmetric(gen, n, scale=1.0):
    m = gen.normal(size=(n, n)) * scale
    return 0.5 * (m + m.T)


def random_orthogonal(gen, n):
    q, _ = qr_positive(gen.normal(size=(n, n)))
    return q


def random_spd(gen, n, lo=0.5, hi=2.0):
    """Symmetric positive definite matrix with spectrum drawn from [lo, hi]."""
    q = random_orthogonal(gen, n)
    lam = np.sort(gen.uniform(lo, hi, size=n))
    return (q * lam) @ q.T
