"""Independent reference implementations used only for cross-validation.

Nothing here is called by the production code paths: these routines exist so
that tests and the self-check suite can compare the fast kernels against
slow, simple algorithms written from first principles.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError


def gram_schmidt_qr(m):
    """Classical Gram-Schmidt QR with positive diagonal R.

    O(n^3) and numerically naive; fine as a reference for small
    well-conditioned inputs.
    """
    a = np.asarray(m, dtype=float)
    n = a.shape[0]
    q = np.zeros_like(a)
    r = np.zeros_like(a)
    for j in range(n):
        v = a[:, j].copy()
        for i in range(j):
            r[i, j] = q[:, i] @ a[:, j]
            v -= r[i, j] * q[:, i]
        r[j, j] = np.linalg.norm(v)
        if r[j, j] == 0.0:
            raise ValueError("rank-deficient input")
        q[:, j] = v / r[j, j]
    return q, r


def jacobi_eigenvalues(s, tol: float = 1e-13, max_sweeps: int = 100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all (p, q) pairs, annihilating one off-diagonal entry at a
    time, until the off-diagonal Frobenius norm falls below
    ``tol * ||s||_F``.  Returns the sorted eigenvalues.
    """
    a = np.asarray(s, dtype=float).copy()
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0.0 else 1.0
                t = t / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                sgn = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - sgn * rq
                a[q, :] = sgn * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - sgn * cq
                a[:, q] = sgn * cp + c * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
    raise ConvergenceError("cyclic Jacobi sweep budget exhausted")
