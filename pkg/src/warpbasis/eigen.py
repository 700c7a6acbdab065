"""Dense symmetric eigenvalues via cyclic Jacobi rotations.

Kept in-repo and fully deterministic (fixed sweep order, no pivot search
ties broken by data) so Gram-spectrum certificates reproduce bit-for-bit
across runs.  Intended for the small matrices this package builds (N up to
a few dozen); not a general-purpose eigensolver.
"""

from __future__ import annotations

import numpy as np


def symmetric_eigenvalues(a: np.ndarray, max_sweeps: int = 50) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix, ascending.

    Cyclic Jacobi: sweep the strict upper triangle in row order, rotating
    away each off-diagonal entry; quadratic convergence once entries are
    small.  Raises if the input is not square/symmetric.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, float(np.abs(a).max()))):
        raise ValueError("matrix is not symmetric")
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    m = 0.5 * (a + a.T)
    scale = float(np.abs(m).max())
    if scale == 0.0:
        return np.zeros(n)
    tol = 1e-15 * scale
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(m, -1) ** 2))
        if off <= tol * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if abs(apq) <= tol * 1e-2:
                    continue
                app, aqq = m[p, p], m[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot_p = c * m[:, p] - s * m[:, q]
                rot_q = s * m[:, p] + c * m[:, q]
                m[:, p], m[:, q] = rot_p, rot_q
                rot_p = c * m[p, :] - s * m[q, :]
                rot_q = s * m[p, :] + c * m[q, :]
                m[p, :], m[q, :] = rot_p, rot_q
                m[p, q] = m[q, p] = 0.0
    return np.sort(m.diagonal())
