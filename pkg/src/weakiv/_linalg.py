"""Internal dense linear-algebra helpers: SPD validation and symmetric roots."""

from __future__ import annotations

import numpy as np

from .errors import NonPositiveDefinite

# Relative floor for the smallest eigenvalue of an SPD matrix.  Inputs below
# this are rejected rather than regularized.
SPD_RTOL = 1e-10

# Relative tolerance for symmetry of user-supplied covariance matrices.
SYM_RTOL = 1e-12


def check_symmetric(mat, name="matrix", rtol=SYM_RTOL):
    """Raise if ``mat`` is not symmetric to relative tolerance ``rtol``."""
    mat = np.asarray(mat, dtype=float)
    scale = max(1.0, float(np.max(np.abs(mat))))
    if np.max(np.abs(mat - mat.T)) > rtol * scale:
        raise NonPositiveDefinite(f"{name} is not symmetric to rtol={rtol:g}")
    return 0.5 * (mat + mat.T)


def spd_eigh(mat, name="matrix"):
    """Eigendecomposition of an SPD matrix with a hard positivity check.

    Returns (eigenvalues, eigenvectors).  Raises NonPositiveDefinite when
    the smallest eigenvalue is below SPD_RTOL times the largest.
    """
    w, v = np.linalg.eigh(mat)
    if w[-1] <= 0.0 or w[0] <= SPD_RTOL * w[-1]:
        raise NonPositiveDefinite(
            f"{name} fails the SPD check: eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}]"
        )
    return w, v


def sym_sqrt(mat, name="matrix"):
    """Symmetric positive-definite square root via eigendecomposition."""
    w, v = spd_eigh(mat, name)
    return (v * np.sqrt(w)) @ v.T


def sym_inv_sqrt(mat, name="matrix"):
    """Symmetric inverse square root via eigendecomposition."""
    w, v = spd_eigh(mat, name)
    return (v / np.sqrt(w)) @ v.T


def spd_inv(mat, name="matrix"):
    """Inverse of an SPD matrix, symmetrized."""
    w, v = spd_eigh(mat, name)
    inv = (v / w) @ v.T
    return 0.5 * (inv + inv.T)
