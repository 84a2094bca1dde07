"""Small shared dense linear-algebra helpers."""

import numpy as np
import scipy.linalg

SYMMETRY_TOL = 1e-10


def require_symmetric(w: np.ndarray, what: str = "matrix") -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"{what} must be square, got shape {w.shape}")
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    if w.size and float(np.max(np.abs(w - w.T))) > SYMMETRY_TOL * scale:
        raise ValueError(f"{what} is not symmetric within tolerance {SYMMETRY_TOL}")
    return w


def spd_solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Direct Cholesky solve; ``mat`` must be symmetric positive definite."""
    factor = scipy.linalg.cho_factor(mat, lower=True, check_finite=False)
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)
