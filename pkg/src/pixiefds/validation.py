"""Small input-validation helpers used by the estimators."""

import numpy as np

from .errors import DataError


def check_matrix(X, name="X", dtype=np.float64):
    """Coerce to a finite 2-D float array."""
    X = np.asarray(X, dtype=dtype)
    if X.ndim != 2:
        raise DataError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError(f"{name} contains non-finite values")
    return X


def check_vector(x, name="x", length=None, dtype=np.float64):
    """Coerce to a finite 1-D float array, optionally of fixed length."""
    x = np.asarray(x, dtype=dtype)
    if x.ndim != 1:
        raise DataError(f"{name} must be 1-D, got shape {x.shape}")
    if length is not None and x.shape[0] != length:
        raise DataError(f"{name} must have length {length}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{name} contains non-finite values")
    return x


def check_spd(cov, name="cov", sym_tol=1e-8):
    """Validate symmetry and positive-definiteness; return Cholesky factor."""
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DataError(f"{name} must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, atol=sym_tol * max(1.0, np.abs(cov).max())):
        raise DataError(f"{name} is not symmetric within tolerance")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DataError(f"{name} is not positive-definite") from exc
