"""Input validation helpers in the style of ``sklearn.utils.validation``."""

import numpy as np
import scipy.sparse as sp

from .coupling import CouplingMatrix

__all__ = ["check_spins", "check_coupling", "check_params"]


def check_spins(X, n_sites=None, ensure_2d=True):
    """Validate a ±1 array; 1-D input becomes a single-row 2-D array.

    Raises ``ValueError`` on non-finite entries, entries other than ±1, or a
    site count different from ``n_sites``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1 and ensure_2d:
        X = X[None, :]
    if X.ndim not in (1, 2):
        raise ValueError(f"expected spins of shape (n_samples, n_sites), got {X.shape}")
    if X.size == 0:
        raise ValueError("empty spin array")
    if not np.all(np.abs(X) == 1.0):
        raise ValueError("spins must take values in {-1, +1}")
    if n_sites is not None and X.shape[-1] != n_sites:
        raise ValueError(f"expected {n_sites} sites, got {X.shape[-1]}")
    return X


def check_coupling(J):
    """Coerce ``J`` to a :class:`CouplingMatrix`."""
    if J is None:
        raise ValueError("a coupling matrix is required")
    if isinstance(J, CouplingMatrix):
        return J
    if sp.issparse(J):
        J = J.toarray()
    return CouplingMatrix.from_dense(J)


def check_params(beta, h, require_positive_beta=False):
    beta, h = float(beta), float(h)
    if not (np.isfinite(beta) and np.isfinite(h)):
        raise ValueError("beta and h must be finite")
    if require_positive_beta and beta <= 0:
        raise ValueError(f"ground-truth beta must be positive, got {beta}")
    return beta, h
