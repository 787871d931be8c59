"""Resolvent-style matrix transform and the structured block matrix it scales.

X^gamma = X (I - gamma X)^{-1} maps symmetric matrices below (1/gamma) I to
symmetric matrices, preserving order: X <= Y < (1/gamma) I implies
X <= X^gamma <= Y^gamma, and X^gamma >= -(1/gamma) I always.  j_matrix(n, d)
is the nd x nd block matrix with (n-1) I diagonal and -I off-diagonal blocks;
it satisfies J^2 = n J and J^gamma = J / (1 - n gamma) for gamma < 1/n.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import MatrixError, ValidationError

SYMMETRY_TOL = 1e-12
CONDITION_LIMIT = 1e10


def check_symmetric(x) -> np.ndarray:
    """Validate a dense symmetric matrix (to 1e-12) and return it symmetrized."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError("BAD_SHAPE", f"expected a square matrix, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("NON_FINITE", "matrix contains a non-finite entry")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if float(np.max(np.abs(arr - arr.T))) > SYMMETRY_TOL * scale:
        raise MatrixError("ASYMMETRIC", "matrix is not symmetric to 1e-12")
    return (arr + arr.T) / 2.0


def gamma_transform(x, gamma: float) -> np.ndarray:
    """X (I - gamma X)^{-1}, computed on the eigenbasis and symmetrized.

    Eigenvalues map by t -> t / (1 - gamma t). SINGULAR is raised when the
    resolvent factor's conditioning exceeds 1e10 (an eigenvalue of X too
    close to 1/gamma).
    """
    xs = check_symmetric(x)
    gamma = float(gamma)
    if not (math.isfinite(gamma) and gamma > 0.0):
        raise ValidationError("GAMMA_RANGE", f"gamma {gamma!r} must be positive")
    eigvals, eigvecs = np.linalg.eigh(xs)
    denom = 1.0 - gamma * eigvals
    small = float(np.min(np.abs(denom)))
    large = float(np.max(np.abs(denom)))
    if small == 0.0 or large / small > CONDITION_LIMIT:
        raise MatrixError(
            "SINGULAR", f"I - gamma X conditioning {large / max(small, 1e-300):.3g} beyond 1e10"
        )
    out = (eigvecs * (eigvals / denom)) @ eigvecs.T
    return (out + out.T) / 2.0


def j_matrix(n: int, d: int) -> np.ndarray:
    """Block matrix with (n-1) I_d diagonal and -I_d off-diagonal blocks."""
    n, d = int(n), int(d)
    if n < 1 or d < 1:
        raise ValidationError("BAD_SHAPE", f"n and d must be >= 1, got {n}, {d}")
    core = n * np.eye(n) - np.ones((n, n))
    return np.kron(core, np.eye(d))
