"""Finite-dimensional vector arithmetic.

Vectors are plain 1-D ``float64`` numpy arrays. Every function also accepts a
stack of vectors (shape ``(m, n)``) and then works along the last axis, which
lets the test suites evaluate thousands of samples at once.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, NonFiniteError

ATOL = 1e-9
RTOL = 1e-12


def as_vector(x, name: str = "x") -> np.ndarray:
    """Convert ``x`` to a float array, rejecting empty or non-finite input."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] < 1:
        raise DimensionError(f"{name} must have at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return arr


def _finite(arr: np.ndarray) -> np.ndarray:
    # callers compute under np.errstate(all="ignore"); overflow surfaces here
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("operation produced NaN or Inf")
    return arr


def _pair(x, y):
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if x.shape[-1] != y.shape[-1]:
        raise DimensionError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    return x, y


def _scalar(c, name: str) -> float:
    c = float(c)
    if not np.isfinite(c):
        raise NonFiniteError(f"{name} must be finite")
    return c


def add(x, y) -> np.ndarray:
    x, y = _pair(x, y)
    with np.errstate(all="ignore"):
        return _finite(x + y)


def sub(x, y) -> np.ndarray:
    x, y = _pair(x, y)
    with np.errstate(all="ignore"):
        return _finite(x - y)


def scale(c, x) -> np.ndarray:
    c = _scalar(c, "c")
    with np.errstate(all="ignore"):
        return _finite(c * as_vector(x))


def inner(x, y):
    x, y = _pair(x, y)
    return np.sum(x * y, axis=-1)


def norm_sq(x):
    x = as_vector(x)
    return np.sum(x * x, axis=-1)


def norm(x):
    return np.sqrt(norm_sq(x))


def _coef(c, name: str):
    # a scalar, or one coefficient per stacked vector
    if np.ndim(c) == 0:
        return _scalar(c, name)
    c = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c)):
        raise NonFiniteError(f"{name} must be finite")
    return c


def averaged_combination(eps, x, rho, y) -> np.ndarray:
    """Return ``eps*x + rho*y``.

    Pairs with :func:`averaging_identity_rhs`: the squared norm of the result
    equals ``eps(eps+rho)|x|^2 + rho(eps+rho)|y|^2 - eps*rho|x-y|^2``.
    For stacked ``x, y`` of shape ``(m, n)`` the coefficients may be scalars
    or arrays of shape ``(m,)``.
    """
    x, y = _pair(x, y)
    eps = _coef(eps, "eps")
    rho = _coef(rho, "rho")
    with np.errstate(all="ignore"):
        return _finite(np.expand_dims(eps, -1) * x + np.expand_dims(rho, -1) * y)


def averaging_identity_rhs(eps, x, rho, y):
    """Right-hand side of the averaging identity for ``|eps*x + rho*y|^2``."""
    x, y = _pair(x, y)
    eps, rho = _coef(eps, "eps"), _coef(rho, "rho")
    s = eps + rho
    return eps * s * norm_sq(x) + rho * s * norm_sq(y) - eps * rho * norm_sq(x - y)


def averaging_identity_scale(eps, x, rho, y):
    """Magnitude of the largest term in the identity, used to normalise its error."""
    x, y = _pair(x, y)
    eps, rho = _coef(eps, "eps"), _coef(rho, "rho")
    s = eps + rho
    return np.maximum.reduce([
        np.abs(eps * s) * norm_sq(x),
        np.abs(rho * s) * norm_sq(y),
        np.abs(eps * rho) * norm_sq(x - y),
        norm_sq(averaged_combination(eps, x, rho, y)),
    ])


def allclose(x, y, atol: float = ATOL, rtol: float = RTOL) -> bool:
    x, y = _pair(x, y)
    return bool(np.allclose(x, y, atol=atol, rtol=rtol))
