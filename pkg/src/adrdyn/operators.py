"""Alpha-monotone operators presented through their resolvents, plus a small
catalog of proximity operators with closed forms.

An operator ``A`` is never evaluated as a set-valued map.  It is known only
through ``J_{gamma A} = (I + gamma A)^{-1}``, valid whenever
``1 + gamma * alpha > 0`` where ``alpha`` is the certified monotonicity
modulus.  All catalog oracles broadcast over a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError
from .space import as_vector

Oracle = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OperatorSpec:
    """A maximally alpha-monotone operator known through its resolvent.

    ``lipschitz_const`` is only set for single-valued Lipschitz operators and
    is trusted as given; ``direct_eval`` is used by test oracles only.
    """

    resolvent_oracle: Oracle
    monotonicity_modulus: float
    lipschitz_const: Optional[float] = None
    direct_eval: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    def __post_init__(self):
        if not np.isfinite(self.monotonicity_modulus):
            raise InvalidParameterError("monotonicity modulus must be finite")
        l = self.lipschitz_const
        if l is not None:
            if l < 0 or not np.isfinite(l):
                raise InvalidParameterError("lipschitz_const must be finite and nonnegative")
            if l < abs(self.monotonicity_modulus) - 1e-12:
                raise InvalidParameterError(
                    f"lipschitz_const {l} is below |alpha| = {abs(self.monotonicity_modulus)}"
                )

    @property
    def alpha(self) -> float:
        return self.monotonicity_modulus

    def admissible(self, gamma: float) -> bool:
        return gamma > 0 and 1.0 + gamma * self.monotonicity_modulus > 0


@dataclass(frozen=True)
class ProxFunction:
    """An alpha-convex function with a closed-form proximity operator."""

    evaluate: Callable[[np.ndarray], float]
    convexity_modulus: float
    prox_oracle: Oracle
    label: str = ""
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gradient_lipschitz: Optional[float] = None


def _check_step(gamma, alpha, what="gamma"):
    gamma = float(gamma)
    if not gamma > 0:
        raise InvalidParameterError(f"{what} must be positive, got {gamma}")
    if not 1.0 + gamma * alpha > 0:
        raise InvalidParameterError(
            f"1 + {what}*alpha = {1.0 + gamma * alpha} <= 0; resolvent is not single-valued"
        )
    return gamma


def resolvent(spec: OperatorSpec, gamma: float, x) -> np.ndarray:
    """Evaluate ``J_{gamma A}(x)``."""
    gamma = _check_step(gamma, spec.monotonicity_modulus)
    return as_vector(spec.resolvent_oracle(gamma, as_vector(x)), "resolvent output")


def relaxed_resolvent(spec: OperatorSpec, gamma: float, lam: float, x) -> np.ndarray:
    """``(1 - lam) x + lam J_{gamma A}(x)``."""
    x = as_vector(x)
    j = resolvent(spec, gamma, x)
    return as_vector((1.0 - lam) * x + lam * j, "relaxed resolvent output")


# -- catalog ---------------------------------------------------------------


def prox_quadratic(a: float, p) -> ProxFunction:
    """``h(x) = (a/2)|x - p|^2``; ``a < 0`` gives a weakly convex function."""
    a = float(a)
    p = as_vector(p, "p")

    def evaluate(x):
        d = np.asarray(x, dtype=float) - p
        return 0.5 * a * np.sum(d * d, axis=-1)

    def prox(tau, x):
        tau = _check_step(tau, a, "tau")
        return (np.asarray(x, dtype=float) + tau * a * p) / (1.0 + tau * a)

    def grad(x):
        return a * (np.asarray(x, dtype=float) - p)

    return ProxFunction(evaluate, a, prox, f"quadratic(a={a:g})", grad, abs(a))


def soft_threshold(x, thresh):
    """Coordinatewise ``sign(x) * max(|x| - thresh, 0)``; the kink maps to exactly 0."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def prox_l1(weight: float) -> ProxFunction:
    weight = float(weight)
    if not weight > 0:
        raise InvalidParameterError("l1 weight must be positive")

    def evaluate(x):
        return weight * np.sum(np.abs(np.asarray(x, dtype=float)), axis=-1)

    def prox(tau, x):
        tau = _check_step(tau, 0.0, "tau")
        return soft_threshold(x, tau * weight)

    return ProxFunction(evaluate, 0.0, prox, f"l1(w={weight:g})")


def spec_from_prox(h: ProxFunction) -> OperatorSpec:
    """The subdifferential of ``h`` as an operator: its resolvent is the prox."""
    return OperatorSpec(
        resolvent_oracle=h.prox_oracle,
        monotonicity_modulus=h.convexity_modulus,
        lipschitz_const=h.gradient_lipschitz,
        direct_eval=h.gradient,
        label=h.label,
    )


def affine_operator(matrix, offset=None, label: str = "") -> OperatorSpec:
    """``A(x) = M x + c`` for symmetric ``M``.

    The modulus is the smallest eigenvalue of ``M`` and the Lipschitz
    constant the largest absolute eigenvalue.
    """
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    n = m.shape[0]
    if m.shape != (n, n):
        raise InvalidParameterError("matrix must be square")
    if not np.allclose(m, m.T, atol=1e-12):
        raise InvalidParameterError("matrix must be symmetric")
    c = np.zeros(n) if offset is None else as_vector(offset, "offset")
    eig = np.linalg.eigvalsh(m)
    alpha = float(eig[0])
    lip = float(np.max(np.abs(eig)))
    eye = np.eye(n)

    def oracle(gamma, x):
        rhs = np.asarray(x, dtype=float) - gamma * c
        return np.linalg.solve(eye + gamma * m, rhs.T).T

    def direct(x):
        return np.asarray(x, dtype=float) @ m.T + c

    return OperatorSpec(oracle, alpha, lip, direct, label or f"affine(n={n})")


def zero_operator(label: str = "zero") -> OperatorSpec:
    return OperatorSpec(lambda gamma, x: np.asarray(x, dtype=float), 0.0, 0.0,
                        lambda x: np.zeros_like(np.asarray(x, dtype=float)), label)
