"""The adaptive Douglas-Rachford operator and its parameter regimes.

For resolvent steps ``gamma, delta`` and relaxations ``lam, mu`` the operator is

    RR = R_B o R_A,   R_A = (1-lam) I + lam J_{gamma A},   R_B = (1-mu) I + mu J_{delta B}

and ``T_eps = (1-eps) I + eps RR`` is its averaged version.  Parameters are
usable only when ``min(1+gamma*alpha, 1+delta*beta) > 0``,
``(lam-1)(mu-1) = 1`` and ``delta = (lam-1) gamma`` (the linkage).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .operators import OperatorSpec
from .space import as_vector

EQ_TOL = 1e-12


class Case(str, enum.Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"


@dataclass(frozen=True)
class DRParams:
    """Moduli, steps and relaxations of the adaptive DR operator.

    Construction only checks that the values are finite, that both steps are
    positive and that ``epsilon`` lies in ``[0, 1)``.  The linkage is checked
    by :meth:`require_linkage` (and reported by :func:`validate`) so that
    invalid tuples can still be inspected.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    lam: float
    mu: float
    epsilon: float = 0.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be finite")
        if not (self.gamma > 0 and self.delta > 0):
            raise InvalidParameterError("gamma and delta must be positive")
        if not 0.0 <= self.epsilon < 1.0:
            raise InvalidParameterError("epsilon must lie in [0, 1)")

    @classmethod
    def c1(cls, alpha, beta, gamma, epsilon):
        """``lam = mu = 2`` and ``delta = gamma``."""
        return cls(alpha, beta, gamma, gamma, 2.0, 2.0, epsilon)

    @classmethod
    def c3(cls, alpha, beta, gamma):
        return cls(alpha, beta, gamma, gamma, 2.0, 2.0, 0.0)

    @classmethod
    def c2(cls, alpha, beta, gamma, mu, epsilon=0.0):
        """Derive ``lam`` and ``delta`` from ``mu`` through the linkage."""
        if not mu > 1:
            raise InvalidParameterError("mu must exceed 1 for the linkage to be solvable")
        lam = 1.0 + 1.0 / (mu - 1.0)
        return cls(alpha, beta, gamma, (lam - 1.0) * gamma, lam, mu, epsilon)

    def linkage_checks(self) -> list["Check"]:
        return [
            Check("min(1+gamma*alpha, 1+delta*beta) > 0",
                  min(1 + self.gamma * self.alpha, 1 + self.delta * self.beta), "strict"),
            Check("(lam-1)(mu-1) = 1", (self.lam - 1) * (self.mu - 1) - 1, "eq"),
            Check("delta = (lam-1)*gamma", self.delta - (self.lam - 1) * self.gamma, "eq"),
        ]

    def require_linkage(self):
        bad = [c for c in self.linkage_checks() if not c.passed]
        if bad:
            raise InvalidParameterError(
                "parameter linkage violated: " + "; ".join(f"{c.name} (slack {c.slack:.3g})" for c in bad)
            )


@dataclass(frozen=True)
class Check:
    """One named condition.

    ``kind`` is ``strict`` (slack > 0), ``nonstrict`` (slack >= -EQ_TOL) or
    ``eq`` (slack is the signed defect, |slack| <= EQ_TOL).
    """

    name: str
    slack: float
    kind: str = "strict"

    @property
    def passed(self) -> bool:
        if math.isnan(self.slack):
            return False
        if self.kind == "strict":
            return self.slack > 0
        if self.kind == "nonstrict":
            return self.slack >= -EQ_TOL
        return abs(self.slack) <= EQ_TOL

    def to_dict(self):
        return {"name": self.name, "slack": self.slack, "kind": self.kind, "passed": self.passed}


@dataclass
class ValidationReport:
    case_checked: Case
    checks: list[Check] = field(default_factory=list)

    @property
    def violated_conditions(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.violated_conditions

    def to_dict(self):
        return {
            "case_checked": self.case_checked.value,
            "passed": self.passed,
            "violated_conditions": [c.to_dict() for c in self.violated_conditions],
            "checks": [c.to_dict() for c in self.checks],
        }


def _ratio(p: DRParams) -> float:
    s = p.alpha + p.beta
    return p.gamma * p.alpha * p.beta / s if s != 0 else -math.inf


def validate(params: DRParams, case) -> ValidationReport:
    """Evaluate every inequality of ``case`` plus the linkage and report slacks."""
    case = Case(case)
    p = params
    checks = list(p.linkage_checks())
    if case in (Case.C1, Case.C3):
        checks += [
            Check("lam = 2", p.lam - 2.0, "eq"),
            Check("mu = 2", p.mu - 2.0, "eq"),
            Check("gamma = delta", p.gamma - p.delta, "eq"),
            Check("alpha + beta > 0", p.alpha + p.beta, "strict"),
        ]
        if case is Case.C1:
            checks += [
                Check("0 < epsilon < 1", min(p.epsilon, 1.0 - p.epsilon), "strict"),
                Check("gamma*alpha*beta/(alpha+beta) > epsilon - 1", _ratio(p) - (p.epsilon - 1.0), "strict"),
            ]
        else:
            checks.append(Check("gamma*alpha*beta/(alpha+beta) > -1", _ratio(p) + 1.0, "strict"))
    else:
        checks += [
            Check("alpha + beta >= 0", p.alpha + p.beta, "nonstrict"),
            Check("lam >= 1", p.lam - 1.0, "nonstrict"),
            Check("mu >= 1", p.mu - 1.0, "nonstrict"),
            Check("1 + 2*gamma*alpha > 0", 1.0 + 2.0 * p.gamma * p.alpha, "strict"),
            Check("mu >= 2 - 2*gamma*beta", p.mu - (2.0 - 2.0 * p.gamma * p.beta), "nonstrict"),
            Check("mu <= 2 + 2*gamma*alpha", 2.0 + 2.0 * p.gamma * p.alpha - p.mu, "nonstrict"),
        ]
    return ValidationReport(case, checks)


class DROperator:
    """``RR`` bound to two operator specs and a parameter tuple.

    All methods work on a single vector or a stack of vectors.
    """

    def __init__(self, spec_a: OperatorSpec, spec_b: OperatorSpec, params: DRParams):
        params.require_linkage()
        for spec, mod, nm in ((spec_a, params.alpha, "alpha"), (spec_b, params.beta, "beta")):
            if abs(spec.monotonicity_modulus - mod) > EQ_TOL * max(1.0, abs(mod)):
                raise InvalidParameterError(
                    f"params.{nm}={mod} does not match operator modulus {spec.monotonicity_modulus}"
                )
        self.spec_a = spec_a
        self.spec_b = spec_b
        self.params = params
        self._ja = spec_a.resolvent_oracle
        self._jb = spec_b.resolvent_oracle

    def j_a(self, x):
        return self._ja(self.params.gamma, x)

    def r_a(self, x):
        lam = self.params.lam
        return (1.0 - lam) * x + lam * self._ja(self.params.gamma, x)

    def j_b(self, x):
        return self._jb(self.params.delta, x)

    def apply(self, x):
        mu = self.params.mu
        y = self.r_a(x)
        return (1.0 - mu) * y + mu * self._jb(self.params.delta, y)

    __call__ = apply

    def components(self, x):
        """Return ``(J_A x, J_B R_A x, RR x)`` in one pass."""
        lam, mu = self.params.lam, self.params.mu
        ja = self._ja(self.params.gamma, x)
        ra = (1.0 - lam) * x + lam * ja
        jbra = self._jb(self.params.delta, ra)
        return ja, jbra, (1.0 - mu) * ra + mu * jbra

    def averaged(self, x, eps=None):
        eps = self.params.epsilon if eps is None else eps
        return (1.0 - eps) * x + eps * self.apply(x)

    def residual(self, x):
        return np.linalg.norm(self.apply(x) - x, axis=-1)

    def shadow(self, x):
        return self.j_a(x)


def apply_dr(spec_a, spec_b, params: DRParams, x) -> np.ndarray:
    return as_vector(DROperator(spec_a, spec_b, params).apply(as_vector(x)), "RR output")


def apply_averaged(spec_a, spec_b, params: DRParams, x) -> np.ndarray:
    return as_vector(DROperator(spec_a, spec_b, params).averaged(as_vector(x)), "T_eps output")


def residual(spec_a, spec_b, params: DRParams, x) -> float:
    """``|RR x - x|``."""
    return float(DROperator(spec_a, spec_b, params).residual(as_vector(x)))


def shadow(spec_a: OperatorSpec, params: DRParams, x) -> np.ndarray:
    from .operators import resolvent

    return resolvent(spec_a, params.gamma, x)


def lipschitz_zeta(params: DRParams, l: float) -> float:
    """Lipschitz constant of ``RR`` when ``A`` is single-valued and ``l``-Lipschitz.

    Requires the C2 regime, ``mu != 2 + 2 gamma alpha`` and ``l >= |alpha|``.
    """
    p = params
    report = validate(p, Case.C2)
    if not report.passed:
        names = ", ".join(c.name for c in report.violated_conditions)
        raise InvalidParameterError(f"zeta needs the C2 regime; violated: {names}")
    if abs(p.mu - (2.0 + 2.0 * p.gamma * p.alpha)) <= EQ_TOL:
        raise InvalidParameterError("zeta needs mu != 2 + 2*gamma*alpha")
    if not (l > 0 and l >= abs(p.alpha) - EQ_TOL):
        raise InvalidParameterError(f"zeta needs l >= |alpha| and l > 0, got l={l}")
    num = p.lam * (p.mu - 1.0) ** 2 * ((p.lam - 1.0) * (2.0 + 2.0 * p.gamma * p.alpha) - p.lam)
    den = 1.0 + 2.0 * p.gamma * p.alpha + p.gamma ** 2 * l ** 2
    return math.sqrt(max(0.0, 1.0 - num / den))
