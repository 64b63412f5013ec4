"""Relaxation schedules, perturbations and the explicit Euler trajectory driver.

The continuous system is

    du/dt = theta(t) [RR u(t) - u(t)] + f(t),   u(t0) = u0.

One Euler step of size ``dt_k`` reads

    u_{k+1} = (1 - eps_k) u_k + eps_k RR(u_k) + dt_k f(t_k),   eps_k = theta(t_k) dt_k,

which is an inexact Krasnosel'skii-Mann step.  :func:`integrate` and
:func:`km_iterate` share the update so that aligned inputs give bitwise-equal
iterates.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .adr import DROperator, DRParams
from .errors import DimensionError, InvalidParameterError, NonFiniteError, StepPolicyError
from .operators import OperatorSpec
from .space import as_vector

EPS_CAP = 0.9
MAX_STEPS = 10_000_000
DENSE_STEPS = 1000
LOG_RATIO = 1.01


@dataclass(frozen=True)
class ThetaSchedule:
    """``theta(t)``: constant ``value``, power ``t**m`` or reciprocal ``1/t``."""

    kind: str
    value: float = 1.0
    m: float = 0.0
    t0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "power", "reciprocal"):
            raise InvalidParameterError(f"unknown theta kind {self.kind!r}")
        if not self.t0 > 0:
            raise InvalidParameterError("t0 must be positive")
        if self.kind == "constant" and not self.value > 0:
            raise InvalidParameterError("constant theta must be positive")
        if self.kind == "power" and not self.m > -1:
            raise InvalidParameterError("power theta needs m > -1")

    @classmethod
    def constant(cls, value=1.0, t0=1.0):
        return cls("constant", value=value, t0=t0)

    @classmethod
    def power(cls, m, t0=1.0):
        return cls("power", m=m, t0=t0)

    @classmethod
    def reciprocal(cls, t0=1.0, allow_small_t0=False):
        # t0 >= 1 keeps theta <= 1, so eps caps hold with dt <= 0.9
        if t0 < 1 and not allow_small_t0:
            raise InvalidParameterError("reciprocal theta requires t0 >= 1 (pass allow_small_t0 to override)")
        return cls("reciprocal", t0=t0)

    def __call__(self, t):
        if self.kind == "constant":
            return self.value * np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else self.value
        if self.kind == "power":
            return np.asarray(t, dtype=float) ** self.m if np.ndim(t) else float(t) ** self.m
        return 1.0 / np.asarray(t, dtype=float) if np.ndim(t) else 1.0 / float(t)

    value_at = __call__

    def integral(self, t):
        """``int_{t0}^{t} theta(s) ds`` in closed form."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            out = self.value * (t - self.t0)
        elif self.kind == "power":
            out = (t ** (self.m + 1) - self.t0 ** (self.m + 1)) / (self.m + 1)
        else:
            out = np.log(t / self.t0)
        return float(out) if out.ndim == 0 else out

    def infimum(self) -> float:
        """Infimum over the unbounded horizon ``[t0, inf)``."""
        if self.kind == "constant":
            return self.value
        if self.kind == "power":
            return self.t0 ** self.m if self.m >= 0 else 0.0
        return 0.0

    def horizon_infimum(self, t_end: float) -> float:
        """Infimum over ``[t0, t_end]``."""
        if self.kind == "constant":
            return self.value
        if self.kind == "power":
            return self.t0 ** self.m if self.m >= 0 else t_end ** self.m
        return 1.0 / t_end

    def supremum(self, t_end: float = math.inf) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "power":
            return t_end ** self.m if self.m > 0 else self.t0 ** self.m
        return 1.0 / self.t0

    def satisfies_a1(self) -> bool:
        """``inf theta > 0`` on the unbounded horizon."""
        return self.infimum() > 0

    def satisfies_a2(self) -> bool:
        """``int theta = +inf``; every supported kind diverges."""
        return True

    def describe(self) -> dict:
        d = {"kind": self.kind, "t0": self.t0}
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "power":
            d["m"] = self.m
        return d


@dataclass(frozen=True)
class PerturbationSchedule:
    """``f(t) = 0`` or ``f(t) = t**(-p) exp(-c t) direction`` with a unit direction."""

    kind: str = "zero"
    p: float = 2.0
    c: float = 0.0
    direction: Optional[np.ndarray] = None
    t0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "power_decay"):
            raise InvalidParameterError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "power_decay":
            if not self.p > 0:
                raise InvalidParameterError("power_decay needs p > 0")
            if not self.c >= 0:
                raise InvalidParameterError("power_decay needs c >= 0")
            if self.direction is None:
                raise InvalidParameterError("power_decay needs a direction")
            d = as_vector(self.direction, "direction")
            n = float(np.linalg.norm(d))
            if n == 0:
                raise InvalidParameterError("direction must be nonzero")
            object.__setattr__(self, "direction", d / n)

    @classmethod
    def zero(cls, t0=1.0):
        return cls("zero", t0=t0)

    @classmethod
    def power_decay(cls, p, direction, c=0.0, t0=1.0):
        return cls("power_decay", p=p, c=c, direction=np.asarray(direction, dtype=float), t0=t0)

    def magnitude(self, t) -> float:
        if self.kind == "zero":
            return 0.0
        return float(t) ** (-self.p) * math.exp(-self.c * float(t))

    def __call__(self, t, dim: int) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(dim)
        if self.direction.shape[-1] != dim:
            raise DimensionError(f"perturbation direction has dim {self.direction.shape[-1]}, state has {dim}")
        return self.magnitude(t) * self.direction

    def in_l1(self) -> bool:
        """Whether ``f`` is integrable on ``[t0, inf)``."""
        return self.kind == "zero" or self.c > 0 or self.p > 1

    def iterated_integral_finite(self, theta: ThetaSchedule) -> bool:
        """Whether ``int theta(s) int_s^inf |f| dtau ds`` is finite.

        Decided in closed form: with ``c > 0`` the tail decays exponentially
        and beats any polynomial theta; with ``c = 0`` the inner integral is
        ``s**(1-p)/(p-1)``, which must be integrable against theta.
        """
        if self.kind == "zero":
            return True
        if self.c > 0:
            return True
        if self.p <= 1:
            return False
        if theta.kind == "constant":
            return self.p > 2
        if theta.kind == "power":
            return self.p > theta.m + 2
        return True

    def describe(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        return {"kind": self.kind, "p": self.p, "c": self.c, "direction": self.direction.tolist()}


@dataclass(frozen=True)
class StepPolicy:
    """``fixed``: constant ``dt``; ``capped``: ``dt = eps_cap / theta(t)``."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind == "fixed":
            if not self.value > 0:
                raise InvalidParameterError("fixed step needs dt > 0")
        elif self.kind == "capped":
            if not 0 < self.value <= EPS_CAP:
                raise InvalidParameterError(f"eps_cap must lie in (0, {EPS_CAP}]")
        else:
            raise InvalidParameterError(f"unknown step policy {self.kind!r}")

    def step(self, t: float, theta_t: float) -> float:
        if not (math.isfinite(theta_t) and theta_t > 0):
            raise StepPolicyError(f"theta({t}) = {theta_t} is not a positive finite number")
        if self.kind == "capped":
            return self.value / theta_t
        if theta_t * self.value > EPS_CAP * (1 + 1e-12):
            raise StepPolicyError(
                f"theta(t)*dt = {theta_t * self.value:.6g} exceeds {EPS_CAP} at t={t:.6g}"
            )
        return self.value

    def describe(self) -> dict:
        return {"kind": self.kind, "value": self.value}


def step_policy_fixed(dt: float) -> StepPolicy:
    return StepPolicy("fixed", dt)


def step_policy_capped(eps_cap: float) -> StepPolicy:
    return StepPolicy("capped", eps_cap)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    residuals: np.ndarray
    shadows: np.ndarray
    meta: dict = field(default_factory=dict)
    anchor: Optional[np.ndarray] = None
    solution: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1])

    def distances(self) -> np.ndarray:
        """``|u(t) - anchor|`` where the anchor is the fixed point of ``RR``."""
        if self.anchor is None:
            raise InvalidParameterError("trajectory has no fixed-point anchor")
        return np.linalg.norm(self.states - self.anchor, axis=1)

    def shadow_errors(self) -> np.ndarray:
        if self.solution is None:
            raise InvalidParameterError("trajectory has no reference solution")
        return np.linalg.norm(self.shadows - self.solution, axis=1)

    def series(self, name: str) -> np.ndarray:
        if name == "residual":
            return self.residuals
        if name == "distance":
            return self.distances()
        if name == "shadow_err":
            return self.shadow_errors()
        raise InvalidParameterError(f"unknown series {name!r}")


def _km_update(u, rr_u, eps, err):
    return (1.0 - eps) * u + eps * rr_u + err


def euler_schedule(theta: ThetaSchedule, f: PerturbationSchedule, policy: StepPolicy,
                   t_end: float, dim: int, max_steps: int = MAX_STEPS
                   ) -> Iterator[tuple[float, float, float, np.ndarray]]:
    """Yield ``(t_k, dt_k, eps_k, err_k)`` for each Euler step up to ``t_end``.

    ``err_k = dt_k f(t_k)`` is the left-endpoint perturbation.  The last step
    is adjusted to land on ``t_end`` exactly.
    """
    t = theta.t0
    if not t_end > t:
        raise InvalidParameterError(f"t_end={t_end} must exceed t0={t}")
    k = 0
    while t < t_end:
        if k >= max_steps:
            raise StepPolicyError(f"exceeded {max_steps} steps before reaching t_end")
        th = float(theta(t))
        dt = policy.step(t, th)
        # absorb a sliver left by rounding so times stay strictly increasing
        last = t + dt >= t_end - 1e-9 * dt
        if last:
            dt = t_end - t
        eps = th * dt
        yield t, dt, eps, dt * f(t, dim)
        t = t_end if last else t + dt
        k += 1


def km_sequences(theta, f, policy, t_end, dim):
    """Materialise the step data :func:`integrate` would use."""
    ts, eps, errs = [], [], []
    for t, dt, e, err in euler_schedule(theta, f, policy, t_end, dim):
        ts.append(t)
        eps.append(e)
        errs.append(err)
    return np.array(ts), np.array(eps), np.array(errs).reshape(len(errs), dim)


class _Recorder:
    def __init__(self, op: DROperator, stride):
        self.op = op
        self.stride = stride
        self.next_log = DENSE_STEPS
        self.times, self.states, self.res, self.shadows = [], [], [], []
        self.last_k = -1

    def wants(self, k: int) -> bool:
        s = self.stride
        if s == "all":
            return True
        if isinstance(s, int):
            return k % s == 0
        if k < DENSE_STEPS:
            return True
        if k >= self.next_log:
            while self.next_log <= k:
                self.next_log = max(self.next_log + 1, int(self.next_log * LOG_RATIO))
            return True
        return False

    def record(self, k, t, u):
        ja, _, rr = self.op.components(u)
        self.times.append(t)
        self.states.append(u.copy())
        self.res.append(float(np.linalg.norm(rr - u)))
        self.shadows.append(ja)
        self.last_k = k

    def build(self, meta, anchor, solution) -> Trajectory:
        return Trajectory(np.array(self.times), np.array(self.states), np.array(self.res),
                          np.array(self.shadows), meta, anchor, solution)


def _check_state(u, k):
    if not np.all(np.isfinite(u)):
        raise NonFiniteError(f"state became non-finite at step {k}")


def integrate(spec_a: OperatorSpec, spec_b: OperatorSpec, params: DRParams,
              theta: ThetaSchedule, f: PerturbationSchedule, u0, t_end: float,
              policy: StepPolicy, stride=None, anchor=None, solution=None) -> Trajectory:
    """Explicit Euler integration of the adaptive DR system.

    ``stride`` is ``None`` (every step for the first 1000 steps, then
    logarithmic thinning), ``"all"`` or a positive int.  The final state is
    always recorded.
    """
    op = DROperator(spec_a, spec_b, params)
    u = as_vector(u0, "u0").copy()
    dim = u.shape[-1]
    rec = _Recorder(op, stride)
    wall = time.perf_counter()
    rec.record(0, theta.t0, u)
    k = 0
    t = theta.t0
    for t_k, dt, eps, err in euler_schedule(theta, f, policy, t_end, dim):
        u = _km_update(u, op.apply(u), eps, err)
        k += 1
        _check_state(u, k)
        t = t_k + dt if t_k + dt < t_end else t_end
        if rec.wants(k):
            rec.record(k, t, u)
    if rec.last_k != k:
        rec.record(k, t, u)
    meta = {
        "params": params.__dict__.copy(),
        "theta": theta.describe(),
        "perturbation": f.describe(),
        "policy": policy.describe(),
        "steps": k,
        "t_end": t_end,
        "wall_clock": time.perf_counter() - wall,
    }
    return rec.build(meta, None if anchor is None else as_vector(anchor),
                     None if solution is None else as_vector(solution))


def km_iterate(spec_a: OperatorSpec, spec_b: OperatorSpec, params: DRParams,
               eps_seq: Sequence[float], err_seq, u0, k_max: int,
               anchor=None, solution=None) -> Trajectory:
    """Inexact Krasnosel'skii-Mann iteration ``u+ = (1-e_k) u + e_k RR u + err_k``.

    Times are iteration indices and every iterate is recorded.
    """
    op = DROperator(spec_a, spec_b, params)
    u = as_vector(u0, "u0").copy()
    if len(eps_seq) < k_max or len(err_seq) < k_max:
        raise InvalidParameterError("eps_seq and err_seq must cover k_max steps")
    rec = _Recorder(op, "all")
    rec.record(0, 0.0, u)
    for k in range(k_max):
        u = _km_update(u, op.apply(u), float(eps_seq[k]), np.asarray(err_seq[k], dtype=float))
        _check_state(u, k + 1)
        rec.record(k + 1, float(k + 1), u)
    meta = {"params": params.__dict__.copy(), "steps": k_max}
    return rec.build(meta, None if anchor is None else as_vector(anchor),
                     None if solution is None else as_vector(solution))


def richardson_estimate(spec_a, spec_b, params, theta, f, u0, t_end, dt) -> float:
    """Discretisation-error estimate ``|u_dt(t_end) - u_{dt/2}(t_end)|`` (diagnostic only)."""
    coarse = integrate(spec_a, spec_b, params, theta, f, u0, t_end, step_policy_fixed(dt))
    fine = integrate(spec_a, spec_b, params, theta, f, u0, t_end, step_policy_fixed(dt / 2))
    return float(np.linalg.norm(coarse.final_state - fine.final_state))
