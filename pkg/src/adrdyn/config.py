"""Experiment configuration (YAML) with a strict schema.

Unknown keys are rejected everywhere so that a typo in ``gamma`` or ``mu``
fails loudly instead of silently falling back to a default.
"""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .adr import Case, DRParams
from .dynamics import PerturbationSchedule, StepPolicy, ThetaSchedule
from .errors import ConfigError
from .problems import ProblemSpec, catalog, problem_affine, problem_quad_l1, problem_quad_quad


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class QuadQuad(_Strict):
    name: Literal["quad_quad"]
    a: float
    p: list[float]
    b: float
    q: list[float]


class QuadL1(_Strict):
    name: Literal["quad_l1"]
    a: float
    p: list[float]
    w: float


class Affine(_Strict):
    name: Literal["affine"]
    m_a: list[list[float]]
    c_a: list[float]
    m_b: list[list[float]]
    c_b: list[float]


class Catalog(_Strict):
    name: Literal["catalog"]
    label: str


ProblemConfig = Annotated[Union[QuadQuad, QuadL1, Affine, Catalog], Field(discriminator="name")]


class ParamsConfig(_Strict):
    """Explicit DR parameters.

    ``alpha``/``beta`` default to the problem's moduli.  If ``lam`` is missing
    it is derived from ``mu`` by the linkage (``lam = mu = 2`` if both are
    missing), and a missing ``delta`` becomes ``(lam - 1) * gamma``.
    """

    gamma: float
    alpha: Optional[float] = None
    beta: Optional[float] = None
    delta: Optional[float] = None
    lam: Optional[float] = None
    mu: Optional[float] = None
    epsilon: float = 0.0


class ThetaConfig(_Strict):
    kind: Literal["constant", "power", "reciprocal"] = "constant"
    value: float = 1.0
    m: float = 1.0


class PerturbationConfig(_Strict):
    kind: Literal["zero", "power_decay"] = "zero"
    p: float = 2.0
    c: float = 0.0
    direction: Optional[list[float]] = None


class StepConfig(_Strict):
    kind: Literal["fixed", "capped"] = "fixed"
    value: float = 0.1


class OutputsConfig(_Strict):
    trajectory_csv: str = "trajectory.csv"
    rate_json: str = "rate.json"
    validation_json: str = "validation.json"


class RateConfig(_Strict):
    series: Literal["auto", "residual", "distance"] = "auto"
    model: Literal["auto", "exponential", "power"] = "auto"
    window: Optional[tuple[float, float]] = None
    floor: float = 1e-10
    kappa: Optional[float] = None
    estimate_kappa: bool = False
    kappa_samples: int = 2000
    kappa_radius: Optional[float] = None


class SweepConfig(_Strict):
    axes: dict[str, list] = Field(default_factory=dict)
    jobs: int = 1
    summary_csv: str = "sweep.csv"
    write_trajectories: bool = False


class ExperimentConfig(_Strict):
    problem: ProblemConfig
    params: ParamsConfig
    cases: list[Case] = Field(default_factory=lambda: [Case.C1, Case.C2, Case.C3])
    theta: ThetaConfig = Field(default_factory=ThetaConfig)
    perturbation: PerturbationConfig = Field(default_factory=PerturbationConfig)
    t0: float = 1.0
    t_end: float = 40.0
    step: StepConfig = Field(default_factory=StepConfig)
    seed: int = 0
    u0: Optional[list[float]] = None
    stride: Optional[Union[int, Literal["all"]]] = None
    outputs: OutputsConfig = Field(default_factory=OutputsConfig)
    rate: RateConfig = Field(default_factory=RateConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)

    # -- builders --------------------------------------------------------

    def build_problem(self) -> ProblemSpec:
        pc = self.problem
        if isinstance(pc, QuadQuad):
            return problem_quad_quad(pc.a, pc.p, pc.b, pc.q)
        if isinstance(pc, QuadL1):
            return problem_quad_l1(pc.a, pc.p, pc.w)
        if isinstance(pc, Affine):
            return problem_affine(pc.m_a, pc.c_a, pc.m_b, pc.c_b)
        known = catalog()
        if pc.label not in known:
            raise ConfigError(f"unknown catalog problem {pc.label!r}; choose from {sorted(known)}")
        return known[pc.label]

    def build_params(self, problem: ProblemSpec) -> DRParams:
        pc = self.params
        alpha = problem.alpha if pc.alpha is None else pc.alpha
        beta = problem.beta if pc.beta is None else pc.beta
        lam, mu = pc.lam, pc.mu
        if lam is None and mu is None:
            lam = mu = 2.0
        elif lam is None:
            if mu == 1:
                raise ConfigError("mu = 1 leaves lam undetermined")
            lam = 1.0 + 1.0 / (mu - 1.0)
        elif mu is None:
            if lam == 1:
                raise ConfigError("lam = 1 leaves mu undetermined")
            mu = 1.0 + 1.0 / (lam - 1.0)
        delta = (lam - 1.0) * pc.gamma if pc.delta is None else pc.delta
        return DRParams(alpha, beta, pc.gamma, delta, lam, mu, pc.epsilon)

    def build_theta(self) -> ThetaSchedule:
        th = self.theta
        if th.kind == "constant":
            return ThetaSchedule.constant(th.value, self.t0)
        if th.kind == "power":
            return ThetaSchedule.power(th.m, self.t0)
        return ThetaSchedule.reciprocal(self.t0)

    def build_perturbation(self, dim: int) -> PerturbationSchedule:
        pc = self.perturbation
        if pc.kind == "zero":
            return PerturbationSchedule.zero(self.t0)
        direction = pc.direction if pc.direction is not None else np.ones(dim)
        return PerturbationSchedule.power_decay(pc.p, direction, pc.c, self.t0)

    def build_step(self) -> StepPolicy:
        return StepPolicy(self.step.kind, self.step.value)

    def initial_state(self, dim: int) -> np.ndarray:
        if self.u0 is None:
            return np.zeros(dim)
        if len(self.u0) != dim:
            raise ConfigError(f"u0 has {len(self.u0)} entries, problem dimension is {dim}")
        return np.asarray(self.u0, dtype=float)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)


def assumption_warnings(cfg: ExperimentConfig, theta: ThetaSchedule, f: PerturbationSchedule) -> list[str]:
    """Human-readable notes on standing assumptions that the config breaks."""
    out = []
    if not f.in_l1():
        out.append(f"perturbation t^-{f.p:g} is not integrable on [t0, inf): the standing assumption f in L1 fails")
    if not theta.satisfies_a1():
        out.append(f"theta kind {theta.kind!r} has inf theta = 0 on [t0, inf): assumption (A1) fails, only (A2) holds")
    if not f.iterated_integral_finite(theta):
        out.append("int theta(s) int_s^inf |f| is not finite: the O(1/sqrt(t)) regularity rate is not guaranteed")
    return out


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return parse_config(data)


def set_dotted(data: dict, dotted: str, value):
    """Set ``data['a']['b'] = value`` for ``dotted = 'a.b'``, creating sections as needed."""
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{dotted!r} does not name a config section")
    node[keys[-1]] = value

