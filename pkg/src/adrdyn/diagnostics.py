"""Empirical rates, predicted rates and local constants (kappa, Lipschitz)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .adr import DROperator, DRParams
from .dynamics import ThetaSchedule, Trajectory
from .errors import ArgumentError, EstimateError, FitError
from .space import as_vector

MIN_SAMPLES = 10


@dataclass
class RateReport:
    model: str  # "exponential" | "power"
    fitted_value: float
    r_squared: float
    window: tuple[float, float]
    predicted_value: Optional[float] = None
    provenance: Optional[str] = None  # kappa-based | zeta-based | sqrt-regularity
    n_samples: int = 0
    n_dropped: int = 0

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "fitted_value": self.fitted_value,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "predicted_value": self.predicted_value,
            "provenance": self.provenance,
            "n_samples": self.n_samples,
            "n_dropped": self.n_dropped,
        }


def _window_of(times, window):
    times = np.asarray(times, dtype=float)
    if window is None:
        lo, hi = float(times[0]), float(times[-1])
        return lo + 0.5 * (hi - lo), hi
    return float(window[0]), float(window[1])


def _fit_line(x, y, model, window, n_dropped) -> RateReport:
    if len(x) < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} positive samples in window, got {len(x)}")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RateReport(model, float(-slope), r2, window, n_samples=len(x), n_dropped=n_dropped)


def _select(times, values, window, floor):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = _window_of(times, window)
    inside = (times >= lo) & (times <= hi)
    keep = inside & (values > floor)
    return times[keep], values[keep], (lo, hi), int(np.sum(inside & ~keep))


def fit_exponential_series(times, values, window=None, floor: float = 0.0) -> RateReport:
    """Least squares on ``(t, ln y)``; the fitted value is the decay rate ``-slope``.

    Values at or below ``floor`` are dropped and counted.
    """
    t, y, win, dropped = _select(times, values, window, floor)
    return _fit_line(t, np.log(y), "exponential", win, dropped)


def fit_power_series(times, values, window=None, floor: float = 0.0) -> RateReport:
    """Least squares on ``(ln t, ln y)``; 0.5 means ``t**-0.5``."""
    t, y, win, dropped = _select(times, values, window, floor)
    if len(t) and np.any(t <= 0):
        raise FitError("power-law fit needs positive times")
    return _fit_line(np.log(t), np.log(y), "power", win, dropped)


def fit_exponential(traj: Trajectory, series: str = "residual", window=None, floor: float = 0.0) -> RateReport:
    return fit_exponential_series(traj.times, traj.series(series), window, floor)


def fit_power(traj: Trajectory, series: str = "residual", window=None, floor: float = 0.0) -> RateReport:
    return fit_power_series(traj.times, traj.series(series), window, floor)


@dataclass
class SubregularityEstimate:
    kappa_hat: float
    radius: float
    samples: int
    anchor: np.ndarray
    resampled: int = 0

    def to_dict(self) -> dict:
        return {"kappa_hat": self.kappa_hat, "radius": self.radius, "samples": self.samples,
                "anchor": self.anchor.tolist(), "resampled": self.resampled}


def _ball_samples(rng, center, radius, n):
    dim = center.shape[-1]
    d = rng.standard_normal((n, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dim)
    return center + r[:, None] * d


def estimate_kappa(spec_a, spec_b, params: DRParams, anchor, radius: float, n_samples: int,
                   seed: int = 0, fix_distance: Optional[Callable] = None) -> SubregularityEstimate:
    """Largest observed ``dist(z, Fix RR) / |RR z - z|`` over ``z`` in a ball around ``anchor``.

    Without ``fix_distance`` the fixed point is assumed unique, so the
    distance is ``|z - anchor|``.  Samples with residual <= 1e-14 are redrawn,
    at most ``10 * n_samples`` draws in total.
    """
    op = DROperator(spec_a, spec_b, params)
    anchor = as_vector(anchor, "anchor")
    if float(op.residual(anchor)) > 1e-12:
        raise EstimateError("anchor is not a fixed point (residual > 1e-12)")
    if not (radius > 0 and n_samples >= 1):
        raise ArgumentError("radius must be positive and n_samples >= 1")
    rng = np.random.default_rng(seed)
    dist = fix_distance or (lambda z: np.linalg.norm(z - anchor, axis=-1))
    ratios: list[np.ndarray] = []
    have, draws, rejected = 0, 0, 0
    budget = 10 * n_samples
    while have < n_samples:
        if draws >= budget:
            raise EstimateError(f"only {have} of {n_samples} samples had residual > 1e-14")
        n = min(n_samples - have, budget - draws)
        z = _ball_samples(rng, anchor, radius, n)
        draws += n
        res = np.linalg.norm(op.apply(z) - z, axis=-1)
        ok = res > 1e-14
        rejected += int(np.sum(~ok))
        if np.any(ok):
            ratios.append(np.asarray(dist(z[ok])) / res[ok])
            have += int(np.sum(ok))
    return SubregularityEstimate(float(np.max(np.concatenate(ratios))), float(radius), n_samples, anchor, rejected)


@dataclass
class PredictedRates:
    """Guaranteed rates implied by kappa and/or zeta for a given schedule."""

    theta: ThetaSchedule
    kappa: Optional[float] = None
    zeta: Optional[float] = None
    theta_inf: Optional[float] = None

    def kappa_exponent(self, t):
        """``(1/(2 kappa^2)) int_{t0}^t theta``: ``dist = O(exp(-kappa_exponent(t)))``."""
        if self.kappa is None:
            raise ArgumentError("no kappa supplied")
        return self.theta.integral(t) / (2.0 * self.kappa ** 2)

    @property
    def kappa_rate(self) -> Optional[float]:
        """Constant exponential rate ``Theta/(2 kappa^2)`` for constant theta."""
        if self.kappa is None or self.theta.kind != "constant":
            return None
        return self.theta.value / (2.0 * self.kappa ** 2)

    @property
    def kappa_rate_lower(self) -> Optional[float]:
        """``inf theta / (2 kappa^2)``: a rate valid for any schedule bounded below."""
        if self.kappa is None or self.theta_inf is None:
            return None
        return self.theta_inf / (2.0 * self.kappa ** 2)

    @property
    def power_exponent(self) -> Optional[float]:
        """``1/(2 kappa^2)`` for reciprocal theta (``dist = O(t**-exponent)``)."""
        if self.kappa is None or self.theta.kind != "reciprocal":
            return None
        return 1.0 / (2.0 * self.kappa ** 2)

    @property
    def zeta_rate(self) -> Optional[float]:
        """``(1 - zeta)/2 * inf theta``."""
        if self.zeta is None or self.theta_inf is None:
            return None
        return 0.5 * (1.0 - self.zeta) * self.theta_inf

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "zeta": self.zeta, "theta_inf": self.theta_inf,
                "kappa_rate": self.kappa_rate, "kappa_rate_lower": self.kappa_rate_lower,
                "power_exponent": self.power_exponent, "zeta_rate": self.zeta_rate}


def predict_rate(params: Optional[DRParams], theta: ThetaSchedule, kappa: Optional[float] = None,
                 zeta: Optional[float] = None, t_end: Optional[float] = None) -> PredictedRates:
    """Collect the rates guaranteed by ``kappa`` and ``zeta``.

    The infimum of theta is taken over ``[t0, t_end]`` when ``t_end`` is given.
    ``params`` is accepted for symmetry with the other entry points.
    """
    if kappa is None and zeta is None:
        raise ArgumentError("supply kappa, zeta or both")
    inf = theta.horizon_infimum(t_end) if t_end is not None else theta.infimum()
    return PredictedRates(theta, kappa, zeta, inf)


def empirical_lipschitz(op: Callable, center, radius: float, n_pairs: int, seed: int = 0) -> float:
    """Max of ``|op(x) - op(y)| / |x - y|`` over random pairs in a ball.

    ``op`` is called on one vector at a time; coincident pairs are redrawn.
    """
    if n_pairs < 1:
        raise ArgumentError("n_pairs must be >= 1")
    center = as_vector(center, "center")
    rng = np.random.default_rng(seed)
    best = 0.0
    done = 0
    while done < n_pairs:
        x, y = _ball_samples(rng, center, radius, 2)
        gap = float(np.linalg.norm(x - y))
        if gap == 0.0:
            continue
        best = max(best, float(np.linalg.norm(np.asarray(op(x)) - np.asarray(op(y)))) / gap)
        done += 1
    return best


@dataclass
class BoundReport:
    k_empirical: float
    k_last_quarter: float
    theta_inf: float
    passed: bool
    samples: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"k_empirical": self.k_empirical, "k_last_quarter": self.k_last_quarter,
                "theta_inf": self.theta_inf, "passed": self.passed}


def check_regularity_bound(traj: Trajectory, theta: ThetaSchedule) -> BoundReport:
    """Empirical constant ``K = sup residual^2 * inf(theta) * (t - t0)``.

    Passes when K is finite and the last quarter of the run does not exceed
    1.1 times the overall supremum.
    """
    t = traj.times
    t0, t_end = float(t[0]), float(t[-1])
    inf = theta.horizon_infimum(t_end)
    k = traj.residuals ** 2 * inf * (t - t0)
    overall = float(np.max(k))
    late = t >= t0 + 0.75 * (t_end - t0)
    last = float(np.max(k[late])) if np.any(late) else 0.0
    ok = math.isfinite(overall) and last <= 1.1 * overall + 1e-300
    return BoundReport(overall, last, inf, bool(ok), k.tolist())


def weighted_residual_integral(traj: Trajectory, theta: ThetaSchedule) -> float:
    """Trapezoidal ``int theta(t) |RR u - u|^2 dt`` over the recorded samples."""
    t = traj.times
    y = np.asarray(theta(t), dtype=float) * traj.residuals ** 2
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))
