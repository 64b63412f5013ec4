"""Command line experiment runner.

Exit codes: 0 ok, 1 validation failed, 2 config error, 3 integration error,
4 fit error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io as _io
import itertools
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .adr import Case, DROperator, lipschitz_zeta, validate
from .config import ExperimentConfig, assumption_warnings, load_config, parse_config, set_dotted
from .diagnostics import estimate_kappa, fit_exponential_series, fit_power_series, predict_rate
from .dynamics import integrate
from .errors import AdrError, ConfigError, FitError
from .io import atomic_write_text, fmt, read_trajectory_csv, write_json, write_trajectory_csv

log = logging.getLogger("adrdyn")

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_FIT = 0, 1, 2, 3, 4


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code


def _resolve(out_dir, name) -> Path:
    p = Path(name)
    return p if p.is_absolute() else Path(out_dir) / p


def _setup(cfg: ExperimentConfig):
    """Build problem, params and schedules; any failure is a config error."""
    try:
        problem = cfg.build_problem()
        params = cfg.build_params(problem)
        theta = cfg.build_theta()
        f = cfg.build_perturbation(problem.dim)
        policy = cfg.build_step()
        u0 = cfg.initial_state(problem.dim)
    except (AdrError, ValueError) as exc:
        raise _Exit(EXIT_CONFIG, f"config error: {exc}") from exc
    return problem, params, theta, f, policy, u0


def _validation_payload(cfg, params, theta, f):
    reports = [validate(params, c) for c in cfg.cases]
    warns = assumption_warnings(cfg, theta, f)
    payload = {
        "reports": [r.to_dict() for r in reports],
        "warnings": warns,
        "assumptions": {
            "A1": theta.satisfies_a1(),
            "A2": theta.satisfies_a2(),
            "f_in_L1": f.in_l1(),
            "iterated_integral_finite": f.iterated_integral_finite(theta),
        },
    }
    for w in warns:
        log.warning(w)
    return reports, payload


def _anchor(problem, params):
    try:
        u_hat = problem.fixed_point(params.gamma)
    except AdrError:
        return None
    op = DROperator(problem.spec_a, problem.spec_b, params)
    return u_hat if float(op.residual(u_hat)) <= 1e-9 * max(1.0, float(np.linalg.norm(u_hat))) else None


def _simulate(cfg: ExperimentConfig):
    problem, params, theta, f, policy, u0 = _setup(cfg)
    try:
        anchor = _anchor(problem, params)
        traj = integrate(problem.spec_a, problem.spec_b, params, theta, f, u0, cfg.t_end, policy,
                         stride=cfg.stride, anchor=anchor, solution=problem.analytic_solution)
    except AdrError as exc:
        raise _Exit(EXIT_INTEGRATION, f"integration failed: {exc}") from exc
    return problem, params, theta, traj


# -- commands ------------------------------------------------------------


def cmd_validate(cfg: ExperimentConfig, out_dir) -> int:
    problem, params, theta, f, _, _ = _setup(cfg)
    reports, payload = _validation_payload(cfg, params, theta, f)
    write_json(_resolve(out_dir, cfg.outputs.validation_json), payload)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VALIDATION


def cmd_run(cfg: ExperimentConfig, out_dir, force: bool = False) -> int:
    _, params, theta, f, _, _ = _setup(cfg)
    reports, payload = _validation_payload(cfg, params, theta, f)
    write_json(_resolve(out_dir, cfg.outputs.validation_json), payload)
    if not force and not any(r.passed for r in reports):
        failed = ", ".join(r.case_checked.value for r in reports)
        raise _Exit(EXIT_VALIDATION, f"no requested case passes ({failed}); use --force to run anyway")
    _, _, _, traj = _simulate(cfg)
    write_trajectory_csv(_resolve(out_dir, cfg.outputs.trajectory_csv), traj)
    return EXIT_OK


def _rate_choices(cfg, theta, has_distance):
    series = cfg.rate.series
    if series == "auto":
        series = "distance" if has_distance else "residual"
    model = cfg.rate.model
    if model == "auto":
        model = "power" if theta.kind == "reciprocal" else "exponential"
    return series, model


def rate_report(cfg: ExperimentConfig, times, values, has_distance, states) -> dict:
    """Fit the configured series and attach the guaranteed rates side by side."""
    problem, params, theta, _, _, _ = _setup(cfg)
    series, model = _rate_choices(cfg, theta, has_distance)
    scale = max(1.0, float(np.max(np.abs(states)))) if states.size else 1.0
    fit = fit_power_series if model == "power" else fit_exponential_series
    report = fit(times, values, cfg.rate.window, cfg.rate.floor * scale)
    t_end = float(times[-1])

    zeta = None
    l = problem.spec_a.lipschitz_const
    if l is not None and l > 0 and validate(params, Case.C2).passed:
        try:
            zeta = lipschitz_zeta(params, l)
        except AdrError:
            zeta = None
    kappa, kappa_hat = cfg.rate.kappa, None
    if kappa is None and cfg.rate.estimate_kappa:
        anchor = _anchor(problem, params)
        if anchor is None:
            raise _Exit(EXIT_CONFIG, "kappa estimation needs a problem with a known fixed point")
        radius = cfg.rate.kappa_radius or max(1.0, float(np.linalg.norm(cfg.initial_state(problem.dim) - anchor)))
        try:
            est = estimate_kappa(problem.spec_a, problem.spec_b, params, anchor, radius,
                                 cfg.rate.kappa_samples, cfg.seed)
        except AdrError as exc:
            raise _Exit(EXIT_FIT, f"kappa estimation failed: {exc}") from exc
        kappa = kappa_hat = est.kappa_hat

    preds = predict_rate(params, theta, kappa, zeta, t_end) if (kappa or zeta) else None
    if model == "power" and series == "residual" and theta.kind != "reciprocal":
        report.predicted_value, report.provenance = 0.5, "sqrt-regularity"
    elif model == "power" and preds is not None and preds.power_exponent is not None:
        report.predicted_value, report.provenance = preds.power_exponent, "kappa-based"
    elif model == "exponential" and series == "distance" and preds is not None:
        if preds.zeta_rate is not None:
            report.predicted_value, report.provenance = preds.zeta_rate, "zeta-based"
        elif preds.kappa_rate_lower is not None:
            report.predicted_value, report.provenance = preds.kappa_rate_lower, "kappa-based"

    out = report.to_dict()
    out.update({
        "series": series,
        "zeta": zeta,
        "kappa": kappa,
        "kappa_hat": kappa_hat,
        "theta_inf": theta.horizon_infimum(t_end),
        "predicted_zeta_rate": preds.zeta_rate if preds else None,
        "predicted_kappa_rate": preds.kappa_rate_lower if preds else None,
        "predicted_power_exponent": preds.power_exponent if preds else None,
    })
    return out


def cmd_rate(cfg: ExperimentConfig, out_dir, trajectory=None) -> int:
    path = Path(trajectory) if trajectory else _resolve(out_dir, cfg.outputs.trajectory_csv)
    try:
        table = read_trajectory_csv(path)
    except (OSError, ValueError) as exc:
        raise _Exit(EXIT_CONFIG, f"cannot read trajectory {path}: {exc}") from exc
    problem_theta = cfg.build_theta()
    series, _ = _rate_choices(cfg, problem_theta, table.distances is not None)
    try:
        values = table.series(series)
    except ValueError as exc:
        raise _Exit(EXIT_CONFIG, str(exc)) from exc
    try:
        payload = rate_report(cfg, table.times, values, table.distances is not None, table.states)
    except FitError as exc:
        raise _Exit(EXIT_FIT, f"fit failed: {exc}") from exc
    write_json(_resolve(out_dir, cfg.outputs.rate_json), payload)
    return EXIT_OK


def _run_cell(data: dict, out_dir: str, index: int, write_traj: bool) -> dict:
    row = {"status": "ok", "final_residual": "", "model": "", "fitted_rate": "", "r_squared": "",
           "fitted_rate_early": "", "fitted_rate_late": "", "wall_clock": "", "error": ""}
    wall = time.perf_counter()
    try:
        cfg = parse_config(data)
        _, _, theta, traj = _simulate(cfg)
        row["final_residual"] = fmt(traj.final_residual)
        has_dist = traj.anchor is not None
        series, model = _rate_choices(cfg, theta, has_dist)
        values = traj.series(series)
        scale = max(1.0, float(np.max(np.abs(traj.states))))
        fit = fit_power_series if model == "power" else fit_exponential_series
        row["model"] = model
        try:
            rep = fit(traj.times, values, cfg.rate.window, cfg.rate.floor * scale)
            row.update(fitted_rate=fmt(rep.fitted_value), r_squared=fmt(rep.r_squared))
        except FitError as exc:
            # the run itself succeeded; a series that hit the floor early is not a cell failure
            row["error"] = f"FitError: {exc}"
        if model == "exponential":
            t0, t1 = traj.times[0], traj.times[-1]
            mid = t0 + 0.5 * (t1 - t0)
            for key, win in (("fitted_rate_early", (t0, mid)), ("fitted_rate_late", (mid, t1))):
                try:
                    row[key] = fmt(fit_exponential_series(traj.times, values, win, cfg.rate.floor * scale).fitted_value)
                except FitError:
                    pass
        if write_traj:
            write_trajectory_csv(Path(out_dir) / f"cell_{index:03d}.csv", traj)
    except _Exit as exc:
        row.update(status="failed", error=str(exc))
    except (AdrError, ValueError) as exc:
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    row["wall_clock"] = fmt(time.perf_counter() - wall)
    return row


def cmd_sweep(cfg: ExperimentConfig, out_dir, jobs=None) -> int:
    """Run the Cartesian product of ``sweep.axes``; one summary row per cell."""
    axes = cfg.sweep.axes
    names = list(axes)
    base = cfg.model_dump(mode="json")
    base["sweep"] = {"axes": {}}
    cells = []
    for combo in itertools.product(*(axes[n] for n in names)):
        data = copy.deepcopy(base)
        for name, value in zip(names, combo):
            set_dotted(data, name, value)
        cells.append((combo, data))
    jobs = jobs or cfg.sweep.jobs
    args = [(data, str(out_dir), i, cfg.sweep.write_trajectories) for i, (_, data) in enumerate(cells)]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, *zip(*args)))
    else:
        rows = [_run_cell(*a) for a in args]

    buf = _io.StringIO()
    cols = ["cell"] + names + list(rows[0]) if rows else ["cell"] + names
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i, ((combo, _), row) in enumerate(zip(cells, rows)):
        w.writerow([i, *combo, *row.values()])
    atomic_write_text(_resolve(out_dir, cfg.sweep.summary_csv), buf.getvalue())
    return EXIT_OK if any(r["status"] == "ok" for r in rows) else EXIT_INTEGRATION


# -- entry point ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adrdyn", description="Adaptive Douglas-Rachford dynamics experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("validate", "check parameter regimes C1/C2/C3"),
                        ("run", "integrate a trajectory and write CSV"),
                        ("rate", "fit convergence rates of a trajectory CSV"),
                        ("sweep", "run a parameter grid")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--out", default=".", help="directory for relative output paths")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--force", action="store_true", help="run even if no requested case passes")
        if name == "rate":
            p.add_argument("--trajectory", default=None, help="trajectory CSV (default: outputs.trajectory_csv)")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=None, help="worker processes for independent cells")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            raise _Exit(EXIT_CONFIG, str(exc)) from exc
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        out_dir = Path(args.out)
        if args.command == "validate":
            return cmd_validate(cfg, out_dir)
        if args.command == "run":
            return cmd_run(cfg, out_dir, args.force)
        if args.command == "rate":
            return cmd_rate(cfg, out_dir, args.trajectory)
        return cmd_sweep(cfg, out_dir, args.jobs)
    except _Exit as exc:
        if str(exc):
            print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
