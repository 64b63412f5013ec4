"""CSV/JSON serialisation with atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import Trajectory

BASE_COLUMNS = ["t", "residual", "dist_to_solution", "shadow_err"]


def fmt(x) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload: dict):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def trajectory_csv_text(traj: Trajectory) -> str:
    n = traj.dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BASE_COLUMNS + [f"state_{i}" for i in range(n)])
    dist = traj.distances() if traj.anchor is not None else None
    serr = traj.shadow_errors() if traj.solution is not None else None
    for i, t in enumerate(traj.times):
        w.writerow([
            fmt(t),
            fmt(traj.residuals[i]),
            "" if dist is None else fmt(dist[i]),
            "" if serr is None else fmt(serr[i]),
            *(fmt(v) for v in traj.states[i]),
        ])
    return buf.getvalue()


def write_trajectory_csv(path, traj: Trajectory):
    atomic_write_text(path, trajectory_csv_text(traj))


@dataclass
class TrajectoryTable:
    """A trajectory CSV read back from disk."""

    times: np.ndarray
    residuals: np.ndarray
    distances: Optional[np.ndarray]
    shadow_errors: Optional[np.ndarray]
    states: np.ndarray

    def series(self, name: str) -> np.ndarray:
        if name == "residual":
            return self.residuals
        col = self.distances if name == "distance" else self.shadow_errors if name == "shadow_err" else None
        if col is None:
            raise ValueError(f"series {name!r} is not available in this trajectory")
        return col


def read_trajectory_csv(path) -> TrajectoryTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:4] != BASE_COLUMNS:
        raise ValueError(f"{path}: header must start with {','.join(BASE_COLUMNS)}")
    header, body = rows[0], rows[1:]
    n_state = len(header) - 4
    if [h for h in header[4:]] != [f"state_{i}" for i in range(n_state)]:
        raise ValueError(f"{path}: state columns must be state_0..state_{{n-1}}")

    def column(j):
        vals = [r[j] for r in body]
        if all(v == "" for v in vals):
            return None
        return np.array([float(v) for v in vals])

    states = np.array([[float(v) for v in r[4:]] for r in body]).reshape(len(body), n_state)
    return TrajectoryTable(column(0), column(1), column(2), column(3), states)
