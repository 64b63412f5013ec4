"""Test problems ``0 in A(x) + B(x)`` with closed-form resolvents and known solutions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import InvalidProblemError, OracleScopeError
from .operators import OperatorSpec, affine_operator, prox_l1, prox_quadratic, spec_from_prox, soft_threshold
from .space import as_vector


@dataclass(frozen=True)
class ProblemSpec:
    spec_a: OperatorSpec
    spec_b: OperatorSpec
    alpha: float
    beta: float
    dim: int
    analytic_solution: Optional[np.ndarray] = None
    label: str = ""
    objective: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def fixed_point(self, gamma: float) -> np.ndarray:
        """The fixed point of ``RR`` whose shadow ``J_{gamma A}`` is the solution.

        Uses ``u = x* + gamma A(x*)``, which is the unique preimage of ``x*``
        under ``J_{gamma A}`` when ``A`` is single-valued.
        """
        if self.analytic_solution is None or self.spec_a.direct_eval is None:
            raise InvalidProblemError(f"{self.label}: fixed point needs a solution and single-valued A")
        x = self.analytic_solution
        return x + gamma * np.asarray(self.spec_a.direct_eval(x), dtype=float)

    def inclusion_residual(self) -> float:
        """``|A(x*) + B(x*)|`` when both operators are single-valued."""
        x = self.analytic_solution
        if x is None or self.spec_a.direct_eval is None or self.spec_b.direct_eval is None:
            raise InvalidProblemError("inclusion residual needs a solution and single-valued A, B")
        return float(np.linalg.norm(self.spec_a.direct_eval(x) + self.spec_b.direct_eval(x)))


def problem_quad_quad(a: float, p, b: float, q) -> ProblemSpec:
    """``min (a/2)|x-p|^2 + (b/2)|x-q|^2``; ``b`` may be negative as long as ``a + b > 0``."""
    a, b = float(a), float(b)
    p, q = as_vector(p, "p"), as_vector(q, "q")
    if p.shape != q.shape:
        raise InvalidProblemError("p and q must have the same dimension")
    if not a + b > 0:
        raise InvalidProblemError(f"a + b = {a + b} must be positive")
    phi, psi = prox_quadratic(a, p), prox_quadratic(b, q)
    x = (a * p + b * q) / (a + b)
    return ProblemSpec(spec_from_prox(phi), spec_from_prox(psi), a, b, p.shape[0], x,
                       f"quad_quad(a={a:g},b={b:g})", lambda z: phi.evaluate(z) + psi.evaluate(z))


def problem_quad_l1(a: float, p, w: float) -> ProblemSpec:
    """``min (a/2)|x-p|^2 + w|x|_1``; the solution soft-thresholds ``p`` at ``w/a``."""
    a, w = float(a), float(w)
    if not (a > 0 and w > 0):
        raise InvalidProblemError("quad_l1 needs a > 0 and w > 0")
    p = as_vector(p, "p")
    phi, psi = prox_quadratic(a, p), prox_l1(w)
    return ProblemSpec(spec_from_prox(phi), spec_from_prox(psi), a, 0.0, p.shape[0],
                       soft_threshold(p, w / a), f"quad_l1(a={a:g},w={w:g})",
                       lambda z: phi.evaluate(z) + psi.evaluate(z))


def problem_affine(m_a, c_a, m_b, c_b) -> ProblemSpec:
    """``A x = M_A x + c_A`` and ``B x = M_B x + c_B`` with symmetric matrices."""
    try:
        spec_a = affine_operator(m_a, c_a, "A")
        spec_b = affine_operator(m_b, c_b, "B")
    except ValueError as exc:
        raise InvalidProblemError(str(exc)) from exc
    ma = np.atleast_2d(np.asarray(m_a, dtype=float))
    mb = np.atleast_2d(np.asarray(m_b, dtype=float))
    if ma.shape != mb.shape:
        raise InvalidProblemError("matrices must share a shape")
    alpha, beta = spec_a.monotonicity_modulus, spec_b.monotonicity_modulus
    if alpha + beta < -1e-12:
        raise InvalidProblemError(f"alpha + beta = {alpha + beta} must be nonnegative")
    ca = np.asarray(c_a, dtype=float)
    cb = np.asarray(c_b, dtype=float)
    total = ma + mb
    if abs(np.linalg.det(total)) < 1e-14 or np.linalg.cond(total) > 1e14:
        raise InvalidProblemError("M_A + M_B is singular; no unique solution")
    x = np.linalg.solve(total, -(ca + cb))

    def objective(z):
        z = np.asarray(z, dtype=float)
        return 0.5 * np.sum(z * (z @ total.T), axis=-1) + z @ (ca + cb)

    return ProblemSpec(spec_a, spec_b, alpha, beta, ma.shape[0], x, f"affine(n={ma.shape[0]})", objective)


def brute_force_minimizer(problem: ProblemSpec, box, resolution: float) -> np.ndarray:
    """Grid argmin of the objective, refined by a bounded 1-D search per coordinate.

    ``box`` is a ``(lo, hi)`` pair applied to every coordinate or a list of
    pairs.  Only dimensions 1 and 2 are supported.
    """
    if problem.objective is None:
        raise OracleScopeError("problem has no evaluable objective")
    n = problem.dim
    if n > 2:
        raise OracleScopeError("brute force is limited to dim <= 2")
    boxes = [tuple(box)] * n if np.ndim(box) == 1 else [tuple(b) for b in box]
    cap = 200_001 if n == 1 else 2001
    axes = []
    for lo, hi in boxes:
        count = min(int(np.ceil((hi - lo) / resolution)) + 1, cap)
        axes.append(np.linspace(lo, hi, count))
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    vals = problem.objective(grid)
    x = grid[int(np.argmin(vals))].copy()
    for i, ax in enumerate(axes):
        h = ax[1] - ax[0] if len(ax) > 1 else resolution

        def line(s, i=i):
            z = x.copy()
            z[i] = s
            return float(problem.objective(z))

        lo, hi = max(boxes[i][0], x[i] - h), min(boxes[i][1], x[i] + h)
        res = optimize.minimize_scalar(line, bounds=(lo, hi), method="bounded",
                                       options={"xatol": resolution * 1e-2})
        if line(res.x) <= line(x[i]):
            x[i] = res.x
    return x


def catalog() -> dict[str, ProblemSpec]:
    """Named desk problems used by the CLI and the acceptance suite."""
    return {
        "p1": problem_quad_quad(2.0, [1.0], -0.5, [-1.0]),
        "quad_l1": problem_quad_l1(1.0, [3.0, 0.5, -2.0], 1.0),
        "affine_p1": problem_affine(2.0 * np.eye(2), [-2.0, 0.0], -0.5 * np.eye(2), [0.0, 0.5]),
        "affine_diag": problem_affine(np.diag([1.0, 2.0]), [-1.0, 1.0], np.diag([0.0, 0.5]), [0.0, -1.0]),
        "affine_coupled": problem_affine([[3.0, 1.0], [1.0, 2.0]], [1.0, -1.0],
                                         [[-0.5, 0.2], [0.2, -0.4]], [0.0, 0.3]),
    }
