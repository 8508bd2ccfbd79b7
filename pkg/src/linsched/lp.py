"""Linear programs of the form ``min c.x  s.t.  A_ub x <= b_ub,  lo <= x <= hi``.

Solving is delegated to the HiGHS dual simplex shipped with SciPy, run single
threaded so repeated solves are bit-identical. Every reported optimum is
re-checked against the constraints before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEAS_TOL = 1e-9
OPT_TOL = 1e-6

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILED = "failed"

_HIGHS_OPTIONS = {
    "presolve": True,
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    bounds: np.ndarray  # shape (n, 2): per-variable (low, high)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        A = sp.csr_matrix(self.A_ub, dtype=float)
        b = np.asarray(self.b_ub, dtype=float)
        bounds = np.asarray(self.bounds, dtype=float)
        if bounds.ndim == 1 and bounds.size == 2:
            bounds = np.tile(bounds, (c.size, 1))
        if c.ndim != 1:
            raise ValueError("cost vector must be one-dimensional")
        if A.shape[1] != c.size:
            raise ValueError(f"A_ub has {A.shape[1]} columns, cost vector has {c.size}")
        if b.shape != (A.shape[0],):
            raise ValueError(f"b_ub has shape {b.shape}, expected ({A.shape[0]},)")
        if bounds.shape != (c.size, 2):
            raise ValueError(f"bounds has shape {bounds.shape}, expected ({c.size}, 2)")
        if np.any(bounds[:, 0] > bounds[:, 1]):
            raise ValueError("a lower bound exceeds its upper bound")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A_ub", A)
        object.__setattr__(self, "b_ub", b)
        object.__setattr__(self, "bounds", bounds)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b_ub.size

    def violation(self, x: np.ndarray) -> float:
        """Largest absolute violation of any row or bound at ``x``."""
        worst = 0.0
        if self.n_rows:
            worst = max(worst, float(np.max(self.A_ub @ x - self.b_ub)))
        worst = max(worst, float(np.max(self.bounds[:, 0] - x, initial=0.0)))
        worst = max(worst, float(np.max(x - self.bounds[:, 1], initial=0.0)))
        return worst


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray | None
    objective: float | None
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _finite(arr) -> bool:
    if sp.issparse(arr):
        arr = arr.data
    return bool(np.all(np.isfinite(arr)))


def solve(problem: LpProblem) -> LpSolution:
    if not (_finite(problem.c) and _finite(problem.A_ub) and _finite(problem.b_ub)):
        return LpSolution(FAILED, None, None, "non-finite coefficients")
    if np.any(np.isnan(problem.bounds)):
        return LpSolution(FAILED, None, None, "NaN in bounds")

    res = linprog(
        problem.c,
        A_ub=problem.A_ub if problem.n_rows else None,
        b_ub=problem.b_ub if problem.n_rows else None,
        bounds=problem.bounds,
        method="highs-ds",
        options=_HIGHS_OPTIONS,
    )
    if res.status == 2:
        return LpSolution(INFEASIBLE, None, None, res.message)
    if res.status == 3:
        return LpSolution(UNBOUNDED, None, None, res.message)
    if res.status != 0 or res.x is None:
        return LpSolution(FAILED, None, None, res.message)

    x = np.clip(res.x, problem.bounds[:, 0], problem.bounds[:, 1])
    viol = problem.violation(x)
    if viol > FEAS_TOL:
        return LpSolution(FAILED, None, None, f"solver returned a point violating constraints by {viol:.3e}")
    return LpSolution(OPTIMAL, x, float(problem.c @ x), res.message)
