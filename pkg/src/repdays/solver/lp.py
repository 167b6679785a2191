"""LP relaxation solves behind one interface.

``method="simplex"`` runs the in-package two-phase simplex,
``method="highs"`` delegates to SciPy's HiGHS binding, and ``"auto"`` picks
the simplex for small problems and HiGHS above ``AUTO_SIMPLEX_LIMIT`` rows.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import simplex
from .simplex import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED

log = logging.getLogger(__name__)

AUTO_SIMPLEX_LIMIT = 250


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray]
    objective: float
    max_residual: float = math.nan
    max_bound_violation: float = math.nan
    duals: Optional[np.ndarray] = None
    dual_bound: float = math.nan
    iterations: int = 0
    method: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class LpArrays:
    """Array view of a problem, shared by every LP solve in a B&B run."""

    A: sparse.csr_matrix
    senses: Sequence[str]
    b: np.ndarray
    c: np.ndarray
    c0: float
    lb: np.ndarray
    ub: np.ndarray

    @classmethod
    def from_problem(cls, problem) -> "LpArrays":
        lb, ub = problem.bounds()
        return cls(problem.matrix(), problem.senses(), problem.rhs(),
                   problem.objective_vector(), problem.objective_constant, lb, ub)


def relative_residual(A, senses, b, x) -> float:
    ax = A @ x
    scale = np.maximum(1.0, np.maximum(np.abs(b), abs(A) @ np.abs(x)))
    miss = np.zeros_like(b)
    for i, s in enumerate(senses):
        if s == "<=":
            miss[i] = max(0.0, ax[i] - b[i])
        elif s == ">=":
            miss[i] = max(0.0, b[i] - ax[i])
        else:
            miss[i] = abs(ax[i] - b[i])
    return float((miss / scale).max()) if len(b) else 0.0


def dual_bound(arr: LpArrays, y: np.ndarray, tol: float = 1e-9) -> float:
    """Lagrangian lower bound ``b'y + sum_j min(d_j l_j, d_j u_j)``.

    Returns ``-inf`` when a reduced cost pushes toward an infinite bound or a
    row price has the wrong sign for its sense.
    """
    d = arr.c - arr.A.T @ y
    scale = max(1.0, float(np.abs(arr.c).max()) if arr.c.size else 1.0)
    total = float(arr.b @ y) + arr.c0
    for i, s in enumerate(arr.senses):
        if s == "<=" and y[i] > tol * scale:
            return -math.inf
        if s == ">=" and y[i] < -tol * scale:
            return -math.inf
    for j, dj in enumerate(d):
        if abs(dj) <= tol * scale:
            continue
        bound = arr.lb[j] if dj > 0 else arr.ub[j]
        if not math.isfinite(bound):
            return -math.inf
        total += dj * bound
    return total


def _highs(arr: LpArrays, time_limit: Optional[float]):
    A = arr.A
    senses = np.asarray(arr.senses)
    le = senses == "<="
    ge = senses == ">="
    eq = senses == "="
    ub_rows = np.flatnonzero(le | ge)
    sign = np.where(ge[ub_rows], -1.0, 1.0)
    A_ub = sparse.diags(sign) @ A[ub_rows] if ub_rows.size else None
    b_ub = sign * arr.b[ub_rows] if ub_rows.size else None
    eq_rows = np.flatnonzero(eq)
    A_eq = A[eq_rows] if eq_rows.size else None
    b_eq = arr.b[eq_rows] if eq_rows.size else None
    bounds = np.column_stack([arr.lb, arr.ub])
    bounds = [(None if not math.isfinite(lo) else lo, None if not math.isfinite(hi) else hi)
              for lo, hi in bounds]
    options = {"presolve": True}
    if time_limit is not None:
        options["time_limit"] = time_limit
    res = linprog(arr.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs", options=options)
    status = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, ITERATION_LIMIT)
    if status != OPTIMAL:
        return status, None, None, int(getattr(res, "nit", 0) or 0)
    y = np.zeros(len(arr.b))
    if ub_rows.size:
        y[ub_rows] = sign * res.ineqlin.marginals
    if eq_rows.size:
        y[eq_rows] = res.eqlin.marginals
    return status, np.asarray(res.x, dtype=float), y, int(res.nit)


def solve_arrays(arr: LpArrays, method: str = "auto",
                 time_limit: Optional[float] = None,
                 max_iter: Optional[int] = None) -> LpSolution:
    if method == "auto":
        method = "simplex" if len(arr.b) <= AUTO_SIMPLEX_LIMIT else "highs"
    if method == "simplex":
        r = simplex.solve(arr.A, arr.senses, arr.b, arr.c, arr.lb, arr.ub, max_iter=max_iter)
        status, x, y, iters = r.status, r.x, r.duals, r.iterations
    elif method == "highs":
        status, x, y, iters = _highs(arr, time_limit)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if status != OPTIMAL:
        return LpSolution(status, None, math.nan, iterations=iters, method=method)
    obj = float(arr.c @ x) + arr.c0
    resid = relative_residual(arr.A, arr.senses, arr.b, x)
    bviol = float(np.max(np.concatenate([arr.lb - x, x - arr.ub, [0.0]])))
    return LpSolution(OPTIMAL, x, obj, resid, bviol, y, dual_bound(arr, y), iters, method)


def solve_lp(problem, method: str = "auto", time_limit: Optional[float] = None,
             max_iter: Optional[int] = None) -> LpSolution:
    """Solve the continuous relaxation of ``problem``."""
    return solve_arrays(LpArrays.from_problem(problem), method, time_limit, max_iter)
