"""Best-bound branch-and-bound over LP relaxations."""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .lp import LpArrays, solve_arrays
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED

log = logging.getLogger(__name__)

GAP_LIMIT = "gap-limit"
NODE_LIMIT = "node-limit"
TIME_LIMIT = "time-limit"


@dataclass
class SolverConfig:
    int_tol: float = 1e-6
    mip_gap: float = 1e-6
    node_limit: int = 100_000
    time_limit: Optional[float] = None
    branching: str = "most-fractional"
    seed: int = 0
    lp_method: str = "auto"


@dataclass
class MilpSolution:
    status: str
    x: Optional[np.ndarray]
    objective: float
    best_bound: float
    gap: float
    nodes: int
    wall_time: float
    incumbent_trace: Optional[List[float]] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _rel_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    if not math.isfinite(bound):
        return math.inf
    return max(0.0, incumbent - bound) / max(abs(incumbent), 1e-10)


def _pick_branch(x: np.ndarray, ints: np.ndarray, tol: float) -> int:
    """Most fractional integer variable; lowest index on ties, -1 if none."""
    frac = x[ints] - np.floor(x[ints])
    score = np.minimum(frac, 1.0 - frac)
    if score.size == 0 or score.max() <= tol:
        return -1
    return int(ints[int(np.argmax(score))])


def solve_milp(problem, config: Optional[SolverConfig] = None) -> MilpSolution:
    """Minimise ``problem`` exactly up to ``config.mip_gap``.

    Nodes are explored best-bound first; ties go to the node created first,
    so the search order is fully determined by the problem data.
    """
    cfg = config or SolverConfig()
    if cfg.branching != "most-fractional":
        raise ValueError(f"unsupported branching rule {cfg.branching!r}")
    t0 = time.perf_counter()
    base = LpArrays.from_problem(problem)
    ints = np.array(problem.integer_indices, dtype=int)
    lb0 = base.lb.copy()
    ub0 = base.ub.copy()
    if ints.size:
        if not (np.all(np.isfinite(lb0[ints])) and np.all(np.isfinite(ub0[ints]))):
            raise ValueError("every integer variable needs finite bounds")
        lb0[ints] = np.ceil(lb0[ints] - cfg.int_tol)
        ub0[ints] = np.floor(ub0[ints] + cfg.int_tol)

    incumbent = math.inf
    best_x: Optional[np.ndarray] = None
    trace: List[float] = []
    heap = [(-math.inf, 0, lb0, ub0)]
    seq = 1
    nodes = 0
    status = None

    def remaining_time():
        if cfg.time_limit is None:
            return None
        return max(0.0, cfg.time_limit - (time.perf_counter() - t0))

    while heap:
        bound = heap[0][0]
        if best_x is not None and _rel_gap(incumbent, bound) <= cfg.mip_gap:
            break
        if nodes >= cfg.node_limit:
            status = NODE_LIMIT
            break
        if cfg.time_limit is not None and remaining_time() <= 0:
            status = TIME_LIMIT
            break
        parent_bound, _, lb, ub = heapq.heappop(heap)
        if best_x is not None and parent_bound >= incumbent - cfg.mip_gap * abs(incumbent):
            continue
        nodes += 1
        if np.any(lb > ub):
            continue
        arr = LpArrays(base.A, base.senses, base.b, base.c, base.c0, lb, ub)
        sol = solve_arrays(arr, cfg.lp_method, time_limit=remaining_time())
        if sol.status == INFEASIBLE:
            continue
        if sol.status == UNBOUNDED:
            if nodes == 1:
                return MilpSolution(UNBOUNDED, None, -math.inf, -math.inf, math.inf,
                                    nodes, time.perf_counter() - t0, trace)
            continue
        if sol.status != OPTIMAL:
            status = TIME_LIMIT if cfg.time_limit is not None else NODE_LIMIT
            log.warning("node LP ended with status %s", sol.status)
            break
        if best_x is not None and sol.objective >= incumbent - cfg.mip_gap * abs(incumbent):
            continue
        j = _pick_branch(sol.x, ints, cfg.int_tol)
        if j < 0:
            x = sol.x.copy()
            if ints.size:
                x[ints] = np.round(x[ints])
            obj = float(base.c @ x) + base.c0
            if obj < incumbent:
                incumbent = obj
                best_x = x
                trace.append(obj)
            continue
        v = sol.x[j]
        down_ub = ub.copy()
        down_ub[j] = math.floor(v)
        up_lb = lb.copy()
        up_lb[j] = math.ceil(v)
        heapq.heappush(heap, (sol.objective, seq, lb, down_ub))
        heapq.heappush(heap, (sol.objective, seq + 1, up_lb, ub))
        seq += 2

    wall = time.perf_counter() - t0
    best_bound = min(heap[0][0], incumbent) if heap else incumbent
    if best_x is None:
        if status is None:
            return MilpSolution(INFEASIBLE, None, math.nan, math.nan, math.inf, nodes, wall, trace)
        return MilpSolution(status, None, math.nan, best_bound, math.inf, nodes, wall, trace)
    gap = _rel_gap(incumbent, best_bound)
    if status is None:
        status = OPTIMAL if gap <= cfg.mip_gap else GAP_LIMIT
    return MilpSolution(status, best_x, incumbent, best_bound, gap, nodes, wall, trace)
