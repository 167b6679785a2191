"""Typed views of a solved expansion model and investment fixing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..timeseries import HOURS
from .problem import CONTINUOUS, MilpProblem

FEAS_REL_TOL = 1e-6
FEAS_ABS_TOL = 1e-4
INT_TOL = 1e-6

_PLAN_ROLES = {"pG_bar": "generation", "xL": "lines", "mS": "storage", "pW_bar": "wind"}
_OP_ROLES = ("pG", "pL", "pLS", "pSC", "pSD", "eS", "pW", "theta")


class SolutionError(ValueError):
    def __init__(self, message: str, status: Optional[str] = None):
        super().__init__(message)
        self.status = status


@dataclass
class ExpansionPlan:
    generation: Dict[str, float] = field(default_factory=dict)   # MW
    lines: Dict[str, int] = field(default_factory=dict)          # 0/1
    storage: Dict[str, int] = field(default_factory=dict)        # units
    wind: Dict[str, float] = field(default_factory=dict)         # MW

    def items(self):
        for role, attr in _PLAN_ROLES.items():
            for ent, val in getattr(self, attr).items():
                yield role, ent, val

    def as_dict(self) -> Dict[str, Dict[str, float]]:
        return {attr: dict(getattr(self, attr)) for attr in _PLAN_ROLES.values()}

    @classmethod
    def zero(cls, system) -> "ExpansionPlan":
        return cls({g.id: 0.0 for g in system.candidate_generators},
                   {l.id: 0 for l in system.candidate_lines},
                   {s.id: 0 for s in system.candidate_storages},
                   {w.id: 0.0 for w in system.candidate_wind})


@dataclass
class OperationSchedule:
    """``values[role][entity]`` is an array shaped ``[day, hour]``."""

    values: Dict[str, Dict[str, np.ndarray]]
    weights: np.ndarray

    def __getitem__(self, role: str) -> Dict[str, np.ndarray]:
        return self.values[role]


@dataclass
class CostBreakdown:
    operation: float
    generation: float
    transmission: float
    storage: float
    wind: float
    constant: float = 0.0
    shed_mwh: float = 0.0
    demand_mwh: float = 0.0

    @property
    def investment(self) -> float:
        return self.generation + self.transmission + self.storage + self.wind

    @property
    def total(self) -> float:
        return self.operation + self.investment

    @property
    def shed_fraction(self) -> float:
        return self.shed_mwh / self.demand_mwh if self.demand_mwh > 0 else 0.0


def fix_investments(problem: MilpProblem, plan: ExpansionPlan, tol: float = 1e-9) -> MilpProblem:
    """Copy of ``problem`` with every investment variable pinned to ``plan``.

    Integer marks on pinned variables are dropped, so the result is an LP.
    """
    out = problem.copy()
    for role, ent, val in plan.items():
        key = (role, ent)
        if key not in out.index:
            if role == "xL" and ent in out.meta.get("fixed_lines", {}):
                if out.meta["fixed_lines"][ent] != val:
                    raise SolutionError(f"line {ent} is already substituted as {out.meta['fixed_lines'][ent]}")
                continue
            raise SolutionError(f"plan names unknown investment {role}:{ent}")
        v = out.variables[out.index[key]]
        val = float(val)
        if val < v.lb - tol or val > v.ub + tol:
            raise SolutionError(f"{v.name}={val:g} lies outside [{v.lb:g}, {v.ub:g}]")
        if v.is_integer and abs(val - round(val)) > tol:
            raise SolutionError(f"{v.name}={val:g} is not integral")
        val = min(max(val, v.lb), v.ub)
        if v.is_integer:
            val = float(round(val))
        v.lb = v.ub = val
        v.vtype = CONTINUOUS
    missing = [k for k, j in out.index.items()
               if k[0] in _PLAN_ROLES and out.variables[j].lb != out.variables[j].ub]
    if missing:
        raise SolutionError(f"plan does not cover investment(s) {missing[:5]}")
    if out.integer_indices:
        raise SolutionError("fixed problem still has integer variables")
    out.name = problem.name + "_fixed"
    return out


def plan_from_x(problem: MilpProblem, x) -> ExpansionPlan:
    plan = ExpansionPlan()
    for key, j in problem.index.items():
        if len(key) == 2 and key[0] in _PLAN_ROLES:
            val = float(x[j])
            if key[0] in ("xL", "mS"):
                getattr(plan, _PLAN_ROLES[key[0]])[key[1]] = int(round(val))
            else:
                getattr(plan, _PLAN_ROLES[key[0]])[key[1]] = val
    for lid, val in problem.meta.get("fixed_lines", {}).items():
        plan.lines[lid] = int(val)
    return plan


def extract_solution(problem: MilpProblem, solution,
                     rel_tol: float = FEAS_REL_TOL, abs_tol: float = FEAS_ABS_TOL):
    """Decode ``solution.x`` into (plan, schedule, costs) after checking it."""
    status = getattr(solution, "status", None)
    x = getattr(solution, "x", None)
    if x is None:
        raise SolutionError(f"no solution to extract (status {status})", status)
    x = np.asarray(x, dtype=float)
    bad = problem.check_integrality(x, INT_TOL)
    if bad:
        raise SolutionError(f"integrality violated: {bad[:3]}", status)
    viol = problem.violations(x, rel_tol, abs_tol)
    if viol:
        raise SolutionError(f"infeasible point, worst: {viol[:3]}", status)

    plan = plan_from_x(problem, x)
    R = int(problem.meta.get("days", 0))
    weights = np.asarray(problem.meta.get("weights", [1.0] * R), dtype=float)
    values: Dict[str, Dict[str, np.ndarray]] = {role: {} for role in _OP_ROLES}
    for key, j in problem.index.items():
        if len(key) == 4 and key[0] in values:
            role, ent, r, h = key
            arr = values[role].setdefault(ent, np.zeros((R, HOURS)))
            arr[r, h] = x[j]
    schedule = OperationSchedule(values, weights)

    c = problem.objective_vector()
    parts = {"operation": 0.0, "generation": 0.0, "transmission": 0.0, "storage": 0.0, "wind": 0.0}
    shed = 0.0
    dt = float(problem.meta.get("time_step", 1.0))
    for key, j in problem.index.items():
        term = c[j] * x[j]
        if len(key) == 2:
            parts[{"pG_bar": "generation", "xL": "transmission", "mS": "storage", "pW_bar": "wind"}[key[0]]] += term
        else:
            parts["operation"] += term
            if key[0] == "pLS":
                shed += weights[key[2]] * dt * x[j]
    # substituted lines carry their cost in the objective constant
    parts["transmission"] += problem.objective_constant
    costs = CostBreakdown(*(float(parts[k]) for k in ("operation", "generation", "transmission", "storage", "wind")),
                          float(problem.objective_constant), float(shed),
                          float(problem.meta.get("demand_mwh", 0.0)))
    obj = problem.evaluate(x)
    if not math.isclose(costs.total, obj, rel_tol=1e-6, abs_tol=1e-6):
        raise SolutionError(f"cost breakdown {costs.total!r} does not match objective {obj!r}", status)
    return plan, schedule, costs


def write_plan_csv(plan: ExpansionPlan, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["category", "id", "value"])
        for role, ent, val in plan.items():
            w.writerow([_PLAN_ROLES[role], ent, f"{float(val):.9g}"])


def read_plan_csv(path: str) -> ExpansionPlan:
    plan = ExpansionPlan()
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cat = row["category"]
            if cat not in _PLAN_ROLES.values():
                raise ValueError(f"{path}: unknown category {cat!r}")
            val = float(row["value"])
            getattr(plan, cat)[row["id"]] = int(round(val)) if cat in ("lines", "storage") else val
    return plan


def write_costs_csv(costs: CostBreakdown, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["item", "value"])
        for name in ("operation", "generation", "transmission", "storage", "wind", "investment", "total",
                     "shed_mwh", "demand_mwh", "shed_fraction"):
            w.writerow([name, f"{getattr(costs, name):.12g}"])


def write_schedule_csv(schedule: OperationSchedule, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variable", "id", "day", "hour", "value"])
        for role, ents in schedule.values.items():
            for ent, arr in ents.items():
                for r in range(arr.shape[0]):
                    for h in range(arr.shape[1]):
                        w.writerow([role, ent, r + 1, h + 1, f"{arr[r, h]:.9g}"])
