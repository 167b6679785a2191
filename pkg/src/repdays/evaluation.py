"""Representative-day accuracy experiment.

For each clustering method and number of days K: cluster the history,
solve the expansion model on the representative days, pin the resulting
investments, re-solve operation over the full chronological history and
compare that cost with the full-horizon optimum.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .clustering import MKM, TKM, ClusteringError, cluster_days, factor_k
from .model.builder import ModelOptions, build_chronological_model, build_representative_model
from .model.solution import ExpansionPlan, extract_solution, fix_investments, plan_from_x
from .solver.bnb import MilpSolution, SolverConfig, solve_milp
from .solver.lp import solve_lp
from .solver.simplex import OPTIMAL
from .system import SystemData
from .timeseries import HourlyRecordSet, build_day_observations

log = logging.getLogger(__name__)

DEFAULT_SEEDS = 5
PRECONDITION = "precondition-failed"


class EvaluationError(RuntimeError):
    pass


@dataclass
class ExactResult:
    ct: float
    plan: ExpansionPlan
    shed_fraction: float
    wall_time: float
    status: str
    milp_objective: float
    gap: float

    @property
    def certified(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class EvaluationRow:
    method: str
    k: int
    seed: int
    ct: float = math.nan
    eps: float = math.nan
    step1_time: float = math.nan
    k1: Optional[int] = None
    k2: Optional[int] = None
    rep_objective: float = math.nan
    shed_fraction: float = math.nan
    status: str = OPTIMAL
    plan: Dict[str, Dict[str, float]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def percent_error(ct_k: float, ct_e: float) -> float:
    """Absolute deviation of ``ct_k`` from ``ct_e`` in percent of ``ct_e``."""
    if not ct_e > 0:
        raise ValueError(f"reference cost must be positive, got {ct_e!r}")
    return 100.0 * abs(ct_k - ct_e) / ct_e


def evaluate_plan(system: SystemData, history: HourlyRecordSet, plan: ExpansionPlan,
                  options: Optional[ModelOptions] = None, lp_method: str = "auto"):
    """Cost of running ``plan`` over the whole history (an LP)."""
    chrono = build_chronological_model(system, history, options)
    fixed = fix_investments(chrono, plan)
    assert not fixed.integer_indices, "pinned model must be a pure LP"
    sol = solve_lp(fixed, method=lp_method)
    if not sol.optimal:
        raise EvaluationError(f"operation re-solve ended with status {sol.status}")
    _, _, costs = extract_solution(fixed, sol)
    return sol.objective, costs


def exact_solution(system: SystemData, history: HourlyRecordSet, config: Optional[SolverConfig] = None,
                   options: Optional[ModelOptions] = None) -> ExactResult:
    """Full-horizon optimum.

    The reported cost is the optimal plan re-evaluated by the same pinned LP
    that scores every clustered plan, so an injected exact plan scores an
    error of exactly zero.
    """
    if history.n_days < 1:
        raise EvaluationError("history is empty")
    cfg = config or SolverConfig()
    t0 = time.perf_counter()
    problem = build_chronological_model(system, history, options)
    sol = solve_milp(problem, cfg)
    if sol.x is None:
        raise EvaluationError(f"full-horizon solve ended with status {sol.status}")
    plan = plan_from_x(problem, sol.x)
    ct, costs = evaluate_plan(system, history, plan, options, cfg.lp_method)
    if sol.status != OPTIMAL:
        log.warning("full-horizon solve not certified: %s (gap %.3g)", sol.status, sol.gap)
    return ExactResult(ct, plan, costs.shed_fraction, time.perf_counter() - t0, sol.status,
                       sol.objective, sol.gap)


def run_pipeline(system: SystemData, history: HourlyRecordSet, method: str, k: Optional[int] = None,
                 k1: Optional[int] = None, k2: Optional[int] = None, seed: int = 0,
                 exact: Optional[ExactResult] = None, config: Optional[SolverConfig] = None,
                 plan: Optional[ExpansionPlan] = None,
                 options: Optional[ModelOptions] = None) -> EvaluationRow:
    """Cluster, plan on representative days, score the plan on the history.

    Passing ``plan`` skips clustering and planning and only scores it.
    """
    cfg = config or SolverConfig()
    method = method.lower()
    if method == MKM and (k1 is None or k2 is None):
        k1, k2 = factor_k(int(k))
    if method == MKM:
        k = k1 * k2
    row = EvaluationRow(method, int(k) if k is not None else 0, seed, k1=k1, k2=k2)
    if plan is None:
        t0 = time.perf_counter()
        obs = build_day_observations(history)
        _, repdays = cluster_days(obs, method, k=k, k1=k1, k2=k2, seed=seed)
        problem = build_representative_model(system, repdays, options)
        sol = solve_milp(problem, cfg)
        row.step1_time = time.perf_counter() - t0
        if sol.x is None:
            row.status = sol.status
            return row
        plan = plan_from_x(problem, sol.x)
        row.rep_objective = sol.objective
        if sol.status != OPTIMAL:
            row.status = sol.status
    row.plan = plan.as_dict()
    row.ct, costs = evaluate_plan(system, history, plan, options, cfg.lp_method)
    row.shed_fraction = costs.shed_fraction
    if exact is not None:
        row.eps = percent_error(row.ct, exact.ct)
    return row


def _job(args) -> EvaluationRow:
    system, history, method, k, seed, exact, config, options = args
    try:
        return run_pipeline(system, history, method, k=k, seed=seed, exact=exact, config=config, options=options)
    except ClusteringError as exc:
        log.warning("%s K=%d seed=%d skipped: %s", method, k, seed, exc)
        k1, k2 = factor_k(k) if method == MKM else (None, None)
        return EvaluationRow(method, k, seed, k1=k1, k2=k2, status=PRECONDITION)


def run_seeds(base_seed: int, n: int) -> List[int]:
    """Seeds of a multi-seed study: ``base_seed, base_seed + 1, ...``."""
    return [base_seed + i for i in range(n)]


def evaluate_grid(system: SystemData, history: HourlyRecordSet, k_grid: Sequence[int],
                  methods: Sequence[str] = (TKM, MKM), seeds: Sequence[int] = tuple(range(DEFAULT_SEEDS)),
                  exact: Optional[ExactResult] = None, config: Optional[SolverConfig] = None,
                  options: Optional[ModelOptions] = None, jobs: int = 1) -> List[EvaluationRow]:
    """Every (method, K, seed) combination, in that nesting order."""
    for k in k_grid:
        if not 1 <= k <= history.n_days:
            raise ValueError(f"K={k} outside [1, {history.n_days}]")
    tasks = [(system, history, m, int(k), int(s), exact, config, options)
             for m in methods for k in k_grid for s in seeds]
    if jobs <= 1:
        return [_job(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_job, tasks))


# -- summaries and reports ----------------------------------------------------

@dataclass
class Summary:
    method: str
    k: int
    n_ok: int
    ct_median: float
    eps_median: float
    eps_min: float
    eps_max: float
    time_median: float


def summarize(rows: Sequence[EvaluationRow]) -> Dict[Tuple[str, int], Summary]:
    groups: Dict[Tuple[str, int], List[EvaluationRow]] = {}
    for r in rows:
        groups.setdefault((r.method, r.k), []).append(r)
    out = {}
    for key, rs in groups.items():
        ok = [r for r in rs if not math.isnan(r.ct)]
        med = lambda vals: statistics.median(vals) if vals else math.nan  # noqa: E731
        eps = [r.eps for r in ok if not math.isnan(r.eps)]
        out[key] = Summary(key[0], key[1], len(ok), med([r.ct for r in ok]), med(eps),
                           min(eps) if eps else math.nan, max(eps) if eps else math.nan,
                           med([r.step1_time for r in ok if not math.isnan(r.step1_time)]))
    return out


def _num(v: float, spec: str = ".10g") -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else format(v, spec)


def report(rows: Sequence[EvaluationRow], exact: Optional[ExactResult], out_dir: str,
           timing: str = "wall", figures: bool = True) -> Dict[str, str]:
    """Write the summary table, per-run rows and plot data; return their paths.

    ``timing="none"`` leaves every time column empty so reruns are
    byte-identical.
    """
    if not rows:
        raise ValueError("no rows to report")
    if timing not in ("wall", "none"):
        raise ValueError(f"unknown timing mode {timing!r}")
    os.makedirs(out_dir, exist_ok=True)
    show_time = timing == "wall"
    summ = summarize(rows)
    ks = sorted({k for _, k in summ})
    paths = {}

    def s(method, k, attr):
        item = summ.get((method, k))
        return getattr(item, attr) if item else math.nan

    paths["table"] = os.path.join(out_dir, "table.csv")
    with open(paths["table"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", "CT_TKM", "CT_MKM", "eps_TKM", "eps_MKM", "time_TKM", "time_MKM"])
        for k in ks:
            w.writerow([k, _num(s(TKM, k, "ct_median")), _num(s(MKM, k, "ct_median")),
                        _num(s(TKM, k, "eps_median"), ".6g"), _num(s(MKM, k, "eps_median"), ".6g"),
                        _num(s(TKM, k, "time_median"), ".4g") if show_time else "",
                        _num(s(MKM, k, "time_median"), ".4g") if show_time else ""])

    paths["runs"] = os.path.join(out_dir, "runs.csv")
    with open(paths["runs"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "K", "K1", "K2", "seed", "status", "CT", "eps", "rep_objective",
                    "shed_fraction", "time"])
        for r in rows:
            w.writerow([r.method, r.k, "" if r.k1 is None else r.k1, "" if r.k2 is None else r.k2, r.seed,
                        r.status, _num(r.ct), _num(r.eps, ".6g"), _num(r.rep_objective),
                        _num(r.shed_fraction, ".6g"), _num(r.step1_time, ".4g") if show_time else ""])

    curves = [("cost_vs_k", "ct_median", "CT"), ("error_vs_k", "eps_median", "eps")]
    if show_time:
        curves.append(("time_vs_k", "time_median", "time"))
    methods = sorted({m for m, _ in summ})
    for stem, attr, label in curves:
        path = os.path.join(out_dir, f"{stem}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            cols = ["K"] + [f"{label}_{m.upper()}" for m in methods]
            if stem == "error_vs_k":
                cols += [f"{label}_{m.upper()}_{b}" for m in methods for b in ("min", "max")]
            w.writerow(cols)
            for k in ks:
                line = [k] + [_num(s(m, k, attr)) for m in methods]
                if stem == "error_vs_k":
                    line += [_num(s(m, k, b)) for m in methods for b in ("eps_min", "eps_max")]
                w.writerow(line)
        paths[stem] = path

    if exact is not None:
        paths["exact"] = os.path.join(out_dir, "exact.csv")
        write_exact_csv(exact, paths["exact"], timing)

    if figures:
        from . import plotting
        paths.update(plotting.plot_report(summ, exact, out_dir, show_time))
    return paths


def write_exact_csv(exact: ExactResult, path: str, timing: str = "wall") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["item", "value"])
        w.writerow(["CT_E", _num(exact.ct)])
        w.writerow(["milp_objective", _num(exact.milp_objective)])
        w.writerow(["gap", _num(exact.gap, ".6g")])
        w.writerow(["status", exact.status])
        w.writerow(["shed_fraction", _num(exact.shed_fraction, ".6g")])
        w.writerow(["wall_time", _num(exact.wall_time, ".4g") if timing == "wall" else ""])
        for cat, vals in exact.plan.as_dict().items():
            for ent, v in vals.items():
                w.writerow([f"plan.{cat}.{ent}", _num(float(v), ".9g")])
