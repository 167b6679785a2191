"""Expansion-planning MILP over representative days or the full history.

Variable keys are ``(role, entity)`` for investment decisions and
``(role, entity, r, h)`` for operation, with ``r`` and ``h`` zero-based.
Roles: ``pG_bar`` ``xL`` ``mS`` ``pW_bar`` (investment) and ``pG`` ``pL``
``pLS`` ``pSC`` ``pSD`` ``eS`` ``pW`` ``theta`` (operation).  Row keys use
the same scheme with family names such as ``balance`` or ``flow_bigm_up``;
row names read ``balance_n2_r1_h5`` with one-based day and hour.

Powers are MW and angles radians; a line carries ``(base/x) * dtheta`` MW.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from ..clustering import RepresentativeDay, RepresentativeDaySet, history_days
from ..system import SystemData
from ..timeseries import HOURS, HourlyRecordSet
from .problem import BINARY, EQ, GE, INTEGER, LE, MilpProblem

INVESTMENT_ROLES = ("pG_bar", "xL", "mS", "pW_bar")


class BuildError(ValueError):
    pass


class BigMWarning(UserWarning):
    """The configured F may be too small to relax an unbuilt line."""


@dataclass
class ModelOptions:
    """Switches that change the model structure.

    ``fixed_lines`` maps candidate line ids to 0/1 and substitutes that value
    directly into the candidate flow equation instead of using the big-M pair.
    ``allow_storage=False`` pins every candidate storage build to zero.
    ``end_of_day`` toggles the end-of-day minimum-energy rows of the
    representative model.
    """

    fixed_lines: Dict[str, int] = field(default_factory=dict)
    allow_storage: bool = True
    end_of_day: bool = True
    check_big_m: bool = True
    name: Optional[str] = None


def line_coefficient(system: SystemData, line) -> float:
    """MW per radian of angle difference."""
    return system.base_power / line.reactance


def safe_big_m(system: SystemData) -> float:
    """Smallest F that never binds on an unbuilt candidate line.

    With a candidate line out of service its end angles can differ by at
    most the widest angle spread the existing network allows between them,
    i.e. the shortest path where each existing line may span
    ``capacity / coefficient`` radians.  Returns ``inf`` when the ends are
    not connected through existing lines (angles are then unbounded).
    """
    cands = system.candidate_lines
    if not cands:
        return 0.0
    pos = {b.id: k for k, b in enumerate(system.buses)}
    n = len(pos)
    w = np.zeros((n, n))
    for l in system.lines:
        if l.candidate:
            continue
        i, j = pos[l.from_bus], pos[l.to_bus]
        span = l.capacity / line_coefficient(system, l)
        if w[i, j] == 0 or span < w[i, j]:
            w[i, j] = w[j, i] = span
    dist = shortest_path(csr_matrix(w), directed=False)
    need = 0.0
    for l in cands:
        d = dist[pos[l.from_bus], pos[l.to_bus]]
        need = max(need, line_coefficient(system, l) * d)
    return need


def _check_zones(system: SystemData, days: RepresentativeDaySet) -> None:
    if not days.days:
        raise BuildError("no days to build the model over")
    missing = [z for z in system.load_zones if z not in days.days[0].beta]
    missing += [z for z in system.wind_zones if z not in days.days[0].alpha]
    if missing:
        raise BuildError(f"profiles lack zone(s) {missing}; have load {days.load_zones}, wind {days.wind_zones}")
    for r, day in enumerate(days.days):
        for prof in list(day.beta.values()) + list(day.alpha.values()):
            if len(prof) != HOURS:
                raise BuildError(f"day {r + 1}: profile does not have {HOURS} hours")
        if day.weight <= 0:
            raise BuildError(f"day {r + 1}: weight must be positive")


def _tag(*parts) -> str:
    return "_".join(str(p) for p in parts)


def _build(system: SystemData, days: Sequence[RepresentativeDay], chronological: bool,
           options: ModelOptions, name: str) -> MilpProblem:
    sysd = system
    dt = sysd.time_step
    ann = sysd.annualization
    fixed = dict(options.fixed_lines)
    cand_ids = {l.id for l in sysd.candidate_lines}
    unknown = set(fixed) - cand_ids
    if unknown:
        raise BuildError(f"fixed_lines names non-candidate line(s) {sorted(unknown)}")
    for lid, v in fixed.items():
        if v not in (0, 1):
            raise BuildError(f"fixed_lines[{lid!r}] must be 0 or 1")
    if options.check_big_m and any(l.id not in fixed for l in sysd.candidate_lines):
        need = safe_big_m(sysd)
        if sysd.big_m < need:
            warnings.warn(f"big-M F={sysd.big_m:g} is below the safe bound {need:g}", BigMWarning, stacklevel=3)

    p = MilpProblem(name=name)
    R = len(days)
    ref = sysd.reference_bus

    # -- investment variables --------------------------------------------
    for g in sysd.candidate_generators:
        p.add_var(f"pGbar_{g.id}", 0.0, g.capacity, obj=ann * g.investment_cost, key=("pG_bar", g.id))
    for l in sysd.candidate_lines:
        if l.id in fixed:
            p.objective_constant += ann * l.investment_cost * fixed[l.id]
            continue
        p.add_var(f"xL_{l.id}", 0.0, 1.0, BINARY, obj=ann * l.investment_cost, key=("xL", l.id))
    for s in sysd.candidate_storages:
        hi = float(s.max_units) if options.allow_storage else 0.0
        p.add_var(f"mS_{s.id}", 0.0, hi, INTEGER, obj=ann * s.investment_cost, key=("mS", s.id))
    for w in sysd.candidate_wind:
        p.add_var(f"pWbar_{w.id}", 0.0, w.capacity, obj=ann * w.investment_cost, key=("pW_bar", w.id))

    def iv(role, ent):
        return p.index[(role, ent)]

    # -- budgets ---------------------------------------------------------
    groups = {
        "generation": [(iv("pG_bar", g.id), g.investment_cost) for g in sysd.candidate_generators],
        "transmission": [(iv("xL", l.id), l.investment_cost) for l in sysd.candidate_lines if l.id not in fixed],
        "storage": [(iv("mS", s.id), s.investment_cost) for s in sysd.candidate_storages],
        "wind": [(iv("pW_bar", w.id), w.investment_cost) for w in sysd.candidate_wind],
    }
    fixed_spend = {"transmission": sum(l.investment_cost * fixed[l.id] for l in sysd.candidate_lines if l.id in fixed)}
    b = sysd.budgets
    if b.mode == "total":
        if math.isfinite(b.total):
            terms = [t for g in groups.values() for t in g]
            rhs = b.total - sum(fixed_spend.values())
            p.add_constraint("budget_total", terms, LE, rhs, key=("budget", "total"))
    else:
        for cat, terms in groups.items():
            cap = getattr(b, cat)
            if math.isfinite(cap):
                p.add_constraint(f"budget_{cat}", terms, LE, cap - fixed_spend.get(cat, 0.0), key=("budget", cat))

    # -- operation --------------------------------------------------------
    peaks = {d.id: d.peak for d in sysd.demands}
    for r, day in enumerate(days):
        wgt = float(day.weight)
        for h in range(HOURS):
            th = {}
            for n in sysd.buses:
                if n.id == ref:
                    lo, hi = 0.0, 0.0
                else:
                    lo, hi = -math.inf, math.inf
                th[n.id] = p.add_var(_tag("theta", n.id, r + 1, h + 1), lo, hi, key=("theta", n.id, r, h))
            for g in sysd.generators:
                j = p.add_var(_tag("pG", g.id, r + 1, h + 1), 0.0, g.capacity,
                              obj=wgt * dt * g.cost, key=("pG", g.id, r, h))
                if g.candidate:
                    p.add_constraint(_tag("gencap", g.id, r + 1, h + 1), [(j, 1.0), (iv("pG_bar", g.id), -1.0)],
                                     LE, 0.0, key=("gencap", g.id, r, h))
            for d in sysd.demands:
                load = day.beta[d.zone][h] * peaks[d.id]
                p.add_var(_tag("pLS", d.id, r + 1, h + 1), 0.0, load,
                          obj=wgt * dt * d.shed_cost, key=("pLS", d.id, r, h))
            for w in sysd.wind:
                a = float(day.alpha[w.zone][h])
                j = p.add_var(_tag("pW", w.id, r + 1, h + 1), 0.0, a * w.capacity, key=("pW", w.id, r, h))
                if w.candidate:
                    p.add_constraint(_tag("windcap", w.id, r + 1, h + 1), [(j, 1.0), (iv("pW_bar", w.id), -a)],
                                     LE, 0.0, key=("windcap", w.id, r, h))
            for s in sysd.storages:
                units = float(s.max_units) if s.candidate else 1.0
                if s.candidate and not options.allow_storage:
                    units = 0.0
                jc = p.add_var(_tag("pSC", s.id, r + 1, h + 1), 0.0, units * s.power, key=("pSC", s.id, r, h))
                jd = p.add_var(_tag("pSD", s.id, r + 1, h + 1), 0.0, units * s.power, key=("pSD", s.id, r, h))
                je = p.add_var(_tag("eS", s.id, r + 1, h + 1), 0.0, units * s.energy, key=("eS", s.id, r, h))
                if s.candidate:
                    m = iv("mS", s.id)
                    for fam, j, size in (("chargecap", jc, s.power), ("dischargecap", jd, s.power),
                                         ("energycap", je, s.energy)):
                        p.add_constraint(_tag(fam, s.id, r + 1, h + 1), [(j, 1.0), (m, -size)], LE, 0.0,
                                         key=(fam, s.id, r, h))
            for l in sysd.lines:
                k = line_coefficient(sysd, l)
                tag = (l.id, r, h)
                if not l.candidate or fixed.get(l.id) == 1:
                    j = p.add_var(_tag("pL", l.id, r + 1, h + 1), -l.capacity, l.capacity, key=("pL",) + tag)
                    p.add_constraint(_tag("flow", l.id, r + 1, h + 1),
                                     [(j, 1.0), (th[l.from_bus], -k), (th[l.to_bus], k)], EQ, 0.0,
                                     key=("flow",) + tag)
                elif fixed.get(l.id) == 0:
                    p.add_var(_tag("pL", l.id, r + 1, h + 1), 0.0, 0.0, key=("pL",) + tag)
                else:
                    j = p.add_var(_tag("pL", l.id, r + 1, h + 1), -l.capacity, l.capacity, key=("pL",) + tag)
                    x = iv("xL", l.id)
                    F = sysd.big_m
                    body = [(j, 1.0), (th[l.from_bus], -k), (th[l.to_bus], k)]
                    p.add_constraint(_tag("flow_bigm_up", l.id, r + 1, h + 1), body + [(x, F)], LE, F,
                                     key=("flow_bigm_up",) + tag)
                    p.add_constraint(_tag("flow_bigm_lo", l.id, r + 1, h + 1), body + [(x, -F)], GE, -F,
                                     key=("flow_bigm_lo",) + tag)
                    p.add_constraint(_tag("flowcap_up", l.id, r + 1, h + 1), [(j, 1.0), (x, -l.capacity)],
                                     LE, 0.0, key=("flowcap_up",) + tag)
                    p.add_constraint(_tag("flowcap_lo", l.id, r + 1, h + 1), [(j, 1.0), (x, l.capacity)],
                                     GE, 0.0, key=("flowcap_lo",) + tag)
            # nodal balance: injections minus withdrawals equal the served load
            for n in sysd.buses:
                terms = []
                for g in sysd.generators:
                    if g.bus == n.id:
                        terms.append((p.index[("pG", g.id, r, h)], 1.0))
                for w in sysd.wind:
                    if w.bus == n.id:
                        terms.append((p.index[("pW", w.id, r, h)], 1.0))
                for s in sysd.storages:
                    if s.bus == n.id:
                        terms.append((p.index[("pSD", s.id, r, h)], 1.0))
                        terms.append((p.index[("pSC", s.id, r, h)], -1.0))
                for l in sysd.lines:
                    if l.to_bus == n.id:
                        terms.append((p.index[("pL", l.id, r, h)], 1.0))
                    if l.from_bus == n.id:
                        terms.append((p.index[("pL", l.id, r, h)], -1.0))
                load = 0.0
                for d in sysd.demands:
                    if d.bus == n.id:
                        load += day.beta[d.zone][h] * peaks[d.id]
                        terms.append((p.index[("pLS", d.id, r, h)], 1.0))
                p.add_constraint(_tag("balance", n.id, r + 1, h + 1), terms, EQ, load,
                                 key=("balance", n.id, r, h))

        # storage energy recursion within the day
        for s in sysd.storages:
            ec, ed = s.charge_eff * dt, dt / s.discharge_eff
            e0_terms = [(iv("mS", s.id), -s.initial_energy)] if s.candidate else []
            e0_rhs = 0.0 if s.candidate else s.initial_energy
            for h in range(HOURS):
                e = p.index[("eS", s.id, r, h)]
                terms = [(e, 1.0), (p.index[("pSC", s.id, r, h)], -ec), (p.index[("pSD", s.id, r, h)], ed)]
                if h > 0:
                    terms.append((p.index[("eS", s.id, r, h - 1)], -1.0))
                    rhs = 0.0
                elif chronological and r > 0:
                    terms.append((p.index[("eS", s.id, r - 1, HOURS - 1)], -1.0))
                    rhs = 0.0
                else:
                    terms += e0_terms
                    rhs = e0_rhs
                fam = "storage_first" if h == 0 and not (chronological and r > 0) else "storage"
                if h == 0 and chronological and r > 0:
                    fam = "storage_link"
                p.add_constraint(_tag(fam, s.id, r + 1, h + 1), terms, EQ, rhs, key=(fam, s.id, r, h))
            if not chronological and options.end_of_day:
                last = p.index[("eS", s.id, r, HOURS - 1)]
                p.add_constraint(_tag("endofday", s.id, r + 1), [(last, 1.0)] + e0_terms, GE, e0_rhs,
                                 key=("endofday", s.id, r))

    p.meta.update({
        "system": sysd.name,
        "chronological": chronological,
        "days": R,
        "weights": [float(d.weight) for d in days],
        "time_step": dt,
        "demand_mwh": sum(float(day.weight) * dt * float(np.sum(day.beta[dm.zone])) * dm.peak
                          for day in days for dm in sysd.demands),
        "fixed_lines": fixed,
    })
    return p


def build_representative_model(system: SystemData, repdays: RepresentativeDaySet,
                               options: Optional[ModelOptions] = None) -> MilpProblem:
    """Independent days, each starting from the initial storage level."""
    options = options or ModelOptions()
    _check_zones(system, repdays)
    name = options.name or f"{system.name}_rep{len(repdays)}"
    return _build(system, repdays.days, False, options, name)


def build_chronological_model(system: SystemData, history, options: Optional[ModelOptions] = None) -> MilpProblem:
    """Consecutive days whose storage levels carry over midnight.

    ``history`` is an :class:`HourlyRecordSet` or a day set in calendar
    order; every day gets weight 1 whatever weight it carries.
    """
    options = options or ModelOptions()
    if isinstance(history, HourlyRecordSet):
        history = history_days(history)
    if len(history.days) < 1:
        raise BuildError("the history must contain at least one day")
    _check_zones(system, history)
    days = [RepresentativeDay(1, d.beta, d.alpha) for d in history.days]
    name = options.name or f"{system.name}_chrono{len(days)}"
    return _build(system, days, True, options, name)


def census(system: SystemData, n_days: int, chronological: bool = False,
           options: Optional[ModelOptions] = None) -> Dict[str, Dict[str, int]]:
    """Closed-form variable and row counts, without building the model."""
    options = options or ModelOptions()
    T = n_days * HOURS
    fixed = options.fixed_lines
    N = len(system.buses)
    G, Gc = len(system.generators), len(system.candidate_generators)
    Lc_all = system.candidate_lines
    Lc = sum(1 for l in Lc_all if l.id not in fixed)
    Le = len(system.lines) - len(Lc_all) + sum(1 for l in Lc_all if fixed.get(l.id) == 1)
    S, Sc = len(system.storages), len(system.candidate_storages)
    W, Wc = len(system.wind), len(system.candidate_wind)
    D = len(system.demands)
    variables = {
        "pG_bar": Gc, "xL": Lc, "mS": Sc, "pW_bar": Wc,
        "theta": N * T, "pG": G * T, "pLS": D * T, "pW": W * T,
        "pSC": S * T, "pSD": S * T, "eS": S * T, "pL": len(system.lines) * T,
    }
    b = system.budgets
    if b.mode == "total":
        budget = int(math.isfinite(b.total))
    else:
        budget = sum(int(math.isfinite(getattr(b, c))) for c in ("generation", "transmission", "storage", "wind"))
    rows = {
        "budget": budget,
        "balance": N * T,
        "flow": Le * T,
        "flow_bigm_up": Lc * T, "flow_bigm_lo": Lc * T,
        "flowcap_up": Lc * T, "flowcap_lo": Lc * T,
        "gencap": Gc * T, "windcap": Wc * T,
        "chargecap": Sc * T, "dischargecap": Sc * T, "energycap": Sc * T,
        "storage": S * n_days * (HOURS - 1),
        "storage_first": S * (1 if chronological else n_days),
        "storage_link": S * (n_days - 1) if chronological else 0,
        "endofday": S * n_days if (not chronological and options.end_of_day) else 0,
    }
    variables = {k: v for k, v in variables.items() if v}
    rows = {k: v for k, v in rows.items() if v}
    return {"variables": variables, "rows": rows,
            "n_vars": sum(variables.values()), "n_rows": sum(rows.values())}
