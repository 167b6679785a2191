import dataclasses

import numpy as np
import pytest

from conftest import flat_days, one_bus_system
from repdays.clustering import RepresentativeDaySet, history_days
from repdays.model.builder import (BuildError, ModelOptions, build_chronological_model,
                                   build_representative_model, census, line_coefficient)
from repdays.model.solution import ExpansionPlan, SolutionError, extract_solution, fix_investments
from repdays.solver.bnb import solve_milp
from repdays.solver.lp import solve_lp
from repdays.system import bundled_path, load_system

STORE = {"id": "s", "bus": "n1", "energy": 40, "power": 10, "charge_eff": 0.9, "discharge_eff": 0.9}


def test_one_bus_operation_cost():
    p = build_representative_model(one_bus_system(), flat_days([365]))
    sol = solve_milp(p)
    plan, schedule, costs = extract_solution(p, sol)
    assert sol.objective == pytest.approx(4_380_000, rel=1e-12)
    assert costs.operation == pytest.approx(4_380_000, rel=1e-12)
    assert costs.shed_mwh == pytest.approx(0.0, abs=1e-9)
    assert plan.as_dict() == {"generation": {}, "lines": {}, "storage": {}, "wind": {}}
    np.testing.assert_allclose(schedule["pG"]["g1"], 50.0, rtol=1e-12)


def test_weight_doubling_doubles_operation():
    a = solve_milp(build_representative_model(one_bus_system(), flat_days([100, 50], load=0.7)))
    b = solve_milp(build_representative_model(one_bus_system(), flat_days([200, 100], load=0.7)))
    assert b.objective == pytest.approx(2 * a.objective, rel=1e-12)


def test_zone_mismatch_is_build_error():
    with pytest.raises(BuildError, match="zone"):
        build_representative_model(one_bus_system(), flat_days([1], load_zone="other"))


def storage_row(p, fam, r, h):
    row = p.constraints[p.row_index[(fam, "s", r, h)]]
    return {p.variables[j].name: a for j, a in zip(row.indices, row.coefs)}, row.rhs


def test_storage_recursion_hand_values():
    p = build_chronological_model(one_bus_system(storage=STORE), flat_days([1, 1]))
    coef, rhs = storage_row(p, "storage", 0, 1)
    assert coef == {"eS_s_1_2": 1.0, "eS_s_1_1": -1.0, "pSC_s_1_2": -0.9, "pSD_s_1_2": 1 / 0.9}
    # charge 10 MW for one hour from empty
    e1 = 0.0 + 0.9 * 10.0 * 1.0
    assert e1 == 9.0
    coef, rhs = storage_row(p, "storage_first", 0, 0)
    assert coef == {"eS_s_1_1": 1.0, "pSC_s_1_1": -0.9, "pSD_s_1_1": 1 / 0.9} and rhs == 0.0
    # hour 1 of day 2 continues from hour 24 of day 1
    coef, rhs = storage_row(p, "storage_link", 1, 0)
    assert coef == {"eS_s_2_1": 1.0, "eS_s_1_24": -1.0, "pSC_s_2_1": -0.9, "pSD_s_2_1": 1 / 0.9}
    x = np.zeros(p.n_vars)
    x[p.index[("pSC", "s", 0, 0)]] = 10.0
    x[p.index[("eS", "s", 0, 0)]] = 9.0
    row = p.constraints[p.row_index[("storage_first", "s", 0, 0)]]
    assert sum(a * x[j] for j, a in zip(row.indices, row.coefs)) == row.rhs


def test_storage_solution_satisfies_recursion():
    days = flat_days([1, 1])
    days.days[0].beta["z"][:] = np.where(np.arange(24) < 12, 0.2, 2.2)   # 110 MW afternoons exceed the generator
    sysd = one_bus_system(storage=STORE)
    p = build_chronological_model(sysd, days)
    _, sched, costs = extract_solution(p, solve_milp(p))
    e, c, d = (sched[k]["s"].ravel() for k in ("eS", "pSC", "pSD"))
    prev = np.concatenate([[0.0], e[:-1]])
    np.testing.assert_allclose(e, prev + 0.9 * c - d / 0.9, atol=1e-7)
    assert d.sum() > 0  # storage is actually used


def test_one_day_chronology_equals_representative_without_end_rows(desk_system, desk_hist):
    hist = desk_hist.subset([3])
    chrono = build_chronological_model(desk_system, hist)
    rep = build_representative_model(desk_system, history_days(hist), ModelOptions(end_of_day=False))
    assert chrono.n_vars == rep.n_vars and chrono.n_rows == rep.n_rows
    assert solve_milp(chrono).objective == pytest.approx(solve_milp(rep).objective, rel=1e-9)


def test_empty_history_rejected(desk_system):
    with pytest.raises(BuildError):
        build_chronological_model(desk_system, RepresentativeDaySet([], "history"))


@pytest.mark.parametrize("chronological", [False, True])
def test_census_matches_built_model(desk_system, desk_repdays, chronological):
    build = build_chronological_model if chronological else build_representative_model
    p = build(desk_system, desk_repdays)
    c = census(desk_system, len(desk_repdays), chronological)
    assert c["n_vars"] == p.n_vars and c["n_rows"] == p.n_rows
    assert c["variables"] == p.census()
    assert c["rows"] == p.row_census()


def test_census_desk_numbers(desk_system):
    c = census(desk_system, 2)
    assert (c["n_vars"], c["n_rows"]) == (964, 917)


def test_census_rts_and_fixed_lines():
    rts = load_system(bundled_path("rts24.toml"))
    days = flat_days([366], load=0.8, wind=0.3)
    days.days[0].beta = {z: np.full(24, 0.8) for z in rts.load_zones}
    days.days[0].alpha = {z: np.full(24, 0.3) for z in rts.wind_zones}
    opts = ModelOptions(fixed_lines={rts.candidate_lines[0].id: 1, rts.candidate_lines[1].id: 0})
    p = build_representative_model(rts, days, opts)
    c = census(rts, 1, options=opts)
    assert (c["n_vars"], c["n_rows"]) == (p.n_vars, p.n_rows)


def test_fix_all_zero_gives_operation_only(desk_system, desk_repdays):
    p = build_representative_model(desk_system, desk_repdays)
    q = fix_investments(p, ExpansionPlan.zero(desk_system))
    assert q.integer_indices == []
    sol = solve_lp(q)
    _, sched, costs = extract_solution(q, sol)
    assert costs.investment == 0.0
    np.testing.assert_array_equal(sched["pL"]["l3"], 0.0)


def test_fix_line_built_collapses_to_dc_flow(desk_system, desk_repdays):
    p = build_representative_model(desk_system, desk_repdays)
    plan = ExpansionPlan.zero(desk_system)
    plan.lines["l4"] = 1
    q = fix_investments(p, plan)
    _, sched, _ = extract_solution(q, solve_lp(q))
    line = next(l for l in desk_system.lines if l.id == "l4")
    k = line_coefficient(desk_system, line)
    th = sched["theta"]
    np.testing.assert_allclose(sched["pL"]["l4"], k * (th[line.from_bus] - th[line.to_bus]), atol=1e-6)


def test_refix_plan_reproduces_objective(desk_system, desk_repdays):
    p = build_representative_model(desk_system, desk_repdays)
    sol = solve_milp(p)
    plan, _, _ = extract_solution(p, sol)
    again = solve_lp(fix_investments(p, plan))
    assert again.objective == pytest.approx(sol.objective, rel=1e-9)


def test_fix_rejects_out_of_bounds(desk_system, desk_repdays):
    p = build_representative_model(desk_system, desk_repdays)
    plan = ExpansionPlan.zero(desk_system)
    plan.storage["s2"] = 3
    with pytest.raises(SolutionError, match="outside"):
        fix_investments(p, plan)
    plan.storage["s2"] = 1
    plan.lines["l3"] = 0.5
    with pytest.raises(SolutionError, match="integral"):
        fix_investments(p, plan)


def test_extract_rejects_fractional_binary(desk_system, desk_repdays):
    p = build_representative_model(desk_system, desk_repdays)
    sol = solve_milp(p)
    x = sol.x.copy()
    x[p.index[("xL", "l3")]] = 0.4
    with pytest.raises(SolutionError, match="integrality"):
        extract_solution(p, dataclasses.replace(sol, x=x))


def test_storage_option_never_hurts(desk_system, desk_hist):
    allowed = solve_milp(build_chronological_model(desk_system, desk_hist))
    forbidden = solve_milp(build_chronological_model(desk_system, desk_hist, ModelOptions(allow_storage=False)))
    assert allowed.objective <= forbidden.objective * (1 + 1e-9)
