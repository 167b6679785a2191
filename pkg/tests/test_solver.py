import itertools
import math

import numpy as np
import pytest

from repdays.model.builder import build_representative_model
from repdays.model.problem import MilpProblem
from repdays.model.solution import ExpansionPlan, fix_investments
from repdays.solver.bnb import NODE_LIMIT, SolverConfig, solve_milp
from repdays.solver.lp import solve_lp
from repdays.solver.simplex import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED


def random_box_lp(rng, n, m):
    """min c'x, A x <= b, 0 <= x <= u; feasible because x = 0 satisfies b >= 0."""
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.uniform(0.5, 3.0, size=m)
    u = rng.uniform(1.0, 4.0, size=n)
    return c, A, b, u


def to_problem(c, A, b, u, senses=None, vtypes=None):
    p = MilpProblem(name="rand")
    for j in range(len(c)):
        p.add_var(f"x{j}", 0.0, float(u[j]), vtype=(vtypes[j] if vtypes else "continuous"), obj=float(c[j]))
    for i in range(A.shape[0]):
        p.add_constraint(f"r{i}", [(j, float(A[i, j])) for j in range(len(c))],
                         senses[i] if senses else "<=", float(b[i]))
    return p


def vertex_oracle(c, A, b, u):
    """Best objective over every basic feasible point of the box-constrained polytope."""
    n = len(c)
    G = np.vstack([A, np.eye(n), -np.eye(n)])
    h = np.concatenate([b, u, np.zeros(n)])
    best = math.inf
    for rows in itertools.combinations(range(G.shape[0]), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            best = min(best, float(c @ x))
    return best


def test_single_bound_lp():
    p = MilpProblem()
    x = p.add_var("x", -math.inf, math.inf, obj=1.0)
    p.add_constraint("c", [(x, 1.0)], ">=", 3.0)
    sol = solve_lp(p, method="simplex")
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(3.0) and sol.x[0] == pytest.approx(3.0)


def test_infeasible_and_unbounded():
    p = MilpProblem()
    x = p.add_var("x")
    p.add_constraint("a", [(x, 1.0)], "<=", 1.0)
    p.add_constraint("b", [(x, 1.0)], ">=", 2.0)
    assert solve_lp(p, method="simplex").status == INFEASIBLE
    q = MilpProblem()
    q.add_var("y", obj=-1.0)
    assert solve_lp(q, method="simplex").status == UNBOUNDED


def test_iteration_limit_is_flagged():
    rng = np.random.default_rng(0)
    p = to_problem(*random_box_lp(rng, 12, 8))
    sol = solve_lp(p, method="simplex", max_iter=1)
    assert sol.status == ITERATION_LIMIT and sol.x is None


@pytest.mark.parametrize("seed", range(12))
def test_simplex_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 5)), int(rng.integers(1, 6))
    c, A, b, u = random_box_lp(rng, n, m)
    sol = solve_lp(to_problem(c, A, b, u), method="simplex")
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(vertex_oracle(c, A, b, u), rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("seed", range(6))
def test_simplex_matches_highs_mixed_senses(seed):
    rng = np.random.default_rng(50 + seed)
    n, m = 30, 20
    c, A, b, u = random_box_lp(rng, n, m)
    senses = list(rng.choice(["<=", ">=", "="], size=m, p=[0.6, 0.2, 0.2]))
    x0 = rng.uniform(0, 1, size=n) * u        # make the mixed system feasible
    b = np.where(np.array(senses) == "<=", A @ x0 + 1.0, np.where(np.array(senses) == ">=", A @ x0 - 1.0, A @ x0))
    p = to_problem(c, A, b, u, senses)
    own, ref = solve_lp(p, method="simplex"), solve_lp(p, method="highs")
    assert own.status == ref.status == OPTIMAL
    assert own.objective == pytest.approx(ref.objective, rel=1e-8, abs=1e-8)
    assert own.max_residual <= 1e-9


def test_knapsack_matches_enumeration():
    rng = np.random.default_rng(8)
    value = rng.integers(5, 40, size=8).astype(float)
    weight = rng.integers(3, 20, size=8).astype(float)
    cap = 0.45 * weight.sum()
    p = to_problem(-value, weight[None, :], np.array([cap]), np.ones(8), vtypes=["binary"] * 8)
    best = max(value @ np.array(bits) for bits in itertools.product([0, 1], repeat=8)
               if weight @ np.array(bits) <= cap)
    sol = solve_milp(p)
    assert sol.optimal
    assert -sol.objective == pytest.approx(best, rel=1e-12)


def test_pure_lp_through_bnb():
    rng = np.random.default_rng(3)
    p = to_problem(*random_box_lp(rng, 5, 4))
    assert solve_milp(p).objective == pytest.approx(solve_lp(p).objective, rel=1e-12)
    assert solve_milp(p).nodes == 1


def test_node_limit_reports_incumbent_and_gap():
    rng = np.random.default_rng(21)
    n = 14
    value = rng.integers(10, 60, size=n).astype(float)
    weight = value + rng.integers(-5, 6, size=n)
    p = to_problem(-value, weight[None, :], np.array([0.5 * weight.sum()]), np.ones(n), vtypes=["binary"] * n)
    early = solve_milp(p, SolverConfig(node_limit=3))
    assert early.status == NODE_LIMIT and early.x is None and early.gap == math.inf
    sol = solve_milp(p, SolverConfig(node_limit=20))
    full = solve_milp(p)
    assert sol.status == NODE_LIMIT and sol.x is not None
    assert sol.best_bound <= full.objective <= sol.objective
    assert sol.gap == pytest.approx((sol.objective - sol.best_bound) / abs(sol.objective))


def test_own_simplex_matches_highs_on_desk_lp(desk_system, desk_repdays):
    p = build_representative_model(desk_system, desk_repdays)
    plan = ExpansionPlan.zero(desk_system)
    plan.lines["l3"] = 1
    plan.storage["s2"] = 1
    q = fix_investments(p, plan)
    own, ref = solve_lp(q, method="simplex"), solve_lp(q, method="highs")
    assert own.status == ref.status == OPTIMAL
    assert own.objective == pytest.approx(ref.objective, rel=1e-9)
