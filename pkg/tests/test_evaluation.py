import csv
import math

import pytest

from repdays.evaluation import (PRECONDITION, EvaluationRow, evaluate_grid, evaluate_plan, exact_solution,
                                percent_error, report, run_pipeline, run_seeds)
from repdays.model.solution import ExpansionPlan


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_percent_error_basics():
    assert percent_error(5.0, 5.0) == 0.0
    assert percent_error(10.0, 5.0) == 100.0
    assert percent_error(4.0, 5.0) == pytest.approx(20.0)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            percent_error(1.0, bad)


def test_percent_error_of_rounded_costs():
    assert round(percent_error(3.14e9, 3.124e9), 3) == 0.512
    # every cost that displays as 3.14 (in billions) spans an error band containing 0.66
    lo, hi = percent_error(3.135e9, 3.124e9), percent_error(3.145e9, 3.124e9)
    assert lo < 0.66 < hi
    assert percent_error(3.1446e9, 3.124e9) == pytest.approx(0.66, abs=0.005)


def fake_rows(ks, methods=("tkm", "mkm")):
    rows = []
    for m in methods:
        for k in ks:
            for s in range(3):
                rows.append(EvaluationRow(m, k, s, ct=100.0 + k + s, eps=float(k + s), step1_time=0.1 * s))
    return rows


def test_report_shapes(tmp_path):
    paths = report(fake_rows([2, 4, 6, 8, 10, 12, 14, 16]), None, str(tmp_path), timing="wall", figures=False)
    table = read_rows(paths["table"])
    assert table[0] == ["K", "CT_TKM", "CT_MKM", "eps_TKM", "eps_MKM", "time_TKM", "time_MKM"]
    assert len(table) == 9
    assert table[1][:5] == ["2", "103", "103", "3", "3"]
    assert "time_vs_k" in paths


def test_report_single_row_and_no_timing(tmp_path):
    rows = [EvaluationRow("tkm", 3, 0, ct=10.0, eps=1.5, step1_time=2.0)]
    paths = report(rows, None, str(tmp_path), timing="none", figures=False)
    table = read_rows(paths["table"])
    assert len(table) == 2
    assert table[1] == ["3", "10", "", "1.5", "", "", ""]
    assert "time_vs_k" not in paths


def test_report_empty_rows(tmp_path):
    with pytest.raises(ValueError):
        report([], None, str(tmp_path))


def test_report_figures(tmp_path):
    paths = report(fake_rows([2, 4]), None, str(tmp_path), timing="wall")
    for stem in ("cost_vs_k", "error_vs_k", "time_vs_k"):
        with open(paths[f"{stem}_png"], "rb") as fh:
            assert fh.read(8) == b"\x89PNG\r\n\x1a\n"


def test_run_seeds():
    assert run_seeds(7, 3) == [7, 8, 9]


def test_exact_is_deterministic_and_optimal(desk_system, desk_hist, desk_exact):
    again = exact_solution(desk_system, desk_hist)
    assert again.ct == desk_exact.ct
    assert again.plan == desk_exact.plan
    assert desk_exact.certified
    zero, _ = evaluate_plan(desk_system, desk_hist, ExpansionPlan.zero(desk_system))
    assert desk_exact.ct <= zero


def test_injected_exact_plan_scores_zero(desk_system, desk_hist, desk_exact):
    row = run_pipeline(desk_system, desk_hist, "tkm", k=2, plan=desk_exact.plan, exact=desk_exact)
    assert row.eps == 0.0


def test_tkm_and_mkm_rows(desk_system, desk_hist, desk_exact):
    a = run_pipeline(desk_system, desk_hist, "tkm", k=4, seed=1, exact=desk_exact)
    b = run_pipeline(desk_system, desk_hist, "mkm", k1=2, k2=2, seed=1, exact=desk_exact)
    assert (a.k, b.k, b.k1, b.k2) == (4, 4, 2, 2)
    assert a.eps >= 0.0 and b.eps >= 0.0
    assert a.ct >= desk_exact.ct * (1 - 1e-9) and b.ct >= desk_exact.ct * (1 - 1e-9)


def test_k_equal_to_days(desk_system, desk_hist, desk_exact):
    row = run_pipeline(desk_system, desk_hist, "tkm", k=desk_hist.n_days, seed=0, exact=desk_exact)
    assert row.eps >= 0.0


def test_grid_validation_and_precondition(desk_system, desk_hist, desk_exact):
    with pytest.raises(ValueError):
        evaluate_grid(desk_system, desk_hist, [desk_hist.n_days + 1], exact=desk_exact)
    rows = evaluate_grid(desk_system, desk_hist, [14], methods=["mkm"], seeds=[0], exact=desk_exact)
    assert rows[0].status == PRECONDITION and math.isnan(rows[0].ct)
