import math

import pytest

from repdays.system import (SystemError_, bundled_path, load_system, storage_investment_cost, system_from_dict,
                            validate)


def minimal_doc():
    return {
        "buses": [{"id": "a", "reference": True}, {"id": "b"}],
        "generators": [{"id": "g", "bus": "a", "capacity": 50, "cost": 20}],
        "lines": [{"id": "l", "from": "a", "to": "b", "reactance": 0.1, "capacity": 40}],
        "demands": [{"id": "d", "bus": "b", "zone": "z", "peak": 30, "shed_cost": 500}],
    }


def test_rts_counts():
    s = load_system(bundled_path("rts24.toml"))
    summary = s.summary()
    assert len(s.buses) == 24
    assert (len(s.generators), len(s.candidate_generators)) == (18, 7)
    assert len(s.demands) == 17
    assert (len(s.lines), len(s.candidate_lines)) == (44, 6)
    assert (len(s.storages), len(s.candidate_storages)) == (7, 5)
    assert (len(s.wind), len(s.candidate_wind)) == (6, 4)
    assert (summary["generators_existing"], summary["generators_candidate"]) == (11, 7)
    assert (summary["lines_existing"], summary["storages_existing"], summary["wind_existing"]) == (38, 2, 2)
    assert validate(s) == []


def test_rts_storage_costs_follow_rule():
    s = load_system(bundled_path("rts24.toml"))
    for st in s.candidate_storages:
        assert st.investment_cost == storage_investment_cost(st.energy, st.power)
    assert sorted({s.annualized(st.investment_cost) for st in s.candidate_storages}) == pytest.approx(
        [11.2e6, 14.0e6, 16.8e6, 22.4e6])


def test_storage_cost_rule():
    assert storage_investment_cost(250, 125) == 140_000_000
    assert storage_investment_cost(400, 200) == 224_000_000
    assert storage_investment_cost(0, 0) == 0
    with pytest.raises(ValueError):
        storage_investment_cost(-1, 0)


def test_minimal_system_valid():
    s = system_from_dict(minimal_doc())
    assert s.reference_bus == "a"
    assert s.load_zones == ["z"]
    assert validate(s) == []


def test_two_reference_buses():
    doc = minimal_doc()
    doc["buses"][1]["reference"] = True
    with pytest.raises(SystemError_, match="reference"):
        system_from_dict(doc)


@pytest.mark.parametrize("mutate, needle", [
    (lambda d: d["lines"][0].update(to="zz"), "zz"),
    (lambda d: d["lines"][0].update(reactance=0.0), "reactance"),
    (lambda d: d["lines"][0].update(to="a"), "same"),
    (lambda d: d["generators"].append(dict(d["generators"][0])), "duplicate"),
    (lambda d: d["generators"][0].update(colour="red"), "unknown key"),
    (lambda d: d.update(storages=[{"id": "s", "bus": "a", "energy": 10, "power": 5,
                                   "discharge_eff": 0.0}]), "efficiency out of range"),
])
def test_invalid_documents(mutate, needle):
    doc = minimal_doc()
    mutate(doc)
    with pytest.raises(SystemError_) as info:
        system_from_dict(doc)
    assert needle in str(info.value)


def test_load_system_reports_path(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('[[buses]]\nid = "a"\n')
    with pytest.raises(SystemError_) as info:
        load_system(str(bad))
    assert "bad.toml" in str(info.value)


def test_desk_budgets():
    s = load_system(bundled_path("desk3.toml"))
    assert s.budgets.mode == "total" and s.budgets.total == 4e6
    assert math.isinf(s.budgets.generation)
    assert [st.max_units for st in s.candidate_storages] == [2]


def test_unknown_sections_and_options():
    doc = minimal_doc()
    doc["bogus"] = 1
    doc["options"] = {"annualisation": 0.1}
    with pytest.raises(SystemError_) as info:
        system_from_dict(doc)
    assert "bogus: unknown section" in str(info.value)
    assert "options.annualisation: unknown option" in str(info.value)
