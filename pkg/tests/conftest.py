import numpy as np
import pytest

from repdays.clustering import RepresentativeDay, RepresentativeDaySet, cluster_days
from repdays.evaluation import exact_solution
from repdays.synthetic import desk_history
from repdays.system import bundled_path, load_system, system_from_dict
from repdays.timeseries import HOURS, build_day_observations


def flat_days(weights, load=1.0, wind=0.0, load_zone="z", wind_zone="w"):
    """Representative days with constant per-unit profiles."""
    days = [RepresentativeDay(int(w), {load_zone: np.full(HOURS, load)}, {wind_zone: np.full(HOURS, wind)})
            for w in weights]
    return RepresentativeDaySet(days, "manual", {"k": len(days)})


def one_bus_system(storage=None, **extra):
    doc = {
        "buses": [{"id": "n1", "reference": True}],
        "generators": [{"id": "g1", "bus": "n1", "capacity": 100, "cost": 10}],
        "demands": [{"id": "d1", "bus": "n1", "zone": "z", "peak": 50, "shed_cost": 1000}],
    }
    if storage:
        doc["storages"] = [storage]
    doc.update(extra)
    return system_from_dict(doc, "one_bus")


@pytest.fixture(scope="session")
def desk_system():
    return load_system(bundled_path("desk3.toml"))


@pytest.fixture(scope="session")
def desk_hist():
    return desk_history()


@pytest.fixture(scope="session")
def desk_repdays(desk_hist):
    _, rd = cluster_days(build_day_observations(desk_hist), "tkm", k=2, seed=0)
    return rd


@pytest.fixture(scope="session")
def desk_exact(desk_system, desk_hist):
    return exact_solution(desk_system, desk_hist)


def random_milp(rng, name="rand"):
    """Small bounded problem with mixed variable types, senses and magnitudes.

    A hidden integral point keeps every instance feasible.
    """
    from repdays.model.problem import MilpProblem
    p = MilpProblem(name=name)
    n = int(rng.integers(2, 9))
    x0 = []
    for j in range(n):
        kind = rng.choice(["continuous", "integer", "binary"])
        ub = float(rng.choice([1.0, 2.5, 7.0])) if kind != "binary" else 1.0
        lb = float(rng.choice([0.0, -2.0])) if kind != "binary" else 0.0
        p.add_var(f"v{j}", lb, ub, vtype=kind, obj=float(np.round(rng.normal(), 6)))
        x0.append(float(rng.integers(int(np.ceil(lb)), int(np.floor(ub)) + 1)))
    x0 = np.array(x0)
    for i in range(int(rng.integers(1, 7))):
        cols = [j for j in range(n) if rng.random() < 0.7] or [0]
        coefs = {j: float(rng.normal() * 10.0 ** rng.integers(-2, 3)) for j in cols}
        act = sum(a * x0[j] for j, a in coefs.items())
        sense = str(rng.choice(["<=", ">=", "="]))
        slack = float(rng.uniform(0, 2))
        rhs = act + slack if sense == "<=" else act - slack if sense == ">=" else act
        p.add_constraint(f"r{i}", list(coefs.items()), sense, rhs)
    return p


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
