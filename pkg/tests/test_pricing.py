import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trippricing import equilibrium as eq
from trippricing import netmodel as nm
from trippricing import pricing as pr

ND = nm.builtin("nd-multimodal")


@pytest.fixture(scope="module")
def eff_trip(car_only):
    return pr.DesignProblem(car_only, "trip", pr.objective_weights("eff"))


def test_objective_weights():
    assert pr.objective_weights("eff") == (1, 0, 0, 0, 0)
    assert pr.objective_weights("wequ") == (0, 0, 0, 0, 1)
    assert pr.objective_weights("all") == (0.2,) * 5
    with pytest.raises(ValueError):
        pr.objective_weights("speed")


def test_trip_prices(two_link):
    pv = pr.make_trip_prices(two_link, [1.0, 2.0], bounds=(0, 5))
    np.testing.assert_allclose(pv.path_prices, [10.0, 30.0])
    pv = pr.make_trip_prices(two_link, [1.0, 2.0], mask=[True, False])
    np.testing.assert_allclose(pv.path_prices, [10.0, 0.0])
    with pytest.raises(ValueError):
        pr.make_trip_prices(two_link, [6.0, 0.0], bounds=(0, 5))
    with pytest.raises(ValueError):
        pr.make_trip_prices(two_link, [1.0])


def test_road_prices_per_link(multimodal):
    gamma = np.zeros(len(multimodal.links))
    gamma[multimodal.link_index["B,1"]] = 2.0
    pv = pr.road_to_path_prices(multimodal, gamma)
    for k, p in enumerate(multimodal.paths):
        expected = 6.0 if "B,1" in p.links else 0.0
        assert pv.path_prices[k] == pytest.approx(expected)


def test_second_best_masks(multimodal):
    tm = pr.trip_mask(multimodal, ["car"])
    assert tm.sum() == 25
    rm = pr.road_mask(multimodal, ["car"])
    car = multimodal.mode_ids.index("car")
    assert all((m == car) == bool(x) for (_, m), x in zip(multimodal.elements, rm))
    pv = pr.road_to_path_prices(multimodal, np.ones(len(multimodal.elements)), rm)
    assert np.all(pv.path_prices[multimodal.path_mode != car] == 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=len(ND.elements), max_size=len(ND.elements)))
def test_road_prices_are_trip_prices(gamma):
    # any feasible road price is a feasible trip price with the same bounds
    pv = pr.road_to_path_prices(ND, gamma, bounds=(-5, 5))
    unit = pr.path_unit_prices(ND, pv)
    trip = pr.make_trip_prices(ND, np.clip(unit, -5, 5), bounds=(-5, 5))
    assert np.all(unit >= -5 - 1e-12) and np.all(unit <= 5 + 1e-12)
    np.testing.assert_allclose(trip.path_prices, pv.path_prices, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=len(ND.elements), max_size=len(ND.elements)),
       st.lists(st.floats(-5, 5, allow_nan=False), min_size=len(ND.elements), max_size=len(ND.elements)))
def test_road_prices_are_additive(a, b):
    pa = pr.road_to_path_prices(ND, a).path_prices
    pb = pr.road_to_path_prices(ND, b).path_prices
    pab = pr.road_to_path_prices(ND, np.add(a, b)).path_prices
    np.testing.assert_allclose(pab, pa + pb, atol=1e-10)


def test_revenue_feasibility(two_link):
    res = eq.solve_sue(two_link, [2.0, -1.0])
    fz = pr.revenue_feasibility(res, b=1000.0)
    h = res.path_flows.sum(axis=0)
    assert fz.tolls == pytest.approx(2 * h[0])
    assert fz.incentives == pytest.approx(h[1])
    assert fz.net == pytest.approx(fz.tolls - fz.incentives)
    assert fz.feasible(True)
    fz = pr.revenue_feasibility(res, b=0.0)
    assert not fz.feasible(False)
    assert fz.violation(False) == pytest.approx(fz.net**2)


def test_problem_validation(car_only):
    with pytest.raises(ValueError):
        pr.DesignProblem(car_only, "link")
    with pytest.raises(ValueError):
        pr.DesignProblem(car_only, "trip", (0.5, 0.0, 0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        pr.DesignProblem(car_only, "trip", bounds=(5, 0))
    with pytest.raises(ValueError):
        pr.DesignProblem(car_only, "trip", b=-1.0)
    with pytest.raises(ValueError):
        pr.DesignProblem(car_only, "trip", mask=np.ones(3, bool))


def test_zero_prices_give_zero_objective(eff_trip):
    ev = pr.objective(eff_trip, np.zeros(eff_trip.dim))
    assert ev.value == pytest.approx(0.0, abs=1e-6)
    assert ev.feasible


def test_objective_is_deterministic(eff_trip):
    x = np.linspace(0, 5, eff_trip.dim)
    a, b = pr.objective(eff_trip, x), pr.objective(eff_trip, x)
    assert a.value == b.value
    assert a.components == b.components


def test_objective_uses_absolute_denominators(car_only):
    base = pr.DesignProblem(car_only, "trip", pr.objective_weights("acpt")).baseline_report
    assert base.pc < 0  # positive satisfaction: PC below zero
    p = pr.DesignProblem(car_only, "trip", pr.objective_weights("acpt"))
    ev = pr.objective(p, np.full(p.dim, 1.0))
    # pricing raises perceived cost, so the acceptance term must worsen
    assert ev.components["PC"] > 0
    assert ev.value == ev.components["PC"]


def test_objective_is_continuous(eff_trip):
    x = np.full(eff_trip.dim, 2.0)
    base = pr.objective(eff_trip, x).value
    slopes = []
    for h in (1e-2, 1e-3, 1e-4):
        v = pr.objective(eff_trip, x + h).value
        slopes.append(abs(v - base) / (h * math.sqrt(eff_trip.dim)))
    assert max(slopes) < 10.0
    assert abs(pr.objective(eff_trip, x + 1e-4).value - base) < 1e-2


def test_scalarize_ignores_zero_weights():
    comps = {"TTS": -0.5, "TEC": math.inf, "PC": 0.1, "MAPD_Q": 0.0, "MAPD_W": 0.0}
    assert pr.scalarize((1, 0, 0, 0, 0), comps) == -0.5
    assert pr.scalarize((0.2,) * 5, comps) == math.inf
