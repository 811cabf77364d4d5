import numpy as np
import pytest

from trippricing import optimizer as op
from trippricing import pricing as pr

SMALL = op.OptimizerConfig(pop=16, gens=12, polish=40, seed=3)


def _parabola(target=2.0):
    return op.FunctionSearch(lambda x: float((x[0] - target) ** 2), [0.0], [5.0])


def test_one_dimensional_surrogate():
    r = op.design(_parabola(), op.OptimizerConfig(pop=20, gens=30, polish=200))
    assert r.x[0] == pytest.approx(2.0, abs=1e-3)
    assert r.feasible and r.seed == 0


def test_same_seed_same_result():
    f = op.FunctionSearch(lambda x: float(np.sum(np.sin(3 * x) + x**2)), [-2] * 4, [2] * 4)
    a = op.design(f, SMALL)
    b = op.design(f, SMALL)
    np.testing.assert_array_equal(a.x, b.x)
    assert [t.best for t in a.trace] == [t.best for t in b.trace]


def test_returned_point_inside_box():
    f = op.FunctionSearch(lambda x: float(-np.sum(x)), [-1] * 3, [1] * 3)
    r = op.design(f, SMALL)
    assert np.all(r.x >= -1) and np.all(r.x <= 1)
    np.testing.assert_allclose(r.x, 1.0, atol=1e-6)


def test_penalty_handles_constraints():
    f = op.FunctionSearch(lambda x: float(x[0] ** 2), [-5.0], [5.0], violation=lambda x: max(0.0, 1.0 - x[0]) ** 2)
    r = op.design(f, op.OptimizerConfig(pop=20, gens=30, polish=200))
    assert r.feasible
    assert r.x[0] == pytest.approx(1.0, abs=1e-3)


def test_infeasible_reports_best_effort():
    f = op.FunctionSearch(lambda x: float(x[0]), [0.0], [1.0], violation=lambda x: 1.0)
    r = op.design(f, op.OptimizerConfig(pop=10, gens=3, polish=0, restarts=1))
    assert not r.feasible
    assert r.violation > 0
    assert r.restarts_used == 1
    assert r.notes


def test_incumbent_never_worsens_within_a_restart():
    f = op.FunctionSearch(lambda x: float(np.sum((x - 0.3) ** 2)), [-1] * 5, [1] * 5)
    r = op.design(f, SMALL)
    for rs in {t.restart for t in r.trace}:
        best = [t.best for t in r.trace if t.restart == rs]
        assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))


def test_injected_point_is_never_lost():
    f = op.FunctionSearch(lambda x: float(np.sum((x - 0.77) ** 2)), [-1] * 6, [1] * 6)
    r = op.design(f, op.OptimizerConfig(pop=10, gens=1, polish=0), inject=[np.full(6, 0.77)])
    assert r.value == 0.0


def test_max_evals_cap():
    r = op.design(_parabola(), op.OptimizerConfig(pop=10, gens=100, polish=0, max_evals=50))
    assert r.evaluations <= 60


def test_config_validation():
    with pytest.raises(ValueError):
        op.OptimizerConfig(pop=5)
    with pytest.raises(ValueError):
        op.OptimizerConfig(mutation=2.0)


def test_agreement():
    a = op.multi_start_agreement(_parabola(), op.OptimizerConfig(pop=12, gens=10, polish=100), 3)
    assert a.rate == 1.0
    a = op.multi_start_agreement(_parabola(), SMALL, 2, seeds=[4, 4])
    assert a.rate == 1.0 and a.values[0] == a.values[1]
    with pytest.raises(ValueError):
        op.multi_start_agreement(_parabola(), SMALL, 1)


def test_worker_count_does_not_change_result(two_link):
    p = pr.DesignProblem(two_link, "trip", pr.objective_weights("eff"))
    cfg = op.OptimizerConfig(pop=10, gens=3, polish=10, seed=9)
    one = op.design(p, cfg, workers=1)
    two = op.design(p, cfg, workers=2)
    np.testing.assert_array_equal(one.x, two.x)
    assert one.value == two.value


def test_worker_env(monkeypatch):
    monkeypatch.setenv(op.WORKERS_ENV, "3")
    assert op.worker_count() == 3
    monkeypatch.setenv(op.WORKERS_ENV, "x")
    with pytest.raises(ValueError):
        op.worker_count()


def test_pricing_design_and_warm_start(car_only):
    road = pr.DesignProblem(car_only, "road", pr.objective_weights("eff"))
    cfg = op.OptimizerConfig(pop=10, gens=4, polish=20)
    r = op.design(road, cfg)
    assert r.prices.kind == "road"
    trip = road.with_(scheme="trip")
    start = op.road_to_trip_start(trip, r.prices)
    t = op.design(trip, cfg, inject=[start])
    mapped = pr.objective(trip, start).value
    assert t.value <= mapped
    assert mapped == pytest.approx(r.value, abs=1e-9)
