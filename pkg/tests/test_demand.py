import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trippricing import demand as dm
from trippricing import netmodel as nm
from trippricing import supply as sp

costs = st.lists(st.floats(0.1, 60.0, allow_nan=False), min_size=1, max_size=6)


def test_equal_costs_split_evenly():
    _, p = dm.path_utilities_and_probs([3.0, 3.0], theta=5.0)
    np.testing.assert_allclose(p, [0.5, 0.5])


def test_commonality_of_disjoint_paths_is_one():
    sf = dm.commonality_factor(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(sf, [1.0, 1.0])


def test_commonality_of_overlap():
    shared = np.array([[4.0, 2.0], [2.0, 9.0]])
    sf = dm.commonality_factor(shared)
    np.testing.assert_allclose(sf, [1 + 2 / 6, 1 + 2 / 6])
    with pytest.raises(ValueError):
        dm.commonality_factor(np.array([[0.0]]))


def test_mode_logsum_forms():
    v = np.array([-1.0, -2.0])
    lse = np.log(np.exp(-0.2) + np.exp(-0.4))
    assert dm.mode_logsum(v, 5.0, "scaled") == pytest.approx(5 * lse)
    assert dm.mode_logsum(v, 5.0, "printed") == pytest.approx(lse / 5)
    with pytest.raises(ValueError):
        dm.mode_logsum([], 5.0)
    with pytest.raises(ValueError):
        dm.mode_logsum(v, 5.0, "other")


def test_unavailable_mode_gets_zero():
    p = dm.mode_probs([np.nan, -1.0, -1.0])
    np.testing.assert_allclose(p, [0.0, 0.5, 0.5])
    with pytest.raises(ValueError):
        dm.mode_probs([np.nan])


def test_class_path_flows():
    np.testing.assert_allclose(dm.class_path_flows([0.25, 0.75], 0.8, 0.7, 1.2, 2000.0),
                               np.array([0.25, 0.75]) * 0.8 * 0.7 / 1.2 * 2000.0)


@settings(max_examples=100, deadline=None)
@given(costs, st.floats(0.2, 10.0))
def test_path_probabilities_normalize(g, theta):
    _, p = dm.path_utilities_and_probs(g, theta=theta)
    assert abs(p.sum() - 1.0) < 1e-12
    assert np.all(p >= 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.one_of(st.just(float("nan")), st.floats(-50, 5, allow_nan=False)), min_size=1, max_size=5)
       .filter(lambda x: any(not np.isnan(v) for v in x)))
def test_mode_probabilities_normalize(logsums):
    p = dm.mode_probs(logsums)
    assert abs(p.sum() - 1.0) < 1e-12
    assert np.all(p[np.isnan(logsums)] == 0)


def _satisfaction(groups, form, theta_path=5.0, theta_mode=1.0):
    return dm.od_satisfaction([dm.mode_logsum(-np.asarray(g), theta_path, form) for g in groups], theta_mode)


@pytest.mark.parametrize("form, scale", [("scaled", 1.0), ("printed", 1.0 / 25.0)])
@settings(max_examples=40, deadline=None)
@given(groups=st.lists(costs, min_size=1, max_size=3))
def test_empu_gradient_matches_finite_differences(form, scale, groups):
    # d(satisfaction)/d(g_k) = -P(mode) P(path | mode), times 1/theta_path^2 for the printed form
    ls = [dm.mode_logsum(-np.asarray(g), 5.0, form) for g in groups]
    pm = dm.mode_probs(ls)
    h = 1e-6
    for m, g in enumerate(groups):
        _, pp = dm.path_utilities_and_probs(g, theta=5.0)
        for k in range(len(g)):
            up = [list(x) for x in groups]
            dn = [list(x) for x in groups]
            up[m][k] += h
            dn[m][k] -= h
            fd = (_satisfaction(up, form) - _satisfaction(dn, form)) / (2 * h)
            assert fd == pytest.approx(-scale * pm[m] * pp[k], abs=1e-5)


def _loading(s, level, seed=0):
    rng = np.random.default_rng(seed)
    f = rng.uniform(0, level, len(s.links))
    return dm.load(s, sp.link_state(s, f).cost)


@pytest.mark.parametrize("name", nm.BUILTINS)
def test_loading_normalizes_and_conserves_demand(name):
    s = nm.builtin(name)
    ld = _loading(s, 2500.0)
    for w, m, idx in s.groups:
        np.testing.assert_allclose(ld.p_path[:, idx].sum(axis=1), 1.0, atol=1e-12)
    for q in range(len(s.classes)):
        for w in range(len(s.od_ids)):
            sel = s.path_od == w
            assert ld.pax[q, sel].sum() == pytest.approx(s.shares[q] * s.demand_vector[w], rel=1e-12)
            assert ld.p_mode[q, s.group_od == w].sum() == pytest.approx(1.0, abs=1e-12)


def test_loading_matches_scalar_helpers(multimodal):
    s = multimodal
    rng = np.random.default_rng(7)
    f = rng.uniform(0, 3000, len(s.links))
    cost = sp.link_state(s, f).cost
    ld = dm.load(s, cost)
    for q in range(len(s.classes)):
        for w in range(len(s.od_ids)):
            logsums = []
            for g_i, (ww, m, idx) in enumerate(s.groups):
                if ww != w:
                    continue
                gad = ld.additive_cost[q, idx]
                if s.modes[m].commonality:
                    shared = (s.stacked_incidence[:, idx].T * cost[q].reshape(-1)) @ s.stacked_incidence[:, idx]
                    sf = dm.commonality_factor(shared)
                else:
                    sf = None
                v, p = dm.path_utilities_and_probs(gad + s.nonadditive[idx], sf, theta=s.params.theta_path)
                np.testing.assert_allclose(ld.p_path[q, idx], p, atol=1e-12)
                logsums.append(dm.mode_logsum(v, s.params.theta_path, s.params.logsum))
            assert ld.satisfaction[q, w] == pytest.approx(dm.od_satisfaction(logsums), rel=1e-10)


def test_higher_price_lowers_probability(car_only):
    cost = sp.link_state(car_only, np.zeros(len(car_only.links))).cost
    base = dm.load(car_only, cost)
    pi = np.zeros(len(car_only.paths))
    pi[0] = 1.0
    priced = dm.load(car_only, cost, pi)
    assert np.all(priced.p_path[:, 0] < base.p_path[:, 0])
