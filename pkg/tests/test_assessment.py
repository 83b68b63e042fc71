import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_scenario
from evoplan.assessment import (INDEPENDENT, SHARED, ProportionalAssessor, assess, compliance_needed,
                                goal1_violations, goal2_satisfied, hhi, hhi_grid, hhi_report)
from evoplan.scenario import Change, GeneratorParams, Schedule, generate

TOL = 1e-12


class TestHhiValues:
    def test_monopoly_without_spare_is_one(self):
        assert abs(hhi(10.0, [10.0]) - 1.0) <= TOL

    def test_zero_demand_is_one(self):
        assert abs(hhi(10.0, [0.0, 0.0]) - 1.0) <= TOL

    def test_symmetric_duopoly_is_half(self):
        assert abs(hhi(10.0, [5.0, 5.0]) - 0.5) <= TOL

    def test_tripled_capacity_gives_five_ninths(self):
        assert abs(hhi(30.0, [10.0]) - 5.0 / 9.0) <= TOL

    def test_zero_capacity_is_flagged(self):
        assert hhi(0.0, [1.0], flag=True) == (1.0, True)
        assert hhi(2.0, [1.0], flag=True)[1] is False

    def test_overloaded_cell_clamps_spare_share(self):
        # demand above capacity: the spare share is zero, operator shares stay
        assert abs(hhi(10.0, [20.0]) - 4.0) <= TOL

    def test_grid_matches_scalar(self):
        rng = np.random.default_rng(0)
        sig = rng.uniform(0, 10, size=50)
        sig[:3] = 0.0
        part = rng.uniform(0, 5, size=(50, 3))
        g = hhi_grid(sig, part)
        for i in range(50):
            assert g[i] == hhi(sig[i], part[i])


@given(st.floats(1e-3, 1e6), st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 1)), min_size=1, max_size=4))
def test_hhi_bounds(sigma, weights):
    total = sum(weights)
    if total == 0:
        taus = [0.0] * len(weights)
    else:
        scale = sigma / total * 0.999
        taus = [w * scale for w in weights]
    h = hhi(sigma, taus)
    assert 1.0 / (len(taus) + 1) - 1e-12 <= h <= 1.0 + 1e-12


def test_single_operator_minimum_at_double_capacity():
    tau = 7.0
    grid = np.linspace(tau * 1.0001, tau * 50, 200001)
    values = hhi_grid(grid, np.full((grid.size, 1), tau))
    best = grid[np.argmin(values)]
    assert abs(best - 2 * tau) < 1e-2
    assert abs(values.min() - 0.5) < 1e-9
    assert hhi(tau * (1 + 1e-9), [tau]) > 0.999
    assert hhi(tau * 1e9, [tau]) > 0.999


class TestAllocator:
    def test_proportional_split(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c1", 1, 0), ("c2", 0, 1)], [[30.0], [10.0]])
        r = assess(sc, Schedule(()), 1)
        assert r.sigma_cluster.tolist() == [75.0, 25.0]

    def test_off_station_serves_nothing(self):
        sc = make_scenario([("b", 0, 0, "off")], [("c1", 1, 0)], [[0.0]])
        r = assess(sc, Schedule(()), 1)
        assert r.sigma_cluster.tolist() == [0.0]
        assert r.sigma_station_cluster == {}

    def test_two_identical_stations_double_capacity(self):
        one = make_scenario([("a", 0, 0, "small")], [("c", 1, 0)], [[40.0]])
        two = make_scenario([("a", 0, 0, "small"), ("b", 0, 0, "small")], [("c", 1, 0)], [[40.0]])
        s1 = assess(one, Schedule(()), 1).sigma_cluster[0]
        s2 = assess(two, Schedule(()), 1).sigma_cluster[0]
        assert s2 == 2 * s1

    def test_equal_split_without_demand(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c1", 1, 0), ("c2", 0, 1)], [[0.0], [0.0]])
        assert assess(sc, Schedule(()), 1).sigma_cluster.tolist() == [50.0, 50.0]

    def test_uncovered_cluster_gets_nothing(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c1", 1, 0), ("far", 50, 0)], [[10.0], [0.0]])
        assert assess(sc, Schedule(()), 1).sigma_cluster[1] == 0.0

    def test_operator_split_in_shared_mode(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c", 1, 0)], [[[30.0, 10.0]]], operators=("x", "y"))
        r = assess(sc, Schedule(()), 1, SHARED)
        assert r.sigma_cluster_op[0].tolist() == [75.0, 25.0]

    def test_independent_mode_serves_own_operator_only(self):
        sc = make_scenario([("a", 0, 0, "small", "x")], [("c", 1, 0)], [[[30.0, 10.0]]], operators=("x", "y"))
        r = assess(sc, Schedule(()), 1, INDEPENDENT)
        assert r.sigma_cluster_op[0].tolist() == [100.0, 0.0]
        assert goal1_violations(sc, Schedule(()), INDEPENDENT) == {("c", 1)}
        assert goal1_violations(sc, Schedule(()), SHARED) == set()


def test_sigma_is_additive_and_bounded(small_generated):
    sc = small_generated
    st_ = ProportionalAssessor().open(sc, SHARED, np.tile(sc.initial_types[:, None], (1, sc.horizon)))
    for k in range(sc.horizon):
        r = st_.result(k + 1)
        by_cluster = np.zeros(len(sc.clusters))
        by_station = np.zeros(len(sc.stations))
        for (b, c), v in r.sigma_station_cluster.items():
            by_cluster[c] += v
            by_station[b] += v
        assert np.allclose(by_cluster, r.sigma_cluster, rtol=1e-12, atol=1e-9)
        assert np.all(by_station <= sc.capacities[sc.initial_types] + 1e-9)


class TestGoals:
    def test_zero_demand_has_no_violations(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c", 1, 0)], [[0.0, 0.0]])
        assert goal1_violations(sc, Schedule(())) == set()

    def test_short_capacity_flags_every_period(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c", 1, 0)], [[150.0, 150.0, 150.0]])
        assert goal1_violations(sc, Schedule(())) == {("c", 1), ("c", 2), ("c", 3)}

    def test_hmax_one_always_satisfied(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c", 1, 0)], [[100.0]], h_max=1.0, phi=1.0)
        assert goal2_satisfied(sc, Schedule(()), 1) == (1.0, True)

    def test_phi_zero_always_satisfied(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c", 1, 0)], [[100.0]], h_max=0.1, phi=0.0)
        frac, ok = goal2_satisfied(sc, Schedule(()), 1)
        assert frac == 0.0 and ok

    def test_symmetric_duopoly_everywhere(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c1", 1, 0), ("c2", 0, 1)],
                           [[[25.0, 25.0]], [[25.0, 25.0]]], operators=("x", "y"), h_max=0.5, phi=0.7)
        assert goal2_satisfied(sc, Schedule(()), 1, INDEPENDENT) == (1.0, True)

    def test_zero_demand_clusters_are_not_counted(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c1", 1, 0), ("idle", 0, 1)], [[50.0], [0.0]],
                           h_max=0.5, phi=1.0)
        rep = hhi_report(sc, Schedule(()))
        assert rep.counted[:, 0].tolist() == [True, False]
        assert rep.hhi[1, 0] == 1.0
        assert goal2_satisfied(sc, Schedule(()), 1) == (1.0, True)

    def test_uncovered_cluster_is_degenerate(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c", 1, 0), ("far", 50, 0)], [[50.0], [5.0]])
        rep = hhi_report(sc, Schedule(()))
        assert rep.degenerate[1, 0] and rep.hhi[1, 0] == 1.0 and not rep.compliant[1, 0]


@pytest.mark.parametrize("phi, counted, expected", [
    (0.7, 10, 7), (0.7, 0, 0), (0.1, 10, 1), (0.3, 10, 3), (1.0, 7, 7), (0.0, 7, 0), (0.7, 3, 3),
])
def test_compliance_needed_is_exact(phi, counted, expected):
    assert compliance_needed(phi, counted) == expected


# --- incremental updates ----------------------------------------------------


def _fresh(sc, mode, traj):
    return ProportionalAssessor().open(sc, mode, traj)


def _same(a, b):
    for name in ("D", "contrib", "sig_g", "sig", "H", "compliant", "n_compliant"):
        x, y = getattr(a, name), getattr(b, name)
        assert np.array_equal(x, y), name


SCENARIO = generate(GeneratorParams(stations=12, clusters=50, horizon=6, seed=5, change_rate=4))


@given(st.lists(st.tuples(st.integers(0, 2 * 12 - 1), st.integers(0, 5), st.integers(0, 4)), max_size=12),
       st.sampled_from([SHARED, INDEPENDENT]))
@settings(max_examples=60, deadline=None)
def test_incremental_updates_are_bitwise_fresh(edits, mode):
    sc = SCENARIO
    traj = np.tile(sc.initial_types[:, None], (1, sc.horizon))
    inc = _fresh(sc, mode, traj)
    for b, k, t in edits:
        if not sc.allowed[b, t]:
            continue
        row = inc.typ[b].copy()
        row[k:] = t
        inc.set_row(b, row)
    _same(inc, _fresh(sc, mode, inc.typ.copy()))


@given(st.integers(0, 23), st.integers(0, 5), st.integers(0, 4))
@settings(max_examples=40, deadline=None)
def test_revert_restores_state_exactly(b, k, t):
    sc = SCENARIO
    traj = np.tile(sc.initial_types[:, None], (1, sc.horizon))
    state = _fresh(sc, SHARED, traj)
    before = _fresh(sc, SHARED, traj)
    old = state.typ[b].copy()
    row = old.copy()
    row[k:] = t
    state.set_row(b, row)
    state.set_row(b, old)
    _same(state, before)


def test_preserving_change_never_lowers_sigma():
    from evoplan.planner import is_preserving
    sc = SCENARIO
    traj = np.tile(sc.initial_types[:, None], (1, sc.horizon))
    rng = np.random.default_rng(1)
    checked = 0
    for _ in range(200):
        b = int(rng.integers(len(sc.stations)))
        k = int(rng.integers(sc.horizon))
        st_ = _fresh(sc, SHARED, traj)
        t_from = int(st_.typ[b, k])
        for t in range(len(sc.type_table)):
            if not sc.allowed[b, t] or not is_preserving(st_, b, t_from, t):
                continue
            new = traj.copy()
            new[b, k:] = t
            after = _fresh(sc, SHARED, new)
            assert np.all(after.sig[:, k:] >= st_.sig[:, k:])
            checked += 1
    assert checked > 50


def test_schedule_trajectory_left_fold(small_generated):
    sc = small_generated
    lte = next(s.id for s in sc.stations if s.initial_type == "off")
    sched = Schedule((Change(lte, 2, "LTE1"), Change(lte, 5, "LTE3")))
    traj = sched.trajectory(sc)
    b = sc.station_index[lte]
    names = [sc.type_table[t].id for t in traj[b]]
    assert names == ["off", "LTE1", "LTE1", "LTE1", "LTE3", "LTE3", "LTE3", "LTE3"]
