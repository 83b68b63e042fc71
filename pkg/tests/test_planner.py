import numpy as np
import pytest

from conftest import make_scenario
from evoplan.assessment import INDEPENDENT, SHARED, ProportionalAssessor, goal1_violations, goal2_satisfied, hhi_report
from evoplan.instances import single_cluster_upgrade, three_station_example
from evoplan.planner import (INFEASIBLE, Infeasible, is_preserving, phase1_capacity, phase3_cost, plan)
from evoplan.scenario import Change, GeneratorParams, Schedule, generate


def _changes(result):
    return sorted((ch.station, ch.period, ch.to_type) for ch in result.schedule.changes)


def test_three_station_golden_schedule():
    res = plan(three_station_example())
    assert res.ok
    assert _changes(res) == [("b1", 2, "t2"), ("b1", 4, "t3"), ("b2", 1, "t2"), ("b3", 3, "off")]


def test_three_station_phases_are_attributed():
    res = plan(three_station_example())
    assert res.phases[("b3", 3)] == 3
    assert {res.phases[k] for k in [("b1", 2), ("b1", 4), ("b2", 1)]} == {1}


class TestPhase1:
    def test_upgrade_lands_on_its_deadline(self):
        res = plan(single_cluster_upgrade(), phases=(1,))
        assert _changes(res) == [("a-lte", 7, "LTE1")]

    def test_full_period_pushes_upgrade_earlier(self):
        res = plan(single_cluster_upgrade(blocker=True), phases=(1,))
        assert _changes(res) == [("a-lte", 6, "LTE1"), ("z-lte", 7, "LTE1")]

    def test_uncoverable_cluster_is_infeasible(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c", 1, 0), ("far", 50, 0)], [[10.0, 10.0], [0.0, 5.0]])
        res = plan(sc)
        assert res.status == INFEASIBLE and res.period == 2
        assert "uncoverable" in res.reason and "far" in res.reason

    def test_two_changes_due_at_first_period_with_one_slot(self):
        sc = make_scenario([("a", 0, 0, "small"), ("b", 20, 0, "small")], [("ca", 1, 0), ("cb", 21, 0)],
                           [[150.0, 150.0], [150.0, 150.0]], N=1)
        res = plan(sc)
        assert res.status == INFEASIBLE and res.period == 1
        assert "period 1" in res.reason

    def test_zero_rate_is_infeasible_at_first_need(self):
        sc = make_scenario([("a", 0, 0, "small")], [("c", 1, 0)], [[50.0, 150.0]], N=0)
        res = plan(sc)
        assert res.status == INFEASIBLE and res.period == 2

    def test_phase_function_raises(self):
        sc = make_scenario([("b", 0, 0, "small")], [("far", 50, 0)], [[5.0]])
        with pytest.raises(Infeasible):
            phase1_capacity(sc, Schedule(()))

    def test_partial_upgrades_accumulate(self):
        # no single station restores 500, two upgrades together do
        sc = make_scenario([("a", 0, 0, "small"), ("b", 0.5, 0, "small")], [("c", 0.2, 0)], [[500.0]], N=2)
        res = plan(sc, phases=(1,))
        assert res.ok
        assert goal1_violations(sc, res.schedule) == set()
        assert len(res.schedule.changes) == 2


def test_zero_growth_gives_empty_schedule():
    sc = make_scenario([("a", 0, 0, "small"), ("b", 10, 0, "small")], [("ca", 1, 0), ("cb", 11, 0)],
                       [[50.0] * 4, [60.0] * 4])
    res = plan(sc)
    assert res.ok and res.schedule.changes == ()


class TestPhase2:
    def test_hmax_one_adds_nothing(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c", 1, 0)], [[100.0, 100.0]], h_max=1.0, phi=1.0)
        res = plan(sc, phases=(1, 2))
        assert res.ok and res.schedule.changes == ()

    def test_tripling_upgrade_reaches_five_ninths(self):
        sc = make_scenario([("b", 0, 0, "small")], [("c", 1, 0)], [[100.0]], h_max=0.6, phi=1.0)
        res = plan(sc)
        assert res.ok
        assert _changes(res) == [("b", 1, "big")]
        assert abs(hhi_report(sc, res.schedule).hhi[0, 0] - 5.0 / 9.0) <= 1e-12

    def test_boundary_compliance_is_a_no_op(self):
        # 7 of 10 clusters at H = 0.5, three at H = 1: exactly phi
        clusters = [(f"c{i}", 10.0 * i, 0.5) for i in range(10)]
        stations = [(f"b{i}", 10.0 * i, 0.0, "small") for i in range(10)]
        demand = [[50.0] if i < 7 else [100.0] for i in range(10)]
        sc = make_scenario(stations, clusters, demand, h_max=0.5, phi=0.7)
        res = plan(sc, phases=(1, 2))
        assert res.ok and res.schedule.changes == ()

    def test_no_lowering_action_is_infeasible(self):
        sc = make_scenario([("b", 0, 0, "wide")], [("c", 1, 0)], [[300.0]], h_max=0.6, phi=1.0)
        res = plan(sc)
        assert res.status == INFEASIBLE and res.period == 1 and "phase 2" in res.reason


class TestPhase3:
    def test_redundant_station_is_decommissioned_first_period(self):
        sc = make_scenario([("a", 0, 0, "small"), ("b", 0.5, 0, "small")], [("c", 0.2, 0)], [[40.0] * 3])
        res = plan(sc)
        assert _changes(res) == [("a", 1, "off")]

    def test_sole_coverer_is_kept(self):
        sc = make_scenario([("a", 0, 0, "small")], [("c", 1, 0)], [[40.0] * 3])
        res = plan(sc)
        assert res.ok and res.schedule.changes == ()
        reverts = [e for e in res.logs if e.action == "revert"]
        assert reverts and reverts[0].note.startswith("coverage")

    def test_large_rate_places_both_at_first_period(self):
        st = [("a", 0, 0, "small"), ("b", 0.1, 0, "small"), ("c", 0.2, 0, "small")]
        sc = make_scenario(st, [("x", 0.5, 0)], [[40.0] * 3], N=5)
        res = plan(sc)
        assert _changes(res) == [("a", 1, "off"), ("b", 1, "off")]

    def test_unit_rate_spreads_decommissions(self):
        st = [("a", 0, 0, "small"), ("b", 0.1, 0, "small"), ("c", 0.2, 0, "small")]
        sc = make_scenario(st, [("x", 0.5, 0)], [[40.0] * 3], N=1)
        res = plan(sc)
        assert _changes(res) == [("a", 1, "off"), ("b", 2, "off")]

    def test_phase3_alone_never_raises(self):
        sc = make_scenario([("a", 0, 0, "small")], [("c", 1, 0)], [[400.0]])
        assert phase3_cost(sc, Schedule(())) == Schedule(())


# --- properties on generated scenarios ----------------------------------------

GENERATED = [generate(GeneratorParams(stations=20, clusters=80, horizon=8, seed=s, change_rate=6)) for s in range(4)]


def _previous_type(sc, traj, b, period):
    return int(sc.initial_types[b]) if period == 1 else int(traj[b, period - 2])


@pytest.mark.parametrize("mode", [SHARED, INDEPENDENT])
@pytest.mark.parametrize("idx", range(len(GENERATED)))
def test_generated_postconditions(idx, mode):
    sc = GENERATED[idx]
    res = plan(sc, mode)
    assert res.ok, res.reason
    assert goal1_violations(sc, res.schedule, mode) == set()
    for k in range(1, sc.horizon + 1):
        assert goal2_satisfied(sc, res.schedule, k, mode)[1]
    assert res.schedule.check(sc, budget_per_operator=mode == INDEPENDENT) == []


@pytest.mark.parametrize("mode", [SHARED, INDEPENDENT])
def test_phase_one_and_two_changes_preserve_capacity(mode):
    checked = 0
    for sc in GENERATED:
        res = plan(sc, mode)
        traj = res.schedule.trajectory(sc)
        st = ProportionalAssessor().open(sc, mode, traj)
        for ch in res.schedule.changes:
            if res.phases[(ch.station, ch.period)] not in (1, 2):
                continue
            b = sc.station_index[ch.station]
            assert is_preserving(st, b, _previous_type(sc, traj, b, ch.period), sc.type_index[ch.to_type])
            checked += 1
    assert checked > 0


def test_decisions_are_bounded_by_types_times_stations():
    for sc in GENERATED:
        res = plan(sc)
        n = sum(e.action in ("commit", "replace", "revert") for e in res.logs)
        assert n <= len(sc.type_table) * len(sc.stations)


def test_plan_is_deterministic():
    sc = GENERATED[0]
    a, b = plan(sc), plan(sc)
    assert a == b


def test_phase3_commits_keep_goals_and_reverts_show_a_violation():
    sc = GENERATED[1]
    res = plan(sc)
    p12 = Schedule(tuple(ch for ch in res.schedule.changes if res.phases[(ch.station, ch.period)] != 3))
    current = list(p12.changes)
    for e in res.logs:
        if e.phase != 3 or e.action not in ("commit", "revert"):
            continue
        trial = Schedule(tuple(current) + (Change(e.station, e.placed, e.to_type),))
        broken = bool(goal1_violations(sc, trial)) or not all(
            goal2_satisfied(sc, trial, k)[1] for k in range(1, sc.horizon + 1))
        traj = trial.trajectory(sc)
        st = ProportionalAssessor().open(sc, SHARED, traj)
        uncovered = bool(np.any((st.tau > 0) & (st.sig == 0)))
        if e.action == "commit":
            assert not broken and not uncovered
            current.append(Change(e.station, e.placed, e.to_type))
        else:
            assert broken or uncovered, e
    assert Schedule(tuple(current)) == res.schedule


def test_unknown_mode_is_rejected():
    with pytest.raises(ValueError):
        plan(GENERATED[0], "cooperative")
