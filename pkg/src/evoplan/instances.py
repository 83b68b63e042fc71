"""Small hand-built scenarios with known schedules."""
from __future__ import annotations

import numpy as np

from .scenario import OFF, BaseStation, Scenario, StationType, SubscriberCluster


def _types(capacities, costs, radius=1.0):
    out = [StationType(OFF, 0.0, 0.0, 0.0, "off")]
    for i, (cap, cost) in enumerate(zip(capacities, costs), start=1):
        out.append(StationType(f"t{i}", float(cap), radius, float(cost), "generic"))
    return tuple(out)


def three_station_example() -> Scenario:
    """Three stations over four periods with one change allowed per period.

    b1 and b2 each serve one cluster whose demand outgrows type t1; b1 needs
    t2 by period 2 and t3 by period 4, b2 needs t2 by period 2. b3 serves a
    cluster without demand and can be switched off at any time. Expected
    schedule: b2->t2 at 1, b1->t2 at 2, b3->off at 3, b1->t3 at 4.
    """
    types = _types([1, 2, 3], [1.0, 2.0, 3.0])
    ids = [t.id for t in types]
    allowed = frozenset(ids)
    stations = tuple(BaseStation(f"b{i}", 10.0 * (i - 1), 0.0, "t1", "op", allowed) for i in (1, 2, 3))
    clusters = tuple(SubscriberCluster(f"c{i}", 10.0 * (i - 1), 0.5) for i in (1, 2, 3))
    demand = np.array([
        [0.5, 1.5, 1.8, 2.5],
        [0.5, 1.5, 1.5, 1.5],
        [0.0, 0.0, 0.0, 0.0],
    ])[:, :, None]
    transitions = {("t1", "t2"), ("t2", "t3"), ("t1", "t3")} | {(t, OFF) for t in ids if t != OFF}
    return Scenario(stations=stations, clusters=clusters, operators=("op",), horizon=4, change_rate=1,
                    h_max=1.0, phi=0.7, type_table=types, transitions=frozenset(transitions), demand=demand)


def single_cluster_upgrade(jump_period: int = 7, horizon: int = 10, blocker: bool = False) -> Scenario:
    """One cluster served by a 3G station, with an LTE candidate on the same
    site. Demand exceeds the 3G capacity from ``jump_period`` on. With
    ``blocker`` a second, unrelated site needs its own upgrade at the same
    period, and it is listed first so it is handled first.
    """
    types = (StationType(OFF, 0.0, 0.0, 0.0, "off"), StationType("3G", 100.0, 5.0, 1.0, "3G"),
             StationType("LTE1", 300.0, 3.0, 1.2, "LTE"))
    transitions = frozenset({("3G", OFF), (OFF, "LTE1")})
    sites = [("a", 0.0)]
    if blocker:
        sites.insert(0, ("z", 100.0))
    stations, clusters, rows = [], [], []
    for name, x in sites:
        stations.append(BaseStation(f"{name}-3g", x, 0.0, "3G", "op", frozenset({"3G", OFF})))
        stations.append(BaseStation(f"{name}-lte", x, 0.0, OFF, "op", frozenset({OFF, "LTE1"})))
        clusters.append(SubscriberCluster(f"{name}-c", x + 1.0, 0.0))
        rows.append([50.0 if k + 1 < jump_period else 150.0 for k in range(horizon)])
    return Scenario(stations=tuple(stations), clusters=tuple(clusters), operators=("op",), horizon=horizon,
                    change_rate=1, h_max=1.0, phi=0.7, type_table=types, transitions=transitions,
                    demand=np.array(rows)[:, :, None])
