"""Problem instances: station types, stations, clusters, demand, and schedules.

Periods are 1-based in every public structure (``Change.period``,
``ChangeRequest.deadline``); numpy arrays indexed by period use ``k - 1``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

OFF = "off"


class ParseError(ValueError):
    """Raised when a scenario file cannot be read; names the file and location."""


@dataclass(frozen=True)
class StationType:
    id: str
    capacity: float
    radius_km: float
    cost: float
    technology: str = ""

    @property
    def is_off(self) -> bool:
        return self.id == OFF


@dataclass(frozen=True)
class BaseStation:
    id: str
    x: float
    y: float
    initial_type: str
    owner: str
    allowed_types: frozenset[str]


@dataclass(frozen=True)
class SubscriberCluster:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class Change:
    station: str
    period: int
    to_type: str


def default_type_table() -> tuple[StationType, ...]:
    # Placeholder magnitudes; only the zero cost/capacity of ``off`` is forced.
    return (
        StationType(OFF, 0.0, 0.0, 0.0, "off"),
        StationType("3G", 100.0, 5.0, 1.0, "3G"),
        StationType("LTE1", 300.0, 3.0, 1.2, "LTE"),
        StationType("LTE2", 600.0, 3.0, 1.5, "LTE"),
        StationType("LTE3", 900.0, 3.0, 1.8, "LTE"),
    )


def default_transitions() -> frozenset[tuple[str, str]]:
    return frozenset({
        ("3G", OFF),
        (OFF, "LTE1"), (OFF, "LTE2"), (OFF, "LTE3"),
        ("LTE1", "LTE2"), ("LTE1", "LTE3"), ("LTE2", "LTE3"),
    })


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable planning instance.

    ``demand`` has shape (clusters, K, operators). Coverage and distances are
    derived from positions and type radii, never stored.
    """

    stations: tuple[BaseStation, ...]
    clusters: tuple[SubscriberCluster, ...]
    operators: tuple[str, ...]
    horizon: int
    change_rate: int
    h_max: float
    phi: float
    type_table: tuple[StationType, ...]
    transitions: frozenset[tuple[str, str]]
    demand: np.ndarray
    cost_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.demand, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "demand", d)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.stations == other.stations
            and self.clusters == other.clusters
            and self.operators == other.operators
            and self.horizon == other.horizon
            and self.change_rate == other.change_rate
            and self.h_max == other.h_max
            and self.phi == other.phi
            and self.type_table == other.type_table
            and self.transitions == other.transitions
            and self.cost_overrides == other.cost_overrides
            and self.demand.shape == other.demand.shape
            and np.array_equal(self.demand, other.demand)
        )

    __hash__ = None

    def with_settings(self, **kw) -> "Scenario":
        return replace(self, **kw)

    # --- index helpers -------------------------------------------------
    @cached_property
    def type_index(self) -> dict[str, int]:
        return {t.id: i for i, t in enumerate(self.type_table)}

    @cached_property
    def station_index(self) -> dict[str, int]:
        return {s.id: i for i, s in enumerate(self.stations)}

    @cached_property
    def operator_index(self) -> dict[str, int]:
        return {o: i for i, o in enumerate(self.operators)}

    @property
    def off_type(self) -> int:
        return self.type_index[OFF]

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([t.capacity for t in self.type_table], dtype=float)

    @cached_property
    def radii(self) -> np.ndarray:
        return np.array([t.radius_km for t in self.type_table], dtype=float)

    @cached_property
    def cost_matrix(self) -> np.ndarray:
        """kappa(b, t) as a (B, T) array, type costs with per-station overrides."""
        m = np.tile(np.array([t.cost for t in self.type_table], dtype=float), (len(self.stations), 1))
        for sid, over in self.cost_overrides.items():
            b = self.station_index[sid]
            for tid, v in over.items():
                m[b, self.type_index[tid]] = float(v)
        return m

    @cached_property
    def initial_types(self) -> np.ndarray:
        return np.array([self.type_index[s.initial_type] for s in self.stations], dtype=np.int64)

    @cached_property
    def owners(self) -> np.ndarray:
        return np.array([self.operator_index[s.owner] for s in self.stations], dtype=np.int64)

    @cached_property
    def allowed(self) -> np.ndarray:
        """(B, T) bool: type t is reachable for station b."""
        a = np.zeros((len(self.stations), len(self.type_table)), dtype=bool)
        for b, s in enumerate(self.stations):
            for t in s.allowed_types:
                if t in self.type_index:
                    a[b, self.type_index[t]] = True
        return a

    @cached_property
    def transition_matrix(self) -> np.ndarray:
        """(T, T) bool: a change from type i to type j is permitted."""
        m = np.zeros((len(self.type_table),) * 2, dtype=bool)
        for a, b in self.transitions:
            if a in self.type_index and b in self.type_index:
                m[self.type_index[a], self.type_index[b]] = True
        return m

    @cached_property
    def station_xy(self) -> np.ndarray:
        return np.array([(s.x, s.y) for s in self.stations], dtype=float).reshape(-1, 2)

    @cached_property
    def cluster_xy(self) -> np.ndarray:
        return np.array([(c.x, c.y) for c in self.clusters], dtype=float).reshape(-1, 2)

    @cached_property
    def total_demand(self) -> np.ndarray:
        """tau(c, k) summed over operators in operator order, shape (C, K)."""
        out = np.zeros(self.demand.shape[:2])
        for o in range(self.demand.shape[2]):
            out = out + self.demand[:, :, o]
        return out

    @cached_property
    def pairs(self) -> "CoveragePairs":
        return CoveragePairs.build(self)

    def distance(self, b: int, c: int) -> float:
        dx = self.station_xy[b] - self.cluster_xy[c]
        return float(math.hypot(dx[0], dx[1]))

    def covers(self, b: int, c: int, t: int) -> bool:
        """gamma(b, c, t)."""
        if self.type_table[t].is_off:
            return False
        return self.distance(b, c) <= self.radii[t]


@dataclass(frozen=True, eq=False)
class CoveragePairs:
    """Sparse (station, cluster) pairs within reach of any allowed type.

    Station-major arrays hold pairs sorted by (station, cluster); ``cl_pairs``
    lists pair indices grouped per cluster in station order.
    """

    st_ptr: np.ndarray
    cluster: np.ndarray
    station: np.ndarray
    dist: np.ndarray
    cl_ptr: np.ndarray
    cl_pairs: np.ndarray
    cl_by_distance: np.ndarray  # pair indices per cluster sorted by (dist, station)

    @classmethod
    def build(cls, sc: Scenario) -> "CoveragePairs":
        B, C = len(sc.stations), len(sc.clusters)
        reach = np.where(sc.allowed, sc.radii[None, :], 0.0)
        off = sc.off_type
        reach[:, off] = 0.0
        max_r = reach.max(axis=1) if B else np.zeros(0)
        st_list, cl_list, d_list = [], [], []
        if B and C:
            tree = cKDTree(sc.cluster_xy)
            for b in range(B):
                if max_r[b] <= 0:
                    continue
                idx = np.array(sorted(tree.query_ball_point(sc.station_xy[b], max_r[b] * (1 + 1e-12) + 1e-12)), dtype=np.int64)
                if idx.size == 0:
                    continue
                diff = sc.cluster_xy[idx] - sc.station_xy[b]
                d = np.hypot(diff[:, 0], diff[:, 1])
                keep = d <= max_r[b]
                st_list.append(np.full(int(keep.sum()), b, dtype=np.int64))
                cl_list.append(idx[keep])
                d_list.append(d[keep])
        station = np.concatenate(st_list) if st_list else np.zeros(0, dtype=np.int64)
        cluster = np.concatenate(cl_list) if cl_list else np.zeros(0, dtype=np.int64)
        dist = np.concatenate(d_list) if d_list else np.zeros(0)
        st_ptr = np.zeros(B + 1, dtype=np.int64)
        np.add.at(st_ptr, station + 1, 1)
        st_ptr = np.cumsum(st_ptr)
        order = np.lexsort((station, cluster))
        cl_ptr = np.zeros(C + 1, dtype=np.int64)
        np.add.at(cl_ptr, cluster + 1, 1)
        cl_ptr = np.cumsum(cl_ptr)
        by_dist = np.lexsort((station, dist, cluster))
        return cls(st_ptr, cluster, station, dist, cl_ptr, order, by_dist)

    def of_station(self, b: int) -> slice:
        return slice(int(self.st_ptr[b]), int(self.st_ptr[b + 1]))

    def of_cluster(self, c: int) -> np.ndarray:
        return self.cl_pairs[self.cl_ptr[c]:self.cl_ptr[c + 1]]

    def of_cluster_by_distance(self, c: int) -> np.ndarray:
        return self.cl_by_distance[self.cl_ptr[c]:self.cl_ptr[c + 1]]


@dataclass(frozen=True)
class Schedule:
    """The x(b, k, t) = 1 set, one entry per (station, period)."""

    changes: tuple[Change, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "changes", tuple(sorted(self.changes, key=lambda ch: (ch.period, ch.station, ch.to_type))))

    def per_period(self, horizon: int) -> list[int]:
        counts = [0] * (horizon + 1)
        for ch in self.changes:
            counts[ch.period] += 1
        return counts[1:]

    def trajectory(self, sc: Scenario) -> np.ndarray:
        """T(b, k) as a (B, K) int array (column k-1 holds period k)."""
        traj = np.tile(sc.initial_types[:, None], (1, sc.horizon))
        by_station: dict[int, list[Change]] = {}
        for ch in self.changes:
            by_station.setdefault(sc.station_index[ch.station], []).append(ch)
        for b, chs in by_station.items():
            for ch in sorted(chs, key=lambda c: c.period):
                traj[b, ch.period - 1:] = sc.type_index[ch.to_type]
        return traj

    def check(self, sc: Scenario, budget_per_operator: bool = False) -> list[str]:
        """Schedule invariants: budget, one change per (station, period), allowed types."""
        problems = []
        seen = set()
        counts: dict[tuple, int] = {}
        for ch in self.changes:
            if ch.station not in sc.station_index:
                problems.append(f"unknown station {ch.station}")
                continue
            if not 1 <= ch.period <= sc.horizon:
                problems.append(f"period out of range: {ch}")
            if (ch.station, ch.period) in seen:
                problems.append(f"two changes for {ch.station} at period {ch.period}")
            seen.add((ch.station, ch.period))
            st = sc.stations[sc.station_index[ch.station]]
            if ch.to_type not in st.allowed_types:
                problems.append(f"type {ch.to_type} not allowed for {ch.station}")
            key = (st.owner if budget_per_operator else None, ch.period)
            counts[key] = counts.get(key, 0) + 1
        for (owner, k), n in sorted(counts.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])):
            if n > sc.change_rate:
                who = f" for {owner}" if owner is not None else ""
                problems.append(f"budget exceeded at period {k}{who}: {n} > {sc.change_rate}")
        return problems


# ---------------------------------------------------------------------------
# validation


def validate(sc: Scenario) -> list[str]:
    """Return one descriptor per violated instance invariant (empty when clean)."""
    out: list[str] = []
    ids = [t.id for t in sc.type_table]
    if ids.count(OFF) != 1:
        out.append(f"type table: expected exactly one '{OFF}' type, found {ids.count(OFF)}")
    for t in sc.type_table:
        vals = (t.capacity, t.radius_km, t.cost)
        if any(not math.isfinite(v) or v < 0 for v in vals):
            out.append(f"type {t.id}: capacity, radius and cost must be finite and >= 0")
        if t.is_off and (t.capacity != 0 or t.cost != 0):
            out.append(f"type {t.id}: decommissioned type must have zero capacity and cost")
        if t.is_off and t.radius_km != 0:
            out.append(f"off-type coverage: type {t.id} has radius {t.radius_km}")
    for a, b in sorted(sc.transitions):
        if a not in sc.type_index or b not in sc.type_index:
            out.append(f"transition {a}->{b} names an unknown type")
    if sc.horizon < 1:
        out.append(f"horizon must be >= 1, got {sc.horizon}")
    if sc.change_rate < 0:
        out.append(f"change rate must be >= 0, got {sc.change_rate}")
    if not 0 <= sc.h_max <= 1:
        out.append(f"h_max must lie in [0, 1], got {sc.h_max}")
    if not 0 <= sc.phi <= 1:
        out.append(f"phi must lie in [0, 1], got {sc.phi}")
    if len(set(s.id for s in sc.stations)) != len(sc.stations):
        out.append("duplicate station ids")
    if len(set(c.id for c in sc.clusters)) != len(sc.clusters):
        out.append("duplicate cluster ids")
    for s in sc.stations:
        if s.initial_type not in s.allowed_types:
            out.append(f"station {s.id}: initial type {s.initial_type} not in allowed types")
        if OFF not in s.allowed_types:
            out.append(f"station {s.id}: '{OFF}' missing from allowed types")
        unknown = sorted(set(s.allowed_types) - set(ids))
        if unknown:
            out.append(f"station {s.id}: unknown types {unknown}")
        if s.owner not in sc.operators:
            out.append(f"station {s.id}: unknown operator {s.owner}")
        if not (math.isfinite(s.x) and math.isfinite(s.y)):
            out.append(f"station {s.id}: non-finite position")
    expected = (len(sc.clusters), sc.horizon, len(sc.operators))
    if sc.demand.shape != expected:
        out.append(f"demand table has shape {sc.demand.shape}, expected {expected}")
        return out
    if not np.all(np.isfinite(sc.demand)) or np.any(sc.demand < 0):
        bad = np.argwhere(~np.isfinite(sc.demand) | (sc.demand < 0))[0]
        out.append(f"negative or non-finite demand at cluster {sc.clusters[bad[0]].id}, period {bad[1] + 1}")
    if out:
        return out
    # coverage under the best allowed non-off type, per cluster
    p = sc.pairs
    reach = np.where(sc.allowed, sc.radii[None, :], -1.0)
    reach[:, sc.off_type] = -1.0
    covered = np.zeros(len(sc.clusters), dtype=bool)
    ok = p.dist <= reach.max(axis=1)[p.station] if len(p.dist) else np.zeros(0, dtype=bool)
    covered[p.cluster[ok]] = True
    demanded = (sc.demand > 0).any(axis=(1, 2))
    for c in np.flatnonzero(demanded & ~covered):
        out.append(f"uncoverable cluster {sc.clusters[c].id}: positive demand but no station can cover it")
    return out


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class GeneratorParams:
    """Synthetic instance knobs. ``stations`` counts existing 3G sites; LTE
    candidates are added on top at ``lte_fraction`` of those sites."""

    stations: int = 200
    clusters: int = 800
    operators: int = 2
    horizon: int = 60
    growth: float = 6.0
    seed: int = 0
    change_rate: int = 4
    h_max: float = 1.0
    phi: float = 0.7
    area_km: float | None = None
    lte_fraction: float = 1.0
    urban_centers: int | None = None
    urban_radius_km: float = 4.0
    urban_station_share: float = 0.5
    urban_cluster_share: float = 0.6
    peak_load: float = 0.9
    demand_spread: float = 0.3
    type_table: tuple[StationType, ...] | None = None
    transitions: frozenset[tuple[str, str]] | None = None

    def check(self) -> None:
        if self.stations <= 0 or self.clusters <= 0 or self.operators <= 0:
            raise ValueError("stations, clusters and operators must be positive")
        if self.growth < 1:
            raise ValueError(f"growth factor must be >= 1, got {self.growth}")
        if self.horizon < 2:
            raise ValueError(f"horizon must be >= 2, got {self.horizon}")
        if self.area_km is not None and self.area_km <= 0:
            raise ValueError("area must be positive")
        if not 0 <= self.lte_fraction <= 1:
            raise ValueError("lte_fraction must lie in [0, 1]")


def _mixture_points(rng, n, centers, urban_share, urban_r, side):
    n_urban = int(round(n * urban_share)) if len(centers) else 0
    pts = np.empty((n, 2))
    which = rng.integers(0, max(len(centers), 1), size=n_urban)
    ang = rng.uniform(0, 2 * np.pi, n_urban)
    rad = urban_r * np.sqrt(rng.uniform(0, 1, n_urban))
    if n_urban:
        pts[:n_urban] = centers[which] + np.c_[rad * np.cos(ang), rad * np.sin(ang)]
    pts[n_urban:] = rng.uniform(0, side, size=(n - n_urban, 2))
    np.clip(pts, 0, side, out=pts)
    urban = np.zeros(n, dtype=bool)
    urban[:n_urban] = True
    return pts, urban


def _supply_ratio(tree, xy, weights, radius, cap, n_c):
    """Per-cluster served/demand ratio, sum_b cap / D_b, for sites at ``xy``."""
    ratio = np.zeros(n_c)
    for p in xy:
        cov = np.array(sorted(tree.query_ball_point(p, radius)), dtype=np.int64)
        if cov.size:
            ratio[cov] += cap / weights[cov].sum()
    return ratio


def _calibrate_demand(site_xy, owner, lte_sites, cl_xy, weights, t3g, lte_top, growth, peak):
    """Scale demand weights to the tightest cluster of any operator's network.

    Under the proportional split a cluster's served/demand ratio is
    sum_b cap / D_b over its covering sites, which scales as 1/s when all
    demand is scaled by s. Two bounds apply: the initial 3G network runs at
    most at ``peak`` utilization, and the fully upgraded network (every LTE
    candidate at its top type) carries ``growth`` times that load at the same
    utilization.
    """
    n_c, n_o = weights.shape
    tree = cKDTree(cl_xy)
    bound = np.inf
    for o in range(n_o):
        own = np.flatnonzero(owner == o)
        r3 = _supply_ratio(tree, site_xy[own], weights[:, o], t3g.radius_km, t3g.capacity, n_c)
        bound = min(bound, float(r3.min()))
        own_lte = lte_sites[owner[lte_sites] == o]
        if lte_top is not None and len(own_lte):
            full = r3 + _supply_ratio(tree, site_xy[own_lte], weights[:, o], lte_top.radius_km, lte_top.capacity, n_c)
            bound = min(bound, float(full.min()) / growth)
    return weights * (peak * bound)


def generate(params: GeneratorParams) -> Scenario:
    """Build a deterministic synthetic instance.

    Sites and clusters follow a two-component mixture (dense urban disks plus a
    uniform background). Initial demand is sized against the local 3G supply so
    that every operator's network meets it at period 1 with at most
    ``peak_load`` utilization; it then grows geometrically to ``growth`` times
    its initial value at period K.
    """
    params.check()
    rng = np.random.default_rng(params.seed)
    types = params.type_table or default_type_table()
    transitions = params.transitions or default_transitions()
    tmap = {t.id: t for t in types}
    r3g = tmap["3G"].radius_km
    side = params.area_km or math.sqrt(params.stations * 8.0)
    n_centers = params.urban_centers if params.urban_centers is not None else max(1, params.stations // 70)
    margin = min(params.urban_radius_km, side / 2)
    centers = rng.uniform(margin, side - margin, size=(n_centers, 2))
    operators = tuple(f"op{i}" for i in range(params.operators))

    site_xy, _ = _mixture_points(rng, params.stations, centers, params.urban_station_share, params.urban_radius_km, side)
    owner = np.arange(params.stations) % params.operators
    rng.shuffle(owner)

    cl_xy, cl_urban = _mixture_points(rng, params.clusters, centers, params.urban_cluster_share, params.urban_radius_km, side)
    n_lte = int(round(params.lte_fraction * params.stations))
    lte_sites = np.sort(rng.permutation(params.stations)[:n_lte])
    lte_radius = max((t.radius_km for t in types if t.technology == "LTE"), default=0.0)
    # every cluster must be reachable by each operator's 3G sites, and by its
    # LTE candidates when there are any, or growth could never be served
    reach_sets = []
    for o in range(params.operators):
        own = np.flatnonzero(owner == o)
        reach_sets.append((cKDTree(site_xy[own]), r3g))
        own_lte = lte_sites[owner[lte_sites] == o]
        if len(own_lte) and lte_radius > 0:
            reach_sets.append((cKDTree(site_xy[own_lte]), lte_radius))

    def reachable(p):
        return all(len(t.query_ball_point(p, r)) > 0 for t, r in reach_sets)

    for i in range(params.clusters):
        tries = 0
        while not reachable(cl_xy[i]):
            tries += 1
            if tries > 2000:
                raise ValueError("cannot place clusters under every operator's coverage; add stations")
            if cl_urban[i]:
                c = centers[rng.integers(0, n_centers)]
                a, r = rng.uniform(0, 2 * np.pi), params.urban_radius_km * math.sqrt(rng.uniform())
                cl_xy[i] = np.clip(c + (r * math.cos(a), r * math.sin(a)), 0, side)
            else:
                cl_xy[i] = rng.uniform(0, side, size=2)

    stations = []
    for i in range(params.stations):
        stations.append(BaseStation(f"s{i:05d}", float(site_xy[i, 0]), float(site_xy[i, 1]), "3G",
                                    operators[owner[i]], frozenset({"3G", OFF})))
    lte_types = frozenset({OFF} | {t.id for t in types if t.technology == "LTE"})
    for j, i in enumerate(lte_sites):
        stations.append(BaseStation(f"l{j:05d}", float(site_xy[i, 0]), float(site_xy[i, 1]), OFF,
                                    operators[owner[i]], lte_types))
    clusters = tuple(SubscriberCluster(f"c{i:05d}", float(cl_xy[i, 0]), float(cl_xy[i, 1])) for i in range(params.clusters))

    shares = rng.dirichlet(np.full(params.operators, 5.0), size=params.clusters)
    weights = shares * rng.lognormal(0.0, params.demand_spread, size=(params.clusters, 1))
    lte = [t for t in types if t.technology == "LTE"]
    lte_top = max(lte, key=lambda t: t.capacity) if lte else None
    base = _calibrate_demand(site_xy, owner, lte_sites, cl_xy, weights, tmap["3G"], lte_top, params.growth, params.peak_load)
    K = params.horizon
    factor = params.growth ** (np.arange(K) / (K - 1))
    demand = base[:, None, :] * factor[None, :, None]
    demand[:, 0, :] = base
    demand[:, K - 1, :] = base * params.growth
    return Scenario(
        stations=tuple(stations),
        clusters=clusters,
        operators=operators,
        horizon=K,
        change_rate=params.change_rate,
        h_max=params.h_max,
        phi=params.phi,
        type_table=tuple(types),
        transitions=frozenset(transitions),
        demand=demand,
    )


# ---------------------------------------------------------------------------
# file format


def _fmt(v: float) -> str:
    return repr(float(v))


def save(sc: Scenario, path: str | Path) -> None:
    """Write ``meta.json``, ``stations.csv``, ``clusters.csv`` and ``demand.csv`` into a directory."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "K": sc.horizon,
        "N": sc.change_rate,
        "h_max": sc.h_max,
        "phi": sc.phi,
        "operators": list(sc.operators),
        "types": [
            {"id": t.id, "capacity": t.capacity, "radius_km": t.radius_km, "cost": t.cost, "technology": t.technology}
            for t in sc.type_table
        ],
        "transitions": sorted([list(tr) for tr in sc.transitions]),
    }
    if sc.cost_overrides:
        meta["cost_overrides"] = {s: dict(sorted(v.items())) for s, v in sorted(sc.cost_overrides.items())}
    with open(path / "meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(path / "stations.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y", "initial_type", "owner", "allowed_types"])
        for s in sc.stations:
            w.writerow([s.id, _fmt(s.x), _fmt(s.y), s.initial_type, s.owner, ";".join(sorted(s.allowed_types))])
    with open(path / "clusters.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y"])
        for c in sc.clusters:
            w.writerow([c.id, _fmt(c.x), _fmt(c.y)])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cluster", "period", "operator", "traffic"])
    for ci, c in enumerate(sc.clusters):
        for k in range(sc.horizon):
            for oi, o in enumerate(sc.operators):
                w.writerow([c.id, k + 1, o, _fmt(sc.demand[ci, k, oi])])
    (path / "demand.csv").write_text(buf.getvalue(), encoding="utf-8")


def _read_csv(path: Path, header: Sequence[str]) -> list[tuple[int, dict]]:
    if not path.exists():
        raise ParseError(f"{path.name}: file missing")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise ParseError(f"{path.name}: empty file, header row required") from None
        if head != list(header):
            raise ParseError(f"{path.name}:1: expected header {','.join(header)}, got {','.join(head)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path.name}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append((lineno, dict(zip(header, row))))
        return rows


def _num(fname: str, lineno: int, field_name: str, text: str, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise ParseError(f"{fname}:{lineno}: field '{field_name}' is not a valid {kind.__name__}: {text!r}") from None


def load(path: str | Path) -> Scenario:
    """Read a scenario directory written by :func:`save`.

    Structural problems raise :class:`ParseError`; semantic invariants are left
    to :func:`validate`.
    """
    path = Path(path)
    try:
        meta = json.loads((path / "meta.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError("meta.json: file missing") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"meta.json:{e.lineno}: {e.msg}") from None
    for key in ("K", "N", "h_max", "phi", "operators", "types"):
        if key not in meta:
            raise ParseError(f"meta.json: missing field '{key}'")
    try:
        types = tuple(
            StationType(str(t["id"]), float(t["capacity"]), float(t["radius_km"]), float(t["cost"]), str(t.get("technology", "")))
            for t in meta["types"]
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"meta.json: bad type table entry ({e})") from None
    transitions = frozenset(tuple(tr) for tr in meta.get("transitions", [])) if "transitions" in meta else default_transitions()
    operators = tuple(str(o) for o in meta["operators"])
    K = int(meta["K"])

    stations = []
    for ln, r in _read_csv(path / "stations.csv", ["id", "x", "y", "initial_type", "owner", "allowed_types"]):
        allowed = frozenset(a for a in r["allowed_types"].split(";") if a)
        stations.append(BaseStation(r["id"], _num("stations.csv", ln, "x", r["x"]), _num("stations.csv", ln, "y", r["y"]),
                                    r["initial_type"], r["owner"], allowed))
    clusters = []
    for ln, r in _read_csv(path / "clusters.csv", ["id", "x", "y"]):
        clusters.append(SubscriberCluster(r["id"], _num("clusters.csv", ln, "x", r["x"]), _num("clusters.csv", ln, "y", r["y"])))
    c_index = {c.id: i for i, c in enumerate(clusters)}
    o_index = {o: i for i, o in enumerate(operators)}
    demand = np.full((len(clusters), K, len(operators)), np.nan)
    for ln, r in _read_csv(path / "demand.csv", ["cluster", "period", "operator", "traffic"]):
        c = c_index.get(r["cluster"])
        if c is None:
            raise ParseError(f"demand.csv:{ln}: unknown cluster {r['cluster']!r}")
        k = _num("demand.csv", ln, "period", r["period"], int)
        if not 1 <= k <= K:
            raise ParseError(f"demand.csv:{ln}: period {k} outside 1..{K}")
        o = o_index.get(r["operator"])
        if o is None:
            raise ParseError(f"demand.csv:{ln}: unknown operator {r['operator']!r}")
        demand[c, k - 1, o] = _num("demand.csv", ln, "traffic", r["traffic"])
    missing = np.argwhere(np.isnan(demand))
    if len(missing):
        c, k, o = missing[0]
        raise ParseError(f"demand.csv: missing demand cell (cluster={clusters[c].id}, period={k + 1}, operator={operators[o]})")
    overrides = {str(s): {str(t): float(v) for t, v in d.items()} for s, d in meta.get("cost_overrides", {}).items()}
    return Scenario(
        stations=tuple(stations),
        clusters=tuple(clusters),
        operators=operators,
        horizon=K,
        change_rate=int(meta["N"]),
        h_max=float(meta["h_max"]),
        phi=float(meta["phi"]),
        type_table=types,
        transitions=transitions,
        demand=demand,
        cost_overrides=overrides,
    )


def apply_config(params: GeneratorParams, config: dict) -> GeneratorParams:
    """Overlay a JSON config (type table / transitions) onto generator params."""
    kw = {}
    if "types" in config:
        kw["type_table"] = tuple(
            StationType(t["id"], float(t["capacity"]), float(t["radius_km"]), float(t["cost"]), t.get("technology", ""))
            for t in config["types"]
        )
    if "transitions" in config:
        kw["transitions"] = frozenset(tuple(tr) for tr in config["transitions"])
    return replace(params, **kw)


def iter_changes(entries: Iterable[tuple[str, int, str]]) -> Schedule:
    return Schedule(tuple(Change(s, k, t) for s, k, t in entries))
