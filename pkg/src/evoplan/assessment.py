"""Served-traffic assessment (sigma), local Herfindahl index and goal predicates.

The default allocator: an active station offers its type's nominal capacity,
split across the clusters it covers in proportion to their demand (equally if
all covered demand is zero). Per-operator served traffic splits the cluster
total in proportion to operator demand; spare capacity belongs to nobody.

In independent (non-sharing) mode each operator's stations only serve that
operator's demand, so sigma(c, k, o) is computed on the operator's own network.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .scenario import Scenario, Schedule

SHARED = "shared"
INDEPENDENT = "independent"


def seqsum(a: np.ndarray) -> np.ndarray:
    """Sum over axis 0 strictly left to right, independent of array shape."""
    if a.shape[0] == 0:
        return np.zeros(a.shape[1:])
    return np.cumsum(a, axis=0)[-1]


def _fraction(phi: float) -> Fraction:
    return Fraction(phi).limit_denominator(10**9)


def compliance_needed(phi: float, counted: int) -> int:
    """Smallest compliant count c with c >= phi * counted (exact rational test)."""
    f = _fraction(phi)
    return -((-f.numerator * counted) // f.denominator)


@dataclass(frozen=True)
class AssessmentResult:
    period: int
    sigma_cluster: np.ndarray        # (C,)
    sigma_cluster_op: np.ndarray     # (C, O)
    sigma_station_cluster: dict      # (b, c) -> served capacity, nonzero entries only


@dataclass(frozen=True)
class HhiReport:
    hhi: np.ndarray          # (C, K)
    compliant: np.ndarray    # (C, K) bool
    counted: np.ndarray      # (C, K) bool
    fraction: np.ndarray     # (K,)
    degenerate: np.ndarray   # (C, K) bool, sigma == 0


def hhi(sigma_total: float, demand_by_operator, flag: bool = False):
    """Local Herfindahl index with spare capacity as one potential entrant.

    ``demand_by_operator`` lists tau(c, k, o) for each market participant; in
    sharing mode pass the pooled demand as a single entry. Zero capacity gives
    the degenerate value 1.0 (returned with a flag when ``flag`` is set).
    """
    if sigma_total <= 0:
        return (1.0, True) if flag else 1.0
    taus = [float(t) for t in demand_by_operator]
    total = 0.0
    for t in taus:
        total += t
    spare = max(sigma_total - total, 0.0) / sigma_total
    h = spare * spare
    for t in taus:
        s = t / sigma_total
        h += s * s
    return (h, False) if flag else h


def hhi_grid(sigma: np.ndarray, participants: np.ndarray) -> np.ndarray:
    """Vectorised :func:`hhi`. ``participants`` has shape (..., P); same operation order."""
    total = np.zeros(sigma.shape)
    for p in range(participants.shape[-1]):
        total = total + participants[..., p]
    with np.errstate(divide="ignore", invalid="ignore"):
        spare = np.maximum(sigma - total, 0.0) / sigma
        h = spare * spare
        for p in range(participants.shape[-1]):
            s = participants[..., p] / sigma
            h = h + s * s
    return np.where(sigma > 0, h, 1.0)


class Assessor:
    """Pluggable performance-assessment block.

    Subclasses provide :meth:`open`, returning an incremental state object with
    the :class:`NetworkState` interface; :meth:`assess` is derived from it.
    """

    def open(self, scenario: Scenario, mode: str, trajectory: np.ndarray) -> "NetworkState":
        raise NotImplementedError

    def assess(self, scenario: Scenario, schedule: Schedule, period: int, mode: str = SHARED) -> AssessmentResult:
        st = self.open(scenario, mode, schedule.trajectory(scenario))
        return st.result(period)


class ProportionalAssessor(Assessor):
    def open(self, scenario, mode, trajectory):
        return NetworkState(scenario, mode, trajectory)


class NetworkState:
    """sigma for a full type trajectory, updatable one station at a time.

    Every per-station and per-cluster aggregate is recomputed by the same
    routine in the same summation order whether it is built from scratch or
    refreshed after a change, so incremental states are bitwise equal to a
    fresh build of the same trajectory.
    """

    def __init__(self, sc: Scenario, mode: str, trajectory: np.ndarray):
        if mode not in (SHARED, INDEPENDENT):
            raise ValueError(f"unknown mode {mode!r}")
        self.sc = sc
        self.mode = mode
        self.p = sc.pairs
        B, C, K = len(sc.stations), len(sc.clusters), sc.horizon
        self.B, self.C, self.K = B, C, K
        if mode == SHARED:
            self.G = 1
            self.group = np.zeros(B, dtype=np.int64)
            self.dem = sc.total_demand[None, :, :].copy()
            self.participants = sc.total_demand[:, :, None]
        else:
            self.G = len(sc.operators)
            self.group = sc.owners.copy()
            self.dem = np.moveaxis(sc.demand, 2, 0).copy()
            self.participants = sc.demand
        self.tau = sc.total_demand
        self.cap = sc.capacities
        self.rad = sc.radii.copy()
        self.rad[sc.off_type] = -1.0
        self.typ = np.array(trajectory, dtype=np.int64).copy()
        self.pair_group = self.group[self.p.station] if len(self.p.station) else np.zeros(0, dtype=np.int64)
        # per cluster and group, pair indices in station order
        self.cl_group_pairs = []
        for c in range(C):
            idx = self.p.of_cluster(c)
            g = self.pair_group[idx]
            self.cl_group_pairs.append([idx[g == gg] for gg in range(self.G)])
        P = len(self.p.cluster)
        self.D = np.zeros((B, K))
        self.contrib = np.zeros((P, K))
        self.sig_g = np.zeros((self.G, C, K))
        self.sig = np.zeros((C, K))
        for b in range(B):
            self._station(b, 0, K)
        for c in range(C):
            self._cluster(c, 0, K)
        self.H = hhi_grid(self.sig, self.participants)
        self.counted = self.tau > 0
        # uncovered cells are never compliant, even when H_max = 1
        self.compliant = (self.H <= sc.h_max) & self.counted & (self.sig > 0)
        self.n_counted = self.counted.sum(axis=0)
        self.n_compliant = self.compliant.sum(axis=0)

    # --- kernels --------------------------------------------------------
    def _station(self, b: int, k0: int, k1: int) -> None:
        sl = self.p.of_station(b)
        if sl.start == sl.stop:
            return
        cl = self.p.cluster[sl]
        g = self.group[b]
        t = self.typ[b, k0:k1]
        cov = self.p.dist[sl][:, None] <= self.rad[t][None, :]
        dem = self.dem[g][cl, k0:k1]
        D = seqsum(dem * cov)
        n = cov.sum(axis=0)
        cap = self.cap[t]
        with np.errstate(divide="ignore", invalid="ignore"):
            prop = cap[None, :] * dem / D[None, :]
            equal = np.broadcast_to(cap / np.maximum(n, 1), prop.shape)
        share = np.where(D[None, :] > 0, prop, equal)
        self.D[b, k0:k1] = D
        self.contrib[sl, k0:k1] = np.where(cov, share, 0.0)

    def _cluster(self, c: int, k0: int, k1: int) -> None:
        total = np.zeros(k1 - k0)
        for g in range(self.G):
            idx = self.cl_group_pairs[c][g]
            s = seqsum(self.contrib[idx, k0:k1])
            self.sig_g[g, c, k0:k1] = s
            total = total + s
        self.sig[c, k0:k1] = total

    def _refresh_hhi(self, cls: np.ndarray, k0: int, k1: int) -> None:
        h = hhi_grid(self.sig[cls, k0:k1], self.participants[cls, k0:k1])
        self.H[cls, k0:k1] = h
        old = self.compliant[cls, k0:k1]
        new = (h <= self.sc.h_max) & self.counted[cls, k0:k1] & (self.sig[cls, k0:k1] > 0)
        self.n_compliant[k0:k1] += new.sum(axis=0) - old.sum(axis=0)
        self.compliant[cls, k0:k1] = new

    # --- updates --------------------------------------------------------
    def set_row(self, b: int, row: np.ndarray) -> tuple[np.ndarray, int, int]:
        """Replace station b's trajectory; return (affected clusters, k0, k1)."""
        diff = np.flatnonzero(self.typ[b] != row)
        cls = self.p.cluster[self.p.of_station(b)]
        if diff.size == 0:
            return cls[:0], 0, 0
        k0, k1 = int(diff[0]), int(diff[-1]) + 1
        self.typ[b, k0:k1] = row[k0:k1]
        self._station(b, k0, k1)
        for c in cls:
            self._cluster(int(c), k0, k1)
        self._refresh_hhi(cls, k0, k1)
        return cls, k0, k1

    # --- queries --------------------------------------------------------
    def station_share(self, b: int, t: int, c: int, k: int) -> float:
        """sigma(b, c, k) if b had type t at period index k (others unchanged)."""
        sl = self.p.of_station(b)
        cl = self.p.cluster[sl]
        pos = np.searchsorted(cl, c)
        if pos >= len(cl) or cl[pos] != c:
            return 0.0
        d = self.p.dist[sl]
        cov = d <= self.rad[t]
        if not cov[pos]:
            return 0.0
        dem = self.dem[self.group[b]][cl, k]
        D = float(seqsum(dem * cov))
        if D > 0:
            return float(self.cap[t] * dem[pos] / D)
        return float(self.cap[t] / max(int(cov.sum()), 1))

    def station_demand(self, b: int, t: int) -> np.ndarray:
        """Covered demand D(b, k) for every period if b had type t throughout."""
        sl = self.p.of_station(b)
        cl = self.p.cluster[sl]
        cov = self.p.dist[sl] <= self.rad[t]
        return seqsum(self.dem[self.group[b]][cl, :] * cov[:, None])

    def covered_set(self, b: int, t: int) -> np.ndarray:
        sl = self.p.of_station(b)
        return self.p.cluster[sl][self.p.dist[sl] <= self.rad[t]]

    def cluster_sigma_with(self, c: int, k: int, b: int, value: float) -> float:
        """Group sigma of c at k with station b's contribution replaced by ``value``."""
        g = self.group[b]
        idx = self.cl_group_pairs[c][g]
        col = self.contrib[idx, k].copy()
        hit = self.p.station[idx] == b
        col[hit] = value
        return float(seqsum(col))

    def total_sigma_with_group(self, c: int, k: int, g: int, group_value: float) -> float:
        total = 0.0
        for gg in range(self.G):
            total = total + (group_value if gg == g else float(self.sig_g[gg, c, k]))
        return total

    def hhi_cell(self, c: int, k: int, sigma_total: float | None = None) -> float:
        s = self.sig[c, k] if sigma_total is None else sigma_total
        return float(hhi_grid(np.array([s]), self.participants[c:c + 1, k])[0])

    def is_covered(self, c: int, k: int) -> bool:
        idx = self.p.of_cluster(c)
        return bool(np.any(self.p.dist[idx] <= self.rad[self.typ[self.p.station[idx], k]]))

    def served_op(self) -> np.ndarray:
        """sigma(c, k, o), shape (C, K, O)."""
        sc = self.sc
        if self.mode == INDEPENDENT:
            return np.moveaxis(self.sig_g, 0, 2).copy()
        out = np.zeros(sc.demand.shape)
        tau = self.tau
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(tau > 0, self.sig / tau, 0.0)
        for o in range(sc.demand.shape[2]):
            out[:, :, o] = sc.demand[:, :, o] * ratio
        return out

    def goal1_cells(self) -> np.ndarray:
        """(C, K) bool: some operator's demand is not met."""
        served = self.served_op()
        return (served < self.sc.demand).any(axis=2)

    def group_short(self, g: int) -> np.ndarray:
        """(C, K) bool: group g's served traffic is below its demand."""
        return self.sig_g[g] < self.dem[g]

    def result(self, period: int) -> AssessmentResult:
        k = period - 1
        pairs = {}
        nz = np.flatnonzero(self.contrib[:, k])
        for p in nz:
            pairs[(int(self.p.station[p]), int(self.p.cluster[p]))] = float(self.contrib[p, k])
        return AssessmentResult(period, self.sig[:, k].copy(), self.served_op()[:, k, :], pairs)

    def hhi_report(self) -> HhiReport:
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(self.n_counted > 0, self.n_compliant / np.maximum(self.n_counted, 1), 1.0)
        return HhiReport(self.H.copy(), self.compliant.copy(), self.counted.copy(), frac, self.sig <= 0)

    def goal2_ok(self, k: int) -> bool:
        return self.n_compliant[k] >= compliance_needed(self.sc.phi, int(self.n_counted[k]))


# --- schedule-level predicates ---------------------------------------------


def _state(scenario, schedule, mode, assessor):
    assessor = assessor or ProportionalAssessor()
    return assessor.open(scenario, mode, schedule.trajectory(scenario))


def assess(scenario: Scenario, schedule: Schedule, period: int, mode: str = SHARED, assessor: Assessor | None = None) -> AssessmentResult:
    return (assessor or ProportionalAssessor()).assess(scenario, schedule, period, mode)


def goal1_violations(scenario: Scenario, schedule: Schedule, mode: str = SHARED, assessor: Assessor | None = None) -> set[tuple[str, int]]:
    """(cluster id, period) cells where some operator's demand exceeds served traffic."""
    st = _state(scenario, schedule, mode, assessor)
    cells = np.argwhere(st.goal1_cells())
    return {(scenario.clusters[c].id, int(k) + 1) for c, k in cells}


def goal2_satisfied(scenario: Scenario, schedule: Schedule, period: int, mode: str = SHARED, assessor: Assessor | None = None) -> tuple[float, bool]:
    """Compliance fraction over clusters with positive demand at ``period``, and whether it reaches phi."""
    st = _state(scenario, schedule, mode, assessor)
    k = period - 1
    n = int(st.n_counted[k])
    frac = float(st.n_compliant[k] / n) if n else 1.0
    return frac, st.goal2_ok(k)


def hhi_report(scenario: Scenario, schedule: Schedule, mode: str = SHARED, assessor: Assessor | None = None) -> HhiReport:
    return _state(scenario, schedule, mode, assessor).hhi_report()
