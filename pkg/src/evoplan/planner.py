"""Three-phase evolution planner: demand, competition, cost.

Phases 1 and 2 add capacity-preserving upgrades placed as late as the change
budget allows; phase 3 tries cost-saving changes at the earliest free period
and reverts any that break demand, regulation or coverage.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .assessment import INDEPENDENT, SHARED, Assessor, NetworkState, ProportionalAssessor, compliance_needed
from .scenario import Change, Scenario, Schedule
from .scheduling import check_necessary

log = logging.getLogger(__name__)

SUCCESS = "success"
INFEASIBLE = "infeasible"


class Infeasible(Exception):
    def __init__(self, reason: str, period: int | None = None, kind: str = "infeasible"):
        super().__init__(reason)
        self.reason = reason
        self.period = period
        self.kind = kind


class NonConvergence(Infeasible):
    def __init__(self, reason: str):
        super().__init__(reason, None, "non-convergence")


@dataclass(frozen=True)
class LogEntry:
    phase: int
    iteration: int
    action: str                 # commit | replace | revert | skip | stuck
    cluster: str | None = None
    period: int | None = None   # k* (phases 1-2)
    station: str | None = None
    to_type: str | None = None
    placed: int | None = None   # k-hat
    note: str = ""


@dataclass(frozen=True)
class PlanResult:
    schedule: Schedule
    status: str
    mode: str
    reason: str = ""
    period: int | None = None
    phases: dict = field(default_factory=dict)    # (station id, period) -> phase number
    logs: tuple[LogEntry, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS


def is_preserving(st: NetworkState, b: int, t_from: int, t_to: int) -> bool:
    """Capacity-preserving predicate for station b.

    Coverage must not shrink and nominal capacity must not drop. When coverage
    grows, the station's per-unit-demand share cap/D must not drop in any
    period either, otherwise the proportional split would dilute clusters it
    already served.
    """
    sc = st.sc
    if t_from == t_to:
        return True
    if t_from == sc.off_type:
        return True
    if t_to == sc.off_type:
        return False
    if st.cap[t_to] < st.cap[t_from]:
        return False
    old = st.covered_set(b, t_from)
    new = st.covered_set(b, t_to)
    if not np.all(np.isin(old, new)):
        return False
    if len(new) == len(old):
        return True
    d_old = st.station_demand(b, t_from)
    d_new = st.station_demand(b, t_to)
    return bool(np.all(st.cap[t_to] * d_old >= st.cap[t_from] * d_new))


class _Planner:
    def __init__(self, sc: Scenario, mode: str, assessor: Assessor):
        self.sc = sc
        self.mode = mode
        self.B, self.K = len(sc.stations), sc.horizon
        self.st = assessor.open(sc, mode, np.tile(sc.initial_types[:, None], (1, sc.horizon)))
        self.budget_group = sc.owners if mode == INDEPENDENT else np.zeros(self.B, dtype=np.int64)
        n_groups = len(sc.operators) if mode == INDEPENDENT else 1
        self.counts = np.zeros((n_groups, self.K), dtype=np.int64)
        self.changes: list[dict[int, int]] = [dict() for _ in range(self.B)]
        self.phase_of: dict[tuple[int, int], int] = {}
        self.logs: list[LogEntry] = []
        self.deadlines: dict[int, list[int]] = {}
        self._pi: dict[tuple[int, int, int], bool] = {}
        self.N = sc.change_rate
        self.cap_iter = 4 * len(sc.type_table) * max(self.B, 1)
        self.trans = sc.transition_matrix
        self.allowed = sc.allowed
        self.cost = sc.cost_matrix

    # --- helpers ----------------------------------------------------------
    def pi(self, b, t0, t1):
        key = (b, t0, t1)
        v = self._pi.get(key)
        if v is None:
            v = self._pi[key] = is_preserving(self.st, b, t0, t1)
        return v

    def row(self, b: int) -> np.ndarray:
        r = np.full(self.K, self.sc.initial_types[b], dtype=np.int64)
        for k in sorted(self.changes[b]):
            r[k:] = self.changes[b][k]
        return r

    def _log(self, **kw):
        self.logs.append(LogEntry(**kw))

    def sid(self, b):
        return self.sc.stations[b].id

    def tid(self, t):
        return self.sc.type_table[t].id

    def upgrade_options(self, p: int, k: int) -> tuple[int, list[tuple[int, float]]]:
        """Capacity-preserving changes of pair p's station that cover p's cluster at k and raise its share."""
        st = self.st
        b = int(st.p.station[p])
        c = int(st.p.cluster[p])
        d = st.p.dist[p]
        t0 = int(st.typ[b, k])
        old = float(st.contrib[p, k])
        out = []
        for t in range(len(self.sc.type_table)):
            if t == t0 or not self.allowed[b, t] or not self.trans[t0, t] or d > st.rad[t]:
                continue
            if not self.pi(b, t0, t):
                continue
            share = st.station_share(b, t, c, k)
            if share > old:
                out.append((t, share))
        return b, out

    def place(self, b: int, t: int, kstar: int, phase: int) -> tuple[int, bool]:
        """Commit b -> t at the latest free period <= kstar (0-based).

        A change of b already at or before kstar bounds the search from below;
        when nothing later is free, that change is upgraded in place.
        Later changes of b that t dominates become redundant and are dropped.
        """
        g = self.budget_group[b]
        chs = self.changes[b]
        prior = [h for h in chs if h <= kstar]
        hb = max(prior) if prior else None
        lo = hb + 1 if hb is not None else 0
        slot = None
        for h in range(kstar, lo - 1, -1):
            if self.counts[g, h] < self.N:
                slot = h
                break
        replaced = False
        if slot is None:
            if hb is None:
                return -1, False
            prev = self.sc.initial_types[b] if not [h for h in chs if h < hb] else chs[max(h for h in chs if h < hb)]
            if not self.trans[prev, t]:
                return -1, False
            slot, replaced = hb, True
        if not replaced:
            self.counts[g, slot] += 1
        chs[slot] = t
        self.phase_of[(b, slot)] = phase
        for h in sorted(chs):
            if h > kstar and self.pi(b, chs[h], t):
                del chs[h]
                self.phase_of.pop((b, h), None)
                self.counts[g, h] -= 1
        return slot, replaced

    def budget_failure(self, g: int, kstar: int, phase: int) -> Infeasible:
        ds = self.deadlines.setdefault(g, [])
        ok, bad = check_necessary(ds + [kstar + 1], self.N, self.K)
        who = f" for operator {self.sc.operators[g]}" if self.mode == INDEPENDENT else ""
        if not ok:
            return Infeasible(
                f"phase {phase}: change rate N={self.N}{who} too low: more than {bad}*N changes are due by period {bad}", bad)
        return Infeasible(f"phase {phase}: no free period on [1, {kstar + 1}]{who} for a change due at period {kstar + 1}", kstar + 1)

    # --- phase 1 ----------------------------------------------------------
    def phase1(self) -> None:
        groups = range(self.st.G)
        for g in groups:
            self._phase1_group(g)

    def _phase1_group(self, g: int) -> None:
        st = self.st
        short = st.group_short(g)
        per_k = short.sum(axis=0)
        it = 0
        while True:
            ks = np.flatnonzero(per_k)
            if ks.size == 0:
                return
            it += 1
            if it > self.cap_iter:
                raise NonConvergence(f"phase 1 exceeded {self.cap_iter} iterations")
            k = int(ks[0])
            c = int(np.flatnonzero(short[:, k])[0])
            target = st.dem[g][c, k]
            choice = None
            for p in st.p.of_cluster_by_distance(c):
                if st.pair_group[p] != g:
                    continue
                b, opts = self.upgrade_options(int(p), k)
                if opts:
                    choice = (b, opts)
                    break
            if choice is None:
                raise Infeasible(
                    f"phase 1: cluster {self.sc.clusters[c].id} cannot be served at period {k + 1}: "
                    "no capacity-preserving change covering it adds capacity (uncoverable)", k + 1)
            b, opts = choice
            restoring = []
            for t, share in opts:
                if st.cluster_sigma_with(c, k, b, share) >= target:
                    restoring.append(t)
            if restoring:
                t = min(restoring, key=lambda t: (self.cost[b, t], st.cap[t], t))
            else:
                t = max(opts, key=lambda o: (o[1], -self.cost[b, o[0]], -o[0]))[0]
            slot, replaced = self.place(b, t, k, 1)
            if slot < 0:
                raise self.budget_failure(self.budget_group[b], k, 1)
            self.deadlines.setdefault(int(self.budget_group[b]), []).append(k + 1)
            self._log(phase=1, iteration=it, action="replace" if replaced else "commit",
                      cluster=self.sc.clusters[c].id, period=k + 1, station=self.sid(b), to_type=self.tid(t),
                      placed=slot + 1, note="" if restoring else "partial")
            cls, k0, k1 = st.set_row(b, self.row(b))
            if k1 > k0:
                new = st.sig_g[g][cls, k0:k1] < st.dem[g][cls, k0:k1]
                per_k[k0:k1] += new.sum(axis=0) - short[cls, k0:k1].sum(axis=0)
                short[cls, k0:k1] = new

    # --- phase 2 ----------------------------------------------------------
    def phase2(self) -> None:
        st, sc = self.st, self.sc
        needed = np.array([compliance_needed(sc.phi, int(n)) for n in st.n_counted])
        stuck: set[tuple[int, int]] = set()
        rr = 0
        it = 0
        while True:
            bad = np.flatnonzero(st.n_compliant < needed)
            if bad.size == 0:
                return
            it += 1
            if it > self.cap_iter:
                raise NonConvergence(f"phase 2 exceeded {self.cap_iter} iterations")
            k = int(bad[0])
            problems = np.flatnonzero(st.counted[:, k] & ~st.compliant[:, k])
            choice = None
            for c in problems:
                c = int(c)
                if (c, k) in stuck:
                    continue
                choice = self._phase2_action(c, k, rr)
                if choice is not None:
                    break
                stuck.add((c, k))
                self._log(phase=2, iteration=it, action="stuck", cluster=sc.clusters[c].id, period=k + 1,
                          note="no capacity-preserving change lowers the index")
            if choice is None:
                raise Infeasible(
                    f"phase 2: period {k + 1} has {int(st.n_compliant[k])} of {int(st.n_counted[k])} clusters "
                    f"within H_max={sc.h_max}, needs {int(needed[k])}; no capacity-preserving change lowers "
                    "the index of any remaining cluster", k + 1)
            c, b, t = choice
            slot, replaced = self.place(b, t, k, 2)
            if slot < 0:
                raise self.budget_failure(self.budget_group[b], k, 2)
            if self.mode == INDEPENDENT:
                rr = (int(self.budget_group[b]) + 1) % st.G
            self._log(phase=2, iteration=it, action="replace" if replaced else "commit", cluster=sc.clusters[c].id,
                      period=k + 1, station=self.sid(b), to_type=self.tid(t), placed=slot + 1)
            st.set_row(b, self.row(b))

    def _phase2_action(self, c: int, k: int, rr: int):
        st = self.st
        h_now = float(st.H[c, k])
        order = [(rr + i) % st.G for i in range(st.G)]
        cands = st.p.of_cluster_by_distance(c)
        for g in order:
            for p in cands:
                if st.pair_group[p] != g:
                    continue
                b, opts = self.upgrade_options(int(p), k)
                if not opts:
                    continue
                t, share = max(opts, key=lambda o: (o[1], -self.cost[b, o[0]], -o[0]))
                gs = st.cluster_sigma_with(c, k, b, share)
                total = st.total_sigma_with_group(c, k, g, gs)
                if st.hhi_cell(c, k, total) < h_now:
                    return c, b, t
        return None

    # --- phase 3 ----------------------------------------------------------
    def phase3(self) -> None:
        st, sc = self.st, self.sc
        final = st.typ[:, -1].copy()
        cands = []
        for b in range(self.B):
            tf = int(final[b])
            for t in range(len(sc.type_table)):
                if t == tf or not self.allowed[b, t] or not self.trans[tf, t]:
                    continue
                save = max(0.0, float(self.cost[b, tf] - self.cost[b, t]))
                if save > 0:
                    cands.append((int(self.budget_group[b]) if self.mode == INDEPENDENT else 0, -save, b, t))
        cands.sort()
        done: set[int] = set()
        for it, (_, neg, b, t) in enumerate(cands, start=1):
            if b in done:
                continue
            g = self.budget_group[b]
            chs = self.changes[b]
            start = max(chs) + 1 if chs else 0
            free = [h for h in range(start, self.K) if self.counts[g, h] < self.N]
            if not free:
                self._log(phase=3, iteration=it, action="skip", station=self.sid(b), to_type=self.tid(t),
                          note="no free period")
                continue
            slot = free[0]
            old_row = st.typ[b].copy()
            chs[slot] = t
            self.counts[g, slot] += 1
            cls, k0, k1 = st.set_row(b, self.row(b))
            why = self._phase3_violation(b, cls, k0, k1)
            if why:
                del chs[slot]
                self.counts[g, slot] -= 1
                st.set_row(b, old_row)
                self._log(phase=3, iteration=it, action="revert", station=self.sid(b), to_type=self.tid(t),
                          placed=slot + 1, note=why)
            else:
                done.add(b)
                self.phase_of[(b, slot)] = 3
                self._log(phase=3, iteration=it, action="commit", station=self.sid(b), to_type=self.tid(t),
                          placed=slot + 1, note=f"saves {-neg:g}/period")

    def _phase3_violation(self, b, cls, k0, k1) -> str:
        st, sc = self.st, self.sc
        if k1 <= k0:
            return ""
        g = st.group[b]
        short = st.sig_g[g][cls, k0:k1] < st.dem[g][cls, k0:k1]
        if short.any():
            ci, ki = np.argwhere(short)[0]
            c, k = int(cls[ci]), k0 + int(ki)
            if st.tau[c, k] > 0 and not st.is_covered(c, k):
                return f"coverage: cluster {sc.clusters[c].id} uncovered at period {k + 1}"
            return f"goal1: cluster {sc.clusters[c].id} short at period {k + 1}"
        for k in range(k0, k1):
            if not st.goal2_ok(k):
                return f"goal2: period {k + 1} compliance {int(st.n_compliant[k])}/{int(st.n_counted[k])}"
        return ""

    # --- output -------------------------------------------------------------
    def schedule(self) -> Schedule:
        out = []
        for b, chs in enumerate(self.changes):
            for k, t in chs.items():
                out.append(Change(self.sid(b), k + 1, self.tid(t)))
        return Schedule(tuple(out))

    def phases(self) -> dict:
        return {(self.sid(b), k + 1): ph for (b, k), ph in self.phase_of.items() if k in self.changes[b]}

    def postconditions(self) -> str:
        st = self.st
        if st.goal1_cells().any():
            c, k = np.argwhere(st.goal1_cells())[0]
            return f"goal 1 violated at cluster {self.sc.clusters[c].id}, period {k + 1}"
        for k in range(self.K):
            if not st.goal2_ok(k):
                return f"goal 2 violated at period {k + 1}"
        if (self.counts > self.N).any():
            return "change budget exceeded"
        return ""


def plan(scenario: Scenario, mode: str = SHARED, assessor: Assessor | None = None, phases=(1, 2, 3)) -> PlanResult:
    """Run the phase pipeline; infeasibility is reported in the result, never raised."""
    if mode not in (SHARED, INDEPENDENT):
        raise ValueError(f"mode must be '{SHARED}' or '{INDEPENDENT}'")
    pl = _Planner(scenario, mode, assessor or ProportionalAssessor())
    status, reason, period = SUCCESS, "", None
    try:
        if 1 in phases:
            pl.phase1()
        if 2 in phases:
            pl.phase2()
        if 3 in phases:
            pl.phase3()
        if set(phases) >= {1, 2}:
            bad = pl.postconditions()
            if bad:
                status, reason = INFEASIBLE, f"postcondition failed: {bad}"
    except Infeasible as e:
        status, reason, period = INFEASIBLE, e.reason, e.period
        log.info("planning stopped: %s", e.reason)
    return PlanResult(pl.schedule(), status, mode, reason, period, pl.phases(), tuple(pl.logs))


def _run_phase(scenario, schedule, mode, assessor, phase):
    pl = _Planner(scenario, mode, assessor or ProportionalAssessor())
    for ch in schedule.changes:
        b = scenario.station_index[ch.station]
        pl.changes[b][ch.period - 1] = scenario.type_index[ch.to_type]
        pl.counts[pl.budget_group[b], ch.period - 1] += 1
        pl.phase_of[(b, ch.period - 1)] = 0
    for b in {scenario.station_index[ch.station] for ch in schedule.changes}:
        pl.st.set_row(b, pl.row(b))
    getattr(pl, f"phase{phase}")()
    return pl.schedule()


def phase1_capacity(scenario: Scenario, schedule: Schedule, assessor: Assessor | None = None, mode: str = SHARED) -> Schedule:
    """Add upgrades until every cluster's demand is met; raises :class:`Infeasible`."""
    return _run_phase(scenario, schedule, mode, assessor, 1)


def phase2_competition(scenario: Scenario, schedule: Schedule, assessor: Assessor | None = None, mode: str = SHARED) -> Schedule:
    """Add upgrades until the Herfindahl target holds in a phi share of clusters; raises :class:`Infeasible`."""
    return _run_phase(scenario, schedule, mode, assessor, 2)


def phase3_cost(scenario: Scenario, schedule: Schedule, assessor: Assessor | None = None, mode: str = SHARED) -> Schedule:
    """Best-effort cost reduction; never raises for valid inputs."""
    return _run_phase(scenario, schedule, mode, assessor, 3)
