"""Brute-force reference solvers for tiny instances.

Nothing here reuses the assessment or planner code: capacities, HHI and goal
checks are recomputed with exact rational arithmetic straight from the domain
dataclasses, so agreement with the fast path is a genuine cross-check.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from .scenario import OFF, Scenario


class BudgetExceeded(ValueError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class OracleBudget:
    max_requests: int = 8
    max_horizon: int = 6
    max_stations: int = 6
    max_clusters: int = 8

    def __post_init__(self):
        limits = {"max_requests": 8, "max_horizon": 6, "max_stations": 6, "max_clusters": 8}
        for name, cap in limits.items():
            v = getattr(self, name)
            if not 0 <= v <= cap:
                raise ValueError(f"{name} must lie in [0, {cap}], got {v}")

    def check_schedule(self, deadlines: Sequence[int], K: int) -> None:
        if len(deadlines) > self.max_requests:
            raise BudgetExceeded(f"{len(deadlines)} requests exceed the oracle budget of {self.max_requests}")
        if K > self.max_horizon:
            raise BudgetExceeded(f"horizon {K} exceeds the oracle budget of {self.max_horizon}")

    def check_scenario(self, sc: Scenario) -> None:
        if len(sc.stations) > self.max_stations:
            raise BudgetExceeded(f"{len(sc.stations)} stations exceed the oracle budget of {self.max_stations}")
        if len(sc.clusters) > self.max_clusters:
            raise BudgetExceeded(f"{len(sc.clusters)} clusters exceed the oracle budget of {self.max_clusters}")
        if sc.horizon > self.max_horizon:
            raise BudgetExceeded(f"horizon {sc.horizon} exceeds the oracle budget of {self.max_horizon}")


DEFAULT_BUDGET = OracleBudget()


# ---------------------------------------------------------------------------
# scheduling


@dataclass(frozen=True)
class OracleSchedule:
    feasible: bool
    lateness: int | None = None
    placements: tuple[int, ...] | None = None


def oracle_schedule(deadlines: Sequence[int], N: int, K: int, budget: OracleBudget = DEFAULT_BUDGET) -> OracleSchedule:
    """Minimum total lateness sum(k* - k) over every assignment k in [1, k*]
    with at most N requests per period.

    The search visits every assignment; memoising on (request, period counts)
    only merges branches that have identical futures.
    """
    budget.check_schedule(deadlines, K)
    dl = tuple(int(d) for d in deadlines)
    for d in dl:
        if not 1 <= d <= K:
            raise ValueError(f"deadline {d} outside 1..{K}")

    @lru_cache(maxsize=None)
    def best(i: int, counts: tuple[int, ...]) -> int | None:
        if i == len(dl):
            return 0
        out = None
        for h in range(1, dl[i] + 1):
            if counts[h - 1] >= N:
                continue
            nxt = counts[:h - 1] + (counts[h - 1] + 1,) + counts[h:]
            rest = best(i + 1, nxt)
            if rest is not None and (out is None or dl[i] - h + rest < out):
                out = dl[i] - h + rest
        return out

    start = (0,) * K
    total = best(0, start)
    if total is None:
        return OracleSchedule(False)
    counts, placed, remaining = start, [], total
    for i in range(len(dl)):
        for h in range(1, dl[i] + 1):
            if counts[h - 1] >= N:
                continue
            nxt = counts[:h - 1] + (counts[h - 1] + 1,) + counts[h:]
            rest = best(i + 1, nxt)
            if rest is not None and dl[i] - h + rest == remaining:
                placed.append(h)
                remaining -= dl[i] - h
                counts = nxt
                break
    return OracleSchedule(True, total, tuple(placed))


def _prefix_ok(deadlines: Sequence[int], N: int, K: int) -> bool:
    return all(sum(1 for d in deadlines if d <= k) <= k * N for k in range(1, K + 1))


def oracle_feasible_sets(K: int, N: int, count: int, seed: int) -> Iterator[tuple[int, ...]]:
    """Yield ``count`` random sorted deadline multisets that pass the prefix
    bound, by rejection sampling. Deterministic for a given seed."""
    rng = random.Random(seed)
    emitted = 0
    while emitted < count:
        size = rng.randint(0, K * N + 1)
        ds = tuple(sorted(rng.randint(1, K) for _ in range(size)))
        if _prefix_ok(ds, N, K):
            emitted += 1
            yield ds


# ---------------------------------------------------------------------------
# min-cost plans


@dataclass(frozen=True)
class OraclePlan:
    feasible: bool
    cost: Fraction | None = None
    trajectory: tuple[tuple[str, ...], ...] | None = None   # [period][station] type id


class _Exact:
    """Exact rational model of one scenario."""

    def __init__(self, sc: Scenario, mode: str):
        self.sc = sc
        self.mode = mode
        self.types = {t.id: t for t in sc.type_table}
        self.ops = list(sc.operators)
        B, C = len(sc.stations), len(sc.clusters)
        self.dist = [[math.hypot(s.x - c.x, s.y - c.y) for c in sc.clusters] for s in sc.stations]
        self.tau = [[[Fraction(float(sc.demand[c, k, o])) for o in range(len(self.ops))]
                     for k in range(sc.horizon)] for c in range(C)]
        self.h_max = Fraction(float(sc.h_max))
        self.phi = Fraction(repr(float(sc.phi)))
        self.owner = [self.ops.index(s.owner) for s in sc.stations]
        self.B, self.C = B, C

    def cost(self, b: int, t: str) -> Fraction:
        over = self.sc.cost_overrides.get(self.sc.stations[b].id, {})
        return Fraction(float(over.get(t, self.types[t].cost)))

    def covers(self, b: int, c: int, t: str) -> bool:
        return t != OFF and self.dist[b][c] <= self.types[t].radius_km

    def goals_hold(self, state: tuple[str, ...], k: int) -> bool:
        """Goal 1 at every (c, o) and the compliance count at period index k."""
        n_o = len(self.ops)
        shared = self.mode == "shared"
        # capacity each operator can use at each cluster
        served = [[Fraction(0)] * n_o for _ in range(self.C)]
        total = [Fraction(0)] * self.C
        for b, t in enumerate(state):
            cov = [c for c in range(self.C) if self.covers(b, c, t)]
            if not cov:
                continue
            cap = Fraction(float(self.types[t].capacity))
            if shared:
                load = {c: sum(self.tau[c][k]) for c in cov}
            else:
                load = {c: self.tau[c][k][self.owner[b]] for c in cov}
            D = sum(load.values())
            for c in cov:
                part = cap * load[c] / D if D > 0 else cap / len(cov)
                total[c] += part
                if shared:
                    tc = sum(self.tau[c][k])
                    for o in range(n_o):
                        if tc > 0:
                            served[c][o] += part * self.tau[c][k][o] / tc
                else:
                    served[c][self.owner[b]] += part
        counted = compliant = 0
        for c in range(self.C):
            for o in range(n_o):
                if served[c][o] < self.tau[c][k][o]:
                    return False
            tc = sum(self.tau[c][k])
            if tc == 0:
                continue
            counted += 1
            sig = total[c]
            players = [tc] if shared else self.tau[c][k]
            h = ((sig - tc) / sig) ** 2 + sum((p / sig) ** 2 for p in players)
            if h <= self.h_max:
                compliant += 1
        return compliant >= self.phi * counted


def oracle_min_cost_plan(sc: Scenario, mode: str = "shared", budget: OracleBudget = DEFAULT_BUDGET) -> OraclePlan:
    """Cheapest type trajectory meeting both goals and the change budget.

    Cost is the sum of kappa(b, T(b, k)) over stations and periods. Every
    period may change any subset of stations along allowed transitions, at
    most one change per station per period and at most N changes per period
    (per operator in independent mode). Dynamic programming over the full
    network state enumerates every such trajectory.
    """
    budget.check_scenario(sc)
    if mode not in ("shared", "independent"):
        raise ValueError(f"unknown mode {mode!r}")
    ex = _Exact(sc, mode)
    N = sc.change_rate
    trans = set(sc.transitions)
    moves = []
    for b, s in enumerate(sc.stations):
        per_type = {}
        for t in s.allowed_types:
            per_type[t] = [u for u in s.allowed_types if u != t and (t, u) in trans]
        moves.append(per_type)

    def successors(state):
        options = [[state[b]] + moves[b].get(state[b], []) for b in range(len(state))]
        for nxt in itertools.product(*options):
            changed = [b for b in range(len(state)) if nxt[b] != state[b]]
            if mode == "shared":
                if len(changed) > N:
                    continue
            else:
                per_op = [0] * len(ex.ops)
                for b in changed:
                    per_op[ex.owner[b]] += 1
                if any(n > N for n in per_op):
                    continue
            yield nxt

    checked: dict = {}

    def ok(state, k):
        key = (state, k)
        if key not in checked:
            checked[key] = ex.goals_hold(state, k)
        return checked[key]

    start = tuple(s.initial_type for s in sc.stations)
    frontier: dict[tuple[str, ...], tuple[Fraction, tuple]] = {start: (Fraction(0), ())}
    for k in range(sc.horizon):
        nxt_frontier: dict = {}
        for state, (cost, path) in frontier.items():
            for nxt in successors(state):
                c = cost + sum(ex.cost(b, t) for b, t in enumerate(nxt))
                best = nxt_frontier.get(nxt)
                if best is not None and best[0] <= c:
                    continue
                if not ok(nxt, k):
                    continue
                nxt_frontier[nxt] = (c, path + (nxt,))
        frontier = nxt_frontier
        if not frontier:
            return OraclePlan(False)
    cost, path = min(frontier.values(), key=lambda v: (v[0], v[1]))
    return OraclePlan(True, cost, path)
