"""Per-period plan metrics and the CSV/JSON report files."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assessment import Assessor, ProportionalAssessor
from .planner import PlanResult
from .scenario import OFF, Scenario, Schedule

SCHEDULE_COLUMNS = ["station", "period", "from_type", "to_type", "kind", "phase"]


def change_kind(from_type: str, to_type: str) -> str:
    if to_type == OFF:
        return "decommission"
    if from_type == OFF:
        return "create"
    return "enhance"


def schedule_rows(sc: Scenario, schedule: Schedule, phases: dict | None = None) -> list[dict]:
    traj = schedule.trajectory(sc)
    rows = []
    for ch in sorted(schedule.changes, key=lambda c: (c.period, sc.station_index[c.station])):
        b = sc.station_index[ch.station]
        prev = sc.initial_types[b] if ch.period == 1 else traj[b, ch.period - 2]
        src = sc.type_table[prev].id
        rows.append({
            "station": ch.station,
            "period": ch.period,
            "from_type": src,
            "to_type": ch.to_type,
            "kind": change_kind(src, ch.to_type),
            "phase": (phases or {}).get((ch.station, ch.period), 0),
        })
    return rows


def period_costs(sc: Scenario, traj: np.ndarray) -> list[float]:
    """sum_b kappa(b, T(b, k)) per period, exactly rounded."""
    cost = sc.cost_matrix
    rows = np.arange(len(sc.stations))
    return [math.fsum(cost[rows, traj[:, k]].tolist()) for k in range(sc.horizon)]


def cumulative(values: list[float]) -> list[float]:
    return [math.fsum(values[:i + 1]) for i in range(len(values))]


@dataclass
class PlanReport:
    columns: list[str]
    rows: list[dict]
    schedule: list[dict]
    totals: dict = field(default_factory=dict)


def build_report(sc: Scenario, result: PlanResult, assessor: Assessor | None = None) -> PlanReport:
    st = (assessor or ProportionalAssessor()).open(sc, result.mode, result.schedule.trajectory(sc))
    traj = st.typ
    sched = schedule_rows(sc, result.schedule, result.phases)
    techs = sorted({t.technology or t.id for t in sc.type_table if t.id != OFF})
    costs = period_costs(sc, traj)
    cum = cumulative(costs)
    frac = st.hhi_report().fraction
    tau = st.tau
    sig = st.sig
    with np.errstate(divide="ignore", invalid="ignore"):
        used = np.where(sig > 0, np.minimum(1.0, tau / sig), 0.0)
    tech_of_type = np.array([techs.index(t.technology or t.id) if t.id != OFF else -1 for t in sc.type_table])
    served = np.zeros((len(techs), sc.horizon))
    p = st.p
    if len(p.station):
        pair_tech = tech_of_type[traj[p.station]]            # (P, K)
        eff = st.contrib * used[p.cluster]                      # (P, K)
        for i in range(len(techs)):
            served[i] = (eff * (pair_tech == i)).sum(axis=0)
    counts = {k: {"create": 0, "enhance": 0, "decommission": 0} for k in range(1, sc.horizon + 1)}
    for r in sched:
        counts[r["period"]][r["kind"]] += 1
    columns = ["period", "demand", "capacity", "unused", "creates", "enhances", "decommissions", "changes",
               "cost", "cumulative_cost", "hhi_compliance"] + [f"served_{t}" for t in techs]
    rows = []
    for k in range(sc.horizon):
        d = math.fsum(tau[:, k].tolist())
        cap = math.fsum(sig[:, k].tolist())
        c = counts[k + 1]
        row = {
            "period": k + 1,
            "demand": d,
            "capacity": cap,
            "unused": math.fsum((sig[:, k] - tau[:, k]).tolist()),
            "creates": c["create"],
            "enhances": c["enhance"],
            "decommissions": c["decommission"],
            "changes": c["create"] + c["enhance"] + c["decommission"],
            "cost": costs[k],
            "cumulative_cost": cum[k],
            "hhi_compliance": float(frac[k]),
        }
        for i, t in enumerate(techs):
            row[f"served_{t}"] = float(served[i, k])
        rows.append(row)
    totals = {
        "cost": cum[-1] if cum else 0.0,
        "unused": math.fsum(r["unused"] for r in rows),
        "creates": sum(r["creates"] for r in rows),
        "enhances": sum(r["enhances"] for r in rows),
        "decommissions": sum(r["decommissions"] for r in rows),
        "changes": len(sched),
    }
    return PlanReport(columns, rows, sched, totals)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r[c]) for c in columns])


def write_report(out: str | Path, sc: Scenario, result: PlanResult, report: PlanReport, settings: dict) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "schedule.csv", SCHEDULE_COLUMNS, report.schedule)
    write_csv(out / "metrics.csv", report.columns, report.rows)
    summary = {
        "status": result.status,
        "reason": result.reason,
        "infeasible_period": result.period,
        "mode": result.mode,
        "settings": settings,
        "totals": report.totals,
        "notes": ["clusters with zero demand at a period are excluded from the HHI compliance count"],
    }
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
