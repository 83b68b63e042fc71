"""evoplan command line: generate, plan, sweep, verify."""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import oracle, scheduling
from .assessment import INDEPENDENT, SHARED, goal1_violations, hhi_report
from .planner import plan
from .report import build_report, write_report
from .scenario import (GeneratorParams, ParseError, Scenario, StationType, apply_config, generate, load, save,
                       validate)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

log = logging.getLogger("evoplan")

SWEEP_COLUMNS = ["mode", "change_rate", "h_max", "status", "reason", "cost", "unused",
                 "creates", "enhances", "decommissions", "changes"]


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return cfg


def _apply_to_scenario(sc: Scenario, cfg: dict) -> Scenario:
    kw = {}
    if "types" in cfg:
        kw["type_table"] = tuple(StationType(t["id"], float(t["capacity"]), float(t["radius_km"]), float(t["cost"]),
                                             t.get("technology", "")) for t in cfg["types"])
    if "transitions" in cfg:
        kw["transitions"] = frozenset(tuple(tr) for tr in cfg["transitions"])
    if "cost_overrides" in cfg:
        kw["cost_overrides"] = {s: {t: float(v) for t, v in m.items()} for s, m in cfg["cost_overrides"].items()}
    return sc.with_settings(**kw) if kw else sc


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    cfg = _load_config(args.config)
    params = GeneratorParams(
        stations=args.stations, clusters=args.clusters, operators=args.operators, horizon=args.horizon,
        growth=args.growth, seed=args.seed,
        change_rate=args.change_rate if args.change_rate is not None else cfg.get("change_rate", 4),
        h_max=args.hmax if args.hmax is not None else cfg.get("h_max", 1.0),
        phi=args.phi if args.phi is not None else cfg.get("phi", 0.7),
    )
    params = apply_config(params, cfg)
    sc = generate(params)
    if "cost_overrides" in cfg:
        sc = _apply_to_scenario(sc, {"cost_overrides": cfg["cost_overrides"]})
    problems = validate(sc)
    if problems:
        raise ValueError("generated scenario is invalid: " + "; ".join(problems))
    save(sc, args.output)
    _say(args, f"wrote {args.output}: {len(sc.stations)} stations, {len(sc.clusters)} clusters, "
               f"{len(sc.operators)} operators, K={sc.horizon}, N={sc.change_rate}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# plan


def _settings(sc: Scenario, mode: str) -> dict:
    return {"change_rate": sc.change_rate, "h_max": sc.h_max, "phi": sc.phi, "mode": mode}


def _prepare(path: str, cfg: dict, change_rate=None, h_max=None, phi=None) -> Scenario:
    sc = _apply_to_scenario(load(path), cfg)
    kw = {}
    if change_rate is not None:
        kw["change_rate"] = int(change_rate)
    if h_max is not None:
        kw["h_max"] = float(h_max)
    if phi is not None:
        kw["phi"] = float(phi)
    sc = sc.with_settings(**kw) if kw else sc
    problems = validate(sc)
    if problems:
        raise ValueError("invalid scenario: " + "; ".join(problems))
    return sc


def cmd_plan(args) -> int:
    cfg = _load_config(args.config)
    mode = args.mode or cfg.get("mode", SHARED)
    sc = _prepare(args.scenario, cfg, args.change_rate, args.hmax, args.phi)
    result = plan(sc, mode)
    report = build_report(sc, result)
    write_report(args.output, sc, result, report, _settings(sc, mode))
    t = report.totals
    if result.ok:
        _say(args, f"{mode}: {t['changes']} changes ({t['creates']} creates, {t['enhances']} enhances, "
                   f"{t['decommissions']} decommissions), cost {t['cost']:.6g}")
        return EXIT_OK
    print(f"infeasible: {result.reason}", file=sys.stderr)
    return EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# sweep


def _sweep_cell(job):
    path, cfg, mode, n, h = job
    row = {"mode": mode, "change_rate": n, "h_max": h}
    try:
        sc = _prepare(path, cfg, n, h)
        res = plan(sc, mode)
        t = build_report(sc, res).totals
        row.update(status=res.status, reason=res.reason, cost=t["cost"], unused=t["unused"],
                   creates=t["creates"], enhances=t["enhances"], decommissions=t["decommissions"],
                   changes=t["changes"])
    except Exception as e:   # a bad cell is reported, the sweep goes on
        row.update(status="error", reason=f"{type(e).__name__}: {e}", cost="", unused="",
                   creates="", enhances="", decommissions="", changes="")
    return row


def _threads() -> int:
    raw = os.environ.get("EVOPLAN_THREADS", "")
    try:
        n = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise ValueError(f"EVOPLAN_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_sweep(path: str, cfg: dict, rates, hmaxes, modes) -> list[dict]:
    jobs = [(path, cfg, m, int(n), float(h)) for m, n, h in itertools.product(modes, rates, hmaxes)]
    workers = min(_threads(), len(jobs))
    if workers <= 1:
        return [_sweep_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_sweep_cell, jobs))


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    modes = args.modes if args.modes is not None else [cfg.get("mode", SHARED)]
    for m in modes:
        if m not in (SHARED, INDEPENDENT):
            raise ValueError(f"unknown mode {m!r}")
    rows = run_sweep(args.scenario, cfg, args.change_rates, args.hmax, modes)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in SWEEP_COLUMNS])
    if args.output == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        bad = sum(r["status"] != "success" for r in rows)
        _say(args, f"wrote {args.output}: {len(rows)} cells, {bad} not successful")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _all_multisets(max_requests: int, K: int):
    for n in range(max_requests + 1):
        yield from itertools.combinations_with_replacement(range(1, K + 1), n)


def check_scheduling_optimality(max_requests: int, max_horizon: int, rates=(1, 2, 3),
                                direction: str = scheduling.LATEST, budget=oracle.DEFAULT_BUDGET):
    """Greedy lateness equals the enumerated optimum on every small multiset.

    Returns (cases, first counterexample or None)."""
    cases = 0
    for K in range(1, max_horizon + 1):
        for N in rates:
            for ds in _all_multisets(max_requests, K):
                ref = oracle.oracle_schedule(ds, N, K, budget)
                got = scheduling.greedy_schedule(ds, N, K, direction)
                cases += 1
                if (got is None) != (not ref.feasible):
                    return cases, (ds, N, K, "feasibility differs")
                if got is not None and scheduling.lateness(ds, got) != ref.lateness:
                    return cases, (ds, N, K, f"lateness {scheduling.lateness(ds, got)} vs optimum {ref.lateness}")
    return cases, None


def check_feasibility(samples: int, seed: int, max_horizon=12, max_rate=4, budget=oracle.DEFAULT_BUDGET):
    """Greedy success, the prefix test and (where enumerable) the oracle agree.

    Returns (cases, enumerated, first counterexample or None)."""
    rng = random.Random(seed)
    enumerated = 0
    for i in range(samples):
        K = rng.randint(1, max_horizon)
        N = rng.randint(1, max_rate)
        size = rng.randint(0, K * N + 3)
        ds = [rng.randint(1, K) for _ in range(size)]
        ok, _ = scheduling.check_necessary(ds, N, K)
        greedy_ok = scheduling.greedy_schedule(ds, N, K) is not None
        if ok != greedy_ok:
            return i + 1, enumerated, (tuple(ds), N, K, "greedy disagrees with the prefix test")
        if len(ds) <= budget.max_requests and K <= budget.max_horizon:
            enumerated += 1
            if oracle.oracle_schedule(ds, N, K, budget).feasible != ok:
                return i + 1, enumerated, (tuple(ds), N, K, "oracle disagrees with the prefix test")
    return samples, enumerated, None


def check_sampler(samples: int, seed: int, K=6, N=3):
    for ds in oracle.oracle_feasible_sets(K, N, samples, seed):
        if not scheduling.check_necessary(ds, N, K)[0]:
            return ds
    return None


def postcondition_failures(sc: Scenario, result) -> list[str]:
    """Goal 1, goal 2 and the change budget on a finished plan, from scratch."""
    out = []
    bad = goal1_violations(sc, result.schedule, result.mode)
    if bad:
        out.append(f"goal 1 fails at {sorted(bad)[:3]}")
    rep = hhi_report(sc, result.schedule, result.mode)
    needed_ok = rep.compliant.sum(axis=0) >= [_need(sc.phi, n) for n in rep.counted.sum(axis=0)]
    if not needed_ok.all():
        out.append(f"goal 2 fails at period {int((~needed_ok).argmax()) + 1}")
    out.extend(result.schedule.check(sc, budget_per_operator=result.mode == INDEPENDENT))
    return out


def _need(phi: float, counted: int) -> int:
    f = Fraction(repr(float(phi))) * int(counted)
    return -(-f.numerator // f.denominator)


def tiny_params(seed: int) -> GeneratorParams:
    return GeneratorParams(stations=2, clusters=4, operators=2, horizon=4, growth=3.0, seed=seed, change_rate=1,
                           peak_load=0.9, urban_centers=0)


def check_oracle_gap(seeds: int, budget=oracle.DEFAULT_BUDGET):
    """The greedy never beats the exhaustive optimum. Returns (compared, gaps, counterexample)."""
    gaps = []
    for seed in range(seeds):
        sc = generate(tiny_params(seed))
        for mode in (SHARED, INDEPENDENT):
            res = plan(sc, mode)
            if not res.ok:
                continue
            ref = oracle.oracle_min_cost_plan(sc, mode, budget)
            greedy = exact_cost(sc, res.schedule)
            if not ref.feasible or ref.cost > greedy:
                return len(gaps), gaps, (seed, mode, ref.cost, greedy)
            gaps.append(float(greedy - ref.cost))
    return len(gaps), gaps, None


def exact_cost(sc: Scenario, schedule) -> Fraction:
    traj = schedule.trajectory(sc)
    cm = sc.cost_matrix
    return sum((Fraction(float(cm[b, traj[b, k]])) for b in range(len(sc.stations)) for k in range(sc.horizon)),
               Fraction(0))


def cmd_verify(args) -> int:
    try:
        budget = oracle.OracleBudget(max_requests=args.max_requests, max_horizon=args.max_horizon)
    except ValueError as e:
        print(f"refused: oracle budget exceeded ({e})", file=sys.stderr)
        return EXIT_ERROR
    direction = scheduling.EARLIEST if args.inject_earliest else scheduling.LATEST
    rows = []

    cases, bad = check_scheduling_optimality(min(args.max_requests, 6), min(args.max_horizon, 5),
                                             direction=direction, budget=budget)
    rows.append(("greedy lateness optimality", bad is None, f"{cases} multisets" if bad is None else str(bad)))

    cases, enumerated, bad = check_feasibility(args.samples, args.seed, budget=budget)
    rows.append(("prefix test characterizes feasibility", bad is None,
                 f"{cases} multisets, {enumerated} enumerated" if bad is None else str(bad)))

    bad = check_sampler(args.samples, args.seed)
    rows.append(("feasible-set sampler", bad is None, "ok" if bad is None else f"emitted {bad}"))

    failures, planned = [], 0
    for seed in range(args.scenarios):
        sc = generate(GeneratorParams(stations=30, clusters=120, horizon=12, seed=seed, change_rate=8))
        for mode in (SHARED, INDEPENDENT):
            res = plan(sc, mode)
            if res.ok:
                planned += 1
                failures += [f"seed {seed} {mode}: {f}" for f in postcondition_failures(sc, res)]
    rows.append(("goal postconditions", not failures, f"{planned} plans" if not failures else failures[0]))

    compared, gaps, bad = check_oracle_gap(args.oracle_seeds, budget)
    rows.append(("oracle cost ordering", bad is None,
                 f"{compared} plans, max gap {max(gaps, default=0.0):.6g}" if bad is None else str(bad)))

    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    failed = [r[0] for r in rows if not r[1]]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def globals_(default):
        # subcommands accept the global flags too; SUPPRESS keeps them from
        # clobbering values given before the subcommand name
        gp = argparse.ArgumentParser(add_help=False)
        gp.add_argument("--config", default=default(None),
                        help="JSON defaults: types, transitions, cost_overrides, change_rate, h_max, phi, mode")
        gp.add_argument("--quiet", action="store_true", default=default(False), help="suppress progress output")
        return gp

    p = argparse.ArgumentParser(prog="evoplan", description="Plan the evolution of a cellular network.",
                                parents=[globals_(lambda v: v)])
    common = globals_(lambda v: argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic scenario")
    g.add_argument("--stations", type=int, default=200, help="number of existing 3G sites")
    g.add_argument("--clusters", type=int, default=800)
    g.add_argument("--operators", type=int, default=2)
    g.add_argument("--horizon", type=int, default=60)
    g.add_argument("--growth", type=float, default=6.0, help="demand ratio between the last and first period")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--change-rate", type=int)
    g.add_argument("--hmax", type=float)
    g.add_argument("--phi", type=float)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    pl = sub.add_parser("plan", parents=[common], help="plan one scenario")
    pl.add_argument("scenario")
    pl.add_argument("--change-rate", type=int)
    pl.add_argument("--hmax", type=float)
    pl.add_argument("--phi", type=float)
    pl.add_argument("--mode", choices=[SHARED, INDEPENDENT])
    pl.add_argument("--seed", type=int, default=0, help="accepted for symmetry; planning is deterministic")
    pl.add_argument("-o", "--output", required=True)
    pl.set_defaults(func=cmd_plan)

    sw = sub.add_parser("sweep", parents=[common], help="plan over a grid of settings")
    sw.add_argument("scenario")
    sw.add_argument("--change-rates", type=int, nargs="*", default=[4])
    sw.add_argument("--hmax", type=float, nargs="*", default=[1.0])
    sw.add_argument("--modes", nargs="*", choices=[SHARED, INDEPENDENT])
    sw.add_argument("-o", "--output", default="-")
    sw.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", parents=[common], help="certify the scheduler and planner against the oracles")
    v.add_argument("--max-requests", type=int, default=6)
    v.add_argument("--max-horizon", type=int, default=5)
    v.add_argument("--samples", type=int, default=10000)
    v.add_argument("--scenarios", type=int, default=3)
    v.add_argument("--oracle-seeds", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-earliest", action="store_true",
                   help="test hook: place scheduled changes at the earliest slot instead of the latest")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except (ParseError, ValueError, OSError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
