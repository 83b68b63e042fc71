"""Final cost and decommissions with and without infrastructure sharing."""
import argparse

from _common import family, write_rows
from evoplan.assessment import INDEPENDENT, SHARED
from evoplan.planner import plan
from evoplan.report import build_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--change-rate", type=int, default=8)
    ap.add_argument("-o", "--output")
    args = ap.parse_args()
    rows = []
    for seed in range(args.seeds):
        sc = family(seed, change_rate=args.change_rate)
        for mode in (SHARED, INDEPENDENT):
            res = plan(sc, mode)
            t = build_report(sc, res).totals
            rows.append({"seed": seed, "mode": mode, "status": res.status, "cost": t["cost"],
                         "decommissions": t["decommissions"], "creates": t["creates"], "enhances": t["enhances"]})
    write_rows(args.output, list(rows[0]), rows)


if __name__ == "__main__":
    main()
