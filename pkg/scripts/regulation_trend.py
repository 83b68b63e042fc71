"""Cost and unused capacity as the HHI ceiling tightens."""
import argparse

from _common import family, write_rows
from evoplan.planner import plan
from evoplan.report import build_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="*", default=[0])
    ap.add_argument("--hmax", type=float, nargs="*", default=[1.0, 0.8, 0.6, 0.5])
    ap.add_argument("--mode", choices=["shared", "independent"], default="independent")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()
    rows = []
    for seed in args.seeds:
        sc = family(seed, urban_station_share=0.5, urban_cluster_share=0.6)
        for h in args.hmax:
            s = sc.with_settings(h_max=h)
            res = plan(s, args.mode)
            t = build_report(s, res).totals
            rows.append({"seed": seed, "h_max": h, "status": res.status, "cost": t["cost"], "unused": t["unused"],
                         "changes": t["changes"], "reason": res.reason})
    write_rows(args.output, list(rows[0]), rows)


if __name__ == "__main__":
    main()
