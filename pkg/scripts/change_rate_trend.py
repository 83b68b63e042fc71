"""Decommissions and the first capacity dip at N_min, 2 N_min and 4 N_min."""
import argparse
import math

import numpy as np

from _common import family, write_rows
from evoplan.assessment import ProportionalAssessor
from evoplan.planner import plan
from evoplan.report import build_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--mode", choices=["shared", "independent"], default="shared")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()
    rows = []
    for seed in range(args.seeds):
        sc = family(seed)
        traj = np.tile(sc.initial_types[:, None], (1, sc.horizon))
        initial = float(ProportionalAssessor().open(sc, args.mode, traj).sig[:, 0].sum())
        n_min = next((n for n in range(1, 65) if plan(sc.with_settings(change_rate=n), args.mode).ok), None)
        if n_min is None:
            continue
        for n in (n_min, 2 * n_min, 4 * n_min):
            s = sc.with_settings(change_rate=n)
            res = plan(s, args.mode)
            rep = build_report(s, res)
            dip = next((r["period"] for r in rep.rows if r["capacity"] < initial), math.inf)
            rows.append({"seed": seed, "N": n, "status": res.status, "decommissions": rep.totals["decommissions"],
                         "first_dip": dip, "cost": rep.totals["cost"]})
    write_rows(args.output, ["seed", "N", "status", "decommissions", "first_dip", "cost"], rows)


if __name__ == "__main__":
    main()
