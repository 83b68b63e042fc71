"""Planner wall time against network size, with a log-log exponent fit."""
import argparse
import time

import numpy as np

from _common import write_rows
from evoplan.planner import plan
from evoplan.scenario import GeneratorParams, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="*", default=[500, 1000, 2000, 4000])
    ap.add_argument("--horizon", type=int, default=60)
    ap.add_argument("--repeats", type=int, default=1)
    ap.add_argument("-o", "--output")
    args = ap.parse_args()
    rows = []
    for B in args.sizes:
        sc = generate(GeneratorParams(stations=B // 2, clusters=2 * B, horizon=args.horizon, seed=0,
                                      change_rate=max(1, B // 50)))
        best = np.inf
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            res = plan(sc, "shared")
            best = min(best, time.perf_counter() - t0)
        rows.append({"stations": len(sc.stations), "clusters": len(sc.clusters), "status": res.status,
                     "changes": len(res.schedule.changes), "seconds": best})
    write_rows(args.output, list(rows[0]), rows)
    if len(rows) > 1:
        slope = np.polyfit(np.log([r["stations"] for r in rows]), np.log([r["seconds"] for r in rows]), 1)[0]
        print(f"log-log exponent {slope:.3f}")


if __name__ == "__main__":
    main()
