"""Shared helpers for the experiment scripts."""
import csv
import sys

from evoplan.scenario import GeneratorParams, generate


def family(seed, **kw):
    """Two operators, sparse rural background with a dense urban core."""
    base = dict(stations=60, clusters=240, horizon=12, seed=seed, change_rate=8,
                urban_station_share=0.3, urban_cluster_share=0.8)
    base.update(kw)
    return generate(GeneratorParams(**base))


def write_rows(path, columns, rows):
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if path:
            fh.close()
