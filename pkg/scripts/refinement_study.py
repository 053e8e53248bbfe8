"""Identity residuals under mesh refinement on an interval and a hybrid scale.

Prints one line per (scale, alpha, h) and a fitted C·h^r envelope per case.
The thresholds in tsfrac.suites.IDENTITY_RATES were set from this output.

    python3 scripts/refinement_study.py [--levels 5] [--csv out.csv]
"""
from __future__ import annotations

import argparse
import csv
import time

import numpy as np

from tsfrac.delta_calculus import build_mesh
from tsfrac.suites import IDENTITY_RATES, identity_residuals
from tsfrac.timescale import Interval, Point, TimeScale, interval

SCALES = {
    "interval": interval(0.0, 1.0),
    "hybrid": TimeScale((Interval(0.0, 0.5), Point(0.6), Point(0.75), Interval(0.8, 1.0))),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=5, help="number of halvings starting at h = 1/16")
    ap.add_argument("--alphas", default="0.25,0.5,0.75,1.0")
    ap.add_argument("--csv", help="also write the raw table here")
    args = ap.parse_args()
    alphas = [float(a) for a in args.alphas.split(",")]
    hs = [2.0 ** -(4 + k) for k in range(args.levels)]
    table = []
    for name, ts in SCALES.items():
        for h in hs:
            mesh = build_mesh(ts, h)
            for alpha in alphas:
                t0 = time.perf_counter()
                res = identity_residuals(mesh, alpha)
                dt = time.perf_counter() - t0
                table.append((name, alpha, h, res))
                cells = "  ".join(f"{k}={v:.2e}" for k, v in res.items())
                print(f"{name:8s} alpha={alpha:<5} h=1/{round(1 / h):<4d} {cells}  ({dt:.2f}s)")
    print("\nobserved orders (last halving) and envelope ratio value / (C h^r):")
    for case, (c, r) in IDENTITY_RATES.items():
        worst = max(row[3][case] / (c * row[2] ** r) for row in table)
        orders = []
        for name in SCALES:
            for alpha in alphas:
                vals = [row[3][case] for row in table if row[0] == name and row[1] == alpha]
                if len(vals) >= 2 and vals[-1] > 0 and vals[-2] > 0:
                    orders.append(np.log2(vals[-2] / vals[-1]))
        print(f"  {case:15s} C={c:g} r={r:g}  max ratio {worst:.2f}  orders {np.round(orders, 2).tolist()}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scale", "alpha", "h", *IDENTITY_RATES])
            for name, alpha, h, res in table:
                w.writerow([name, alpha, repr(h), *(repr(res[k]) for k in IDENTITY_RATES)])


if __name__ == "__main__":
    main()
