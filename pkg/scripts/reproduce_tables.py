"""Regenerate the barrier and XVA convergence tables next to the reference values.

    python3 scripts/reproduce_tables.py --out results/
    python3 scripts/reproduce_tables.py --out results/ --long   # N up to 6400, every explicit row

Writes barrier_call.csv / xva_call.csv (harness schema) with JSON sidecars
and prints a comparison against the reference values.
"""

import argparse
import sys
from pathlib import Path

from fvimex import harness

# reference L1 errors, N = 50 ... 6400
REFERENCE = {
    "barrier_call": {
        "imex": [138.89, 34.052, 8.5310, 2.1249, 0.52912, 0.13097, 0.031547, 0.0067624],
        "explicit": [139.79, 34.401, 8.5373, 2.1271, 0.53130, 0.13316, 0.033721, 0.0088809],
    },
    "xva_call": {
        "imex": [0.14323, 0.036714, 9.2457e-3, 2.3140e-3, 5.7768e-4, 1.4413e-4, 3.5943e-5, 8.9052e-6],
        "explicit": [0.14255, 0.035607, 8.8734e-3, 2.2145e-3, 5.5312e-4, 1.3823e-4, 3.4467e-5, 8.6169e-6],
    },
}
FULL_LADDER = [50 * 2**k for k in range(8)]


def fmt(x, spec=".4e"):
    return "-" if x is None else format(x, spec)


def print_table(model_id, report):
    ref = REFERENCE[model_id]
    print(f"\n{model_id}")
    print(f"{'N':>6} {'scheme':>8} {'L1':>11} {'ref L1':>11} {'ratio':>6} {'order':>6} {'dt':>10} {'wall s':>9}  status")
    for row in report.rows:
        k = FULL_LADDER.index(row.n_cells) if row.n_cells in FULL_LADDER else None
        r = None if k is None else ref[row.scheme][k]
        ratio = None if (r is None or row.l1_error is None) else row.l1_error / r
        print(f"{row.n_cells:>6} {row.scheme:>8} {fmt(row.l1_error):>11} {fmt(r):>11} {fmt(ratio, '.2f'):>6} "
              f"{fmt(row.observed_order, '.2f'):>6} {fmt(row.dt, '.3e'):>10} {fmt(row.wall_time, '.3f'):>9}  {row.status}")
    for n, s in sorted(report.speedups().items()):
        print(f"  speedup at N={n}: {s:.0f}x")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--long", action="store_true",
                    help="extend to N=6400 and run every explicit row (hours of wall time)")
    ap.add_argument("--models", nargs="+", default=list(REFERENCE), choices=list(REFERENCE))
    ap.add_argument("--explicit-max-n", type=int, default=None,
                    help="explicit ceiling (default 3200 for the barrier, 800 for XVA; ignored with --long)")
    args = ap.parse_args(argv)

    ladder = FULL_LADDER if args.long else FULL_LADDER[:6]
    args.out.mkdir(parents=True, exist_ok=True)
    for model_id in args.models:
        default_cap = 3200 if model_id == "barrier_call" else 800
        cap = None if args.long else (args.explicit_max_n or default_cap)
        report = harness.compare_schemes(model_id, ladder, explicit_max_n=cap)
        path = harness.emit_report(report, args.out / f"{model_id}.csv")
        print_table(model_id, report)
        print(f"  -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
