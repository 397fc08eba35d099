"""Write the CSV data behind the price, error and Greek plots.

    python3 scripts/figure_data.py --out results/

Files:
  barrier_prices.csv   s, numeric and exact at N = 800 on [B, 5B]
  barrier_greeks.csv   numerical and exact delta and gamma at N = 800
  xva_prices.csv       one numeric/exact column pair per lambda_B at N = 800
  xva_errors.csv       pointwise |numeric - exact| for each lambda_B
Plot rendering is left to the reader's tool of choice.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from fvimex import harness

LAMBDAS = (0.0, 0.02, 0.04, 0.06, 0.08)


def save(path, header, columns):
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=",".join(header), comments="", fmt="%.10g")
    print(f"wrote {path}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--n", type=int, default=800)
    ap.add_argument("--scheme", choices=("imex", "explicit"), default="imex")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    res = harness.solve("barrier_call", args.scheme, args.n)
    s = res.grid.centers
    save(args.out / "barrier_prices.csv", ("s", "numeric", "exact"), (s, res.state.values, res.exact))

    m = harness.resolve_market("barrier_call")
    curve = harness.extract_greeks(res.grid, res.state)
    exact = harness.get_model("barrier_call").analytic(s, m.T, m)
    save(args.out / "barrier_greeks.csv", ("s", "delta", "gamma", "delta_exact", "gamma_exact"),
         (s, curve.delta, curve.gamma, exact.delta, exact.gamma))

    prices, errors, header = [], [], []
    for lam in LAMBDAS:
        r = harness.solve("xva_call", args.scheme, args.n, market=harness.resolve_market("xva_call", lambda_B=lam))
        prices += [r.state.values, r.exact]
        errors.append(np.abs(r.state.values - r.exact))
        header.append(f"lambda_B={lam}")
    xs = r.grid.centers
    save(args.out / "xva_prices.csv",
         ["s"] + [f"{h} {kind}" for h in header for kind in ("numeric", "exact")], [xs] + prices)
    save(args.out / "xva_errors.csv", ["s"] + header, [xs] + errors)
    return 0


if __name__ == "__main__":
    sys.exit(main())
