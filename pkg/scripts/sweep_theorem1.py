#!/usr/bin/env python3
"""Theorem 1 sweep over theta for w = y^(-2n) with a Poisson test function.

Writes one CSV per (n, sign) and prints the C3 range.
"""
import argparse
from pathlib import Path

from cartwright import verifier as V
from cartwright import weights as W


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--theta-min", type=float, default=1e-4)
    ap.add_argument("--theta-max", type=float, default=0.3)
    ap.add_argument("--per-decade", type=int, default=10)
    ap.add_argument("--depth", type=float, default=0.05)
    ap.add_argument("--outdir", type=Path, default=Path("sweeps"))
    args = ap.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)
    thetas = V.theta_grid(args.theta_min, args.theta_max, args.per_decade)
    for n in args.n:
        w = W.power(2 * n)
        for sign in (1.0, -1.0):
            U = V.make_poisson_test(n, 0.0, args.depth, sign=sign, weight=w)
            rep = V.run_pipeline(n, "T1", w, U, thetas)
            path = args.outdir / f"t1_n{n}_{'pos' if sign > 0 else 'neg'}.csv"
            rep.write_csv(path)
            c3 = rep.column("C3")
            print(f"n={n} sign={sign:+.0f} passed={rep.passed} "
                  f"C3 in [{c3.min():.4g}, {c3.max():.4g}] -> {path}")


if __name__ == "__main__":
    main()
