#!/usr/bin/env python3
"""Export the surface y = gamma(.) and its sampled bounds for one stage."""
import argparse

from cartwright import surface as S
from cartwright import verifier as V
from cartwright import weights as W


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--theta", type=float, default=1e-2)
    ap.add_argument("--weight", default=None, help="weight spec, default y^(-2n)")
    ap.add_argument("--rows", type=int, default=200)
    ap.add_argument("--out", default="surface.csv")
    args = ap.parse_args(argv)
    w = W.parse_weight_spec(args.weight, args.n) if args.weight else W.power(2 * args.n)
    kw = V.pipeline_k(args.n, "T1", w, args.theta)
    sf = S.build_surface(args.n, kw)
    b = S.verify_surface_bounds(args.n, kw, sf, sample_count=200)
    print(f"s={sf.s:.6g} rho={sf.rho:.6g} mu/k<={b.mu_over_k_max:.4g} "
          f"va/k in [{b.va_over_k_min:.4g}, {b.va_over_k_max:.4g}]")
    S.export_csv(args.out, args.n, kw, sf, rows=args.rows)


if __name__ == "__main__":
    main()
