"""Lower statistics beside the closed-form upper certificate on an (m, n, p) grid."""

import argparse
import math

from nspolar.bounds import bourgain_lower_bound, product_poly_ratio, upper_bound_certificate


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m", type=int, nargs="+", default=[2, 3, 4])
    parser.add_argument("--n", type=int, nargs="+", default=[8, 64])
    parser.add_argument("--p", type=float, nargs="+", default=[1.0, 2.0, math.inf])
    parser.add_argument("--samples", type=int, default=1_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print(f"{'m':>3} {'n':>5} {'p':>5} {'lower':>10} {'kind':>18} {'log upper':>10}")
    for m in args.m:
        for n in args.n:
            log_upper = upper_bound_certificate(m, n).log_value
            for p in args.p:
                if math.isfinite(p):
                    lower, kind = product_poly_ratio(m, p, restarts=8, seed=args.seed).value, "product"
                elif m % 2 == 0 and (2 * n) // m >= 2:
                    lower = bourgain_lower_bound(m, n, args.samples, args.seed).value
                    kind = "bourgain statistic"
                else:
                    lower, kind = float("nan"), "none"
                print(f"{m:3d} {n:5d} {p:5g} {lower:10.4f} {kind:>18} {log_upper:10.4f}")


if __name__ == "__main__":
    main()
