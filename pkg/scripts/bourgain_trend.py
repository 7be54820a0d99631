"""Bourgain ratio statistic I2/I1 for m = 2 over a range of n."""

import argparse
import math

from nspolar.bounds import bourgain_integrals


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, nargs="+", default=[16, 32, 64, 128])
    parser.add_argument("--samples", type=int, default=2_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    print(f"{'n':>5} {'I1':>9} {'I2':>9} {'ratio':>9} {'ci':>8} {'(log n - pi)/pi':>16}")
    for n in args.n:
        res = bourgain_integrals(n, args.samples, args.seed, args.threads)
        r = res.ratio
        target = (math.log(n) - math.pi) / math.pi
        print(f"{n:5d} {res.i1.value:9.4f} {res.i2.value:9.4f} {r.value:9.4f} {r.ci_halfwidth:8.4f} {target:16.4f}")


if __name__ == "__main__":
    main()
