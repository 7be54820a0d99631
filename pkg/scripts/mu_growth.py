"""Search lower bounds for the triangle mask multiplier norm against log2(2n)."""

import argparse
import math

from nspolar.norms import BallSpec, mu_lower_bound, mu_upper_bound_T
from nspolar.shuffle import mask_T


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, nargs="+", default=[4, 8, 16, 32])
    parser.add_argument("--p", type=float, default=math.inf)
    parser.add_argument("--trials", type=int, default=6)
    parser.add_argument("--restarts", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    ball = BallSpec(args.p)
    print(f"{'n':>5} {'mu lower':>10} {'log2(2n)':>10}  best trial form")
    for n in args.n:
        rep = mu_lower_bound(mask_T(2, n, 1, 2).materialize(), ball, args.trials, args.seed, args.restarts)
        print(f"{n:5d} {rep.value:10.4f} {mu_upper_bound_T(n):10.4f}  {rep.witness['form']}")


if __name__ == "__main__":
    main()
