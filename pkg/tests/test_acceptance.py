"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a single PASS/FAIL line, printed in the terminal summary.
"""

import math
import subprocess
import sys
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from nspolar.bounds import bourgain_integrals, chain_check, product_poly_ratio
from nspolar.core import CoeffTensor, HomPolynomial, build_LP
from nspolar.norms import BallSpec, mu_lower_bound, mu_upper_bound_T, sup_poly_ball
from nspolar.shuffle import (
    fy_distribution,
    mask_R,
    mask_R_factored,
    mask_T,
    polarization_form,
    recursion_check,
    shuffle,
    shuffle_steps,
    symmetrize_average,
)


def record(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def test_01_shuffle_symmetrization_identity():
    start = time.perf_counter()
    worst = 0.0
    for m in range(1, 6):
        for n in range(1, 5):
            for s in range(20):
                P = HomPolynomial.random(m, n, np.random.default_rng([1, m, n, s]))
                LP = build_LP(P)
                top = shuffle(LP, m - 1)
                worst = max(worst, top.max_abs_diff(symmetrize_average(LP)),
                            top.max_abs_diff(polarization_form(P)))
    elapsed = time.perf_counter() - start
    record(1, "S_{m-1} L_P = average = polarization", worst <= 1e-10 and elapsed < 60,
           f"max error {worst:.2e} (tol 1e-10), {elapsed:.1f} s (limit 60 s)")


def test_02_composition_law():
    worst = 0.0
    for m in range(1, 7):
        L = CoeffTensor.random(m, 3, np.random.default_rng([2, m]))
        for k in range(1, m):
            worst = max(worst, shuffle(L, k).max_abs_diff(shuffle_steps(L, k)))
    record(2, "S_k = T_k ... T_1 for m <= 6", worst <= 1e-12, f"max error {worst:.2e} (tol 1e-12)")


def test_03_coefficient_recursion():
    failures, checked, worst = [], 0, 0.0
    for m in range(2, 6):
        for n in range(1, 5):
            for s in range(3):
                rep = recursion_check(HomPolynomial.random(m, n, np.random.default_rng([3, m, n, s])), 1e-12)
                checked += sum(c.checked for c in rep.checks)
                worst = max([worst] + [c.max_error for c in rep.checks])
                if not rep.passed:
                    failures.append((m, n, rep.first_counterexample))
    record(3, "coefficient recursion incl. zero and support cases", not failures,
           f"{checked} entries, max error {worst:.2e} (tol 1e-12), failures {failures[:1]}")


def test_04_mask_factorization():
    worst, count = 0.0, 0
    for m in range(2, 6):
        for n in range(1, 6):
            for k in range(1, m):
                direct = mask_R(m, n, k).materialize()
                factored = mask_R_factored(m, n, k).materialize()
                worst = max(worst, direct.max_abs_diff(factored))
                count += 1
    record(4, "mask_R equals its factored form", worst <= 1e-12,
           f"{count} (m, n, k) cases, max error {worst:.2e}")


def test_05_equidistribution():
    worst = 0.0
    for m in range(1, 8):
        law = fy_distribution(m, m - 1)
        probs = [float(p) for _, p in law.items()]
        target = 1 / math.factorial(m)
        support_ok = len(probs) == math.factorial(m)
        worst = max(worst, max(abs(p - target) for p in probs), 0.0 if support_ok else 1.0)
    record(5, "P_{m-1} uniform for m <= 7", worst <= 1e-12, f"max deviation {worst:.2e} (tol 1e-12)")


def test_06_product_polynomial_closed_form():
    worst_sup, worst_ratio, worst_est = 0.0, 0.0, 0.0
    for m in range(1, 6):
        for p in (1, 1.5, 2, 3):
            est = sup_poly_ball(HomPolynomial.product(m), BallSpec(p), restarts=16, seed=0)
            worst_sup = max(worst_sup, abs(est.value - m ** (-m / p)))
            rep = product_poly_ratio(m, p, restarts=16, seed=0)
            worst_ratio = max(worst_ratio, abs(rep.value - m ** (m / p)))
            worst_est = max(worst_est, abs(rep.details["estimated_ratio"] - m ** (m / p)))
    passed = worst_sup <= 1e-6 and worst_ratio <= 1e-5 and worst_est <= 1e-5
    record(6, "sup|x1...xm| = m^{-m/p}, ratio m^{m/p}", passed,
           f"sup error {worst_sup:.2e} (tol 1e-6), ratio error {worst_ratio:.2e}, "
           f"searched ratio error {worst_est:.2e} (tol 1e-5)")


def test_07_bourgain_inequalities_and_trend():
    start = time.perf_counter()
    main = bourgain_integrals(64, samples=10_000, seed=0)
    elapsed = time.perf_counter() - start
    i1, i2 = main.i1, main.i2
    trend = {}
    for n in (32, 128):
        trend[n] = bourgain_integrals(n, samples=2_000, seed=1).ratio.value
    trend[64] = main.ratio.value
    increasing = trend[32] < trend[64] < trend[128]
    passed = main.i1_ok and main.i2_ok and elapsed < 300 and increasing
    record(7, "Bourgain I1 <= pi, I2 >= log 64 - pi, ratio increasing", passed,
           f"I1 {i1.value:.4f}+-{i1.ci_halfwidth:.4f}, I2 {i2.value:.4f}+-{i2.ci_halfwidth:.4f} "
           f"(bound {math.log(64) - math.pi:.3f}), {elapsed:.0f} s; ratios "
           + ", ".join(f"n={n}: {trend[n]:.4f}" for n in sorted(trend)))


def test_08_mu_trend():
    ball = BallSpec(math.inf)
    values = {}
    for n in (4, 8, 16, 32):
        values[n] = mu_lower_bound(mask_T(2, n, 1, 2).materialize(), ball, trials=6, seed=0, restarts=16).value
    below = all(v <= mu_upper_bound_T(n) for n, v in values.items())
    passed = values[32] >= 1.4 and below
    record(8, "mu(T) lower search >= 1.4 at n=32 and <= log2(2n)", passed,
           ", ".join(f"n={n}: {v:.4f} <= {mu_upper_bound_T(n):.2f}" for n, v in values.items()))


def test_09_chain_sanity():
    failures = []
    ball = BallSpec(math.inf)
    for s in range(10):
        P = HomPolynomial.random(3, 4, np.random.default_rng([9, s]))
        rep = chain_check(P, ball, seed=s, slack=0.05)
        if not rep.passed:
            failures.append((s, [c for c in rep.chain if not c["passed"]]))
    record(9, "chain_check on 10 random cubics, n=4, p=inf", not failures,
           f"{10 - len(failures)}/10 passed" + (f", first failure {failures[0]}" if failures else ""))


REPRO_COMMANDS = [
    ["verify", "--m", "4", "--n", "3"],
    ["bounds", "--m", "2", "3", "--n", "4", "--p", "1", "2", "inf", "--samples", "400", "--restarts", "8"],
    ["shuffle-table", "--m", "3"],
    ["estimate-norm", "--m", "3", "--n", "3", "--p", "1.5", "inf", "--restarts", "8"],
    ["bourgain", "--m", "2", "4", "--n", "16", "--samples", "400"],
]


def test_10_reproducibility():
    mismatched = []
    for args in REPRO_COMMANDS:
        outputs = []
        for _ in range(2):
            proc = subprocess.run(
                [sys.executable, "-m", "nspolar", *args, "--seed", "7", "--threads", "1"],
                capture_output=True, check=False,
            )
            outputs.append((proc.returncode, proc.stdout))
        if outputs[0] != outputs[1] or outputs[0][0] != 0:
            mismatched.append(args[0])
    record(10, "byte-identical reruns of every subcommand", not mismatched,
           f"{len(REPRO_COMMANDS) - len(mismatched)}/{len(REPRO_COMMANDS)} subcommands identical"
           + (f", mismatched {mismatched}" if mismatched else ""))
