"""Exhaustive suite of the exact shuffle and mask identities for one polynomial."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import shuffle as sh
from .core import (
    CoeffTensor,
    HomPolynomial,
    build_LP,
    diagonal_restriction,
    index_set,
)
from .shuffle import CheckResult

SYM_TOL = 1e-10
EXACT_TOL = 1e-12


def compare(name: str, reference: str, A: CoeffTensor, B: CoeffTensor, tol: float) -> CheckResult:
    """Entrywise comparison; the counterexample is the first bad index in lexicographic order."""
    keys = sorted(set(A.coeffs) | set(B.coeffs))
    result = CheckResult(name, True, len(keys))
    result.reference = reference
    for key in keys:
        a, b = A[key], B[key]
        err = abs(a - b)
        result.max_error = max(result.max_error, err)
        if err > tol and result.passed:
            result.passed = False
            result.counterexample = {"index": list(key), "lhs": [a.real, a.imag], "rhs": [b.real, b.imag]}
    return result


def _masks_equal(m: int, n: int, k: int) -> CheckResult:
    direct, factored = sh.mask_R(m, n, k), sh.mask_R_factored(m, n, k)
    result = CheckResult(f"mask factorization k={k}", True, 0)
    result.reference = "R_k = (m-k+1) T^{k,k+1} * (1 + sum_u (1/(u+1) - 1/u) D^{k,k+u})"
    for i in index_set(m, n):
        a, b = direct(i), factored(i)
        err = abs(a - b)
        result.checked += 1
        result.max_error = max(result.max_error, err)
        if err > EXACT_TOL and result.passed:
            result.passed = False
            result.counterexample = {"index": list(i), "lhs": a, "rhs": b}
    return result


def _equidistribution(m: int) -> CheckResult:
    result = CheckResult(f"equidistribution m={m}", True, 0)
    result.reference = "P_{m-1} is uniform on all m! permutations"
    if m < 2:
        result.checked = 1
        return result
    law = sh.fy_distribution(m, m - 1)
    target = Fraction(1, math.factorial(m))
    result.checked = len(law)
    if len(law) != math.factorial(m):
        result.passed = False
        result.counterexample = {"support_size": len(law)}
    for sigma, p in law.items():
        err = abs(float(p - target))
        result.max_error = max(result.max_error, err)
        if p != target and result.passed:
            result.passed = False
            result.counterexample = {"permutation": list(sigma.images), "probability": str(p)}
    return result


def verify_suite(P: HomPolynomial, seed: int = 0) -> list[CheckResult]:
    """Run every exact identity for P (and a random m-linear form of the same shape)."""
    m, n = P.m, P.n
    LP = build_LP(P)
    results = []

    results.append(compare("diagonal round trip", "L_P(x, ..., x) = P(x)",
                           LP, build_LP(diagonal_restriction(LP)), EXACT_TOL))
    if m >= 2:
        top = sh.shuffle(LP, m - 1)
        results.append(compare("shuffle vs average", "S_{m-1} L_P = (1/m!) sum_sigma L_P o sigma",
                               top, sh.symmetrize_average(LP), SYM_TOL))
        results.append(compare("shuffle vs polarization", "S_{m-1} L_P = B",
                               top, sh.polarization_form(P), SYM_TOL))
        results.append(compare("average restricts to P", "B(x, ..., x) = P(x)",
                               build_LP(diagonal_restriction(top)), LP, SYM_TOL))

    L = CoeffTensor.random(m, n, np.random.default_rng([seed, 7]))
    for k in range(1, m):
        results.append(compare(f"composition law k={k}", "S_k = T_k ... T_1",
                               sh.shuffle(L, k), sh.shuffle_steps(L, k), EXACT_TOL))

    for check in sh.recursion_check(P).checks:
        check.reference = "c_i(S_{k-1} L_P) = c_i(R_k) c_i(S_k L_P), zero if i_k > i_{k+1}"
        results.append(check)

    for k in range(1, m):
        results.append(_masks_equal(m, n, k))
        results.append(compare(f"schur recursion k={k}", "S_{k-1} L_P = R_k * S_k L_P",
                               sh.schur(sh.mask_R(m, n, k), sh.shuffle(LP, k)),
                               sh.shuffle(LP, k - 1), EXACT_TOL))

    results.append(_equidistribution(m))
    return results
