"""Upper-bound certificates and lower-bound experiments for the constants C(m, n), C_p(m, n).

Nothing here computes C(m, n) itself.  Upper bounds are closed forms;
lower bounds are ratios of sups at explicit witnesses or Monte Carlo
statistics over the torus with confidence intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .core import (
    Direction,
    EstimateReport,
    HomPolynomial,
    build_LP,
    eval_mform,
    eval_polynomial,
    power_iteration,
)
from .norms import (
    BallSpec,
    TorusSampler,
    hilbert_kernel,
    mu_upper_bound_T,
    sup_mform_ball,
    sup_poly_ball,
    torus_expectation,
)
from .shuffle import BudgetExceeded, shuffle

CHAIN_MAX_M = 5
CHAIN_MAX_N = 6
CHAIN_SLACK = 0.05


# Upper bounds -------------------------------------------------------------


class UpperBound(NamedTuple):
    """2^{m-1} e^m m! mu^{m-1} with mu = log2(2n), plus the m^m (log n)^{m-1} shape."""

    value: float
    log_value: float
    shape: float
    log_shape: float


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709 else math.inf


def upper_bound_certificate(m: int, n: int) -> UpperBound:
    if m < 1 or n < 1:
        raise ValueError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    mu = mu_upper_bound_T(n)
    log_value = (m - 1) * math.log(2) + m + math.lgamma(m + 1) + (m - 1) * math.log(mu)
    if m == 1:
        log_shape = 0.0
    elif n == 1:
        log_shape = -math.inf
    else:
        log_shape = m * math.log(m) + (m - 1) * math.log(math.log(n))
    shape = 0.0 if log_shape == -math.inf else _safe_exp(log_shape)
    return UpperBound(_safe_exp(log_value), log_value, shape, log_shape)


# Chain check --------------------------------------------------------------


@dataclass
class BoundReport:
    m: int
    n: int
    p: float
    lower: EstimateReport
    upper: float
    chain: list[dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(step["passed"] for step in self.chain) and self.lower.value <= self.upper

    def to_dict(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "n": self.n,
            "p": self.p,
            "lower": self.lower.to_dict(),
            "upper": self.upper,
            "chain": self.chain,
            "passed": self.passed,
        }


def chain_check(
    P: HomPolynomial,
    ball: BallSpec,
    restarts: int = 64,
    seed: int = 0,
    slack: float = CHAIN_SLACK,
    threads: int = 1,
) -> BoundReport:
    """Check each link of the shuffle chain against estimated sups.

    Link k asserts sup|S_{k-1} L_P| <= 2(m-k+1) log2(2n) sup|S_k L_P|; the
    endpoint asserts sup|B| <= e^m sup|P| with B = S_{m-1} L_P.  Both sides
    are ascent lower bounds, so each link is tested as
        lower(lhs) <= factor * lower(rhs) * (1 + slack),
    where the slack absorbs a shortfall of the right-hand estimate.  This is
    a heuristic gate, not a proof.
    """
    if not isinstance(ball, BallSpec):
        ball = BallSpec(ball)
    m, n = P.m, P.n
    if m > CHAIN_MAX_M or n > CHAIN_MAX_N:
        raise BudgetExceeded(f"chain_check is limited to m <= {CHAIN_MAX_M}, n <= {CHAIN_MAX_N}")
    LP = build_LP(P)
    sups = [
        sup_mform_ball(shuffle(LP, k), ball, restarts=restarts, seed=seed + k, threads=threads)
        for k in range(m)
    ]
    sup_p = sup_poly_ball(P, ball, restarts=restarts, seed=seed + m, threads=threads)
    mu = mu_upper_bound_T(n)

    chain = []
    for k in range(1, m):
        factor = 2 * (m - k + 1) * mu
        lhs, rhs = sups[k - 1].value, factor * sups[k].value
        chain.append({
            "link": f"S_{k - 1} <= 2(m-k+1) mu S_{k}",
            "k": k,
            "lhs": lhs,
            "factor": factor,
            "rhs": rhs,
            "passed": lhs <= rhs * (1 + slack),
        })
    lhs, rhs = sups[m - 1].value, math.e**m * sup_p.value
    chain.append({
        "link": "sup|B| <= e^m sup|P|",
        "k": m,
        "lhs": lhs,
        "factor": math.e**m,
        "rhs": rhs,
        "passed": lhs <= rhs * (1 + slack),
    })

    ratio = sups[0].value / sup_p.value if sup_p.value > 0 else 0.0
    lower = EstimateReport(
        ratio,
        Direction.STATISTICAL,
        "ratio-of-ascent-lower-bounds",
        samples=restarts,
        seed=seed,
        witness={"form": sups[0].witness, "polynomial": sup_p.witness},
        details={"sup_LP": sups[0].value, "sup_P": sup_p.value, "slack": slack},
    )
    return BoundReport(m, n, ball.p, lower, upper_bound_certificate(m, n).value, chain)


# Product polynomial -------------------------------------------------------


def product_poly_ratio(m: int, p: float, restarts: int = 32, seed: int = 0) -> EstimateReport:
    """sup|L_P| / sup|P| for P = x_1 ... x_m on l_p^m, equal to m^{m/p}.

    The numerator is attained at the canonical basis (value 1) and the
    denominator at m^{-1/p}(1, ..., 1) (value m^{-m/p}).  Both ascent
    estimators are run as a cross-check and reported in `details`.
    """
    ball = BallSpec(p)
    if ball.is_torus:
        raise ValueError("product_poly_ratio needs a finite p")
    P = HomPolynomial.product(m)
    LP = build_LP(P)
    basis = np.eye(m, dtype=complex)
    num = abs(eval_mform(LP, list(basis)))
    point = np.full(m, m ** (-1 / p), dtype=complex)
    den = abs(eval_polynomial(P, point))
    num_est = sup_mform_ball(LP, ball, restarts=restarts, seed=seed)
    den_est = sup_poly_ball(P, ball, restarts=restarts, seed=seed + 1)
    return EstimateReport(
        num / den,
        Direction.EXACT,
        "closed-form-witnesses",
        samples=restarts,
        seed=seed,
        witness={"form": basis, "polynomial": point},
        details={
            "closed_form": m ** (m / p),
            "sup_LP_estimate": num_est.value,
            "sup_P_estimate": den_est.value,
            "estimated_ratio": num_est.value / den_est.value,
        },
    )


# Bourgain's example -------------------------------------------------------


@dataclass(frozen=True)
class BourgainFamily:
    """Operators v_ij = (1/(i-j)) e_i (x) e_j + (1/(j-i)) e_j (x) e_i on l_2^n.

    Coordinates are cut into consecutive blocks ((k-1)b, kb] of size b.  A
    block's chaos sum_{i<j} v_ij x_i y_j only depends on differences i - j,
    so every block acts like the first one on its own coordinates.
    """

    n: int
    block_size: int | None = None

    def __post_init__(self) -> None:
        b = self.n if self.block_size is None else self.block_size
        if self.n < 2 or not 2 <= b <= self.n:
            raise ValueError(f"need n >= 2 and 2 <= block_size <= n, got n={self.n}, b={b}")
        object.__setattr__(self, "block_size", b)

    @property
    def blocks(self) -> list[range]:
        b = self.block_size
        return [range(k * b + 1, (k + 1) * b + 1) for k in range(self.n // b)]

    def v(self, i: int, j: int) -> np.ndarray:
        if i == j:
            raise ValueError("v_ij needs i != j")
        out = np.zeros((self.n, self.n))
        out[i - 1, j - 1] = 1.0 / (i - j)
        out[j - 1, i - 1] = 1.0 / (j - i)
        return out

    def chaos(self, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
        """sum_{i<j} v_ij x_i y_j on one block, for stacks x, y of shape (S, b)."""
        y = x if y is None else y
        H = hilbert_kernel(self.block_size)
        upper, lower = np.triu(H, 1), np.tril(H, -1)
        return (x[:, :, None] * y[:, None, :]) * upper + (y[:, :, None] * x[:, None, :]) * lower


class BourgainIntegrals(NamedTuple):
    i1: EstimateReport
    i2: EstimateReport

    @property
    def n(self) -> int:
        return self.i1.details["n"]

    @property
    def i1_ok(self) -> bool:
        """I1 - CI <= pi."""
        return self.i1.lower <= math.pi

    @property
    def i2_ok(self) -> bool:
        """I2 + CI >= log n - pi."""
        return self.i2.upper >= math.log(self.n) - math.pi

    @property
    def ratio(self) -> EstimateReport:
        return _ratio_report([self.i2], [self.i1])


def _block_integrals(
    b: int, samples: int, seed: int, block: int, threads: int, tol: float
) -> BourgainIntegrals:
    family = BourgainFamily(b)

    def norms(*points: np.ndarray) -> np.ndarray:
        sigma, _ = power_iteration(family.chaos(*points), tol=tol)
        return sigma

    i1 = torus_expectation(norms, TorusSampler(b, seed, 3 * block), samples, threads=threads)
    i2 = torus_expectation(
        norms,
        [TorusSampler(b, seed, 3 * block + 1), TorusSampler(b, seed, 3 * block + 2)],
        samples,
        threads=threads,
    )
    tag = {"n": b, "block": block}
    i1 = EstimateReport(i1.value, i1.direction, "bourgain-one-variable", i1.samples,
                        i1.ci_halfwidth, seed, details={**i1.details, **tag, "bound": math.pi})
    i2 = EstimateReport(i2.value, i2.direction, "bourgain-decoupled", i2.samples,
                        i2.ci_halfwidth, seed,
                        details={**i2.details, **tag, "bound": math.log(b) - math.pi})
    return BourgainIntegrals(i1, i2)


def bourgain_integrals(
    n: int, samples: int = 10_000, seed: int = 0, threads: int = 1, tol: float = 1e-10
) -> BourgainIntegrals:
    """Monte Carlo estimates of the one-variable and decoupled operator-norm integrals.

    I1 = E ||sum_{i<j} v_ij x_i x_j||,  I2 = E ||sum_{i<j} v_ij x_i y_j||,
    with x, y uniform on T^n and the operator norm from power iteration.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return _block_integrals(n, samples, seed, 0, threads, tol)


def _ratio_report(numerators: list[EstimateReport], denominators: list[EstimateReport]) -> EstimateReport:
    """Product ratio with first-order (delta method) propagation of the half-widths."""
    num = math.prod(r.value for r in numerators)
    den = math.prod(r.value for r in denominators)
    rel = math.sqrt(sum((r.ci_halfwidth / r.value) ** 2 for r in numerators + denominators))
    value = num / den
    return EstimateReport(
        value,
        Direction.STATISTICAL,
        "ratio-of-torus-means",
        samples=sum(r.samples for r in numerators + denominators),
        ci_halfwidth=value * rel,
        seed=numerators[0].seed,
        details={"numerator": num, "denominator": den},
    )


def bourgain_lower_bound(
    m: int, n: int, samples: int = 10_000, seed: int = 0, threads: int = 1, tol: float = 1e-10
) -> EstimateReport:
    """Ratio statistic (m-variable integral) / (one-variable integral) for the block example.

    The vector-valued polynomial is the tensor product over m/2 disjoint
    blocks of the two-variable chaos, so its projective norm is the product
    of the block operator norms and both integrals factor over blocks.  Each
    block gets samples // (m/2) samples.
    """
    if m < 2 or m % 2:
        raise ValueError(f"m must be a positive even integer, got {m}")
    b = (2 * n) // m
    if b < 2:
        raise ValueError(f"block size floor(2n/m) = {b} must be >= 2")
    half = m // 2
    per_block = samples // half
    blocks = [_block_integrals(b, per_block, seed, k, threads, tol) for k in range(half)]
    report = _ratio_report([blk.i2 for blk in blocks], [blk.i1 for blk in blocks])
    target_base = (math.log(b) - math.pi) / math.pi
    return EstimateReport(
        report.value,
        Direction.STATISTICAL,
        "bourgain-block-ratio",
        samples=per_block * half,
        ci_halfwidth=report.ci_halfwidth,
        seed=seed,
        details={
            "m": m,
            "n": n,
            "block_size": b,
            "discarded_coordinates": n - half * b,
            "one_variable": [blk.i1.value for blk in blocks],
            "decoupled": [blk.i2.value for blk in blocks],
            "target": target_base**half,
            "hypothesis_log_2n_over_m_ge_pi": math.log(2 * n / m) >= math.pi,
        },
    )
