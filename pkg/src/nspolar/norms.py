"""Sup-norm estimation over l_p balls, mask multiplier bounds, torus integrals.

All sup estimators return certified lower bounds: the reported value is
|objective(witness)| for a witness lying in the ball.  Nothing here claims
global optimality.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .core import (
    CoeffTensor,
    Direction,
    EstimateReport,
    HomPolynomial,
    check_p,
    dual_exponent,
    eval_mform,
    eval_polynomial,
    lp_norm,
    polynomial_gradient,
)

DEFAULT_RESTARTS = 32
DEFAULT_ITERS = 200
ASCENT_TOL = 1e-10
DEFAULT_SAMPLES = 20_000
CONFIDENCE = 0.99


@dataclass(frozen=True)
class BallSpec:
    """Closed unit ball of l_p on C^n, 1 <= p <= inf."""

    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", check_p(self.p))

    @property
    def is_torus(self) -> bool:
        return math.isinf(self.p)

    @property
    def dual(self) -> float:
        return dual_exponent(self.p)

    def norm(self, x: np.ndarray) -> float:
        return lp_norm(x, self.p)

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        return self.norm(x) <= 1 + tol

    def normalize(self, x: np.ndarray) -> np.ndarray:
        """Scale a nonzero x onto the unit sphere, never outside the ball."""
        x = x / self.norm(x)
        excess = self.norm(x)
        if excess > 1:
            x = x / excess
        return x

    def random_point(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.is_torus:
            return np.exp(2j * np.pi * rng.random(n))
        return self.normalize(rng.standard_normal(n) + 1j * rng.standard_normal(n))

    def best_response(self, g: np.ndarray) -> np.ndarray | None:
        """Maximizer of |sum_j g_j x_j| over the ball, phased so the sum is >= 0.

        The optimum equals the dual norm of g.  Returns None if g vanishes.
        """
        mags = np.abs(g)
        if not np.any(mags > 0):
            return None
        phase = np.ones_like(g)
        nz = mags > 0
        phase[nz] = np.conj(g[nz]) / mags[nz]
        if self.is_torus:
            return phase
        if self.p == 1:
            x = np.zeros_like(g)
            j = int(np.argmax(mags))
            x[j] = phase[j]
            return x
        q = self.dual
        weights = np.zeros_like(mags)
        weights[nz] = mags[nz] ** (q - 1)
        return self.normalize(phase * weights)


def _restart_rngs(seed: int, restarts: int) -> list[np.random.Generator]:
    return [np.random.default_rng([seed, r]) for r in range(restarts)]


def _run(fn: Callable, jobs: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _best(results: list[tuple[float, object]]) -> int:
    """Index of the largest value; ties go to the earliest restart."""
    best = 0
    for r, (value, _) in enumerate(results):
        if value > results[best][0]:
            best = r
    return best


# Multilinear forms --------------------------------------------------------


def _slot_functional(idx: np.ndarray, vals: np.ndarray, X: np.ndarray, s: int) -> np.ndarray:
    m, n = X.shape
    gathered = X[np.arange(m), idx]
    gathered[:, s] = 1.0
    w = vals * gathered.prod(axis=1)
    return np.bincount(idx[:, s], weights=w.real, minlength=n) + 1j * np.bincount(
        idx[:, s], weights=w.imag, minlength=n
    )


def alternating_ascent(
    L: CoeffTensor,
    ball: BallSpec,
    start: np.ndarray,
    iters: int = DEFAULT_ITERS,
    tol: float = ASCENT_TOL,
    trace: list[float] | None = None,
) -> tuple[float, np.ndarray, int]:
    """Cyclic exact slot maximization from `start` (shape (m, n)).

    With all slots but one fixed, L is linear in the free slot, so the slot
    optimum is the dual-norm witness of the induced functional.  An update is
    accepted only if it does not lower |L|, so the objective is monotone.
    Returns (value, slots, cycles).
    """
    idx, vals = L.arrays
    X = np.array(start, dtype=complex)
    value = abs(eval_mform(L, list(X)))
    if trace is not None:
        trace.append(value)
    cycles = 0
    for cycles in range(1, iters + 1):
        before = value
        for s in range(L.m):
            g = _slot_functional(idx, vals, X, s)
            x = ball.best_response(g)
            if x is None:
                continue
            candidate = X.copy()
            candidate[s] = x
            new = abs(eval_mform(L, list(candidate)))
            if new >= value:
                X, value = candidate, new
            if trace is not None:
                trace.append(value)
        if value - before <= tol * max(value, 1e-300):
            break
    return value, X, cycles


def sup_mform_ball(
    L: CoeffTensor,
    ball: BallSpec,
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
    tol: float = ASCENT_TOL,
    threads: int = 1,
) -> EstimateReport:
    """Lower bound for sup |L(x^(1), ..., x^(m))| over the product of unit balls."""
    if not isinstance(ball, BallSpec):
        ball = BallSpec(ball)
    method = f"alternating-slot-ascent(restarts={restarts}, iters={iters})"
    if len(L) == 0:
        zero = np.zeros((L.m, L.n), dtype=complex)
        return EstimateReport(0.0, Direction.LOWER, method, restarts, 0.0, seed, zero)

    def one(rng: np.random.Generator) -> tuple[float, tuple[np.ndarray, int]]:
        start = np.stack([ball.random_point(L.n, rng) for _ in range(L.m)])
        value, X, cycles = alternating_ascent(L, ball, start, iters, tol)
        return value, (X, cycles)

    results = _run(one, _restart_rngs(seed, restarts), threads)
    r = _best(results)
    X, cycles = results[r][1]
    value = abs(eval_mform(L, list(X)))
    return EstimateReport(
        value,
        Direction.LOWER,
        method,
        samples=restarts,
        seed=seed,
        witness=X,
        details={"p": ball.p, "best_restart": r, "cycles": cycles},
    )


# Polynomials --------------------------------------------------------------


def _torus_objective(P: HomPolynomial) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    def f(theta: np.ndarray) -> tuple[float, np.ndarray]:
        x = np.exp(1j * theta)
        val = eval_polynomial(P, x)
        if val == 0:
            return math.inf, np.zeros_like(theta)
        grad = -np.imag(x * polynomial_gradient(P, x) / val)
        return -math.log(abs(val)), -grad

    return f


def _ball_objective(P: HomPolynomial, p: float) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    n, m = P.n, P.m

    def f(params: np.ndarray) -> tuple[float, np.ndarray]:
        z = params[:n] + 1j * params[n:]
        val = eval_polynomial(P, z)
        mags = np.abs(z)
        norm_p = float(np.sum(mags**p))
        if val == 0 or norm_p == 0:
            return math.inf, np.zeros_like(params)
        ratio = polynomial_gradient(P, z) / val
        weight = np.zeros_like(mags)
        nz = mags > 0
        weight[nz] = mags[nz] ** (p - 2)
        shrink = m * weight * z / norm_p
        grad = np.concatenate([ratio.real - shrink.real, -ratio.imag - shrink.imag])
        return -(math.log(abs(val)) - (m / p) * math.log(norm_p)), -grad

    return f


def sup_poly_ball(
    P: HomPolynomial,
    ball: BallSpec,
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
    threads: int = 1,
) -> EstimateReport:
    """Lower bound for sup |P(x)| over the unit ball of l_p.

    For p = inf the search runs over phases on the torus (maximum modulus).
    For finite p the scale-invariant quotient log|P(z)| - m log||z||_p is
    maximized over all of C^n and the optimum is rescaled onto the sphere.
    Each restart uses quasi-Newton ascent, whose line search never lowers
    the objective; a restart's result is kept only if it beats its start.
    """
    if not isinstance(ball, BallSpec):
        ball = BallSpec(ball)
    method = f"quasi-newton-phase-ascent(restarts={restarts}, iters={iters})"
    n = P.n
    if len(P) == 0:
        return EstimateReport(0.0, Direction.LOWER, method, restarts, 0.0, seed, np.zeros(n, complex))
    used = np.zeros(n, dtype=bool)
    used[np.unique(P.arrays[0])] = True

    if ball.is_torus:
        objective = _torus_objective(P)

        def one(rng: np.random.Generator) -> tuple[float, np.ndarray]:
            theta0 = 2 * np.pi * rng.random(n)
            x0 = np.exp(1j * theta0)
            res = minimize(objective, theta0, jac=True, method="BFGS",
                           options={"maxiter": iters, "gtol": 1e-12})
            x = np.exp(1j * res.x)
            v0, v = abs(eval_polynomial(P, x0)), abs(eval_polynomial(P, x))
            return (v, x) if v >= v0 else (v0, x0)

    else:
        objective = _ball_objective(P, ball.p)

        def one(rng: np.random.Generator) -> tuple[float, np.ndarray]:
            z0 = np.where(used, rng.standard_normal(n) + 1j * rng.standard_normal(n), 0)
            z0 = ball.normalize(z0)
            res = minimize(objective, np.concatenate([z0.real, z0.imag]), jac=True,
                           method="BFGS", options={"maxiter": iters, "gtol": 1e-12})
            z = res.x[:n] + 1j * res.x[n:]
            x = ball.normalize(z) if np.all(np.isfinite(z)) and np.any(z != 0) else z0
            v0, v = abs(eval_polynomial(P, z0)), abs(eval_polynomial(P, x))
            return (v, x) if v >= v0 else (v0, z0)

    results = _run(one, _restart_rngs(seed, restarts), threads)
    r = _best(results)
    x = results[r][1]
    return EstimateReport(
        abs(eval_polynomial(P, x)),
        Direction.LOWER,
        method,
        samples=restarts,
        seed=seed,
        witness=x,
        details={"p": ball.p, "best_restart": r},
    )


# Mask multipliers ---------------------------------------------------------


def hilbert_kernel(n: int) -> np.ndarray:
    """Matrix with entries 1/(i - j) off the diagonal and 0 on it."""
    i = np.arange(1, n + 1)
    d = (i[:, None] - i[None, :]).astype(float)
    out = np.zeros((n, n))
    off = d != 0
    out[off] = 1.0 / d[off]
    return out


def triangular_profiles(m: int, n: int) -> list[tuple[str, CoeffTensor]]:
    """Forms whose coefficients depend on i_u - i_v through a Hilbert-type kernel.

    Such forms make the triangle indicator i_u <= i_v expensive, since the
    truncated kernel has a logarithmically unbounded symbol.
    """
    kernels = {
        "hilbert": hilbert_kernel(n),
        "shifted-hilbert": 1.0 / (np.arange(n)[:, None] - np.arange(n)[None, :] + 0.5),
    }
    out = []
    for u in range(m):
        for v in range(m):
            if u == v:
                continue
            for name, K in kernels.items():
                grids = np.indices((n,) * m)
                dense = K[grids[u], grids[v]]
                out.append((f"{name}[{u + 1},{v + 1}]", CoeffTensor.from_dense(dense)))
    return out


def mu_lower_bound(
    A,
    ball: BallSpec,
    trials: int = 8,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERS,
    threads: int = 1,
) -> EstimateReport:
    """Search-based estimate of the Schur multiplier norm mu(A).

    Each trial form L contributes the ratio sup|A*L| / sup|L|, both sides
    estimated by sup_mform_ball.  The denominator is itself only a lower
    bound, so the ratio is a statistic rather than a certificate.  Trial
    forms are the triangular profiles first, then complex Gaussian tensors.
    """
    from .shuffle import schur

    if not isinstance(ball, BallSpec):
        ball = BallSpec(ball)
    m, n = A.m, A.n
    candidates = triangular_profiles(m, n) if m >= 2 else []
    rng = np.random.default_rng([seed, 1 << 20])
    while len(candidates) < trials:
        candidates.append((f"gaussian-{len(candidates)}", CoeffTensor.random(m, n, rng)))
    candidates = candidates[:trials]

    ratios = []
    best = (-1.0, None)
    for t, (label, L) in enumerate(candidates):
        den = sup_mform_ball(L, ball, restarts, iters, seed=seed + 2 * t, threads=threads)
        num = sup_mform_ball(schur(A, L), ball, restarts, iters, seed=seed + 2 * t + 1, threads=threads)
        ratio = num.value / den.value if den.value > 0 else 0.0
        ratios.append(ratio)
        if ratio > best[0]:
            best = (ratio, {"trial": t, "form": label, "numerator": num.value,
                            "denominator": den.value,
                            "numerator_witness": num.witness,
                            "denominator_witness": den.witness})
    return EstimateReport(
        best[0],
        Direction.STATISTICAL,
        "max-ratio-of-ascent-lower-bounds",
        samples=len(candidates),
        seed=seed,
        witness=best[1],
        details={"p": ball.p, "ratios": ratios, "forms": [c[0] for c in candidates]},
    )


def mu_upper_bound_T(n: int) -> float:
    """log2(2n), valid for every triangle mask under every 1-unconditional norm."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return math.log2(2 * n)


# Torus Monte Carlo --------------------------------------------------------


@dataclass(frozen=True)
class TorusSampler:
    """Stream of points of T^n with independent uniform phases.

    Chunk c of stream `stream` is drawn from a generator keyed by
    (seed, stream, c), so chunks can be produced in any order or in parallel.
    """

    n: int
    seed: int = 0
    stream: int = 0

    def __post_init__(self) -> None:
        if self.n < 1 or self.seed < 0 or self.stream < 0:
            raise ValueError("TorusSampler needs n >= 1 and nonnegative seed/stream")

    def draw(self, chunk: int, size: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, self.stream, chunk])
        return np.exp(2j * np.pi * rng.random((size, self.n)))


def torus_expectation(
    integrand: Callable[..., np.ndarray],
    samplers: TorusSampler | Sequence[TorusSampler],
    samples: int = DEFAULT_SAMPLES,
    chunk_size: int = 1000,
    threads: int = 1,
    confidence: float = CONFIDENCE,
) -> EstimateReport:
    """Monte Carlo mean of a real integrand over (T^n)^k.

    `integrand` receives one (size, n) array per sampler and returns `size`
    real values.  The half-width is z * std / sqrt(samples) for a two-sided
    normal interval at `confidence`.  Results depend only on the seeds and
    `chunk_size`, not on `threads`.
    """
    if isinstance(samplers, TorusSampler):
        samplers = [samplers]
    if samples < 2:
        raise ValueError("torus_expectation needs at least 2 samples")
    sizes = [min(chunk_size, samples - start) for start in range(0, samples, chunk_size)]

    def chunk(c: int) -> np.ndarray:
        draws = [s.draw(c, sizes[c]) for s in samplers]
        values = np.asarray(integrand(*draws), dtype=float).reshape(-1)
        if values.shape != (sizes[c],):
            raise ValueError(f"integrand returned shape {values.shape}, expected ({sizes[c]},)")
        bad = ~np.isfinite(values)
        if bad.any():
            first = int(np.argmax(bad))
            raise FloatingPointError(
                f"integrand returned {values[first]} at chunk {c}, offset {first} "
                f"(sample {c * chunk_size + first}); point {[d[first] for d in draws]}"
            )
        return values

    values = np.concatenate(_run(chunk, range(len(sizes)), threads))
    mean = math.fsum(values) / samples
    var = math.fsum((values - mean) ** 2) / (samples - 1)
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    return EstimateReport(
        mean,
        Direction.STATISTICAL,
        "torus-monte-carlo",
        samples=samples,
        ci_halfwidth=z * math.sqrt(var / samples),
        seed=samplers[0].seed,
        details={"confidence": confidence, "std": math.sqrt(var), "chunk_size": chunk_size},
    )
