"""Card-shuffle symmetrization of multilinear forms and the mask algebra.

Conventions
-----------
A permutation sigma acts on a monomial c_i x^(1)_{i_1} ... x^(m)_{i_m} by
moving it to c_i x^(1)_{i_sigma(1)} ... x^(m)_{i_sigma(m)}, i.e. the
coefficient lands on the multi-index j with j_s = i_{sigma(s)}.

The cycle (l l-1 ... k) sends l -> l-1, ..., k+1 -> k and k -> l.  Step j
of the shuffle pulls the card at a uniform position l in j..m up to position
j, which rearranges positions by tau_j = (l l-1 ... j).  Reading sigma(p) as
the card found at position p, k steps give sigma = tau_1 o tau_2 o ... o tau_k
(each new step acts on positions, hence on the right).  With this order the
first k cards sigma(1..k) are a uniform draw without replacement and k = m-1
is uniform on all permutations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .core import (
    TAU_EXACT,
    CoeffTensor,
    DimensionError,
    HomPolynomial,
    MultiIndex,
    build_LP,
    eval_polynomial,
    index_set,
    is_nondecreasing,
)

MAX_FACTORIAL_M = 8
RECURSION_MAX_M = 6
RECURSION_MAX_N = 5


class BudgetExceeded(ValueError):
    """Raised when an exhaustive computation would exceed its size guard."""


def _factorial_guard(m: int) -> None:
    if m > MAX_FACTORIAL_M:
        raise BudgetExceeded(
            f"m={m} exceeds the m <= {MAX_FACTORIAL_M} factorial guard on permutation enumeration"
        )


# Permutations -------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Permutation:
    """Bijection of {1..m}; images[i - 1] is the image of i."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"{images} is not a permutation of 1..{len(images)}")
        object.__setattr__(self, "images", images)

    @property
    def m(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __matmul__(self, other: Permutation) -> Permutation:
        """Composition self o other (other acts first)."""
        if other.m != self.m:
            raise DimensionError("cannot compose permutations of different sizes")
        return Permutation(tuple(self(other(i)) for i in range(1, self.m + 1)))

    def inverse(self) -> Permutation:
        inv = [0] * self.m
        for i, image in enumerate(self.images, start=1):
            inv[image - 1] = i
        return Permutation(tuple(inv))

    def act(self, index: MultiIndex) -> MultiIndex:
        """Index j with j_s = index_{sigma(s)}."""
        return tuple(index[self(s) - 1] for s in range(1, self.m + 1))

    @classmethod
    def identity(cls, m: int) -> Permutation:
        return cls(tuple(range(1, m + 1)))

    @classmethod
    def cycle(cls, m: int, k: int, l: int) -> Permutation:
        """The cycle (l l-1 ... k); the identity when l == k."""
        if not 1 <= k <= l <= m:
            raise ValueError(f"need 1 <= k <= l <= m, got k={k}, l={l}, m={m}")
        images = list(range(1, m + 1))
        images[k - 1] = l
        for j in range(k + 1, l + 1):
            images[j - 1] = j - 1
        return cls(tuple(images))

    def __str__(self) -> str:
        return "(" + " ".join(map(str, self.images)) + ")"


@dataclass(frozen=True)
class PermDistribution:
    """Exact probability law on permutations of {1..m}."""

    m: int
    probs: dict[Permutation, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.probs.values()):
            raise ValueError("negative probability")
        if sum(self.probs.values()) != 1:
            raise ValueError("probabilities do not sum to 1")
        object.__setattr__(self, "probs", dict(sorted(self.probs.items())))

    def __getitem__(self, sigma: Permutation) -> Fraction:
        return self.probs.get(sigma, Fraction(0))

    def __len__(self) -> int:
        return len(self.probs)

    def items(self) -> Iterator[tuple[Permutation, Fraction]]:
        return iter(self.probs.items())


def fy_distribution(m: int, k: int) -> PermDistribution:
    """Law of the permutation produced by the first k Fisher-Yates steps (k = 0 is the identity)."""
    if not 0 <= k <= m - 1:
        raise ValueError(f"k must satisfy 0 <= k <= m - 1, got k={k}, m={m}")
    _factorial_guard(m)
    law = {Permutation.identity(m): Fraction(1)}
    for j in range(1, k + 1):
        weight = Fraction(1, m - j + 1)
        cycles = [Permutation.cycle(m, j, l) for l in range(j, m + 1)]
        step: dict[Permutation, Fraction] = {}
        for sigma, p in law.items():
            for tau in cycles:
                key = sigma @ tau
                step[key] = step.get(key, Fraction(0)) + p * weight
        law = step
    return PermDistribution(m, law)


def sample_fy(m: int, k: int, rng: np.random.Generator) -> Permutation:
    """Draw one permutation by running k Fisher-Yates steps."""
    if not 0 <= k <= m - 1:
        raise ValueError(f"k must satisfy 0 <= k <= m - 1, got k={k}, m={m}")
    sigma = Permutation.identity(m)
    for j in range(1, k + 1):
        l = int(rng.integers(j, m + 1))
        sigma = sigma @ Permutation.cycle(m, j, l)
    return sigma


# Shuffles -----------------------------------------------------------------


def _check_step(L: CoeffTensor, k: int, lo: int) -> None:
    if not lo <= k <= L.m - 1:
        raise ValueError(f"k must satisfy {lo} <= k <= m - 1, got k={k}, m={L.m}")


def shuffle_step(L: CoeffTensor, k: int) -> CoeffTensor:
    """T_k L: average over moving slot k's variable to slot l, l = k..m.

    Coefficientwise, c_j(L) contributes 1/(m-k+1) to the index obtained from
    j by pulling its l-th entry forward to position k.
    """
    _check_step(L, k, 1)
    m = L.m
    weight = 1.0 / (m - k + 1)
    out: dict[MultiIndex, complex] = {}
    for j, c in L.items():
        for l in range(k, m + 1):
            i = j[: k - 1] + (j[l - 1],) + j[k - 1 : l - 1] + j[l:]
            out[i] = out.get(i, 0j) + weight * c
    return CoeffTensor(m, L.n, out)


def shuffle_steps(L: CoeffTensor, k: int) -> CoeffTensor:
    """T_k o ... o T_1 applied to L."""
    _check_step(L, k, 0)
    for step in range(1, k + 1):
        L = shuffle_step(L, step)
    return L


def apply_distribution(L: CoeffTensor, law: PermDistribution) -> CoeffTensor:
    """Expectation of the index-permuted form over a permutation law."""
    if law.m != L.m:
        raise DimensionError("distribution and form have different arity")
    out: dict[MultiIndex, complex] = {}
    weights = [(sigma, float(p)) for sigma, p in law.items()]
    for i, c in L.items():
        for sigma, p in weights:
            j = sigma.act(i)
            out[j] = out.get(j, 0j) + p * c
    return CoeffTensor(L.m, L.n, out)


def shuffle(L: CoeffTensor, k: int) -> CoeffTensor:
    """S_k L, computed as an exact expectation over fy_distribution(m, k)."""
    _check_step(L, k, 0)
    if k == 0:
        return L
    return apply_distribution(L, fy_distribution(L.m, k))


def symmetrize_average(L: CoeffTensor) -> CoeffTensor:
    """(1/m!) sum over sigma of L(x^sigma(1), ..., x^sigma(m))."""
    m = L.m
    _factorial_guard(m)
    weight = 1.0 / math.factorial(m)
    out: dict[MultiIndex, complex] = {}
    perms = list(itertools.permutations(range(m)))
    for i, c in L.items():
        for pi in perms:
            j = tuple(i[pi[t]] for t in range(m))
            out[j] = out.get(j, 0j) + weight * c
    return CoeffTensor(m, L.n, out)


def polarization_form(P: HomPolynomial, chunk: int = 4096) -> CoeffTensor:
    """The symmetric m-linear form B with B(x, ..., x) = P(x).

    c_j(B) = B(e_{j_1}, ..., e_{j_m}) is obtained from the sign-averaged
    polarization identity
        B(x^(1), ..., x^(m)) = 1/(2^m m!) sum_eps eps_1...eps_m P(sum_s eps_s x^(s)),
    evaluated on every tuple of canonical basis vectors.
    """
    m, n = P.m, P.n
    _factorial_guard(m)
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=m)))
    sign_prod = signs.prod(axis=1)
    scale = 1.0 / (2**m * math.factorial(m))
    keys = list(index_set(m, n))
    out: dict[MultiIndex, complex] = {}
    for start in range(0, len(keys), chunk):
        block = np.array(keys[start : start + chunk]) - 1
        points = np.zeros((len(block), len(signs), n), dtype=complex)
        for s in range(m):
            np.add.at(points, (np.arange(len(block))[:, None], slice(None), block[:, [s]]),
                      signs[None, :, s])
        values = np.asarray(eval_polynomial(P, points)) @ sign_prod * scale
        for key, value in zip(keys[start : start + chunk], values):
            if value != 0:
                out[key] = value
    return CoeffTensor(m, n, out)


# Masks --------------------------------------------------------------------


class Mask:
    """Element of C^{I(m, n)} given by a pure entry function.

    Masks combine entrywise: `A * B` is the Schur product, `A + B` the sum,
    and scalars act as constant masks.
    """

    def __init__(self, m: int, n: int, entry: Callable[[MultiIndex], complex], label: str = "mask"):
        self.m = m
        self.n = n
        self.entry = entry
        self.label = label

    def __call__(self, index: MultiIndex) -> complex:
        return self.entry(tuple(index))

    def __repr__(self) -> str:
        return f"Mask({self.label}, m={self.m}, n={self.n})"

    def _lift(self, other) -> Mask:
        if isinstance(other, Mask):
            if (other.m, other.n) != (self.m, self.n):
                raise DimensionError("mask shape mismatch")
            return other
        value = other
        return Mask(self.m, self.n, lambda i: value, repr(value))

    def __mul__(self, other) -> Mask:
        o = self._lift(other)
        return Mask(self.m, self.n, lambda i: self.entry(i) * o.entry(i), f"{self.label}*{o.label}")

    __rmul__ = __mul__

    def __add__(self, other) -> Mask:
        o = self._lift(other)
        return Mask(self.m, self.n, lambda i: self.entry(i) + o.entry(i), f"({self.label}+{o.label})")

    __radd__ = __add__

    def materialize(self) -> CoeffTensor:
        return CoeffTensor(self.m, self.n, {i: self.entry(i) for i in index_set(self.m, self.n)})


def _check_slots(m: int, *slots: int) -> None:
    for s in slots:
        if not 1 <= s <= m:
            raise ValueError(f"slot {s} out of range 1..{m}")


def ones_mask(m: int, n: int) -> Mask:
    return Mask(m, n, lambda i: 1.0, "1")


def mask_D(m: int, n: int, u: int, v: int) -> Mask:
    """Indicator of i_u == i_v."""
    _check_slots(m, u, v)
    return Mask(m, n, lambda i: 1.0 if i[u - 1] == i[v - 1] else 0.0, f"D[{u},{v}]")


def mask_T(m: int, n: int, u: int, v: int) -> Mask:
    """Indicator of i_u <= i_v."""
    _check_slots(m, u, v)
    return Mask(m, n, lambda i: 1.0 if i[u - 1] <= i[v - 1] else 0.0, f"T[{u},{v}]")


def mask_R(m: int, n: int, k: int) -> Mask:
    """Weight turning S_k L_P back into S_{k-1} L_P."""
    if not 1 <= k <= m - 1:
        raise ValueError(f"k must satisfy 1 <= k <= m - 1, got k={k}, m={m}")

    def entry(i: MultiIndex) -> float:
        if i[k - 1] > i[k]:
            return 0.0
        total = 1.0
        for u in range(1, m - k + 1):
            if i[k - 1] == i[k - 1 + u]:
                total += 1.0 / (u + 1) - 1.0 / u
        return (m - k + 1) * total

    return Mask(m, n, entry, f"R[{k}]")


def mask_R_factored(m: int, n: int, k: int) -> Mask:
    """(m-k+1) T^{k,k+1} * (1 + sum_u (1/(u+1) - 1/u) D^{k,k+u})."""
    if not 1 <= k <= m - 1:
        raise ValueError(f"k must satisfy 1 <= k <= m - 1, got k={k}, m={m}")
    inner = ones_mask(m, n)
    for u in range(1, m - k + 1):
        inner = inner + mask_D(m, n, k, k + u) * (1.0 / (u + 1) - 1.0 / u)
    return (m - k + 1) * mask_T(m, n, k, k + 1) * inner


def schur(A, L: CoeffTensor) -> CoeffTensor:
    """Entrywise product c_i(A * L) = c_i(A) c_i(L)."""
    if (A.m, A.n) != (L.m, L.n):
        raise DimensionError(f"shape mismatch: ({A.m}, {A.n}) vs ({L.m}, {L.n})")
    if isinstance(A, CoeffTensor):
        return CoeffTensor(L.m, L.n, {i: A[i] * c for i, c in L.items()})
    return CoeffTensor(L.m, L.n, {i: A(i) * c for i, c in L.items()})


# Exhaustive recursion check -----------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int
    max_error: float = 0.0
    counterexample: dict | None = None
    reference: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "reference": self.reference,
            "passed": self.passed,
            "checked": self.checked,
            "max_error": self.max_error,
            "counterexample": self.counterexample,
        }


@dataclass
class RecursionReport:
    passed: bool
    checks: list[CheckResult]

    @property
    def first_counterexample(self) -> dict | None:
        for check in self.checks:
            if not check.passed:
                return {"check": check.name, **check.counterexample}
        return None


def recursion_check(P: HomPolynomial, tol: float = TAU_EXACT) -> RecursionReport:
    """Verify c_i(S_{k-1} L_P) = c_i(R_k) c_i(S_k L_P) on all of I(m, n).

    Also checks that c_i(S_{k-1} L_P) vanishes when i_k > i_{k+1} and that
    every nonzero coefficient of S_k L_P has i_{k+1} <= ... <= i_m.  The
    shuffles come from the explicit Fisher-Yates law, independently of the
    recursion being tested.  Counterexamples are the first failures in
    lexicographic order.
    """
    m, n = P.m, P.n
    if m > RECURSION_MAX_M or n > RECURSION_MAX_N:
        raise BudgetExceeded(
            f"recursion_check is limited to m <= {RECURSION_MAX_M}, n <= {RECURSION_MAX_N}; "
            f"got m={m}, n={n}"
        )
    scale = max([1.0] + [abs(c) for _, c in P.items()])
    atol = tol * scale
    LP = build_LP(P)
    shuffles = [LP] + [shuffle(LP, k) for k in range(1, m)]
    indices = list(index_set(m, n))
    checks = []

    for k in range(1, m):
        R = mask_R(m, n, k)
        prev, cur = shuffles[k - 1], shuffles[k]
        rec = CheckResult(f"recursion k={k}", True, 0)
        zero = CheckResult(f"vanishing i_k > i_k+1, k={k}", True, 0)
        for i in indices:
            lhs, rhs = prev[i], R(i) * cur[i]
            err = abs(lhs - rhs)
            rec.checked += 1
            rec.max_error = max(rec.max_error, err)
            if err > atol and rec.passed:
                rec.passed = False
                rec.counterexample = {"index": list(i), "lhs": [lhs.real, lhs.imag],
                                      "rhs": [rhs.real, rhs.imag]}
            if i[k - 1] > i[k]:
                zero.checked += 1
                zero.max_error = max(zero.max_error, abs(lhs))
                if abs(lhs) > atol and zero.passed:
                    zero.passed = False
                    zero.counterexample = {"index": list(i), "coefficient": [lhs.real, lhs.imag]}
        checks += [rec, zero]

    for k in range(m):
        support = CheckResult(f"support S_{k}: tail i_{k + 1}..i_m nondecreasing", True, 0)
        for i, c in shuffles[k].items():
            support.checked += 1
            if abs(c) > atol and not is_nondecreasing(i[k:]):
                support.max_error = max(support.max_error, abs(c))
                if support.passed:
                    support.passed = False
                    support.counterexample = {"index": list(i), "coefficient": [c.real, c.imag]}
        checks.append(support)

    return RecursionReport(all(c.passed for c in checks), checks)
