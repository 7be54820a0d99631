"""Multi-indices, sparse coefficient tensors, evaluation and basic norms.

Multi-indices are plain tuples of 1-based coordinates.  An m-linear form on
C^n is stored as a sparse map from multi-indices in I(m, n) = {1..n}^m to
complex coefficients; a homogeneous polynomial uses the same storage with
keys restricted to nondecreasing multi-indices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

MultiIndex = tuple[int, ...]

TAU_EXACT = 1e-12
TAU_EVAL = 1e-9


class DimensionError(ValueError):
    """Raised when vector lengths, arities or index ranges do not match."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative method exhausts its iteration budget."""


def is_nondecreasing(index: Sequence[int]) -> bool:
    return all(a <= b for a, b in zip(index, index[1:]))


def check_index(index: Sequence[int], m: int, n: int) -> MultiIndex:
    index = tuple(int(i) for i in index)
    if len(index) != m:
        raise DimensionError(f"multi-index {index} has arity {len(index)}, expected {m}")
    if any(i < 1 or i > n for i in index):
        raise DimensionError(f"multi-index {index} has entries outside 1..{n}")
    return index


def index_set(m: int, n: int) -> Iterator[MultiIndex]:
    """Enumerate I(m, n) in lexicographic order."""
    return itertools.product(range(1, n + 1), repeat=m)


def nondecreasing_indices(m: int, n: int) -> Iterator[MultiIndex]:
    """Enumerate the nondecreasing multi-indices of I(m, n), lexicographically."""
    return itertools.combinations_with_replacement(range(1, n + 1), m)


class _SparseCoeffs:
    """Shared storage for CoeffTensor and HomPolynomial."""

    m: int
    n: int
    coeffs: Mapping[MultiIndex, complex]

    def _normalize(self) -> None:
        if self.m < 1 or self.n < 1:
            raise DimensionError(f"need m >= 1 and n >= 1, got m={self.m}, n={self.n}")
        cleaned = {}
        for key, value in self.coeffs.items():
            key = check_index(key, self.m, self.n)
            value = complex(value)
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ValueError(f"non-finite coefficient at {key}")
            if value != 0:
                cleaned[key] = cleaned.get(key, 0j) + value
        ordered = {k: cleaned[k] for k in sorted(cleaned) if cleaned[k] != 0}
        object.__setattr__(self, "coeffs", ordered)

    def __getitem__(self, index: Sequence[int]) -> complex:
        return self.coeffs.get(tuple(index), 0j)

    def __len__(self) -> int:
        return len(self.coeffs)

    def items(self) -> Iterable[tuple[MultiIndex, complex]]:
        return self.coeffs.items()

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Zero-based index array of shape (terms, m) and coefficient vector."""
        if not self.coeffs:
            return np.zeros((0, self.m), dtype=np.intp), np.zeros(0, dtype=complex)
        idx = np.array(list(self.coeffs), dtype=np.intp) - 1
        vals = np.array(list(self.coeffs.values()), dtype=complex)
        return idx, vals

    def max_abs_diff(self, other: _SparseCoeffs) -> float:
        if (self.m, self.n) != (other.m, other.n):
            raise DimensionError("shape mismatch")
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)

    def allclose(self, other: _SparseCoeffs, tol: float = TAU_EXACT) -> bool:
        return self.max_abs_diff(other) <= tol

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n,) * self.m, dtype=complex)
        for key, value in self.coeffs.items():
            out[tuple(i - 1 for i in key)] = value
        return out


@dataclass(frozen=True)
class CoeffTensor(_SparseCoeffs):
    """Coefficients c_i(L) of an m-linear form L on (C^n)^m; absent keys are 0."""

    m: int
    n: int
    coeffs: Mapping[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._normalize()

    @classmethod
    def from_dense(cls, array: np.ndarray) -> CoeffTensor:
        array = np.asarray(array, dtype=complex)
        n = array.shape[0]
        if any(d != n for d in array.shape):
            raise DimensionError(f"dense tensor must be cubic, got {array.shape}")
        coeffs = {tuple(int(i) + 1 for i in pos): array[pos] for pos in zip(*np.nonzero(array))}
        return cls(array.ndim, n, coeffs)

    @classmethod
    def random(cls, m: int, n: int, rng: np.random.Generator) -> CoeffTensor:
        """Dense tensor with independent standard complex Gaussian entries."""
        shape = (n,) * m
        array = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return cls.from_dense(array / math.sqrt(2))

    def __add__(self, other: CoeffTensor) -> CoeffTensor:
        if (self.m, self.n) != (other.m, other.n):
            raise DimensionError("shape mismatch")
        out = dict(self.coeffs)
        for k, v in other.items():
            out[k] = out.get(k, 0j) + v
        return CoeffTensor(self.m, self.n, out)

    def __sub__(self, other: CoeffTensor) -> CoeffTensor:
        return self + (-1) * other

    def __rmul__(self, alpha: complex) -> CoeffTensor:
        return CoeffTensor(self.m, self.n, {k: alpha * v for k, v in self.items()})

    def is_symmetric(self, tol: float = TAU_EXACT) -> bool:
        """True if coefficients are invariant under every permutation of positions."""
        for key, value in self.items():
            for perm in set(itertools.permutations(key)):
                if abs(self[perm] - value) > tol:
                    return False
        return True


@dataclass(frozen=True)
class HomPolynomial(_SparseCoeffs):
    """m-homogeneous polynomial sum_j c_j x_{j_1} ... x_{j_m} over nondecreasing j."""

    m: int
    n: int
    coeffs: Mapping[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._normalize()
        bad = [k for k in self.coeffs if not is_nondecreasing(k)]
        if bad:
            raise DimensionError(f"polynomial keys must be nondecreasing, got {bad[0]}")

    @classmethod
    def monomial(cls, index: Sequence[int], n: int, coeff: complex = 1.0) -> HomPolynomial:
        index = tuple(sorted(index))
        return cls(len(index), n, {index: coeff})

    @classmethod
    def product(cls, m: int, n: int | None = None) -> HomPolynomial:
        """The polynomial x_1 x_2 ... x_m on C^n (n defaults to m)."""
        return cls.monomial(range(1, m + 1), m if n is None else n)

    @classmethod
    def random(
        cls,
        m: int,
        n: int,
        rng: np.random.Generator,
        terms: int | None = None,
    ) -> HomPolynomial:
        """Random complex Gaussian coefficients on `terms` distinct monomials (all if None)."""
        keys = list(nondecreasing_indices(m, n))
        if terms is not None and terms < len(keys):
            chosen = sorted(rng.choice(len(keys), size=terms, replace=False))
            keys = [keys[i] for i in chosen]
        values = rng.standard_normal(len(keys)) + 1j * rng.standard_normal(len(keys))
        return cls(m, n, dict(zip(keys, values / math.sqrt(2))))

    def __rmul__(self, alpha: complex) -> HomPolynomial:
        return HomPolynomial(self.m, self.n, {k: alpha * v for k, v in self.items()})


# Evaluation ---------------------------------------------------------------


def _as_vector(x: Any, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape[-1:] != (n,):
        raise DimensionError(f"expected vectors of length {n}, got shape {x.shape}")
    return x


def eval_polynomial(P: HomPolynomial, x: Any) -> complex | np.ndarray:
    """Evaluate P at x.  A stack of points of shape (..., n) is evaluated pointwise."""
    x = _as_vector(x, P.n)
    idx, vals = P.arrays
    monomials = x[..., idx].prod(axis=-1)
    out = monomials @ vals
    return complex(out) if out.ndim == 0 else out


def _stack_slots(xs: Sequence[Any], m: int, n: int) -> np.ndarray:
    if len(xs) != m:
        raise DimensionError(f"expected {m} vectors, got {len(xs)}")
    arrays = np.broadcast_arrays(*(_as_vector(x, n) for x in xs))
    return np.stack(arrays, axis=-2)


def eval_mform(L: CoeffTensor, xs: Sequence[Any]) -> complex | np.ndarray:
    """Evaluate sum_i c_i x^(1)_{i_1} ... x^(m)_{i_m}; slots may carry batch axes."""
    X = _stack_slots(xs, L.m, L.n)
    idx, vals = L.arrays
    gathered = X[..., np.arange(L.m), idx]
    out = gathered.prod(axis=-1) @ vals
    return complex(out) if out.ndim == 0 else out


def slot_functionals(L: CoeffTensor, xs: Sequence[Any]) -> np.ndarray:
    """Linear functionals induced on each slot with the other slots held fixed.

    Row s of the result is g with L(x^(1), ..., y, ..., x^(m)) = sum_j g_j y_j
    when y sits in slot s.  Leave-one-out products are formed from prefix and
    suffix products, so zero coordinates are handled without division.
    """
    X = _stack_slots(xs, L.m, L.n)
    if X.ndim != 2:
        raise DimensionError("slot_functionals takes unbatched vectors")
    idx, vals = L.arrays
    m = L.m
    out = np.zeros((m, L.n), dtype=complex)
    if len(vals) == 0:
        return out
    gathered = X[np.arange(m), idx]
    ones = np.ones((len(vals), 1), dtype=complex)
    prefix = np.cumprod(np.hstack([ones, gathered[:, :-1]]), axis=1)
    suffix = np.cumprod(np.hstack([ones, gathered[:, :0:-1]]), axis=1)[:, ::-1]
    weights = vals[:, None] * prefix * suffix
    for s in range(m):
        np.add.at(out[s], idx[:, s], weights[:, s])
    return out


def polynomial_gradient(P: HomPolynomial, x: Any) -> np.ndarray:
    """Holomorphic gradient dP/dx_j at x."""
    x = _as_vector(x, P.n)
    return slot_functionals(build_LP(P), [x] * P.m).sum(axis=0)


def build_LP(P: HomPolynomial) -> CoeffTensor:
    """The non-symmetric lift: c_i(L_P) = c_i(P) on nondecreasing i, zero elsewhere."""
    return CoeffTensor(P.m, P.n, dict(P.coeffs))


def diagonal_restriction(L: CoeffTensor) -> HomPolynomial:
    """The polynomial x -> L(x, ..., x), collecting each coefficient onto its sorted key."""
    out: dict[MultiIndex, complex] = {}
    for key, value in L.items():
        k = tuple(sorted(key))
        out[k] = out.get(k, 0j) + value
    return HomPolynomial(L.m, L.n, out)


# Norms --------------------------------------------------------------------


def check_p(p: float) -> float:
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ValueError(f"p must satisfy 1 <= p <= inf, got {p}")
    return p


def lp_norm(x: Any, p: float) -> float:
    p = check_p(p)
    x = np.asarray(x, dtype=complex)
    return float(np.linalg.norm(x.ravel(), ord=p))


def dual_exponent(p: float) -> float:
    p = check_p(p)
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def _matvec(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.matmul(M, v[..., None])[..., 0]


def power_iteration(
    M: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Largest singular value by power iteration on M^H M.

    `M` is a single matrix (r, c) or a stack (batch, r, c).  Returns the
    singular values and unit right witnesses v; each value is recomputed as
    ||M v||, so it is attained by its witness.  Iteration stops per matrix
    once a geometric extrapolation of the remaining error drops below
    `tol` relative to the current value.
    """
    M = np.asarray(M, dtype=complex)
    single = M.ndim == 2
    if single:
        M = M[None]
    if M.ndim != 3:
        raise DimensionError(f"expected a matrix or a stack of matrices, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    batch, _, cols = M.shape
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((batch, cols)) + 1j * rng.standard_normal((batch, cols))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    w = _matvec(M, v)
    sigma = np.linalg.norm(w, axis=1)
    delta = np.full(batch, np.inf)
    active = np.arange(batch)
    Ma, MHa, wa = M, M.conj().transpose(0, 2, 1), w
    for _ in range(max_iter):
        if active.size == 0:
            break
        u = _matvec(MHa, wa)
        norms = np.linalg.norm(u, axis=1)
        moved = norms > 0
        u[moved] /= norms[moved, None]
        u[~moved] = v[active][~moved]
        v[active] = u
        wa = _matvec(Ma, u)
        new = np.linalg.norm(wa, axis=1)
        step = np.abs(new - sigma[active])
        # geometric tail estimate of the remaining error
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.clip(step / delta[active], 0.0, 1.0 - 1e-6)
        tail = step / (1.0 - ratio)
        done = (tail <= tol * new) | ~moved
        sigma[active] = new
        delta[active] = step
        if done.any():
            keep = ~done
            active = active[keep]
            Ma, MHa, wa = Ma[keep], MHa[keep], wa[keep]
    else:
        if active.size:
            raise ConvergenceError(
                f"power iteration did not converge within {max_iter} iterations "
                f"for {active.size} of {batch} matrices"
            )
    sigma = np.linalg.norm(_matvec(M, v), axis=1)
    if single:
        return sigma[0], v[0]
    return sigma, v


def spectral_norm(
    M: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    seed: int = 0,
) -> float:
    """Operator norm of M on l2, via power_iteration."""
    sigma, _ = power_iteration(M, tol=tol, max_iter=max_iter, seed=seed)
    return float(sigma)


# Reports ------------------------------------------------------------------


class Direction(str, Enum):
    LOWER = "certified-lower-bound"
    STATISTICAL = "statistical-mean"
    EXACT = "exact"


@dataclass(frozen=True)
class EstimateReport:
    value: float
    direction: Direction
    method: str
    samples: int = 0
    ci_halfwidth: float = 0.0
    seed: int | None = None
    witness: Any = None
    details: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.ci_halfwidth >= 0:
            raise ValueError("ci_halfwidth must be nonnegative")

    @property
    def lower(self) -> float:
        return self.value - self.ci_halfwidth

    @property
    def upper(self) -> float:
        return self.value + self.ci_halfwidth

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "direction": self.direction.value,
            "method": self.method,
            "samples": self.samples,
            "ci_halfwidth": self.ci_halfwidth,
            "seed": self.seed,
            "witness": to_jsonable(self.witness),
            "details": to_jsonable(dict(self.details)),
        }


def to_jsonable(obj: Any) -> Any:
    """Convert numpy arrays and complex numbers into JSON-compatible structures."""
    if obj is None or isinstance(obj, (bool, str, int)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
