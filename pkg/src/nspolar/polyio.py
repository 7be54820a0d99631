"""Polynomial text format: a JSON list of {"index": [j1, ..., jm], "re": x, "im": y}.

Indices are 1-based and nondecreasing.  Floats are written with repr, so
any double-precision coefficient survives a dump/load round trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import DimensionError, HomPolynomial, is_nondecreasing


def polynomial_from_records(records: list[dict], n: int | None = None) -> HomPolynomial:
    if not isinstance(records, list) or not records:
        raise ValueError("polynomial must be a non-empty list of records")
    coeffs = {}
    arity = None
    for rec in records:
        try:
            index = tuple(int(j) for j in rec["index"])
            value = complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad polynomial record {rec!r}") from exc
        if arity is None:
            arity = len(index)
        if len(index) != arity:
            raise DimensionError(f"record {rec!r} has degree {len(index)}, expected {arity}")
        if not is_nondecreasing(index):
            raise DimensionError(f"record index {list(index)} is not nondecreasing")
        coeffs[index] = coeffs.get(index, 0j) + value
    dim = max(max(k) for k in coeffs)
    if n is not None:
        if n < dim:
            raise DimensionError(f"n={n} is smaller than the largest index {dim}")
        dim = n
    return HomPolynomial(arity, dim, coeffs)


def polynomial_to_records(P: HomPolynomial) -> list[dict]:
    return [{"index": list(k), "re": v.real, "im": v.imag} for k, v in P.items()]


def loads(text: str, n: int | None = None) -> HomPolynomial:
    return polynomial_from_records(json.loads(text), n)


def dumps(P: HomPolynomial) -> str:
    return json.dumps(polynomial_to_records(P))


def load(path: str | Path, n: int | None = None) -> HomPolynomial:
    return loads(Path(path).read_text(), n)
