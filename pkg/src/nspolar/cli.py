"""Command line experiment runner.

    nspolar verify        exact identity suite (exit 1 on the first failure)
    nspolar bounds        lower statistics and closed-form upper bounds on a grid
    nspolar shuffle-table Fisher-Yates laws and the shuffled coefficient tables
    nspolar estimate-norm sup |P| and sup |L_P| over an l_p ball
    nspolar bourgain      torus integrals for Bourgain's operator-valued chaos

Every JSON report has the shape {schema_version, config_echo, results, timing}
and validates against schemas/report-1.json.  Timing is null unless --timing
is given, so equal configs produce byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import importlib.resources
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import polyio
from .bounds import (
    CHAIN_MAX_M,
    CHAIN_MAX_N,
    bourgain_integrals,
    bourgain_lower_bound,
    chain_check,
    product_poly_ratio,
    upper_bound_certificate,
)
from .core import HomPolynomial, build_LP, to_jsonable
from .norms import BallSpec, sup_mform_ball, sup_poly_ball
from .shuffle import MAX_FACTORIAL_M, RECURSION_MAX_M, RECURSION_MAX_N, fy_distribution, shuffle
from .verify import verify_suite

SCHEMA_VERSION = "nspolar-report/1"
DEFAULT_SEED = 20190101
THREADS_ENV = "NSPOLAR_THREADS"
SHUFFLE_TABLE_MAX_M = 7


class ConfigError(ValueError):
    """Invalid configuration, detected before any work starts."""


@dataclass
class ExperimentConfig:
    subcommand: str
    m: list[int] = field(default_factory=lambda: [4])
    n: list[int] = field(default_factory=lambda: [3])
    p: list[float] = field(default_factory=lambda: [math.inf])
    samples: int = 20_000
    restarts: int = 32
    seed: int = DEFAULT_SEED
    threads: int = 1
    out: str | None = None
    format: str = "json"
    poly: str | None = None
    timing: bool = False

    def echo(self) -> dict[str, Any]:
        data = asdict(self)
        del data["out"], data["timing"]
        return to_jsonable(data)


def _load_poly(cfg: ExperimentConfig, m: int, n: int) -> HomPolynomial:
    if cfg.poly:
        return polyio.load(cfg.poly)
    return HomPolynomial.random(m, n, np.random.default_rng(cfg.seed))


def validate(cfg: ExperimentConfig) -> None:
    if cfg.seed < 0:
        raise ConfigError("--seed must be nonnegative")
    if cfg.threads < 1:
        raise ConfigError("--threads must be >= 1")
    if cfg.samples < 2:
        raise ConfigError("--samples must be >= 2")
    if cfg.restarts < 1:
        raise ConfigError("--restarts must be >= 1")
    for p in cfg.p:
        if math.isnan(p) or p < 1:
            raise ConfigError(f"--p must satisfy 1 <= p <= inf, got {p}")
    if any(m < 1 for m in cfg.m) or any(n < 1 for n in cfg.n):
        raise ConfigError("--m and --n must be >= 1")
    if cfg.poly and not Path(cfg.poly).is_file():
        raise ConfigError(f"polynomial file {cfg.poly} not found")

    sub = cfg.subcommand
    if sub in ("verify", "shuffle-table"):
        m, n = _single_shape(cfg)
        if m > MAX_FACTORIAL_M:
            raise ConfigError(f"m={m} exceeds the m <= {MAX_FACTORIAL_M} factorial guard")
        if sub == "verify" and (m > RECURSION_MAX_M or n > RECURSION_MAX_N):
            raise ConfigError(f"verify is limited to m <= {RECURSION_MAX_M}, n <= {RECURSION_MAX_N}")
        if sub == "shuffle-table" and m > SHUFFLE_TABLE_MAX_M:
            raise ConfigError(f"shuffle-table is limited to m <= {SHUFFLE_TABLE_MAX_M}")
    if sub == "bourgain":
        for m in cfg.m:
            if m % 2:
                raise ConfigError(f"bourgain needs even m, got {m}")
            for n in cfg.n:
                if (2 * n) // m < 2:
                    raise ConfigError(f"block size floor(2n/m) must be >= 2, got m={m}, n={n}")
    if sub == "estimate-norm":
        _single_shape(cfg)


def _single_shape(cfg: ExperimentConfig) -> tuple[int, int]:
    if cfg.poly:
        P = polyio.load(cfg.poly)
        return P.m, P.n
    if len(cfg.m) != 1 or len(cfg.n) != 1:
        raise ConfigError(f"{cfg.subcommand} takes a single --m and --n")
    return cfg.m[0], cfg.n[0]


def load_schema() -> dict:
    """The JSON schema every report validates against."""
    text = importlib.resources.files("nspolar").joinpath("schemas/report-1.json").read_text()
    return json.loads(text)


# Subcommands ----------------------------------------------------------------


def cmd_verify(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    m, n = _single_shape(cfg)
    P = _load_poly(cfg, m, n)
    checks = verify_suite(P, seed=cfg.seed)
    results = [c.to_dict() for c in checks]
    return results, 0 if all(c.passed for c in checks) else 1


def cmd_bounds(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    rows = []
    for m in cfg.m:
        for n in cfg.n:
            upper = upper_bound_certificate(m, n)
            for p in cfg.p:
                row: dict[str, Any] = {
                    "m": m, "n": n, "p": p,
                    "upper": upper.value,
                    "upper_log": upper.log_value,
                    "upper_shape": upper.shape,
                    "reference": "sup|L_P| <= 2^{m-1} e^m m! log2(2n)^{m-1} sup|P|",
                }
                if math.isinf(p):
                    if m % 2 == 0 and (2 * n) // m >= 2:
                        stat = bourgain_lower_bound(m, n, cfg.samples, cfg.seed, cfg.threads)
                        row["lower"] = stat.value
                        row["lower_ci"] = stat.ci_halfwidth
                        row["lower_kind"] = "bourgain-ratio-statistic"
                        row["lower_target"] = stat.details["target"]
                    else:
                        row["lower"] = None
                        row["lower_kind"] = "none (needs even m and floor(2n/m) >= 2)"
                else:
                    stat = product_poly_ratio(m, p, restarts=cfg.restarts, seed=cfg.seed)
                    row["lower"] = stat.value
                    row["lower_ci"] = 0.0
                    row["lower_kind"] = "product-polynomial m^{m/p}"
                if m <= CHAIN_MAX_M and n <= CHAIN_MAX_N:
                    P = HomPolynomial.random(m, n, np.random.default_rng([cfg.seed, m, n]))
                    report = chain_check(P, BallSpec(p), restarts=cfg.restarts, seed=cfg.seed,
                                         threads=cfg.threads)
                    row["chain_passed"] = report.passed
                    row["chain_ratio"] = report.lower.value
                else:
                    row["chain_passed"] = None
                rows.append(row)
    return rows, 0


def cmd_shuffle_table(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    m, n = _single_shape(cfg)
    P = polyio.load(cfg.poly) if cfg.poly else HomPolynomial.product(m, max(n, m))
    results: list[dict] = []
    for k in range(1, P.m):
        law = fy_distribution(P.m, k)
        results.append({
            "table": "distribution",
            "k": k,
            "rows": [{"permutation": list(s.images), "probability": str(p), "value": float(p)}
                     for s, p in law.items()],
        })
    LP = build_LP(P)
    for k in range(P.m):
        S = shuffle(LP, k)
        results.append({
            "table": "coefficients",
            "k": k,
            "rows": [{"index": list(i), "re": c.real, "im": c.imag} for i, c in S.items()],
        })
    return results, 0


def cmd_estimate_norm(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    m, n = _single_shape(cfg)
    P = _load_poly(cfg, m, n)
    results = []
    for p in cfg.p:
        ball = BallSpec(p)
        poly = sup_poly_ball(P, ball, restarts=cfg.restarts, seed=cfg.seed, threads=cfg.threads)
        form = sup_mform_ball(build_LP(P), ball, restarts=cfg.restarts, seed=cfg.seed,
                              threads=cfg.threads)
        results.append({
            "p": p,
            "sup_P": poly.to_dict(),
            "sup_LP": form.to_dict(),
            "ratio": form.value / poly.value if poly.value > 0 else None,
        })
    return results, 0


def cmd_bourgain(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    results = []
    for m in cfg.m:
        for n in cfg.n:
            if m == 2:
                integrals = bourgain_integrals(n, cfg.samples, cfg.seed, cfg.threads)
                results.append({
                    "m": 2, "n": n,
                    "I1": integrals.i1.to_dict(),
                    "I2": integrals.i2.to_dict(),
                    "I1_le_pi": integrals.i1_ok,
                    "I2_ge_log_n_minus_pi": integrals.i2_ok,
                    "ratio": integrals.ratio.to_dict(),
                    "target": (math.log(n) - math.pi) / math.pi,
                })
            else:
                stat = bourgain_lower_bound(m, n, cfg.samples, cfg.seed, cfg.threads)
                results.append({"m": m, "n": n, "ratio": stat.to_dict(),
                                "target": stat.details["target"]})
    return results, 0


COMMANDS = {
    "verify": cmd_verify,
    "bounds": cmd_bounds,
    "shuffle-table": cmd_shuffle_table,
    "estimate-norm": cmd_estimate_norm,
    "bourgain": cmd_bourgain,
}


# Output ---------------------------------------------------------------------


def _flatten(obj: Any, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
        return out
    if isinstance(obj, list):
        out[prefix[:-1]] = json.dumps(obj)
        return out
    out[prefix[:-1]] = obj
    return out


def _rows(results: list[dict]) -> list[dict[str, Any]]:
    rows = []
    for res in results:
        if "rows" in res:
            for row in res["rows"]:
                rows.append(_flatten({"table": res["table"], "k": res["k"], **row}))
        else:
            rows.append(_flatten(res))
    return rows


def render(document: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(document, indent=2) + "\n"
    rows = _rows(document["results"])
    columns: list[str] = []
    for row in rows:
        columns += [c for c in row if c not in columns]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    cells = [[("" if row.get(c) is None else str(row.get(c))) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(r[j]) for r in cells]) for j, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def run(cfg: ExperimentConfig) -> tuple[dict, int]:
    validate(cfg)
    start = time.perf_counter()
    results, status = COMMANDS[cfg.subcommand](cfg)
    elapsed = time.perf_counter() - start
    document = {
        "schema_version": SCHEMA_VERSION,
        "config_echo": cfg.echo(),
        "results": to_jsonable(results),
        "timing": {"seconds": elapsed} if cfg.timing else None,
    }
    return document, status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nspolar", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    defaults = {
        "verify": dict(m=[4], n=[3], p=[math.inf]),
        "bounds": dict(m=[2, 3], n=[8], p=[1.0]),
        "shuffle-table": dict(m=[3], n=[3], p=[math.inf]),
        "estimate-norm": dict(m=[3], n=[3], p=[math.inf]),
        "bourgain": dict(m=[2], n=[64], p=[math.inf]),
    }
    for name, d in defaults.items():
        cmd = sub.add_parser(name)
        cmd.add_argument("--m", type=int, nargs="+", default=d["m"])
        cmd.add_argument("--n", type=int, nargs="+", default=d["n"])
        cmd.add_argument("--p", type=float, nargs="+", default=d["p"],
                         help="norm exponents; 'inf' selects the sup norm")
        cmd.add_argument("--samples", type=int, default=10_000 if name != "estimate-norm" else 2)
        cmd.add_argument("--restarts", type=int, default=32)
        cmd.add_argument("--seed", type=int, default=DEFAULT_SEED)
        cmd.add_argument("--threads", type=int, default=None,
                         help=f"worker threads (default ${THREADS_ENV} or 1)")
        cmd.add_argument("--format", choices=["json", "csv", "table"], default="json")
        cmd.add_argument("--out", default=None, help="write the report here instead of stdout")
        cmd.add_argument("--poly", default=None, help="polynomial JSON file")
        cmd.add_argument("--timing", action="store_true", help="record wall-clock time")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads if args.threads is not None else int(os.environ.get(THREADS_ENV, "1"))
    cfg = ExperimentConfig(
        subcommand=args.subcommand, m=args.m, n=args.n, p=args.p, samples=args.samples,
        restarts=args.restarts, seed=args.seed, threads=threads, out=args.out,
        format=args.format, poly=args.poly, timing=args.timing,
    )
    try:
        document, status = run(cfg)
    except ConfigError as exc:
        print(f"nspolar {cfg.subcommand}: {exc}", file=sys.stderr)
        return 2
    text = render(document, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if status:
        failed = [r for r in document["results"] if r.get("passed") is False]
        if failed:
            print(f"nspolar {cfg.subcommand}: {failed[0]['name']} failed at "
                  f"{json.dumps(failed[0]['counterexample'])}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
