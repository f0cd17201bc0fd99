"""Command-line entry point.

Subcommands: simulate, compare, theory, hl, oracle. Experiment settings
come from flags or a TOML file (``--config``); flags win. Reports are JSON
with sorted keys, so two runs with the same configuration and seed produce
identical bytes apart from the ``timing`` block, whatever ``--threads`` is.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import __version__
from . import hall_littlewood as hl
from . import oracle, theory
from .groups import DEFAULT_MAX_HOMS, DEFAULT_MAX_ORBIT, BoundsExceeded, FlagClass
from .linalg import is_prime
from .partitions import Partition
from .sampler import (
    MODES,
    Bounds,
    DegenerateDistribution,
    Experiment,
    PrecisionPolicy,
    moment_estimates,
    parse_distribution,
    run_experiment,
)
from .stats import OTHER, Histogram, chi_square_report, tv_between, tv_distance, wilson_interval

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DEGENERATE = 2
EXIT_BOUNDS = 3
EXIT_FAIL = 4

SCHEMA_VERSION = 1
SEED_ENV = "COKFLAG_SEED"


class ConfigError(ValueError):
    pass


# -- configuration ---------------------------------------------------------

def parse_partition(text) -> Partition:
    """'2,1', '[2,1]', '' or '0' (trivial), or a list of ints."""
    if isinstance(text, Partition):
        return text
    if isinstance(text, (list, tuple)):
        return Partition(text)
    if isinstance(text, int):
        return Partition([text])
    body = str(text).strip().strip("[]()").strip()
    if not body:
        return Partition()
    try:
        return Partition(int(x) for x in body.split(",") if x.strip())
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad partition {text!r}") from e


def _int_list(text) -> tuple[int, ...]:
    if isinstance(text, int):
        return (text,)
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    try:
        return tuple(int(x) for x in str(text).split(",") if x.strip())
    except ValueError as e:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from e


@dataclass
class ExperimentConfig:
    """Everything a simulate/compare run depends on."""

    command: str = "simulate"
    mode: str = "flag"
    primes: tuple = (2,)
    n: int = 20
    k: int = 1
    samples: int = 1000
    dist: str = "uniform:0..1"
    dist2: str | None = None
    seed: int = 0
    n_start: int = 8
    n_factor: int = 2
    n_max: int = 64
    max_order: int = 4096
    max_orbit: int = DEFAULT_MAX_ORBIT
    max_homs: int = DEFAULT_MAX_HOMS
    given: tuple | None = None
    pairs: tuple = ((1, 1), (1, 2))
    law: str = "limit"
    table_max_order: int = 16
    epsilon: str = "1/10000"
    moment_max_order: int = 4
    tv_threshold: float | None = None
    cell_threshold: float | None = None
    cross_threshold: float | None = None
    moment_tolerance: float = 0.05
    max_exclusion_rate: float = 1e-3
    threads: int = 1
    output: str | None = None
    emit_samples: str | None = None
    csv: str | None = None
    timing: bool = True

    # fields that do not change results
    _NOT_IDENTITY = ("threads", "output", "emit_samples", "csv", "timing")

    def __post_init__(self):
        self.primes = _int_list(self.primes)
        if self.given is not None:
            if len(self.given) != 2:
                raise ConfigError("--given takes two partitions H K")
            self.given = tuple(parse_partition(x) for x in self.given)
        self.pairs = tuple(_int_list(x) for x in self.pairs)
        if any(len(x) != 2 for x in self.pairs):
            raise ConfigError("--pairs entries must be a,b")
        for name in ("n", "k", "samples", "seed", "n_start", "n_factor", "n_max", "max_order",
                     "max_orbit", "max_homs", "table_max_order", "moment_max_order", "threads"):
            setattr(self, name, int(getattr(self, name)))
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if self.law not in ("limit", "hl-finite"):
            raise ConfigError("law must be 'limit' or 'hl-finite'")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if not self.primes or not all(is_prime(p) for p in self.primes):
            raise ConfigError(f"not a list of primes: {self.primes}")
        try:
            Fraction(self.epsilon)
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"bad epsilon {self.epsilon!r}") from e

    def identity(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.name in self._NOT_IDENTITY or f.name.startswith("_"):
                continue
            v = getattr(self, f.name)
            if f.name == "given" and v is not None:
                v = [list(x) for x in v]
            elif f.name in ("primes",):
                v = list(v)
            elif f.name == "pairs":
                v = [list(x) for x in v]
            out[f.name] = v
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def policy(self) -> PrecisionPolicy:
        return PrecisionPolicy(self.n_start, self.n_factor, self.n_max)

    def bounds(self) -> Bounds:
        return Bounds(self.max_order, self.max_orbit, self.max_homs)

    def experiment(self, dist_text: str, stream: int, emit: bool = False) -> Experiment:
        dist = parse_distribution(dist_text, self.primes[0])
        condition = self.given if self.mode == "convolution" else None
        try:
            return Experiment(self.mode, dist, self.n, self.k, self.primes, self.samples, self.seed,
                              self.policy(), self.bounds(), condition, self.moment_max_order, stream, emit)
        except ValueError as e:
            raise ConfigError(str(e)) from e


_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def load_config(command: str, args: dict, path: str | None) -> ExperimentConfig:
    """Defaults, then the TOML file, then explicit flags."""
    values: dict[str, Any] = {}
    if path:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        unknown = set(data) - _FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(data)
    if "seed" not in values and "seed" not in args and os.environ.get(SEED_ENV):
        try:
            values["seed"] = int(os.environ[SEED_ENV])
        except ValueError as e:
            raise ConfigError(f"{SEED_ENV} must be an integer") from e
    values.update(args)
    values["command"] = command
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e


# -- keys and serialization ------------------------------------------------

def key_str(key) -> str:
    if isinstance(key, Partition):
        return json.dumps(list(key), separators=(",", ":"))
    if isinstance(key, FlagClass):
        return key.key()
    if isinstance(key, tuple):
        return "(" + ",".join(key_str(x) for x in key) + ")"
    return str(key)


def frac_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def histogram_json(h: Histogram) -> dict:
    return {key_str(k): v for k, v in sorted(((k, v) for k, v in h.counts.items()), key=lambda kv: key_str(kv[0]))}


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _base_report(cfg: ExperimentConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": cfg.command,
        "config": cfg.identity(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
    }


def _run_block(cfg: ExperimentConfig, dist_text: str, stream: int, emit: bool):
    exp = cfg.experiment(dist_text, stream, emit)
    res = run_experiment(exp, cfg.threads)
    block = {
        "dist": dist_text,
        "stream": stream,
        "samples": cfg.samples,
        "excluded": res.histogram.excluded,
        "skipped": res.skipped,
        "histogram": histogram_json(res.histogram),
    }
    if cfg.mode == "moment":
        block["moments"] = {
            key_str(fc): {"mean": est.mean, "stderr": est.stderr, "samples": est.samples}
            for fc, est in sorted(moment_estimates(res).items(), key=lambda kv: key_str(kv[0]))
        }
    return res, block


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_jsonl(path: str, records: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n")


def _finish(cfg: ExperimentConfig, report: dict, started: float) -> None:
    if cfg.timing:
        report["timing"] = {"seconds": round(time.perf_counter() - started, 3), "threads": cfg.threads}
    _write(cfg.output, dumps(report))


# -- simulate --------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig) -> int:
    started = time.perf_counter()
    res, block = _run_block(cfg, cfg.dist, 0, bool(cfg.emit_samples))
    report = _base_report(cfg)
    report.update({k: v for k, v in block.items() if k not in ("dist", "stream")})
    if cfg.emit_samples:
        _emit_jsonl(cfg.emit_samples, res.records)
    if cfg.csv:
        rows = [[k, v] for k, v in block["histogram"].items()]
        _write(cfg.csv, _csv(["key", "count"], rows))
    _finish(cfg, report, started)
    return EXIT_OK


# -- compare ---------------------------------------------------------------

@dataclass
class Law:
    """Theoretical masses for one conditioning event."""

    masses: dict
    other: Fraction
    label: str = "all"


@dataclass
class Comparison:
    laws: list[Law]
    # maps a raw histogram to conditional histograms keyed by Law.label
    split: Callable[[Histogram], dict]
    thresholds: dict = field(default_factory=dict)


def _default_thresholds(cfg: ExperimentConfig) -> dict:
    if cfg.mode == "flag" and cfg.k == 1:
        tv, cell = 0.015, 0.01
    elif cfg.mode == "flag":
        tv, cell = 0.02, 0.01
    else:
        tv, cell = 0.02, 0.02
    return {
        "tv": tv if cfg.tv_threshold is None else cfg.tv_threshold,
        "cell": cell if cfg.cell_threshold is None else cfg.cell_threshold,
        "cross": 0.02 if cfg.cross_threshold is None else cfg.cross_threshold,
    }


def _product_law(tables: Sequence[theory.TruncatedLaw]) -> Law:
    masses = {(): Fraction(1)}
    for t in tables:
        masses = {a + (k,): v * w for a, v in masses.items() for k, w in t.masses.items()}
    return Law(masses, 1 - sum(masses.values(), Fraction(0)))


def _flag_comparison(cfg: ExperimentConfig) -> Comparison:
    if len(cfg.primes) == 1 and cfg.k == 1:
        t = theory.cohen_lenstra_table(cfg.primes[0], Fraction(cfg.epsilon))
        law = Law(t.masses, t.other)
    elif len(cfg.primes) == 1:
        t = theory.flag_law_table(cfg.primes[0], cfg.k, cfg.table_max_order)
        law = Law(t.masses, t.other)
    else:
        law = _product_law([theory.flag_law_table(p, cfg.k, cfg.table_max_order) for p in cfg.primes])
    return Comparison([law], lambda h: {"all": h})


def _corank_comparison(cfg: ExperimentConfig) -> Comparison:
    p = cfg.primes[0]
    laws = []
    for a, b in cfg.pairs:
        masses = {c: theory.corank_conditional(p, a, b, c) for c in range(max(a, b), a + b + 1)}
        laws.append(Law(masses, Fraction(0), f"a={a},b={b}"))

    def split(h: Histogram) -> dict:
        out = {law.label: Histogram(schema="corank") for law in laws}
        for (a, b, c), v in h.counts.items():
            label = f"a={a},b={b}"
            if label in out:
                out[label].add(c, v)
        return out

    return Comparison(laws, split)


def _convolution_comparison(cfg: ExperimentConfig) -> Comparison:
    if cfg.given is None:
        raise ConfigError("convolution mode needs --given H K")
    H, K = cfg.given
    p = cfg.primes[0]
    if cfg.law == "limit":
        masses = dict(theory.convolution_table(p, H, K))
    else:
        if len(H) > cfg.n or len(K) > cfg.n:
            raise ConfigError("hl-finite law needs H and K with at most n parts")
        masses = {nu: v for nu, v in hl.normalized_constants(H, K, p, cfg.n).items() if v}
    label = f"H={key_str(H)},K={key_str(K)}"
    law = Law(masses, Fraction(0), label)

    def split(h: Histogram) -> dict:
        out = Histogram(schema="convolution")
        for (_, _, G), v in h.counts.items():
            out.add(G, v)
        return {label: out}

    return Comparison([law], split)


def _analyse(law: Law, h: Histogram, thresholds: dict) -> tuple[dict, list]:
    """Per-law metrics and the threshold checks they feed."""
    n = h.included
    tv = tv_distance(h, law.masses, law.other)
    chi = chi_square_report(h, law.masses)
    cells = []
    checks = []
    keys = sorted(law.masses, key=key_str)
    for key in keys:
        obs = h.counts.get(key, 0)
        emp = obs / n if n else 0.0
        lo, hi = wilson_interval(obs, n)
        cells.append({
            "key": key_str(key), "count": obs, "empirical": emp,
            "theory": frac_str(law.masses[key]), "theory_decimal": float(law.masses[key]),
            "diff": emp - float(law.masses[key]), "ci99": [lo, hi],
        })
    other_obs = sum(v for k, v in h.counts.items() if k not in law.masses)
    if law.other or other_obs:
        lo, hi = wilson_interval(other_obs, n)
        emp = other_obs / n if n else 0.0
        cells.append({
            "key": OTHER, "count": other_obs, "empirical": emp,
            "theory": frac_str(law.other), "theory_decimal": float(law.other),
            "diff": emp - float(law.other), "ci99": [lo, hi],
        })
    worst = max((abs(c["diff"]) for c in cells), default=0.0)
    block = {
        "condition": law.label,
        "included": n,
        "tv": tv,
        "chi_square": dataclasses.asdict(chi),
        "max_cell_diff": worst,
        "cells": cells,
    }
    if n == 0:
        checks.append({"name": f"{law.label}: samples", "value": 0, "threshold": 1, "pass": False})
    else:
        checks.append({"name": f"{law.label}: tv", "value": tv, "threshold": thresholds["tv"],
                       "pass": tv <= thresholds["tv"]})
        checks.append({"name": f"{law.label}: max cell diff", "value": worst, "threshold": thresholds["cell"],
                       "pass": worst <= thresholds["cell"]})
    return block, checks


def _exclusion_check(cfg: ExperimentConfig, label: str, block: dict) -> dict:
    rate = block["excluded"] / cfg.samples if cfg.samples else 0.0
    return {"name": f"{label}: exclusion rate", "value": rate, "threshold": cfg.max_exclusion_rate,
            "pass": rate <= cfg.max_exclusion_rate}


def cmd_compare(cfg: ExperimentConfig) -> int:
    started = time.perf_counter()
    report = _base_report(cfg)
    thresholds = _default_thresholds(cfg)
    dists = [cfg.dist] + ([cfg.dist2] if cfg.dist2 else [])
    runs = []
    results = []
    checks = []

    if cfg.mode == "moment":
        for stream, d in enumerate(dists):
            res, block = _run_block(cfg, d, stream, bool(cfg.emit_samples) and stream == 0)
            results.append(res)
            for key, m in block["moments"].items():
                dev = abs(m["mean"] - 1) if m["samples"] else float("inf")
                checks.append({"name": f"dist{stream + 1} moment {key}", "value": m["mean"],
                               "stderr": m["stderr"], "threshold": cfg.moment_tolerance,
                               "pass": dev <= cfg.moment_tolerance})
            checks.append(_exclusion_check(cfg, f"dist{stream + 1}", block))
            runs.append(block)
        report["theory"] = {"moment": "1"}
    else:
        builders = {"flag": _flag_comparison, "corank": _corank_comparison, "convolution": _convolution_comparison}
        comp = builders[cfg.mode](cfg)
        report["theory"] = {
            law.label: dict(sorted([(key_str(k), frac_str(v)) for k, v in law.masses.items()]) + [(OTHER, frac_str(law.other))])
            for law in comp.laws
        }
        for stream, d in enumerate(dists):
            res, block = _run_block(cfg, d, stream, bool(cfg.emit_samples) and stream == 0)
            results.append(res)
            parts = comp.split(res.histogram)
            block["analysis"] = []
            for law in comp.laws:
                a, c = _analyse(law, parts[law.label], thresholds)
                block["analysis"].append(a)
                checks.extend({**x, "name": f"dist{stream + 1} {x['name']}"} for x in c)
            checks.append(_exclusion_check(cfg, f"dist{stream + 1}", block))
            runs.append(block)
        if len(results) == 2:
            p1, p2 = (comp.split(r.histogram) for r in results)
            cross = []
            for law in comp.laws:
                h1, h2 = _bucket(p1[law.label], law), _bucket(p2[law.label], law)
                tv = tv_between(h1, h2)
                cross.append({"condition": law.label, "tv": tv})
                checks.append({"name": f"cross {law.label}: tv", "value": tv, "threshold": thresholds["cross"],
                               "pass": tv <= thresholds["cross"]})
            report["cross"] = cross

    report["runs"] = runs
    report["thresholds"] = thresholds
    report["checks"] = checks
    passed = all(c["pass"] for c in checks)
    report["verdict"] = "PASS" if passed else "FAIL"
    if cfg.emit_samples:
        _emit_jsonl(cfg.emit_samples, results[0].records)
    if cfg.csv:
        rows = []
        for i, block in enumerate(runs):
            for a in block.get("analysis", []):
                for c in a["cells"]:
                    rows.append([f"dist{i + 1}", a["condition"], c["key"], c["count"], c["empirical"],
                                 c["theory"], c["theory_decimal"], c["ci99"][0], c["ci99"][1]])
        _write(cfg.csv, _csv(["run", "condition", "key", "count", "empirical", "exact", "decimal",
                              "ci_low", "ci_high"], rows))
    _finish(cfg, report, started)
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}: {c['value']:.6g} (threshold {c['threshold']})",
              file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def _bucket(h: Histogram, law: Law) -> Histogram:
    """Collapse keys outside the retained law into the other bucket."""
    out = Histogram(schema=h.schema)
    for k, v in h.counts.items():
        out.add(k if k in law.masses else OTHER, v)
    return out


# -- theory and hl tables --------------------------------------------------

def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _table_rows(items) -> list[list]:
    return [[q, frac_str(v), f"{float(v):.12g}"] for q, v in items]


def theory_rows(args) -> list[list]:
    table = args.table
    p = args.p
    if table is None:
        return []
    if not is_prime(p):
        raise ConfigError(f"{p} is not prime")
    if table == "cl":
        t = theory.cohen_lenstra_table(p, Fraction(args.epsilon))
        items = [(key_str(k), v) for k, v in t.masses.items()] + [(OTHER, t.other)]
    elif table == "flag":
        t = theory.flag_law_table(p, args.k, args.max_order)
        items = [(key_str(k), v) for k, v in t.masses.items()] + [(OTHER, t.other)]
    elif table == "corank":
        items = [(f"a={a},b={b},c={c}", v) for a, b, c, v in theory.corank_table(p, args.max_ab)]
    elif table == "convolution":
        H, K = parse_partition(args.H), parse_partition(args.K)
        items = [(f"H={key_str(H)},K={key_str(K)},G={key_str(G)}", v) for G, v in theory.convolution_table(p, H, K)]
    else:
        raise ConfigError(f"unknown table {table!r}")
    return _table_rows(items)


def cmd_theory(args) -> int:
    rows = theory_rows(args)
    if args.json:
        text = dumps({"schema_version": SCHEMA_VERSION, "version": __version__, "table": args.table,
                      "rows": [{"query": q, "exact": e, "decimal": d} for q, e, d in rows]})
    else:
        text = _csv(["query", "exact", "decimal"], rows)
    _write(args.output, text)
    return EXIT_OK


def hl_rows(args) -> list[list]:
    if not is_prime(args.p):
        raise ConfigError(f"{args.p} is not prime")
    if args.max_total is not None:
        pairs = list(oracle._pairs(args.max_total))
    else:
        pairs = [(parse_partition(args.lam), parse_partition(args.mu))]
    rows = []
    for lam, mu in pairs:
        if args.n is None:
            vals = hl.hl_limit_constants(lam, mu, args.p, max_vars=args.max_vars).values
            note = "limit"
        else:
            if len(lam) > args.n or len(mu) > args.n:
                continue
            vals = hl.normalized_constants(lam, mu, args.p, args.n, args.max_vars)
            note = f"n={args.n}"
        for nu, v in sorted(vals.items(), key=lambda kv: key_str(kv[0])):
            if v:
                rows.append([f"lam={key_str(lam)},mu={key_str(mu)},nu={key_str(nu)},{note}", frac_str(v), f"{float(v):.12g}"])
    return rows


def cmd_hl(args) -> int:
    _write(args.output, _csv(["query", "exact", "decimal"], hl_rows(args)))
    return EXIT_OK


def cmd_oracle(args) -> int:
    results = oracle.run_suites(args.max_order, args.snf_count, args.inject_fault)
    if args.suite:
        results = [r for r in results if r.name.split("-")[0] in args.suite or r.name in args.suite]
    failed = False
    for r in results:
        print(r.line())
        if not r.passed:
            failed = True
            for detail in r.failures[: args.dump]:
                print("  counterexample: " + json.dumps(detail, sort_keys=True, default=str))
    return EXIT_FAIL if failed else EXIT_OK


# -- argument parsing ------------------------------------------------------

def _experiment_flags(sp: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    sp.add_argument("--config", help="TOML file with experiment settings; flags override it")
    sp.add_argument("--mode", choices=MODES, default=S)
    sp.add_argument("--p", "--primes", dest="primes", default=S, help="prime or comma-separated primes")
    sp.add_argument("--n", type=int, default=S, help="matrix size")
    sp.add_argument("--k", type=int, default=S, help="number of matrices in the product")
    sp.add_argument("--samples", type=int, default=S)
    sp.add_argument("--dist", default=S, help="uniform:lo..hi, const:v, finite:v1,v2:w1,w2, haar:N or haar:p:N")
    sp.add_argument("--seed", type=int, default=S, help=f"default: ${SEED_ENV} or 0")
    sp.add_argument("--n-start", dest="n_start", type=int, default=S, help="initial p-adic precision")
    sp.add_argument("--n-factor", dest="n_factor", type=int, default=S)
    sp.add_argument("--n-max", dest="n_max", type=int, default=S)
    sp.add_argument("--max-order", dest="max_order", type=int, default=S, help="largest group canonicalized")
    sp.add_argument("--max-orbit", dest="max_orbit", type=int, default=S)
    sp.add_argument("--max-homs", dest="max_homs", type=int, default=S)
    sp.add_argument("--given", nargs=2, metavar=("H", "K"), default=S, help="convolution condition, e.g. 1 1")
    sp.add_argument("--moment-max-order", dest="moment_max_order", type=int, default=S)
    sp.add_argument("--threads", type=int, default=S)
    sp.add_argument("--output", "-o", default=S, help="report path (default stdout)")
    sp.add_argument("--emit-samples", dest="emit_samples", default=S, help="JSON-lines sample records")
    sp.add_argument("--csv", default=S, help="CSV table path")
    sp.add_argument("--no-timing", dest="timing", action="store_false", default=S)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cokflag", description="Random matrix product cokernel flags.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="sample flags and write a histogram report")
    _experiment_flags(sp)

    cp = sub.add_parser("compare", help="simulate and test against the limiting law")
    _experiment_flags(cp)
    S = argparse.SUPPRESS
    cp.add_argument("--dist2", default=S, help="second distribution for the universality cross-check")
    cp.add_argument("--pairs", nargs="+", default=S, help="corank conditions a,b (default 1,1 1,2)")
    cp.add_argument("--law", choices=("limit", "hl-finite"), default=S,
                    help="convolution law: n -> infinity, or finite n from Hall-Littlewood constants")
    cp.add_argument("--table-max-order", dest="table_max_order", type=int, default=S)
    cp.add_argument("--epsilon", default=S, help="smallest retained Cohen-Lenstra mass")
    cp.add_argument("--tv-threshold", dest="tv_threshold", type=float, default=S)
    cp.add_argument("--cell-threshold", dest="cell_threshold", type=float, default=S)
    cp.add_argument("--cross-threshold", dest="cross_threshold", type=float, default=S)
    cp.add_argument("--moment-tolerance", dest="moment_tolerance", type=float, default=S)
    cp.add_argument("--max-exclusion-rate", dest="max_exclusion_rate", type=float, default=S)

    tp = sub.add_parser("theory", help="exact tables as CSV")
    tp.add_argument("table", nargs="?", choices=("cl", "flag", "corank", "convolution"))
    tp.add_argument("--p", type=int, default=2)
    tp.add_argument("--k", type=int, default=2)
    tp.add_argument("--max-order", dest="max_order", type=int, default=16)
    tp.add_argument("--max-ab", dest="max_ab", type=int, default=2)
    tp.add_argument("--epsilon", default="1/10000")
    tp.add_argument("--H", default="1")
    tp.add_argument("--K", default="1")
    tp.add_argument("--json", action="store_true")
    tp.add_argument("--output", "-o")

    hp = sub.add_parser("hl", help="normalized Hall-Littlewood structure constants as CSV")
    hp.add_argument("--lam", default="1")
    hp.add_argument("--mu", default="1")
    hp.add_argument("--max-total", dest="max_total", type=int, help="all pairs with |lam| + |mu| up to this")
    hp.add_argument("--p", type=int, default=2)
    hp.add_argument("--n", type=int, help="number of variables (omit for the n -> infinity limit)")
    hp.add_argument("--max-vars", dest="max_vars", type=int, default=hl.DEFAULT_MAX_VARS)
    hp.add_argument("--output", "-o")

    op = sub.add_parser("oracle", help="exact cross-check suites")
    op.add_argument("--max-order", dest="max_order", type=int, default=64)
    op.add_argument("--snf-count", dest="snf_count", type=int, default=2000)
    op.add_argument("--suite", nargs="+", help="restrict to these suites")
    op.add_argument("--inject-fault", dest="inject_fault", action="store_true",
                    help="perturb one closed-form value to exercise the failure path")
    op.add_argument("--dump", type=int, default=5, help="counterexamples printed per failing suite")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        if args.command in ("simulate", "compare"):
            flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
            cfg = load_config(args.command, flags, getattr(args, "config", None))
            return cmd_simulate(cfg) if args.command == "simulate" else cmd_compare(cfg)
        if args.command == "theory":
            return cmd_theory(args)
        if args.command == "hl":
            return cmd_hl(args)
        return cmd_oracle(args)
    except DegenerateDistribution as e:
        print(f"error: degenerate distribution: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (BoundsExceeded, hl.BudgetExceeded) as e:
        print(f"error: bounds exceeded: {e}", file=sys.stderr)
        return EXIT_BOUNDS
    except (ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
