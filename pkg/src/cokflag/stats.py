"""Histograms and empirical-versus-theoretical comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping

from scipy.special import gammaincc
from scipy.stats import norm

OTHER = "other"
WILSON_Z_99 = float(norm.ppf(0.995))


class SchemaMismatch(ValueError):
    pass


@dataclass
class Histogram:
    counts: dict = field(default_factory=dict)
    excluded: int = 0
    schema: str = ""

    @property
    def total(self) -> int:
        return sum(self.counts.values()) + self.excluded

    @property
    def included(self) -> int:
        return sum(self.counts.values())

    def add(self, key: Hashable, count: int = 1) -> None:
        self.counts[key] = self.counts.get(key, 0) + count

    def exclude(self, count: int = 1) -> None:
        self.excluded += count

    def frequencies(self) -> dict:
        n = self.included
        return {k: c / n for k, c in self.counts.items()} if n else {}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Histogram):
            return NotImplemented
        a = {k: v for k, v in self.counts.items() if v}
        b = {k: v for k, v in other.counts.items() if v}
        return a == b and self.excluded == other.excluded and self.schema == other.schema


def merge(h1: Histogram, h2: Histogram) -> Histogram:
    """Pointwise sum. An empty schema matches anything."""
    if h1.schema and h2.schema and h1.schema != h2.schema:
        raise SchemaMismatch(f"cannot merge {h1.schema!r} with {h2.schema!r}")
    counts = dict(h1.counts)
    for k, v in h2.counts.items():
        counts[k] = counts.get(k, 0) + v
    return Histogram(counts, h1.excluded + h2.excluded, h1.schema or h2.schema)


def tv_distance(empirical: Histogram, theoretical: Mapping, other_mass=None) -> float:
    """Total variation between empirical frequencies and a truncated law.

    Empirical keys outside ``theoretical`` fall into the other bucket, whose
    theoretical mass defaults to 1 - sum(theoretical).
    """
    if other_mass is None:
        other_mass = 1 - sum(Fraction(v) for v in theoretical.values())
    n = empirical.included
    freq = {k: c / n for k, c in empirical.counts.items()} if n else {}
    total = 0.0
    emp_other = 0.0
    for k, f in freq.items():
        if k not in theoretical:
            emp_other += f
    for k, th in theoretical.items():
        total += abs(freq.get(k, 0.0) - float(th))
    total += abs(emp_other - float(other_mass))
    return 0.5 * total


def tv_between(h1: Histogram, h2: Histogram) -> float:
    f1, f2 = h1.frequencies(), h2.frequencies()
    return 0.5 * sum(abs(f1.get(k, 0.0) - f2.get(k, 0.0)) for k in set(f1) | set(f2))


@dataclass(frozen=True)
class ChiSquareReport:
    statistic: float
    dof: int
    p_value: float
    cells: int
    degenerate: bool


def chi_square_report(empirical: Histogram, theoretical: Mapping, min_expected: float = 5.0) -> ChiSquareReport:
    """Pearson goodness of fit, pooling cells with expected count below min_expected.

    Pooled cells and the mass missing from ``theoretical`` form one extra
    cell when it is itself large enough; otherwise it joins the smallest
    retained cell.
    """
    n = empirical.included
    keys = sorted(theoretical, key=repr)
    kept = []
    pooled_obs = sum(c for k, c in empirical.counts.items() if k not in theoretical)
    pooled_exp = n * float(1 - sum(Fraction(v) for v in theoretical.values()))
    for k in keys:
        e = n * float(theoretical[k])
        o = empirical.counts.get(k, 0)
        if e >= min_expected:
            kept.append([o, e])
        else:
            pooled_obs += o
            pooled_exp += e
    if pooled_exp >= min_expected or (pooled_exp > 0 and not kept):
        kept.append([pooled_obs, pooled_exp])
    elif kept:
        j = min(range(len(kept)), key=lambda i: kept[i][1])
        kept[j][0] += pooled_obs
        kept[j][1] += pooled_exp
    if len(kept) < 2:
        return ChiSquareReport(0.0, 0, 1.0, len(kept), True)
    # summing in sorted order makes the statistic independent of cell order
    stat = math.fsum(sorted((o - e) ** 2 / e for o, e in kept))
    dof = len(kept) - 1
    return ChiSquareReport(stat, dof, float(gammaincc(dof / 2, stat / 2)), len(kept), False)


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z_99) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ph = successes / trials
    denom = 1 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def conditional_histogram(
    records: Iterable,
    condition: Callable,
    value: Callable,
    schema: str = "",
) -> dict:
    """Group records by condition(record); count value(record) within each group.

    Either extractor may return None to mark the record as excluded.
    """
    out: dict = {}
    for r in records:
        c = condition(r)
        if c is None:
            continue
        h = out.setdefault(c, Histogram(schema=schema))
        v = value(r)
        if v is None:
            h.exclude()
        else:
            h.add(v)
    return out
