"""Partitions, abelian p-group types and their closed-form invariants."""

from __future__ import annotations

import json
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping


class Partition(tuple):
    """Weakly decreasing tuple of positive integers.

    Construction normalizes: parts are sorted in decreasing order and zeros
    are dropped, so equal partitions compare and hash equal. The empty
    partition is the type of the trivial group.

    >>> Partition([1, 3, 0])
    Partition(3, 1)
    """

    __slots__ = ()

    def __new__(cls, parts: Iterable[int] = ()):
        vals = []
        for x in parts:
            if isinstance(x, bool) or int(x) != x:
                raise TypeError(f"partition parts must be integers, got {x!r}")
            x = int(x)
            if x < 0:
                raise ValueError(f"partition parts must be nonnegative, got {x}")
            if x:
                vals.append(x)
        vals.sort(reverse=True)
        return super().__new__(cls, vals)

    def __repr__(self) -> str:
        return f"Partition({', '.join(map(str, self))})"

    @property
    def size(self) -> int:
        return sum(self)

    @property
    def length(self) -> int:
        return len(self)

    def conjugate(self) -> "Partition":
        return conjugate(self)

    def multiplicities(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for x in self:
            out[x] = out.get(x, 0) + 1
        return out

    def dominates(self, other: "Partition") -> bool:
        """True when every partial sum of self is >= that of other (same size)."""
        if self.size != other.size:
            return False
        a = b = 0
        for i in range(max(len(self), len(other))):
            a += self[i] if i < len(self) else 0
            b += other[i] if i < len(other) else 0
            if a < b:
                return False
        return True

    def padded(self, n: int) -> tuple[int, ...]:
        if len(self) > n:
            raise ValueError(f"{self!r} has more than {n} parts")
        return tuple(self) + (0,) * (n - len(self))

    def to_json(self) -> list[int]:
        return list(self)

    @classmethod
    def from_json(cls, data) -> "Partition":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data)


def conjugate(lam: Iterable[int]) -> Partition:
    lam = Partition(lam)
    if not lam:
        return Partition()
    return Partition(sum(1 for x in lam if x >= i) for i in range(1, lam[0] + 1))


def partitions_of(n: int, max_part: int | None = None) -> Iterator[Partition]:
    """All partitions of n in reverse lexicographic order."""
    if max_part is None:
        max_part = n
    if n == 0:
        yield Partition()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions_of(n - first, first):
            yield Partition((first,) + tuple(rest))


def partitions_up_to(n: int) -> Iterator[Partition]:
    for k in range(n + 1):
        yield from partitions_of(k)


class GroupType:
    """Isomorphism type of a finite abelian P-group: one partition per prime.

    Primes carrying the empty partition are dropped, so the trivial group is
    the empty mapping.
    """

    __slots__ = ("_parts",)

    def __init__(self, parts: Mapping[int, Iterable[int]] | None = None):
        clean = {}
        for p, lam in (parts or {}).items():
            lam = Partition(lam)
            if lam:
                clean[int(p)] = lam
        self._parts = dict(sorted(clean.items()))

    def __getitem__(self, p: int) -> Partition:
        return self._parts.get(p, Partition())

    def primes(self) -> tuple[int, ...]:
        return tuple(self._parts)

    def items(self):
        return self._parts.items()

    def order(self) -> int:
        out = 1
        for p, lam in self._parts.items():
            out *= group_order(lam, p)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupType) and self._parts == other._parts

    def __hash__(self) -> int:
        return hash(tuple(self._parts.items()))

    def __repr__(self) -> str:
        return f"GroupType({self._parts!r})"

    def to_json(self) -> dict[str, list[int]]:
        return {str(p): list(lam) for p, lam in self._parts.items()}

    @classmethod
    def from_json(cls, data) -> "GroupType":
        if isinstance(data, str):
            data = json.loads(data)
        return cls({int(p): lam for p, lam in data.items()})


def q_pochhammer(p: int, m: int) -> Fraction:
    """(1/p; 1/p)_m, the product of (1 - p**-i) for i = 1..m."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    out = Fraction(1)
    for i in range(1, m + 1):
        out *= 1 - Fraction(1, p**i)
    return out


def gaussian_binomial(p: int, k: int, l: int) -> Fraction:
    """Gaussian binomial in q = 1/p; zero when l < 0 or l > k."""
    if l < 0 or k < 0 or l > k:
        return Fraction(0)
    return q_pochhammer(p, k) / (q_pochhammer(p, l) * q_pochhammer(p, k - l))


def truncation_depth(p: int, precision) -> int:
    """Smallest I with 2 * p**-I < precision.

    Truncating the infinite product after I factors changes it by a factor
    in [1 - 2p**-I, 1], hence by less than ``precision`` in absolute value.
    """
    precision = Fraction(precision)
    if precision <= 0:
        raise ValueError("precision must be positive")
    depth = 1
    while Fraction(2, p**depth) >= precision:
        depth += 1
    return depth


def cohen_lenstra_constant(p: int, precision=Fraction(1, 10**12)) -> Fraction:
    """Truncation of prod_{i>=1} (1 - p**-i), accurate to ``precision``."""
    return q_pochhammer(p, truncation_depth(p, precision))


def group_order(lam: Iterable[int], p: int) -> int:
    return p ** Partition(lam).size


def aut_order(lam: Iterable[int], p: int) -> int:
    """|Aut(G_lam)| = p**(sum lam'_i**2) * prod_i prod_{j<=m_i} (1 - p**-j)."""
    lam = Partition(lam)
    exponent = sum(c * c for c in conjugate(lam))
    num = 1
    shift = 0
    for mult in lam.multiplicities().values():
        for j in range(1, mult + 1):
            num *= p**j - 1
            shift += j
    # p**exponent * prod (p**j - 1) / p**j
    return p ** (exponent - shift) * num


def alt2_order(lam: Iterable[int], p: int) -> int:
    return p ** sum(c * (c - 1) // 2 for c in conjugate(lam))


@lru_cache(maxsize=None)
def _cl_mass_cache(lam: Partition, p: int) -> Fraction:
    return Fraction(1, aut_order(lam, p))


def inverse_aut(lam: Iterable[int], p: int) -> Fraction:
    """1/|Aut(G_lam)|, memoized."""
    return _cl_mass_cache(Partition(lam), p)
