"""Exact limiting laws: flag measures, conditional convolutions, corank laws."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .groups import (
    DEFAULT_MAX_AUT,
    ExplicitGroup,
    FlagClass,
    Subgroup,
    flag_aut_order,
    flag_classes,
    hall_number,
    parse_chain,
)
from .linalg import is_prime
from .partitions import (
    GroupType,
    Partition,
    aut_order,
    cohen_lenstra_constant,
    gaussian_binomial,
    inverse_aut,
    partitions_of,
    q_pochhammer,
)

DEFAULT_PRECISION = Fraction(1, 10**12)


@dataclass(frozen=True)
class FlagMeasureQuery:
    """A flag G_k ->> ... ->> G_1, given per prime by G_nu and its kernel chain.

    Primes of P that carry no data have trivial groups.
    """

    primes: tuple[int, ...]
    k: int
    chains: Mapping[int, tuple[Partition, tuple[Subgroup, ...]]] = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        for p in self.primes:
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
        for p, (nu, chain) in self.chains.items():
            if p not in self.primes:
                raise ValueError(f"prime {p} is not in P")
            if len(chain) != self.k - 1:
                raise ValueError(f"a {self.k}-flag needs {self.k - 1} kernel subgroups, got {len(chain)}")
            for a, b in zip(chain, chain[1:]):
                if not set(a.elements().tolist()) <= set(b.elements().tolist()):
                    raise ValueError("kernel chain is not nested")

    @classmethod
    def single(cls, p: int, nu, chain: Sequence[Subgroup], k: int | None = None) -> "FlagMeasureQuery":
        k = len(chain) + 1 if k is None else k
        return cls((p,), k, {p: (Partition(nu), tuple(chain))})

    @classmethod
    def from_classes(cls, classes: Iterable[FlagClass], k: int, primes: Iterable[int] | None = None) -> "FlagMeasureQuery":
        chains = {}
        for fc in classes:
            G = ExplicitGroup(fc.p, fc.nu)
            chains[fc.p] = (fc.nu, tuple(parse_chain(G, fc.orbit)))
        ps = tuple(sorted(set(primes or ()) | set(chains)))
        return cls(ps, k, chains)


@dataclass(frozen=True)
class FlagMeasure:
    """value = constant * exact; |constant - true constant| <= error / exact."""

    exact: Fraction
    constant: Fraction
    error: Fraction
    aut_orders: Mapping[int, int]

    @property
    def value(self) -> Fraction:
        return self.exact * self.constant

    def __float__(self) -> float:
        return float(self.value)

    def factored(self) -> str:
        auts = " * ".join(f"{a}" for _, a in sorted(self.aut_orders.items())) or "1"
        return f"C^k / ({auts})"


def _constant_power(primes: Sequence[int], k: int, precision) -> tuple[Fraction, Fraction]:
    precision = Fraction(precision)
    value = Fraction(1)
    for p in primes:
        value *= cohen_lenstra_constant(p, precision) ** k
    # each of the k*|P| factors lies in [0, 1] and is off by at most precision
    return value, precision * k * len(primes)


def flag_measure(query: FlagMeasureQuery, precision=DEFAULT_PRECISION, max_aut: int = DEFAULT_MAX_AUT) -> FlagMeasure:
    """Limiting probability of the flag: C^k / |Aut of the flag| over all p in P."""
    auts = {}
    exact = Fraction(1)
    for p in query.primes:
        if p in query.chains:
            nu, chain = query.chains[p]
            G = ExplicitGroup(p, nu)
            a = flag_aut_order(G, list(chain), max_aut) if chain else aut_order(nu, p)
        else:
            a = 1
        auts[p] = a
        exact /= a
    constant, err = _constant_power(query.primes, query.k, precision)
    return FlagMeasure(exact, constant, err * exact, auts)


def _as_type(x, p) -> GroupType:
    if isinstance(x, GroupType):
        return x
    if p is None:
        raise ValueError("a prime is needed for partition arguments")
    return GroupType({p: x})


def conditional_convolution(p, G, H, K) -> Fraction:
    """P(cok(M1 M2) ~ G | cok(M1) ~ H, cok(M2) ~ K) in the limit.

    ``p`` may be a single prime (with G, H, K partitions) or None/an iterable
    of primes with GroupType arguments, in which case the value is the
    product over primes.
    """
    if isinstance(p, int):
        if not any(isinstance(x, GroupType) for x in (G, H, K)):
            G, H, K = Partition(G), Partition(H), Partition(K)
            if G.size != H.size + K.size:
                return Fraction(0)
            h = hall_number(p, G, K, H)
            if not h:
                return Fraction(0)
            return Fraction(aut_order(K, p) * aut_order(H, p), aut_order(G, p)) * h
        G, H, K = (_as_type(x, p) for x in (G, H, K))
    else:
        G, H, K = (_as_type(x, None) for x in (G, H, K))
    primes = set(G.primes()) | set(H.primes()) | set(K.primes())
    out = Fraction(1)
    for q in sorted(primes):
        out *= conditional_convolution(q, G[q], H[q], K[q])
        if not out:
            break
    return out


def corank_conditional(p: int, a: int, b: int, c: int) -> Fraction:
    """Limiting P(corank(M1 M2) = c | corank M1 = a, corank M2 = b) over F_p."""
    if min(a, b, c) < 0:
        raise ValueError("coranks are nonnegative")
    if not (max(a, b) <= c <= a + b):
        return Fraction(0)
    num = q_pochhammer(p, a) * q_pochhammer(p, b)
    den = q_pochhammer(p, c - b) * q_pochhammer(p, a + b - c) * q_pochhammer(p, c - a)
    return Fraction(1, p ** ((c - a) * (c - b))) * num / den


def corner_rank_law(p: int, n: int, a: int, b: int, r: int) -> Fraction:
    """P(rank B' = r) for B' the top (n-a) x (n-b) block of a uniform full-rank n x (n-b) matrix over F_p."""
    if not (0 <= a <= n and 0 <= b <= n):
        raise ValueError("need 0 <= a, b <= n")
    c = n - r
    if r < 0 or c < 0 or c - b < 0 or c - a < 0:
        return Fraction(0)
    top = gaussian_binomial(p, a, c - b) * gaussian_binomial(p, n - a, n - c)
    return Fraction(1, p ** ((c - a) * (c - b))) * top / gaussian_binomial(p, n, n - b)


def moment_prediction(flag=None) -> int:
    """Limiting E|Sur(flag of cokernels, flag)|, which is 1 for every flag."""
    return 1


# -- tables ----------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedLaw:
    """Masses of retained keys; ``other`` is the mass of everything else."""

    masses: dict
    other: Fraction
    error: Fraction


def cohen_lenstra_table(p: int, epsilon=Fraction(1, 10**4), precision=DEFAULT_PRECISION) -> TruncatedLaw:
    """Cohen-Lenstra masses C / |Aut G_lam| that are at least epsilon.

    The mass of G_lam is at most p**-|lam|, so sizes with p**-m < epsilon
    cannot contribute.
    """
    eps = Fraction(epsilon)
    C, err = _constant_power((p,), 1, precision)
    masses = {}
    m = 0
    while Fraction(1, p**m) >= eps:
        for lam in partitions_of(m):
            w = C * inverse_aut(lam, p)
            if w >= eps:
                masses[lam] = w
        m += 1
    return TruncatedLaw(masses, 1 - sum(masses.values()), err)


def flag_law_table(p: int, k: int, max_order: int = 16, precision=DEFAULT_PRECISION) -> TruncatedLaw:
    """Flag measures of every class whose top group has order <= max_order."""
    masses = {}
    err = Fraction(0)
    m = 0
    while p**m <= max_order:
        for nu in partitions_of(m):
            for fc, chain in flag_classes(p, nu, k):
                fm = flag_measure(FlagMeasureQuery.single(p, nu, chain, k), precision)
                masses[fc] = fm.value
                err += fm.error
        m += 1
    return TruncatedLaw(masses, 1 - sum(masses.values()), err)


def corank_table(p: int, max_ab: int) -> list[tuple[int, int, int, Fraction]]:
    return [
        (a, b, c, corank_conditional(p, a, b, c))
        for a in range(max_ab + 1)
        for b in range(max_ab + 1)
        for c in range(max(a, b), a + b + 1)
    ]


def convolution_table(p: int, H, K) -> list[tuple[Partition, Fraction]]:
    H, K = Partition(H), Partition(K)
    rows = []
    for G in partitions_of(H.size + K.size):
        v = conditional_convolution(p, G, H, K)
        if v:
            rows.append((G, v))
    return rows
