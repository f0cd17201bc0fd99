"""Hall-Littlewood and Schur polynomials in the monomial basis, structure
constants, principal specializations and the normalized constants that
describe the law of cok(M1 M2) given cok(M1) and cok(M2).

Everything is exact: t is a fixed Fraction and coefficients are Fractions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

from .groups import hall_number
from .partitions import Partition, aut_order, partitions_of

DEFAULT_MAX_VARS = 8

Poly = dict  # exponent tuple -> int or Fraction


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class HlPolynomial:
    """Symmetric polynomial in n_vars variables, stored as m_mu coefficients."""

    n_vars: int
    t: Fraction | None
    coeffs: Mapping[Partition, Fraction] = field(default_factory=dict)

    def __getitem__(self, mu) -> Fraction:
        return self.coeffs.get(Partition(mu), Fraction(0))

    def support(self) -> list[Partition]:
        return sorted((mu for mu, c in self.coeffs.items() if c), reverse=True)


# -- polynomial helpers ----------------------------------------------------

def _mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def _divide_linear(A: Poly, i: int, j: int) -> Poly:
    """Exact quotient A / (x_i - x_j); raises if the division is not exact."""
    buckets: dict[int, Poly] = {}
    for e, c in A.items():
        buckets.setdefault(e[i], {})[e] = c
    Q: Poly = {}
    for d in range(max(buckets, default=0), 0, -1):
        for e, c in buckets.get(d, {}).items():
            if not c:
                continue
            q = list(e)
            q[i] -= 1
            q = tuple(q)
            Q[q] = Q.get(q, 0) + c
            r = list(q)
            r[j] += 1
            r = tuple(r)
            low = buckets.setdefault(d - 1, {})
            low[r] = low.get(r, 0) + c
    if any(buckets.get(0, {}).values()):
        raise ArithmeticError("polynomial is not divisible by the linear factor")
    return {e: c for e, c in Q.items() if c}


def _divide_vandermonde(A: Poly, n: int) -> Poly:
    for i in range(n):
        for j in range(i + 1, n):
            A = _divide_linear(A, i, j)
    return A


def _sort_sign(beta: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting beta decreasingly (0 on repeats)."""
    if len(set(beta)) < len(beta):
        return 0, beta
    arr = list(beta)
    sign = 1
    for i in range(len(arr)):
        for j in range(len(arr) - 1 - i):
            if arr[j] < arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    return sign, tuple(arr)


def _alternant(coeffs: Mapping[tuple[int, ...], object], n: int) -> Poly:
    """sum_alpha c_alpha a_alpha with a_alpha = sum_w sgn(w) x^(w alpha)."""
    out: Poly = {}
    perms = list(itertools.permutations(range(n)))
    signs = [_sort_sign(tuple(-x for x in w))[0] for w in perms]
    for alpha, c in coeffs.items():
        if not c:
            continue
        for w, s in zip(perms, signs):
            e = tuple(alpha[w[k]] for k in range(n))
            out[e] = out.get(e, 0) + s * c
    return {e: c for e, c in out.items() if c}


def _to_monomial_coeffs(Q: Poly, n: int) -> dict[Partition, object]:
    out = {}
    for e, c in Q.items():
        if all(e[k] >= e[k + 1] for k in range(n - 1)):
            out[Partition(e)] = c
    return out


def _v(lam: Partition, n: int, t: Fraction) -> Fraction:
    mult = lam.multiplicities()
    mult[0] = n - len(lam)
    out = Fraction(1)
    for m in mult.values():
        for j in range(1, m + 1):
            # (1 - t^j)/(1 - t) = 1 + t + ... + t^(j-1), also fine at t = 1
            out *= sum(t**k for k in range(j))
    return out


def _check_budget(n: int, max_vars: int):
    if n > max_vars:
        raise BudgetExceeded(f"symmetrization over S_{n} exceeds the budget of {max_vars} variables")


# -- the polynomials -------------------------------------------------------

@lru_cache(maxsize=512)
def _hl_coeffs(lam: Partition, n: int, t: Fraction) -> dict[Partition, Fraction]:
    a, b = t.numerator, t.denominator
    F: Poly = {tuple(lam.padded(n)): 1}
    for i in range(n):
        for j in range(i + 1, n):
            fi = [0] * n
            fi[i] = 1
            fj = [0] * n
            fj[j] = 1
            F = _mul(F, {tuple(fi): b, tuple(fj): -a})
    alt: dict[tuple[int, ...], int] = {}
    for beta, c in F.items():
        s, alpha = _sort_sign(beta)
        if s:
            alt[alpha] = alt.get(alpha, 0) + s * c
    Q = _divide_vandermonde(_alternant(alt, n), n)
    scale = Fraction(b ** (n * (n - 1) // 2)) * _v(lam, n, t)
    return {mu: Fraction(c) / scale for mu, c in _to_monomial_coeffs(Q, n).items() if c}


def hl_polynomial(lam, n_vars: int, t, max_vars: int = DEFAULT_MAX_VARS) -> HlPolynomial:
    """P_lam(x_1..x_n; 0, t) in the monomial basis.

    Computed by symmetrizing x^lam prod_{i<j} (x_i - t x_j) and dividing by
    the Vandermonde product. Monomial coefficients do not depend on the
    number of variables once it reaches |lam|, so at most |lam| variables
    are ever symmetrized.
    """
    lam = Partition(lam)
    t = Fraction(t)
    if len(lam) > n_vars:
        raise ValueError(f"{lam!r} has more than {n_vars} parts")
    n = max(1, min(n_vars, lam.size))
    _check_budget(n, max_vars)
    coeffs = {mu: c for mu, c in _hl_coeffs(lam, n, t).items() if len(mu) <= n_vars}
    return HlPolynomial(n_vars, t, coeffs)


@lru_cache(maxsize=512)
def _schur_coeffs(lam: Partition, n: int) -> dict[Partition, int]:
    delta = tuple(n - 1 - i for i in range(n))
    top = tuple(x + d for x, d in zip(lam.padded(n), delta))
    Q = _divide_vandermonde(_alternant({top: 1}, n), n)
    return {mu: c for mu, c in _to_monomial_coeffs(Q, n).items() if c}


def schur_polynomial(lam, n_vars: int, max_vars: int = DEFAULT_MAX_VARS) -> HlPolynomial:
    """s_lam as the bialternant ratio a_(lam+delta) / a_delta."""
    lam = Partition(lam)
    if len(lam) > n_vars:
        raise ValueError(f"{lam!r} has more than {n_vars} parts")
    _check_budget(n_vars, max_vars)
    n = max(1, n_vars)
    return HlPolynomial(n_vars, None, {mu: Fraction(c) for mu, c in _schur_coeffs(lam, n).items()})


def _monomial_expansion(mu: Partition, n: int) -> Poly:
    return {e: 1 for e in set(itertools.permutations(mu.padded(n)))}


def _product(f: HlPolynomial, g: HlPolynomial, n: int) -> dict[Partition, Fraction]:
    F: Poly = {}
    for mu, c in f.coeffs.items():
        if len(mu) <= n:
            for e in _monomial_expansion(mu, n):
                F[e] = F.get(e, 0) + c
    G: Poly = {}
    for mu, c in g.coeffs.items():
        if len(mu) <= n:
            for e in _monomial_expansion(mu, n):
                G[e] = G.get(e, 0) + c
    return _to_monomial_coeffs(_mul(F, G), n)


def expand_in_P_basis(f: Mapping, t, n_vars: int, max_vars: int = DEFAULT_MAX_VARS) -> dict[Partition, Fraction]:
    """Coefficients of f (given in the monomial basis) in the P_nu basis."""
    t = Fraction(t)
    rest = {Partition(mu): Fraction(c) for mu, c in dict(f).items() if c and len(Partition(mu)) <= n_vars}
    out: dict[Partition, Fraction] = {}
    while rest:
        # the lexicographically largest partition is maximal in dominance
        nu = max(rest)
        c = rest[nu]
        P = hl_polynomial(nu, n_vars, t, max_vars)
        if P[nu] != 1:
            raise AssertionError(f"P_{nu} is not monic")
        for mu, pc in P.coeffs.items():
            if not nu.dominates(mu):
                raise AssertionError(f"P_{nu} has {mu} in its support, which it does not dominate")
            val = rest.get(mu, Fraction(0)) - c * pc
            if val:
                rest[mu] = val
            else:
                rest.pop(mu, None)
        if nu in rest:
            raise AssertionError("triangular elimination did not clear the leading term")
        out[nu] = out.get(nu, Fraction(0)) + c
    return out


@lru_cache(maxsize=1024)
def _structure_constants(lam: Partition, mu: Partition, t: Fraction, max_vars: int) -> dict[Partition, Fraction]:
    n = max(1, lam.size + mu.size)
    _check_budget(n, max_vars)
    prod = _product(hl_polynomial(lam, n, t, max_vars), hl_polynomial(mu, n, t, max_vars), n)
    out = expand_in_P_basis(prod, t, n, max_vars)
    lower = Partition(sorted(lam + mu, reverse=True))
    upper = Partition(a + b for a, b in itertools.zip_longest(lam, mu, fillvalue=0))
    for nu in out:
        if nu.size != lower.size or not (nu.dominates(lower) and upper.dominates(nu)):
            raise AssertionError(f"c^{nu} outside the dominance interval [{lower}, {upper}]")
    return out


def structure_constants(lam, mu, t, n_vars: int | None = None, max_vars: int = DEFAULT_MAX_VARS) -> dict[Partition, Fraction]:
    """c^nu_{lam,mu}(0, t), the P-basis coefficients of P_lam P_mu.

    Computed with |lam| + |mu| variables, where they no longer depend on the
    variable count; with fewer variables only nu of length <= n_vars remain.
    """
    lam, mu = Partition(lam), Partition(mu)
    full = _structure_constants(lam, mu, Fraction(t), max_vars)
    if n_vars is None:
        return dict(full)
    return {nu: c for nu, c in full.items() if len(nu) <= n_vars}


@lru_cache(maxsize=None)
def _monomial_principal(mu: Partition, n: int, t: Fraction) -> Fraction:
    """m_mu(1, t, ..., t^(n-1)) by assigning parts to variables in order."""
    values = sorted(set(mu))
    counts = tuple(list(mu).count(v) for v in values)

    @lru_cache(maxsize=None)
    def f(i: int, rem: tuple[int, ...]) -> Fraction:
        left = sum(rem)
        if left == 0:
            return Fraction(1)
        if n - i < left:
            return Fraction(0)
        out = f(i + 1, rem)
        for k, v in enumerate(values):
            if rem[k]:
                nxt = rem[:k] + (rem[k] - 1,) + rem[k + 1 :]
                out += t ** (i * v) * f(i + 1, nxt)
        return out

    return f(0, counts)


def principal_specialization(lam, t, n_vars: int, max_vars: int = DEFAULT_MAX_VARS) -> Fraction:
    """P_lam(1, t, ..., t^(n-1); 0, t)."""
    lam = Partition(lam)
    t = Fraction(t)
    if len(lam) > n_vars:
        return Fraction(0)
    P = hl_polynomial(lam, n_vars, t, max_vars)
    return sum((c * _monomial_principal(mu, n_vars, t) for mu, c in P.coeffs.items()), Fraction(0))


def normalized_constants(lam, mu, p: int, n_vars: int, max_vars: int = DEFAULT_MAX_VARS) -> dict[Partition, Fraction]:
    """c-hat^nu_{lam,mu}(0, 1/p) with n_vars variables.

    This is the law of the type of cok(M1 M2) given cok(M1) = G_lam and
    cok(M2) = G_mu for Haar matrices of size n_vars.
    """
    lam, mu = Partition(lam), Partition(mu)
    if len(lam) > n_vars or len(mu) > n_vars:
        raise ValueError("partitions must have at most n_vars parts")
    t = Fraction(1, p)
    c = structure_constants(lam, mu, t, n_vars, max_vars)
    denom = principal_specialization(lam, t, n_vars, max_vars) * principal_specialization(mu, t, n_vars, max_vars)
    return {nu: principal_specialization(nu, t, n_vars, max_vars) / denom * cv for nu, cv in c.items()}


@dataclass(frozen=True)
class LimitConstants:
    values: dict
    n_vars: int
    last_change: Fraction

    def __getitem__(self, nu) -> Fraction:
        return self.values.get(Partition(nu), Fraction(0))


def hl_limit_constants(lam, mu, p: int, tolerance=Fraction(1, 10**9), max_n: int = 400,
                       max_vars: int = DEFAULT_MAX_VARS) -> LimitConstants:
    """n -> infinity limit of normalized_constants, by successive differences.

    Stops once two consecutive increments of n move every value by less
    than ``tolerance``; the returned ``last_change`` is the final increment.
    """
    lam, mu = Partition(lam), Partition(mu)
    tol = Fraction(tolerance)
    size = lam.size + mu.size
    support = list(partitions_of(size))
    n = max(1, len(lam), len(mu))
    prev = None
    quiet = 0
    while n <= max_n:
        cur = normalized_constants(lam, mu, p, n, max_vars)
        cur = {nu: cur.get(nu, Fraction(0)) for nu in support}
        if prev is not None and n > size:
            change = max(abs(cur[nu] - prev[nu]) for nu in support)
            quiet = quiet + 1 if change < tol else 0
            if quiet >= 2:
                return LimitConstants({nu: v for nu, v in cur.items() if v}, n, change)
        prev = cur
        n += 1
    raise BudgetExceeded(f"no convergence to {float(tol)} by n = {max_n}")


def group_theoretic_constants(lam, mu, p: int) -> dict[Partition, Fraction]:
    """|Aut G_lam| |Aut G_mu| / |Aut G_nu| * #{N <= G_nu : N ~ G_lam, G_nu/N ~ G_mu}."""
    lam, mu = Partition(lam), Partition(mu)
    out = {}
    for nu in partitions_of(lam.size + mu.size):
        h = hall_number(p, nu, lam, mu)
        if h:
            out[nu] = Fraction(aut_order(lam, p) * aut_order(mu, p), aut_order(nu, p)) * h
    return out
