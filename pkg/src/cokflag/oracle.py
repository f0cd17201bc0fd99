"""Exact cross-check suites: each identity is evaluated by two independent routes."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import hall_littlewood as hl
from .groups import (
    ExplicitGroup,
    brute_force_aut_count,
    count_automorphisms,
    enumerate_subgroups,
    flag_aut_order,
    flag_classes,
    flag_orbit_size,
    hall_number,
    stabilizer_orders,
    subgroup_orbits,
)
from .linalg import MatrixMod, RingSpec, snf
from .partitions import Partition, aut_order, partitions_of, partitions_up_to
from .sampler import stream_rng
from .theory import conditional_convolution, corank_conditional, corner_rank_law

BRUTE_FORCE_AUT_LIMIT = 2 * 10**7
FULL_ORBIT_LIMIT = 10**6


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, ok: bool, detail) -> None:
        self.checked += 1
        if not ok:
            self.failures.append(detail)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.checked} checks, {len(self.failures)} failures"


def _groups(p: int, max_order: int):
    m = 0
    while p**m <= max_order:
        yield from partitions_of(m)
        m += 1


def _pairs(total: int):
    for s in range(total + 1):
        for a in range(s + 1):
            for lam in partitions_of(a):
                for mu in partitions_of(s - a):
                    yield lam, mu


def suite_hl_limit(primes=(2, 3), max_total: int = 4, tolerance=Fraction(1, 10**6)) -> SuiteResult:
    """n -> infinity normalized HL constants against subgroup counts."""
    res = SuiteResult("hl-limit-vs-group-count")
    for p in primes:
        for lam, mu in _pairs(max_total):
            lim = hl.hl_limit_constants(lam, mu, p)
            grp = hl.group_theoretic_constants(lam, mu, p)
            for nu in set(lim.values) | set(grp):
                gap = abs(lim[nu] - grp.get(nu, Fraction(0)))
                res.check(gap + lim.last_change < tolerance,
                          {"p": p, "lam": list(lam), "mu": list(mu), "nu": list(nu),
                           "hl": float(lim[nu]), "group": str(grp.get(nu, 0))})
    return res


def suite_hl_normalization(primes=(2, 3), max_total: int = 4, extra_vars: int = 1) -> SuiteResult:
    res = SuiteResult("hl-finite-n-normalization")
    for p in primes:
        for lam, mu in _pairs(max_total):
            lo = max(1, len(lam), len(mu))
            for n in range(lo, lam.size + mu.size + extra_vars + 1):
                total = sum(hl.normalized_constants(lam, mu, p, n).values(), Fraction(0))
                res.check(total == 1, {"p": p, "lam": list(lam), "mu": list(mu), "n": n, "sum": str(total)})
    return res


def suite_schur(max_size: int = 5, max_vars: int = 4) -> SuiteResult:
    res = SuiteResult("schur-degeneration-at-t0")
    for lam in partitions_up_to(max_size):
        for n in range(max(1, len(lam)), max_vars + 1):
            a = hl.hl_polynomial(lam, n, 0).coeffs
            b = hl.schur_polynomial(lam, n).coeffs
            keys = set(a) | set(b)
            res.check(all(a.get(k, 0) == b.get(k, 0) for k in keys), {"lam": list(lam), "n": n})
    return res


def suite_hall(primes=(2, 3), max_order: int = 64) -> SuiteResult:
    """Hall-number symmetry and normalization of the conditional convolution."""
    res = SuiteResult("hall-symmetry-and-convolution-normalization")
    for p in primes:
        for nu in _groups(p, max_order):
            for a in range(nu.size + 1):
                for mu in partitions_of(a):
                    for lam in partitions_of(nu.size - a):
                        h1 = hall_number(p, nu, mu, lam)
                        h2 = hall_number(p, nu, lam, mu)
                        res.check(h1 == h2, {"p": p, "nu": list(nu), "mu": list(mu), "lam": list(lam), "counts": [h1, h2]})
        for H in _groups(p, max_order):
            for K in _groups(p, max_order // p**H.size):
                total = sum((conditional_convolution(p, G, H, K) for G in partitions_of(H.size + K.size)), Fraction(0))
                res.check(total == 1, {"p": p, "H": list(H), "K": list(K), "sum": str(total)})
    return res


def suite_aut(primes=(2, 3), max_order: int = 64, fault: bool = False) -> SuiteResult:
    """Closed-form |Aut| against enumeration (DFS, or the subspace DP beyond the DFS limit)."""
    res = SuiteResult("aut-order-vs-enumeration")
    for p in primes:
        for lam in _groups(p, max_order):
            G = ExplicitGroup(p, lam)
            formula = aut_order(lam, p) + (1 if fault and lam == Partition((1, 1)) else 0)
            if formula <= BRUTE_FORCE_AUT_LIMIT:
                counted, route = brute_force_aut_count(G, BRUTE_FORCE_AUT_LIMIT), "dfs"
            else:
                counted, route = count_automorphisms(G), "subspace-dp"
            res.check(counted == formula, {"p": p, "lam": list(lam), "formula": formula, "counted": counted, "route": route})
    return res


def suite_orbit_stabilizer(primes=(2, 3), max_order: int = 32, chain_max_order: int = 8) -> SuiteResult:
    """|orbit of H| * |Stab(H)| = |Aut G| for every subgroup H, and likewise
    for chains H_1 <= H_2 when |G| <= chain_max_order.

    Orbits come from closure under elementary automorphisms, stabilizers
    from the automorphism search. For large Aut one representative per
    orbit is checked; an undersized orbit would break the product.
    """
    res = SuiteResult("orbit-stabilizer")
    for p in primes:
        for lam in _groups(p, max_order):
            G = ExplicitGroup(p, lam)
            subs = enumerate_subgroups(G)
            orbits = subgroup_orbits(G)
            res.check(sum(len(o) for o in orbits) == len(subs), {"p": p, "lam": list(lam), "error": "orbits do not partition"})
            A = aut_order(lam, p)
            if A * len(subs) <= FULL_ORBIT_LIMIT:
                idx = list(range(len(subs)))
            else:
                idx = [o[0] for o in orbits]
            stabs = dict(zip(idx, stabilizer_orders(G, [subs[i] for i in idx], BRUTE_FORCE_AUT_LIMIT)))
            for o in orbits:
                for i in o:
                    if i in stabs:
                        res.check(len(o) * stabs[i] == A, {"p": p, "lam": list(lam), "subgroup": subs[i].render(),
                                                            "orbit": len(o), "stabilizer": stabs[i], "aut": A})
            if G.order <= chain_max_order:
                # two-step chains: the flag automorphism group against the chain orbit
                for fc, chain in flag_classes(p, lam, 3):
                    orbit = flag_orbit_size(G, chain)
                    stab = flag_aut_order(G, chain, BRUTE_FORCE_AUT_LIMIT)
                    res.check(orbit * stab == A, {"p": p, "lam": list(lam), "flag": fc.orbit,
                                                  "orbit": orbit, "stabilizer": stab, "aut": A})
    return res


def suite_corank(primes=(2, 3, 5), max_ab: int = 6, corner_n: int = 30, corner_max: int = 3) -> SuiteResult:
    res = SuiteResult("corank-law")
    for p in primes:
        for a in range(max_ab + 1):
            for b in range(max_ab + 1):
                total = sum((corank_conditional(p, a, b, c) for c in range(a + b + 1)), Fraction(0))
                res.check(total == 1, {"p": p, "a": a, "b": b, "sum": str(total)})
                for c in range(a + b + 1):
                    res.check(corank_conditional(p, a, b, c) == corank_conditional(p, b, a, c),
                              {"p": p, "a": a, "b": b, "c": c, "error": "asymmetric"})
    for a in range(corner_max + 1):
        for b in range(corner_max + 1):
            for c in range(corner_max + 1):
                fin = corner_rank_law(2, corner_n, a, b, corner_n - c)
                gap = abs(fin - corank_conditional(2, a, b, c))
                res.check(gap < Fraction(1, 1000), {"a": a, "b": b, "c": c, "n": corner_n, "gap": float(gap)})
    return res


def _unit_det(M: np.ndarray, p: int) -> bool:
    """Whether an integer matrix is invertible mod p (rank over F_p)."""
    from .linalg import rank_mod_p

    return rank_mod_p(np.mod(M, p), p) == M.shape[0]


def suite_snf(count: int = 2000, seed: int = 0, primes=(2, 3, 5, 7)) -> SuiteResult:
    """U M V is diagonal with a divisibility chain and U, V invertible."""
    res = SuiteResult("snf-transforms")
    rng = stream_rng(seed, 99)
    for t in range(count):
        p = primes[t % len(primes)]
        N = int(rng.integers(1, 9))
        rows = int(rng.integers(1, 7))
        cols = int(rng.integers(1, 7)) if t % 3 else rows
        ring = RingSpec(p, N)
        raw = rng.integers(0, ring.modulus, size=(rows, cols))
        # sprinkle structure: scale some rows by powers of p
        raw[: rows // 2] *= p ** int(rng.integers(0, N + 1))
        M = MatrixMod.from_ints(ring, raw)
        S = snf(M)
        D = (S.U @ M @ S.V).residues()
        q = ring.modulus
        want = [[p ** S.d[i] % q if i == j else 0 for j in range(cols)] for i in range(rows)]
        ok = D == want
        ok &= all(x <= y for x, y in zip(S.d, S.d[1:]))
        ok &= _unit_det(S.U.entries, p) and _unit_det(S.V.entries, p)
        res.check(bool(ok), {"p": p, "N": N, "matrix": M.residues()})
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "aut": suite_aut,
    "hall": suite_hall,
    "orbit-stabilizer": suite_orbit_stabilizer,
    "hl-limit": suite_hl_limit,
    "hl-normalization": suite_hl_normalization,
    "schur": suite_schur,
    "corank": suite_corank,
    "snf": suite_snf,
}


def run_suites(max_order: int = 64, snf_count: int = 2000, fault: bool = False) -> list[SuiteResult]:
    """All suites, with group-size bounds capped at max_order."""
    return [
        suite_aut(max_order=max_order, fault=fault),
        suite_hall(max_order=max_order),
        suite_orbit_stabilizer(max_order=min(32, max_order)),
        suite_hl_limit(max_total=4 if max_order >= 16 else 2),
        suite_hl_normalization(max_total=4 if max_order >= 16 else 2),
        suite_schur(max_size=5 if max_order >= 32 else 3),
        suite_corank(),
        suite_snf(count=snf_count),
    ]

