import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cokflag.partitions import (
    GroupType,
    Partition,
    alt2_order,
    aut_order,
    cohen_lenstra_constant,
    conjugate,
    gaussian_binomial,
    group_order,
    partitions_of,
    partitions_up_to,
    q_pochhammer,
)

partitions = st.lists(st.integers(0, 6), max_size=6).map(Partition)


def test_normal_form():
    assert Partition([1, 3, 0]) == Partition((3, 1))
    assert Partition() == Partition([0, 0])
    assert hash(Partition([2, 1])) == hash(Partition([1, 2]))
    with pytest.raises(ValueError):
        Partition([-1])
    with pytest.raises(TypeError):
        Partition([1.5])


@pytest.mark.parametrize("lam, expected", [((3, 1), (2, 1, 1)), ((), ()), ((1, 1, 1), (3,))])
def test_conjugate_examples(lam, expected):
    assert conjugate(lam) == Partition(expected)


def test_conjugate_involution_exhaustive():
    for lam in partitions_up_to(12):
        assert lam.conjugate().conjugate() == lam


def test_partition_counts():
    # p(0..10) from the generating function prod 1/(1-x^i)
    coeffs = [1] + [0] * 10
    for i in range(1, 11):
        for j in range(i, 11):
            coeffs[j] += coeffs[j - i]
    assert [len(list(partitions_of(n))) for n in range(11)] == coeffs


@pytest.mark.parametrize("p, m, expected", [(2, 0, 1), (2, 1, Fraction(1, 2)), (2, 2, Fraction(3, 8))])
def test_q_pochhammer(p, m, expected):
    assert q_pochhammer(p, m) == expected


@given(st.sampled_from([2, 3, 5, 7]), st.integers(1, 20))
def test_q_pochhammer_ratio(p, m):
    assert q_pochhammer(p, m) / q_pochhammer(p, m - 1) == 1 - Fraction(1, p**m)


@pytest.mark.parametrize("p, k, l, expected", [(2, 2, 1, Fraction(3, 2)), (3, 5, 0, 1), (2, 1, 2, 0)])
def test_gaussian_binomial(p, k, l, expected):
    assert gaussian_binomial(p, k, l) == expected


@given(st.sampled_from([2, 3, 5]), st.integers(0, 12), st.data())
def test_gaussian_binomial_symmetry(p, k, data):
    l = data.draw(st.integers(0, k))
    assert gaussian_binomial(p, k, l) == gaussian_binomial(p, k, k - l)


def test_gaussian_binomial_counts_subspaces():
    # p^{l(k-l)} times the normalized value is the number of l-dim subspaces of F_p^k
    for p, k in [(2, 4), (3, 3)]:
        vecs = [v for v in itertools.product(range(p), repeat=k)]
        for l in range(k + 1):
            spaces = set()
            for gens in itertools.combinations(vecs, l):
                span = {tuple(0 for _ in range(k))}
                for g in gens:
                    span = {tuple((a + c * b) % p for a, b in zip(s, g)) for s in span for c in range(p)}
                if len(span) == p**l:
                    spaces.add(frozenset(span))
            assert gaussian_binomial(p, k, l) * p ** (l * (k - l)) == len(spaces)


def test_cohen_lenstra_constant_p2():
    c = cohen_lenstra_constant(2, Fraction(1, 10**6))
    deep = math.prod(1 - 2.0**-i for i in range(1, 60))
    assert abs(float(c) - deep) < 1e-6
    assert abs(float(c) - 0.288788) < 1e-6


def test_cohen_lenstra_constant_p3_and_large_prime():
    assert abs(float(cohen_lenstra_constant(3, Fraction(1, 10**6))) - 0.560126) < 1e-6
    p = 10**9 + 7
    c = cohen_lenstra_constant(p, Fraction(1, 1000))
    assert 1 - Fraction(2, p) < c < 1


@pytest.mark.parametrize("lam, p, expected", [((1, 1), 2, 4), ((), 5, 1), ((2,), 3, 9)])
def test_group_order(lam, p, expected):
    assert group_order(lam, p) == expected


@pytest.mark.parametrize("lam, p, expected", [((1, 1), 2, 6), ((1,), 5, 4), ((1,), 7, 6), ((2,), 3, 6)])
def test_aut_order_examples(lam, p, expected):
    assert aut_order(lam, p) == expected


def _gl_count(n, p):
    count = 0
    for entries in itertools.product(range(p), repeat=n * n):
        rows = [entries[i * n:(i + 1) * n] for i in range(n)]
        # rank over F_p by elimination
        m = [list(r) for r in rows]
        rank = 0
        for c in range(n):
            piv = next((r for r in range(rank, n) if m[r][c] % p), None)
            if piv is None:
                continue
            m[rank], m[piv] = m[piv], m[rank]
            inv = pow(m[rank][c], -1, p)
            for r in range(n):
                if r != rank and m[r][c]:
                    f = m[r][c] * inv
                    m[r] = [(a - f * b) % p for a, b in zip(m[r], m[rank])]
            rank += 1
        count += rank == n
    return count


def test_aut_order_elementary_abelian_matches_gl():
    for n, p in [(1, 2), (2, 2), (3, 2), (2, 3)]:
        assert aut_order((1,) * n, p) == _gl_count(n, p)


@pytest.mark.parametrize("lam, p, expected", [((1, 1), 2, 2), ((5,), 3, 1), ((2, 1), 3, 3)])
def test_alt2_order_examples(lam, p, expected):
    assert alt2_order(lam, p) == expected


def test_alt2_order_gcd_decomposition():
    for lam in partitions_up_to(8):
        for p in (2, 3):
            mods = [p**x for x in lam]
            expected = math.prod(math.gcd(a, b) for a, b in itertools.combinations(mods, 2))
            assert alt2_order(lam, p) == expected


@given(partitions)
def test_json_roundtrip(lam):
    assert Partition.from_json(lam.to_json()) == lam


def test_group_type():
    g = GroupType({2: (1, 1), 3: (1,)})
    assert g.order() == 12
    assert g[5] == Partition()
    assert GroupType.from_json(g.to_json()) == g
    assert g.to_json() == {"2": [1, 1], "3": [1]}
