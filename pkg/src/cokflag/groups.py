"""Explicit computations inside G_lam = Z/p^lam_1 + ... + Z/p^lam_n.

Elements are coordinate tuples. Subgroups carry a canonical basis: the
Howell form of their generators after embedding G_lam into (Z/p^e)^n,
e = lam_1, via x_i -> p^(e - lam_i) x_i. Canonical bases give subgroup
equality by comparison and a total order on subgroup chains.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .linalg import MatrixMod, RingSpec, is_prime, smith_valuations
from .partitions import Partition

DEFAULT_MAX_ORDER = 4096
DEFAULT_MAX_AUT = 10**6
DEFAULT_MAX_ORBIT = 10**5
DEFAULT_MAX_HOMS = 10**6


class BoundsExceeded(RuntimeError):
    """An enumeration would exceed its configured budget."""


class ExplicitGroup:
    """The group G_lam for a prime p, with element coordinates and caches."""

    __slots__ = ("p", "lam")

    def __init__(self, p: int, lam: Iterable[int]):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = int(p)
        self.lam = Partition(lam)

    def __repr__(self) -> str:
        return f"ExplicitGroup(p={self.p}, lam={list(self.lam)})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ExplicitGroup) and (self.p, self.lam) == (other.p, other.lam)

    def __hash__(self) -> int:
        return hash((self.p, self.lam))

    @property
    def rank(self) -> int:
        return len(self.lam)

    @property
    def exponent(self) -> int:
        return self.lam[0] if self.lam else 0

    @property
    def order(self) -> int:
        return self.p ** self.lam.size

    @property
    def mods(self) -> tuple[int, ...]:
        return tuple(self.p**x for x in self.lam)

    def data(self) -> "_GroupData":
        return _group_data(self.p, self.lam)

    def reduce(self, x: Sequence[int]) -> tuple[int, ...]:
        if len(x) != self.rank:
            raise ValueError(f"element {tuple(x)} has the wrong length for {self!r}")
        return tuple(int(a) % m for a, m in zip(x, self.mods))

    def add(self, x, y) -> tuple[int, ...]:
        return tuple((a + b) % m for a, b, m in zip(x, y, self.mods))

    def element_order(self, x) -> int:
        out = 1
        for a, lam_i in zip(self.reduce(x), self.lam):
            k = lam_i
            a %= self.p**lam_i
            while a and a % self.p == 0:
                a //= self.p
                k -= 1
            out = max(out, self.p**k if a else 1)
        return out


# -- canonical bases -------------------------------------------------------

def _valuations(col: np.ndarray, p: int, e: int) -> np.ndarray:
    out = np.full(col.shape[0], e, dtype=np.int64)
    nz = col != 0
    live = col[nz]
    v = np.zeros(live.shape[0], dtype=np.int64)
    for _ in range(e):
        d = live % p == 0
        if not d.any():
            break
        v += d
        live = np.where(d, live // p, live)
    out[nz] = v
    return out


def howell_basis(rows, p: int, e: int) -> list[tuple[int, int, tuple[int, ...]]]:
    """Howell form of the row module over Z/p^e.

    Returns (pivot column, pivot valuation, row) triples in pivot order.
    Pivots equal p^v exactly, entries above a pivot lie in [0, p^v), and
    annihilator multiples p^(e-v) * row are folded back in, which makes the
    result unique for the module. Every element of the module is uniquely
    sum c_j row_j with 0 <= c_j < p^(e - v_j).
    """
    q = p**e
    big = q.bit_length() * 2 > 62
    R = np.array(rows, dtype=object if big else np.int64)
    if R.size == 0 or e == 0:
        return []
    R = R.reshape(-1, R.shape[-1]) % q
    R = R[(R != 0).any(axis=1)]
    ncols = R.shape[1]
    piv: list[tuple[int, int, np.ndarray]] = []
    for c in range(ncols):
        if R.shape[0] == 0:
            break
        vals = _valuations(R[:, c], p, e)
        i = int(np.argmin(vals))
        v = int(vals[i])
        if v == e:
            continue
        pv = p**v
        row = R[i]
        inv = pow(int(row[c]) // pv, -1, q)
        row = row * inv % q
        rest = np.delete(R, i, axis=0)
        if rest.shape[0]:
            f = rest[:, c] // pv
            rest = (rest - f[:, None] * row[None, :]) % q
        ann = (row * p ** (e - v)) % q
        R = np.vstack([rest, ann[None, :]]) if rest.shape[0] else ann[None, :]
        R = R[(R != 0).any(axis=1)]
        piv.append((c, v, row))
    for t, (c, v, row) in enumerate(piv):
        pv = p**v
        for s in range(t):
            cs, vs, other = piv[s]
            f = int(other[c]) // pv
            if f:
                piv[s] = (cs, vs, (other - f * row) % q)
    return [(c, v, tuple(int(x) for x in row)) for c, v, row in piv]


@dataclass(frozen=True)
class Subgroup:
    """A subgroup with its canonical basis (G coordinates) and coefficient ranges."""

    ambient: ExplicitGroup
    basis: tuple[tuple[int, ...], ...]
    ranges: tuple[int, ...]

    @property
    def order(self) -> int:
        out = 1
        for r in self.ranges:
            out *= r
        return out

    def key(self) -> tuple[tuple[int, ...], ...]:
        return self.basis

    def __lt__(self, other: "Subgroup") -> bool:
        return self.basis < other.basis

    def elements(self) -> np.ndarray:
        """Indices (see _GroupData) of all elements, each listed once."""
        return self.ambient.data().subgroup_elements(self)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.ambient.order, dtype=bool)
        m[self.elements()] = True
        return m

    def render(self) -> str:
        return "<" + ",".join("(" + ",".join(map(str, b)) + ")" for b in self.basis) + ">"


def span(G: ExplicitGroup, generators: Iterable[Sequence[int]]) -> Subgroup:
    """Subgroup generated by the given elements, in canonical form."""
    gens = [G.reduce(g) for g in generators]
    if not gens or G.rank == 0:
        return Subgroup(G, (), ())
    e = G.exponent
    scale = np.array([G.p ** (e - x) for x in G.lam], dtype=object)
    emb = (np.array(gens, dtype=object) * scale).tolist()
    basis = []
    ranges = []
    for _, v, row in howell_basis(emb, G.p, e):
        basis.append(tuple(int(x) // int(s) for x, s in zip(row, scale)))
        ranges.append(G.p ** (e - v))
    return Subgroup(G, tuple(basis), tuple(ranges))


def span_columns(G: ExplicitGroup, columns: np.ndarray) -> Subgroup:
    """Subgroup generated by the columns of an (rank x m) coordinate array."""
    cols = np.asarray(columns)
    if cols.size == 0:
        return Subgroup(G, (), ())
    if cols.dtype == object or G.exponent * G.p.bit_length() > 62:
        gens = {tuple(int(x) % m for x, m in zip(col, G.mods)) for col in cols.T.tolist()}
        gens.discard((0,) * G.rank)
        return span(G, sorted(gens))
    mods = np.array(G.mods, dtype=np.int64)
    uniq = np.unique(np.mod(cols.astype(np.int64), mods[:, None]).T, axis=0)
    return span(G, uniq[uniq.any(axis=1)].tolist())


def trivial_subgroup(G: ExplicitGroup) -> Subgroup:
    return Subgroup(G, (), ())


def whole_group(G: ExplicitGroup) -> Subgroup:
    return span(G, [tuple(int(i == j) for j in range(G.rank)) for i in range(G.rank)])


def subgroup_type(H: Subgroup) -> Partition:
    """Partition mu with H isomorphic to G_mu."""
    G = H.ambient
    if not H.basis:
        return Partition()
    e = G.exponent
    scale = [G.p ** (e - x) for x in G.lam]
    emb = [[b * s for b, s in zip(row, scale)] for row in H.basis]
    vals = smith_valuations(MatrixMod.from_ints(RingSpec(G.p, e), emb))
    return Partition(e - v for v in vals if v < e)


def quotient_type(G: ExplicitGroup, H: Subgroup) -> Partition:
    """Partition of G/H from the Smith form of (basis rows; p^lam_i e_i)."""
    if H.ambient != G:
        raise ValueError("subgroup does not lie in this group")
    if G.rank == 0:
        return Partition()
    rel = [list(b) for b in H.basis]
    for i, x in enumerate(G.lam):
        rel.append([G.p**x if j == i else 0 for j in range(G.rank)])
    vals = smith_valuations(MatrixMod.from_ints(RingSpec(G.p, G.exponent + 1), rel))
    return Partition(vals)


# -- per-group cached data -------------------------------------------------

class _GroupData:
    def __init__(self, p: int, lam: Partition):
        self.group = ExplicitGroup(p, lam)
        self.p = p
        self.lam = lam
        n = len(lam)
        self.n = n
        self.mods = np.array([p**x for x in lam], dtype=np.int64)
        strides = np.ones(n, dtype=np.int64)
        for i in range(1, n):
            strides[i] = strides[i - 1] * self.mods[i - 1]
        self.strides = strides
        self.order = int(np.prod(self.mods)) if n else 1
        if self.order > 1 << 22:
            raise BoundsExceeded(f"group of order {self.order} is too large to tabulate")
        idx = np.arange(self.order, dtype=np.int64)
        self.coords = np.stack([(idx // strides[i]) % self.mods[i] for i in range(n)], axis=1) if n else np.zeros((1, 0), dtype=np.int64)
        # parent[x] = x - e_g for the highest nonzero coordinate g
        parent = np.zeros(self.order, dtype=np.int64)
        if n:
            nz = self.coords != 0
            last = n - 1 - nz[:, ::-1].argmax(axis=1)
            parent[:] = idx - np.where(nz.any(axis=1), strides[last], 0)
        self.parent = parent
        self._addtab = None
        self.red = (self.coords % p) @ (p ** np.arange(n, dtype=np.int64)) if n else np.zeros(1, dtype=np.int64)
        self._subgroups = None
        self._hall = None

    def addtab(self) -> np.ndarray:
        if self._addtab is None:
            if self.order <= 1024:
                self._addtab = self.index(self.coords[:, None, :] + self.coords[None, :, :]).reshape(self.order, self.order)
            else:
                self._addtab = np.zeros((1, 1), dtype=np.int64)
        return self._addtab

    def index(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=np.int64) % self.mods @ self.strides if self.n else np.zeros(len(coords), dtype=np.int64)

    def subgroup_elements(self, H: Subgroup) -> np.ndarray:
        if not H.basis:
            return np.zeros(1, dtype=np.int64)
        B = np.array(H.basis, dtype=np.int64)
        grids = np.meshgrid(*[np.arange(r, dtype=np.int64) for r in H.ranges], indexing="ij")
        C = np.stack([g.ravel() for g in grids], axis=1)
        return self.index(C @ B)

    def torsion_candidates(self, k: int) -> np.ndarray:
        """Indices of elements killed by p^k."""
        ok = np.ones(self.order, dtype=bool)
        for i, x in enumerate(self.lam):
            need = max(0, x - k)
            if need:
                ok &= self.coords[:, i] % self.p**need == 0
        return np.nonzero(ok)[0]

    def search_inputs(self):
        n = self.n
        cands = [self.torsion_candidates(x) for x in self.lam]
        width = max((len(c) for c in cands), default=1)
        cand = np.zeros((max(n, 1), width), dtype=np.int64)
        ncand = np.zeros(max(n, 1), dtype=np.int64)
        for i, c in enumerate(cands):
            cand[i, : len(c)] = c
            ncand[i] = len(c)
        qsize = self.p**n
        q = np.arange(qsize, dtype=np.int64)
        qdig = np.stack([(q // self.p**i) % self.p for i in range(n)], axis=1) if n else np.zeros((1, 0), dtype=np.int64)
        return cand, ncand, qdig

    def run_search(self, mode: int, sub_masks=None, sub_basis=None, max_perms: int = 0):
        cand, ncand, qdig = self.search_inputs()
        if sub_masks is None:
            sub_masks = np.zeros((1, self.order), dtype=np.uint8)
            sub_basis = np.full((1, 1), -1, dtype=np.int64)
        counts = np.zeros(max(1, sub_masks.shape[0]), dtype=np.int64)
        perms = np.zeros((max_perms, self.order), dtype=np.int64)
        total = _kernels.aut_search(
            mode, self.p, self.mods, self.strides, self.coords, self.parent, self.addtab(),
            cand, ncand, self.red, qdig, sub_masks, sub_basis, counts, perms,
        )
        return int(total), counts, perms

    def subgroups(self, max_subgroups: int | None = None) -> list[Subgroup]:
        if self._subgroups is None:
            self._subgroups = _enumerate_subgroups(self, max_subgroups)
        return self._subgroups

    def hall_table(self) -> dict[tuple[Partition, Partition], int]:
        if self._hall is None:
            table: dict[tuple[Partition, Partition], int] = {}
            for H in self.subgroups():
                key = (subgroup_type(H), quotient_type(self.group, H))
                table[key] = table.get(key, 0) + 1
            self._hall = table
        return self._hall


@lru_cache(maxsize=256)
def _group_data(p: int, lam: Partition) -> _GroupData:
    return _GroupData(p, lam)


def _enumerate_subgroups(d: _GroupData, max_subgroups: int | None) -> list[Subgroup]:
    G = d.group
    times_p = d.index(d.coords * d.p)
    weights = np.random.default_rng(0x5EED).integers(0, 2**63, size=d.order, dtype=np.int64).astype(np.uint64)
    start = trivial_subgroup(G)
    found = [start]
    elems_of = [np.zeros(1, dtype=np.int64)]
    by_sig: dict[int, list[int]] = {int(weights[0]): [0]}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        S, elems = found[s], elems_of[s]
        inside = np.zeros(d.order, dtype=bool)
        inside[elems] = True
        # any larger subgroup contains some g outside S with p*g inside S
        cand = np.nonzero(~inside & inside[times_p])[0]
        covered = inside.copy()
        for g in cand:
            if covered[g]:
                continue
            parts = [elems]
            shift = d.coords[g]
            for k in range(1, d.p):
                parts.append(d.index(d.coords[elems] + k * shift))
            T_elems = np.sort(np.concatenate(parts))
            covered[T_elems] = True
            sig = int(weights[T_elems].sum())
            hit = False
            for t in by_sig.get(sig, []):
                if np.array_equal(elems_of[t], T_elems):
                    hit = True
                    break
            if hit:
                continue
            T = span(G, list(S.basis) + [tuple(int(x) for x in shift)])
            if T.order != len(T_elems):
                raise AssertionError("canonical basis disagrees with element closure")
            by_sig.setdefault(sig, []).append(len(found))
            found.append(T)
            elems_of.append(T_elems)
            queue.append(len(found) - 1)
            if max_subgroups is not None and len(found) > max_subgroups:
                raise BoundsExceeded(f"{G!r} has more than {max_subgroups} subgroups")
    return sorted(found)


# -- public operations -----------------------------------------------------

def enumerate_subgroups(G: ExplicitGroup, max_order: int = DEFAULT_MAX_ORDER) -> list[Subgroup]:
    """Every subgroup exactly once, sorted by canonical basis."""
    if G.order > max_order:
        raise BoundsExceeded(f"|G| = {G.order} exceeds the subgroup enumeration bound {max_order}")
    return list(G.data().subgroups())


def hall_number(p: int, nu, mu, lam, max_order: int = DEFAULT_MAX_ORDER) -> int:
    """Number of N <= G_nu with N of type mu and G_nu/N of type lam."""
    nu, mu, lam = Partition(nu), Partition(mu), Partition(lam)
    if nu.size != mu.size + lam.size:
        return 0
    G = ExplicitGroup(p, nu)
    if G.order > max_order:
        raise BoundsExceeded(f"|G| = {G.order} exceeds the subgroup enumeration bound {max_order}")
    return G.data().hall_table().get((mu, lam), 0)


def count_automorphisms(G: ExplicitGroup) -> int:
    """|Aut(G)| by counting generator images, without listing automorphisms.

    The images of the generators must have admissible orders and be
    independent modulo pG. Grouping the admissible images of generator i by
    their class in G/pG (uniform fibres, since reduction is a homomorphism
    on the torsion subgroup) turns the count into a sum over the subspaces
    of G/pG spanned so far.
    """
    d = G.data()
    p, n = d.p, d.n
    if n == 0:
        return 1
    q = np.arange(p**n, dtype=np.int64)
    digits = np.stack([(q // p**i) % p for i in range(n)], axis=1)
    qadd = (((digits[:, None, :] + digits[None, :, :]) % p) @ (p ** np.arange(n))).tolist()

    states: dict[frozenset, int] = {frozenset([0]): 1}
    for x in G.lam:
        cand = d.torsion_candidates(x)
        W, fib = np.unique(d.red[cand], return_counts=True)
        if len(set(fib.tolist())) != 1:
            raise AssertionError("reduction fibres are not uniform")
        fibre = int(fib[0])
        Wset = set(W.tolist())
        nxt: dict[frozenset, int] = {}
        for S, c in states.items():
            done = set(S)
            for w in W.tolist():
                if w in done:
                    continue
                mult = [0]
                for _ in range(p - 1):
                    mult.append(qadd[mult[-1]][w])
                T = frozenset(qadd[s][m] for s in S for m in mult)
                new = T - S
                done |= new
                ways = len(new & Wset)
                nxt[T] = nxt.get(T, 0) + c * fibre * ways
        states = nxt
    return sum(states.values())


def enumerate_automorphisms(G: ExplicitGroup, max_aut: int = DEFAULT_MAX_AUT) -> list[tuple[tuple[int, ...], ...]]:
    """All automorphisms as tuples of generator images (coordinates)."""
    perms = automorphism_permutations(G, max_aut)
    d = G.data()
    gens = d.strides[: d.n] if d.n else np.zeros(0, dtype=np.int64)
    out = []
    for row in perms:
        out.append(tuple(tuple(int(c) for c in d.coords[row[g]]) for g in gens))
    return out


def automorphism_permutations(G: ExplicitGroup, max_aut: int = DEFAULT_MAX_AUT) -> np.ndarray:
    """Automorphisms as permutations of element indices, shape (|Aut|, |G|)."""
    bound = count_automorphisms(G)
    if bound > max_aut:
        raise BoundsExceeded(f"|Aut| = {bound} exceeds the bound {max_aut}")
    total, _, perms = G.data().run_search(3, max_perms=bound)
    if total < 0:
        raise AssertionError("automorphism search produced more maps than counted")
    return perms[:total]


def brute_force_aut_count(G: ExplicitGroup, max_aut: int = 2 * 10**7) -> int:
    """|Aut(G)| by walking every admissible generator-image tuple."""
    bound = count_automorphisms(G)
    if bound > max_aut:
        raise BoundsExceeded(f"|Aut| = {bound} exceeds the bound {max_aut}")
    total, _, _ = G.data().run_search(0)
    return total


def _subgroup_arrays(G: ExplicitGroup, subs: Sequence[Subgroup]):
    d = G.data()
    masks = np.zeros((len(subs), d.order), dtype=np.uint8)
    width = max((len(H.basis) for H in subs), default=0) or 1
    basis = np.full((len(subs), width), -1, dtype=np.int64)
    for s, H in enumerate(subs):
        if H.ambient != G:
            raise ValueError("subgroup does not lie in this group")
        masks[s, H.elements()] = 1
        if H.basis:
            basis[s, : len(H.basis)] = d.index(np.array(H.basis, dtype=np.int64))
    return masks, basis


def stabilizer_orders(G: ExplicitGroup, subs: Sequence[Subgroup], max_aut: int = DEFAULT_MAX_AUT) -> list[int]:
    """For each subgroup, the number of automorphisms mapping it onto itself."""
    bound = count_automorphisms(G)
    if bound > max_aut:
        raise BoundsExceeded(f"|Aut| = {bound} exceeds the bound {max_aut}")
    if not subs:
        return []
    masks, basis = _subgroup_arrays(G, subs)
    _, counts, _ = G.data().run_search(1, masks, basis)
    return [int(c) for c in counts]


def flag_aut_order(G: ExplicitGroup, chain: Sequence[Subgroup], max_aut: int = DEFAULT_MAX_AUT) -> int:
    """|{a in Aut(G): a(H_i) = H_i for every i}|, by enumeration."""
    bound = count_automorphisms(G)
    if bound > max_aut:
        raise BoundsExceeded(f"|Aut| = {bound} exceeds the bound {max_aut}")
    if not chain:
        return G.data().run_search(0)[0]
    masks, basis = _subgroup_arrays(G, chain)
    _, counts, _ = G.data().run_search(2, masks, basis)
    return int(counts[0])


# -- orbits and flag classes -----------------------------------------------

def _unit_generators(p: int, k: int) -> list[int]:
    m = p**k
    units = [u for u in range(1, m) if u % p]
    gens: list[int] = []
    reached = {1}
    for u in units:
        if u in reached:
            continue
        gens.append(u)
        frontier = list(reached)
        while frontier:
            new = []
            for x in frontier:
                for g in gens:
                    y = x * g % m
                    if y not in reached:
                        reached.add(y)
                        new.append(y)
            frontier = new
        if len(reached) == len(units):
            break
    return gens


@lru_cache(maxsize=256)
def _elementary_generators(p: int, lam: Partition) -> tuple[np.ndarray, ...]:
    n = len(lam)
    out = []
    for i in range(n):
        for u in _unit_generators(p, lam[i]):
            A = np.eye(n, dtype=np.int64)
            A[i, i] = u
            out.append(A)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            # row j is the image of e_j; its i-th coordinate needs valuation
            # at least lam_i - lam_j for the map to respect orders
            A = np.eye(n, dtype=np.int64)
            A[j, i] = p ** max(0, lam[i] - lam[j])
            out.append(A)
    return tuple(out)


def automorphism_generators(G: ExplicitGroup) -> list[np.ndarray]:
    """Unit scalings and elementary transvections; rows are generator images.

    Used for orbit closure. Whether they generate Aut(G) is checked in the
    test suite against full enumeration.
    """
    return list(_elementary_generators(G.p, G.lam))


def apply_automorphism(G: ExplicitGroup, A: np.ndarray, H: Subgroup) -> Subgroup:
    if not H.basis:
        return H
    mods = np.array(G.mods, dtype=np.int64)
    imgs = (np.array(H.basis, dtype=np.int64) @ A) % mods
    return span(G, imgs.tolist())


def chain_orbit(G: ExplicitGroup, chain: Sequence[Subgroup], max_orbit: int = DEFAULT_MAX_ORBIT) -> set:
    """Aut(G)-orbit of a subgroup chain, as a set of basis-key tuples."""
    gens = automorphism_generators(G)
    start = tuple(chain)
    seen = {tuple(H.basis for H in start)}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for A in gens:
            img = tuple(apply_automorphism(G, A, H) for H in cur)
            key = tuple(H.basis for H in img)
            if key not in seen:
                seen.add(key)
                if len(seen) > max_orbit:
                    raise BoundsExceeded(f"chain orbit exceeds {max_orbit}")
                queue.append(img)
    return seen


def subgroup_orbits(G: ExplicitGroup) -> list[list[int]]:
    """Partition of enumerate_subgroups(G) (by index) into Aut(G)-orbits."""
    subs = G.data().subgroups()
    where = {H.basis: i for i, H in enumerate(subs)}
    gens = automorphism_generators(G)
    orbit_of = [-1] * len(subs)
    orbits: list[list[int]] = []
    for i in range(len(subs)):
        if orbit_of[i] >= 0:
            continue
        orbit_of[i] = len(orbits)
        members = [i]
        frontier = [i]
        while frontier:
            nxt = []
            for s in frontier:
                for A in gens:
                    t = where[apply_automorphism(G, A, subs[s]).basis]
                    if orbit_of[t] < 0:
                        orbit_of[t] = len(orbits)
                        members.append(t)
                        nxt.append(t)
            frontier = nxt
        orbits.append(sorted(members))
    return orbits


@dataclass(frozen=True)
class FlagClass:
    """Isomorphism class of a surjective flag, via its kernel chain in G_nu."""

    p: int
    nu: Partition
    orbit: str

    def to_json(self) -> dict:
        return {"p": self.p, "nu": list(self.nu), "orbit": self.orbit}

    @classmethod
    def from_json(cls, data) -> "FlagClass":
        return cls(int(data["p"]), Partition(data["nu"]), str(data["orbit"]))

    def key(self) -> str:
        return f"{self.p}:{list(self.nu)}:{self.orbit}"


def render_chain(chain_keys) -> str:
    return ";".join("<" + ",".join("(" + ",".join(map(str, b)) + ")" for b in key) + ">" for key in chain_keys)


def parse_chain(G: ExplicitGroup, orbit: str) -> list[Subgroup]:
    """Inverse of render_chain."""
    if not orbit:
        return []
    out = []
    for part in orbit.split(";"):
        body = part.strip()[1:-1]
        gens = []
        if body:
            for tok in body[1:-1].split("),("):
                gens.append(tuple(int(x) for x in tok.split(",")))
        out.append(span(G, gens))
    return out


@lru_cache(maxsize=200_000)
def _canonical_key(p: int, lam: Partition, keys: tuple, max_orbit: int):
    G = ExplicitGroup(p, lam)
    chain = [Subgroup(G, k, _ranges(G, k)) for k in keys]
    orbit = chain_orbit(G, chain, max_orbit)
    return min(orbit), len(orbit)


def _ranges(G: ExplicitGroup, basis) -> tuple[int, ...]:
    return span(G, basis).ranges


def canonicalize_flag(G: ExplicitGroup, chain: Sequence[Subgroup], max_orbit: int = DEFAULT_MAX_ORBIT) -> FlagClass:
    """Class of the flag with kernel chain H_1 <= ... <= H_{k-1} <= G.

    The orbit identifier is the lexicographically least chain of canonical
    bases in the Aut(G)-orbit of the chain.
    """
    for a, b in zip(chain, chain[1:]):
        if not set(a.elements().tolist()) <= set(b.elements().tolist()):
            raise ValueError("chain is not nested")
    best, _ = _canonical_key(G.p, G.lam, tuple(H.basis for H in chain), max_orbit)
    return FlagClass(G.p, G.lam, render_chain(best))


def flag_orbit_size(G: ExplicitGroup, chain: Sequence[Subgroup], max_orbit: int = DEFAULT_MAX_ORBIT) -> int:
    return _canonical_key(G.p, G.lam, tuple(H.basis for H in chain), max_orbit)[1]


def flag_classes(p: int, lam, k: int, max_orbit: int = DEFAULT_MAX_ORBIT) -> list[tuple[FlagClass, list[Subgroup]]]:
    """One representative chain per flag class with top group G_lam."""
    G = ExplicitGroup(p, lam)
    if k <= 1:
        return [(FlagClass(p, G.lam, ""), [])]
    subs = G.data().subgroups()
    contained = _containment(G)
    chains = [[i] for i in range(len(subs))]
    for _ in range(k - 2):
        chains = [c + [j] for c in chains for j in range(len(subs)) if contained[c[-1], j]]
    out = {}
    for c in chains:
        chain = [subs[i] for i in c]
        fc = canonicalize_flag(G, chain, max_orbit)
        if fc not in out:
            out[fc] = parse_chain(G, fc.orbit)
    return sorted(out.items(), key=lambda kv: kv[0].orbit)


def _containment(G: ExplicitGroup) -> np.ndarray:
    subs = G.data().subgroups()
    M = np.stack([H.mask() for H in subs]).astype(np.int64)
    sizes = M.sum(axis=1)
    inter = M @ M.T
    # contained[i, j]: subgroup i lies in subgroup j
    return inter == sizes[:, None]


def count_injective_flags(G: ExplicitGroup, k: int, max_order: int = DEFAULT_MAX_ORDER) -> int:
    """Number of chains H_1 <= ... <= H_{k-1} <= G."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        return 1
    subs = enumerate_subgroups(G, max_order)
    below = _containment(G).T.astype(object)
    counts = np.ones(len(subs), dtype=object)
    for _ in range(k - 2):
        counts = below @ counts
    return int(sum(counts))


# -- homomorphism counting -------------------------------------------------

def count_surjections_with_flag(
    src: ExplicitGroup,
    src_chain: Sequence[Subgroup],
    tgt: ExplicitGroup,
    tgt_chain: Sequence[Subgroup],
    max_homs: int = DEFAULT_MAX_HOMS,
) -> int:
    """Surjections phi: src -> tgt with phi(H_i^src) = H_i^tgt for every i."""
    if len(src_chain) != len(tgt_chain):
        raise ValueError("flags must have the same length")
    if src.p != tgt.p:
        return 0
    if tgt.order > src.order:
        return 0
    ds, dt = src.data(), tgt.data()
    cands = [dt.torsion_candidates(x) for x in src.lam]
    total = 1
    for c in cands:
        total *= len(c)
    if total > max_homs:
        raise BoundsExceeded(f"{total} homomorphisms exceed the budget {max_homs}")
    if tgt.order == 1:
        return 1
    if src.rank == 0:
        return 0
    grids = np.meshgrid(*cands, indexing="ij")
    imgs = np.stack([g.ravel() for g in grids], axis=1)
    nh = imgs.shape[0]
    img_coords = dt.coords[imgs]  # (homs, src rank, tgt rank)
    tmods = dt.mods
    # sum table on target elements
    addT = dt.index(dt.coords[:, None, :] + dt.coords[None, :, :]).reshape(dt.order, dt.order)

    def image_masks(basis) -> np.ndarray:
        S = np.zeros((nh, dt.order), dtype=bool)
        S[:, 0] = True
        for b in basis:
            y = np.zeros((nh, dt.n), dtype=np.int64)
            for i, x in enumerate(b):
                if x:
                    y = y + x * img_coords[:, i, :]
            yi = dt.index(y % tmods) if dt.n else np.zeros(nh, dtype=np.int64)
            step = addT[yi]  # (homs, |T|): x -> x + y
            cur = S.copy()
            for _ in range(dt.order):
                moved = np.zeros_like(S)
                np.put_along_axis(moved, step, cur, axis=1)
                if not (moved & ~S).any():
                    break
                S |= moved
                cur = moved
        return S

    ok = np.ones(nh, dtype=bool)
    pairs = list(zip(src_chain, tgt_chain)) + [(whole_group(src), whole_group(tgt))]
    for Hs, Ht in pairs:
        target_mask = Ht.mask()
        S = image_masks(Hs.basis)
        ok &= (S == target_mask[None, :]).all(axis=1)
        if not ok.any():
            return 0
    return int(ok.sum())
