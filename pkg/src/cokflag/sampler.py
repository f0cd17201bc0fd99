"""Entry distributions, matrix sampling and the sample-to-flag pipeline.

Randomness is organised in fixed-size chunks of samples. Chunk c draws from
its own stream, seeded by (seed, stream, c), so results do not depend on how
chunks are spread over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .groups import (
    DEFAULT_MAX_HOMS,
    DEFAULT_MAX_ORBIT,
    BoundsExceeded,
    ExplicitGroup,
    FlagClass,
    Subgroup,
    canonicalize_flag,
    count_surjections_with_flag,
    flag_classes,
    span_columns,
    subgroup_type,
)
from .linalg import (
    SATURATED,
    MatrixMod,
    RingSpec,
    is_prime,
    matmul,
    pack_gf2,
    product_chain,
    smith_valuations,
    snf,
    valuations_to_type,
)
from .partitions import Partition, partitions_of
from .stats import Histogram


class DegenerateDistribution(ValueError):
    pass


class _Degenerate:
    def __repr__(self) -> str:
        return "DEGENERATE"


DEGENERATE = _Degenerate()


# -- entry distributions ---------------------------------------------------

@dataclass(frozen=True)
class EntryDistribution:
    """Integer-valued entry law: uniform on lo..hi, finite support, or Haar proxy."""

    kind: str
    lo: int = 0
    hi: int = 0
    values: tuple[int, ...] = ()
    weights: tuple[Fraction, ...] = ()
    p: int = 0
    N: int = 0

    def __post_init__(self):
        if self.kind == "uniform":
            if self.hi < self.lo:
                raise ValueError("empty range")
            if max(abs(self.lo), abs(self.hi)) >= 2**62:
                raise ValueError("range exceeds 62 bits")
        elif self.kind == "finite":
            if not self.values or len(self.values) != len(self.weights):
                raise ValueError("values and weights must be nonempty and of equal length")
            if any(w <= 0 for w in self.weights):
                raise ValueError("weights must be positive")
            if sum(self.weights) != 1:
                raise ValueError("weights must sum to 1")
            if max(abs(v) for v in self.values) >= 2**62:
                raise ValueError("values exceed 62 bits")
        elif self.kind == "haar":
            RingSpec(self.p, self.N)
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def uniform(cls, lo: int, hi: int) -> "EntryDistribution":
        return cls("uniform", lo=int(lo), hi=int(hi))

    @classmethod
    def finite(cls, values: Sequence[int], weights: Sequence) -> "EntryDistribution":
        return cls("finite", values=tuple(int(v) for v in values), weights=tuple(Fraction(w) for w in weights))

    @classmethod
    def haar(cls, p: int, N: int) -> "EntryDistribution":
        return cls("haar", p=int(p), N=int(N))

    def spec(self) -> str:
        if self.kind == "uniform":
            return f"uniform:{self.lo}..{self.hi}"
        if self.kind == "finite":
            if len(self.values) == 1:
                return f"const:{self.values[0]}"
            return "finite:" + ",".join(map(str, self.values)) + ":" + ",".join(map(str, self.weights))
        return f"haar:{self.p}:{self.N}"

    def _range(self) -> tuple[int, int]:
        if self.kind == "haar":
            return 0, self.p**self.N - 1
        return self.lo, self.hi

    def residue_masses(self, p: int) -> dict[int, Fraction]:
        """Exact law of the entry modulo p."""
        out: dict[int, Fraction] = {}
        if self.kind == "finite":
            for v, w in zip(self.values, self.weights):
                out[v % p] = out.get(v % p, Fraction(0)) + w
            return out
        lo, hi = self._range()
        total = hi - lo + 1
        for r in range(p):
            cnt = (hi - r) // p - (lo - 1 - r) // p
            if cnt:
                out[r] = Fraction(cnt, total)
        return out

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Integer draws as int64 (bit patterns of residues mod 2**64 for haar:2:64)."""
        if self.kind == "finite":
            if len(self.values) == 1:
                return np.full(shape, self.values[0], dtype=np.int64)
            D = math.lcm(*(w.denominator for w in self.weights))
            counts = [int(w * D) for w in self.weights]
            idx = rng.integers(0, D, size=shape, dtype=_small_dtype(0, D - 1))
            vals = np.asarray(self.values, dtype=np.int64)
            if D <= 1 << 20:
                return np.repeat(vals, counts)[idx]
            return vals[np.searchsorted(np.cumsum(counts), idx, side="right")]
        lo, hi = self._range()
        if self.kind == "haar" and hi >= 2**63:
            return rng.integers(0, 2**64, size=shape, dtype=np.uint64, endpoint=False).view(np.int64)
        return rng.integers(lo, hi + 1, size=shape, dtype=_small_dtype(lo, hi)).astype(np.int64)


def _small_dtype(lo: int, hi: int):
    for dt in (np.int8, np.int16, np.int32, np.int64):
        info = np.iinfo(dt)
        if info.min <= lo and hi < info.max:
            return dt
    return np.int64


def parse_distribution(text: str, p: int | None = None) -> EntryDistribution:
    """Parse uniform:lo..hi, const:v, finite:v1,v2:w1,w2, haar:N or haar:p:N."""
    kind, _, rest = text.strip().partition(":")
    try:
        if kind == "uniform":
            lo, hi = rest.split("..")
            return EntryDistribution.uniform(int(lo), int(hi))
        if kind == "const":
            return EntryDistribution.finite([int(rest)], [1])
        if kind in ("finite", "bernoulli"):
            vals, _, ws = rest.partition(":")
            values = [int(v) for v in vals.split(",")]
            weights = [Fraction(w) for w in ws.split(",")] if ws else [Fraction(1, len(values))] * len(values)
            return EntryDistribution.finite(values, weights)
        if kind == "haar":
            parts = rest.split(":")
            if len(parts) == 2:
                return EntryDistribution.haar(int(parts[0]), int(parts[1]))
            if p is None:
                raise ValueError("haar:N needs a prime")
            return EntryDistribution.haar(p, int(parts[0]))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad distribution {text!r}: {exc}") from exc
    raise ValueError(f"unknown distribution {text!r}")


def alpha_of(dist: EntryDistribution, p: int):
    """min(1/2, 1 - largest residue-class mass mod p), or DEGENERATE."""
    top = max(dist.residue_masses(p).values())
    if top == 1:
        return DEGENERATE
    return min(Fraction(1, 2), 1 - top)


def check_nondegenerate(dist: EntryDistribution, primes: Iterable[int]) -> None:
    for p in primes:
        if alpha_of(dist, p) is DEGENERATE:
            raise DegenerateDistribution(f"{dist.spec()} is constant modulo {p}")


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def sample_matrix(dist: EntryDistribution, n: int, ring: RingSpec, rng: np.random.Generator) -> MatrixMod:
    check_nondegenerate(dist, [ring.p])
    if n == 0:
        return MatrixMod(ring, np.zeros((0, 0), dtype=np.int64))
    return MatrixMod.from_ints(ring, dist.draw(rng, (n, n)))


# -- the flag pipeline -----------------------------------------------------

@dataclass(frozen=True)
class PrecisionPolicy:
    start: int = 8
    factor: int = 2
    max: int = 64

    def schedule(self, p: int) -> list[int]:
        cap = 64 if p == 2 else max(1, math.floor(62 * math.log(2) / math.log(p)))
        while p != 2 and p**cap >= 2**63:
            cap -= 1
        out = []
        N = self.start
        while True:
            N = min(N, self.max, cap)
            if out and N <= out[-1]:
                break
            out.append(N)
            N *= self.factor
        return out


@dataclass(frozen=True)
class Bounds:
    max_order: int = 4096
    max_orbit: int = DEFAULT_MAX_ORBIT
    max_homs: int = DEFAULT_MAX_HOMS


@dataclass(frozen=True)
class SampleRecord:
    """One sample of (M_1, ..., M_k) at a single prime.

    ``types[i]`` is the type of cok(M_1...M_{i+1}), ``factor_types[i]`` that
    of cok(M_{i+1}). ``flag`` is None when canonicalization was skipped.
    """

    index: int
    p: int
    N: int
    saturated: bool
    types: tuple = ()
    factor_types: tuple = ()
    flag: FlagClass | None = None
    kernel_type: Partition | None = None

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "p": self.p,
            "N": self.N,
            "saturated": self.saturated,
            "types": [list(t) for t in self.types],
            "factor_types": [list(t) for t in self.factor_types],
            "flag": None if self.flag is None else self.flag.to_json(),
            "kernel_type": None if self.kernel_type is None else list(self.kernel_type),
        }


def _explicit_flag(full, partial, k: int, p: int):
    """Top group and kernel chain from the Smith form of the full product."""
    vals = full.d
    rows = [j for j in range(len(vals)) if vals[j] > 0][::-1]
    G = ExplicitGroup(p, [vals[j] for j in rows])
    if not rows:
        return G, [span_columns(G, np.zeros((0, 0), dtype=np.int64)) for _ in range(k - 1)]
    chain = []
    for i in range(1, k):
        E = matmul(full.U, partial[k - i - 1]).entries[rows]
        if p == 2:
            # masking also reads off residues of wrapped 2**64 patterns
            masks = np.array([(1 << vals[j]) - 1 for j in rows], dtype=np.int64)
            C = E & masks[:, None]
        else:
            C = np.mod(E, np.array([p ** vals[j] for j in rows], dtype=np.int64)[:, None])
        chain.append(span_columns(G, C))
    return G, chain


def flag_from_ints(
    ints: np.ndarray,
    p: int,
    policy: PrecisionPolicy = PrecisionPolicy(),
    bounds: Bounds = Bounds(),
    index: int = 0,
    canonicalize: bool = True,
):
    """Run the pipeline on integer matrices ``ints`` of shape (k, n, n).

    Returns (record, G, chain); G and chain are None for saturated samples.
    """
    k = ints.shape[0]
    N = policy.schedule(p)[-1]
    for N in policy.schedule(p):
        ring = RingSpec(p, N)
        mats = [MatrixMod.from_ints(ring, M) for M in ints]
        partial = product_chain(mats)
        ftypes = tuple(valuations_to_type(smith_valuations(M), N) for M in mats)
        full = snf(partial[-1])
        types = [valuations_to_type(smith_valuations(P), N) for P in partial[1:-1]]
        types = [ftypes[0]][: k - 1] + types + [valuations_to_type(full.d, N)]
        if any(t is SATURATED for t in (*ftypes, *types)):
            continue
        G, chain = _explicit_flag(full, partial, k, p)
        flag = None
        if canonicalize and G.order <= bounds.max_order:
            try:
                flag = canonicalize_flag(G, chain, bounds.max_orbit)
            except BoundsExceeded:
                flag = None
        ktype = subgroup_type(chain[0]) if k == 2 else None
        rec = SampleRecord(index, p, N, False, tuple(types), ftypes, flag, ktype)
        return rec, G, chain
    return SampleRecord(index, p, N, True), None, None


def sample_flag(
    dist: EntryDistribution,
    n: int,
    k: int,
    p,
    policy: PrecisionPolicy = PrecisionPolicy(),
    rng: np.random.Generator | None = None,
    bounds: Bounds = Bounds(),
    index: int = 0,
):
    """Sample k matrices and return the SampleRecord of their cokernel flag.

    For a tuple of primes the same integer draws feed one pipeline per prime
    and a tuple of records is returned.
    """
    primes = tuple(p) if isinstance(p, (tuple, list)) else (p,)
    check_nondegenerate(dist, primes)
    rng = rng if rng is not None else stream_rng(0)
    ints = dist.draw(rng, (k, n, n))
    recs = tuple(flag_from_ints(ints, q, policy, bounds, index)[0] for q in primes)
    return recs if isinstance(p, (tuple, list)) else recs[0]


# -- experiments -----------------------------------------------------------

MODES = ("flag", "corank", "convolution", "moment")


@dataclass(frozen=True)
class Experiment:
    """Everything that determines a simulation run."""

    mode: str
    dist: EntryDistribution
    n: int
    k: int
    primes: tuple[int, ...]
    samples: int
    seed: int
    policy: PrecisionPolicy = PrecisionPolicy()
    bounds: Bounds = Bounds()
    condition: tuple | None = None
    moment_max_order: int = 4
    stream: int = 0
    emit_samples: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.n < 0 or self.k < 1 or self.samples < 0:
            raise ValueError("need n >= 0, k >= 1, samples >= 0")
        if not self.primes or not all(is_prime(p) for p in self.primes):
            raise ValueError("primes must be a nonempty list of primes")
        if self.mode in ("corank", "convolution") and (self.k != 2 or len(self.primes) != 1):
            raise ValueError(f"{self.mode} mode needs k = 2 and a single prime")
        if self.mode == "moment" and len(self.primes) != 1:
            raise ValueError("moment mode needs a single prime")
        if self.condition is not None:
            object.__setattr__(self, "condition", tuple(Partition(x) for x in self.condition))

    @property
    def chunk_size(self) -> int:
        return int(min(4096, max(8, 2**21 // max(1, self.k * self.n * self.n))))

    @property
    def chunks(self) -> int:
        return -(-self.samples // self.chunk_size)


@dataclass
class ChunkResult:
    histogram: Histogram = field(default_factory=Histogram)
    skipped: int = 0
    moment_sums: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def merge(self, other: "ChunkResult") -> "ChunkResult":
        from .stats import merge

        sums = dict(self.moment_sums)
        for key, (s, s2, c) in other.moment_sums.items():
            a, b, d = sums.get(key, (0, 0, 0))
            sums[key] = (a + s, b + s2, d + c)
        return ChunkResult(merge(self.histogram, other.histogram), self.skipped + other.skipped, sums,
                           self.records + other.records)


def moment_targets(p: int, k: int, max_order: int) -> list[tuple[FlagClass, ExplicitGroup, list[Subgroup]]]:
    out = []
    m = 0
    while p**m <= max_order:
        for lam in partitions_of(m):
            for fc, chain in flag_classes(p, lam, k):
                out.append((fc, ExplicitGroup(p, lam), chain))
        m += 1
    return out


def _parity_bits(dist: EntryDistribution, rng: np.random.Generator, shape, n: int) -> np.ndarray:
    """Packed residues mod 2 drawn from the exact parity law of ``dist``."""
    q = dist.residue_masses(2).get(1, Fraction(0))
    words = pack_gf2(np.zeros((1, n), dtype=np.uint8)).shape[-1]
    if q == Fraction(1, 2):
        W = rng.integers(0, 2**64, size=tuple(shape) + (n, words), dtype=np.uint64)
        keep = np.zeros(words, dtype=np.uint64)
        for w in range(words):
            bits = min(64, max(0, n - 64 * w))
            keep[w] = np.uint64(2**64 - 1) if bits == 64 else np.uint64((1 << bits) - 1)
        return W & keep
    # 32-bit threshold: the bit is 1 with probability q up to 2**-32
    thresh = np.uint64(round(q * 2**32))
    u = rng.integers(0, 2**32, size=tuple(shape) + (n, n), dtype=np.uint64)
    return pack_gf2((u < thresh).astype(np.uint8))


def _coranks(ints: np.ndarray, p: int) -> np.ndarray:
    """Coranks mod p of a stack of square integer matrices."""
    n = ints.shape[-1]
    flat = ints.reshape(-1, n, n)
    if n == 0:
        return np.zeros(flat.shape[0], dtype=np.int64)
    if p == 2:
        W = pack_gf2((flat & 1).astype(np.uint8))
        return np.array([n - _kernels.rank_gf2_packed(W[i].copy(), n) for i in range(flat.shape[0])])
    R = np.mod(flat, p)
    return np.array([n - _kernels.rank_mod_p(R[i].copy(), p) for i in range(flat.shape[0])])


def _batch_types(mats: np.ndarray, p: int, policy: PrecisionPolicy) -> list:
    """Cokernel types of a stack of integer square matrices, escalating N as needed."""
    out: list = [SATURATED] * mats.shape[0]
    todo = np.arange(mats.shape[0])
    for N in policy.schedule(p):
        if not len(todo):
            break
        ring = RingSpec(p, N)
        red = ring.reduce(mats[todo])
        if ring.compiled:
            vals = _kernels.batch_valuations(red, *ring.kernel_args())
        else:
            vals = np.array([smith_valuations(MatrixMod(ring, r)) for r in red])
        sat = (vals >= N).any(axis=1) if vals.size else np.zeros(len(todo), dtype=bool)
        for j, i in enumerate(todo):
            if not sat[j]:
                out[i] = Partition(vals[j])
        todo = todo[sat]
    return out


def _product_types(A: np.ndarray, B: np.ndarray, p: int, policy: PrecisionPolicy) -> list:
    """Types of cok(A_i B_i); the product is recomputed at each precision."""
    out: list = [SATURATED] * A.shape[0]
    todo = np.arange(A.shape[0])
    for N in policy.schedule(p):
        if not len(todo):
            break
        ring = RingSpec(p, N)
        if ring.compiled:
            args = ring.kernel_args()
            C = _kernels.batch_matmul_mod(ring.reduce(A[todo]), ring.reduce(B[todo]), args[0], args[2], args[3])
            vals = _kernels.batch_valuations(C, *args)
        else:
            vals = np.array([
                smith_valuations(matmul(MatrixMod.from_ints(ring, A[i]), MatrixMod.from_ints(ring, B[i])))
                for i in todo
            ])
        sat = (vals >= N).any(axis=1) if vals.size else np.zeros(len(todo), dtype=bool)
        for j, i in enumerate(todo):
            if not sat[j]:
                out[i] = Partition(vals[j])
        todo = todo[sat]
    return out


def _chunk_corank(exp: Experiment, rng, count: int, start: int) -> ChunkResult:
    res = ChunkResult()
    p, n = exp.primes[0], exp.n
    if p == 2 and n > 0:
        W = _parity_bits(exp.dist, rng, (count, 2), n)
        tri = _kernels.batch_corank_triples_gf2(
            np.ascontiguousarray(W[:, 0]), np.ascontiguousarray(W[:, 1]), n)
    else:
        ints = exp.dist.draw(rng, (count, 2, n, n))
        if n == 0:
            tri = np.zeros((count, 3), dtype=np.int64)
        else:
            R = np.mod(ints, p)
            tri = _kernels.batch_corank_triples(R[:, 0].copy(), R[:, 1].copy(), p)
    for i in range(count):
        key = (int(tri[i, 0]), int(tri[i, 1]), int(tri[i, 2]))
        res.histogram.add(key)
        if exp.emit_samples:
            res.records.append({"index": start + i, "p": p, "coranks": list(key)})
    return res


def _chunk_convolution(exp: Experiment, rng, count: int, start: int) -> ChunkResult:
    """Histogram of (type M1, type M2, type M1 M2), restricted to the condition if set.

    Under a condition, coranks mod p filter first, and M2 is only reduced
    when M1 already has the required type.
    """
    res = ChunkResult()
    p, n, cond = exp.primes[0], exp.n, exp.condition
    ints = exp.dist.draw(rng, (count, 2, n, n))
    sel = np.arange(count)
    if cond is not None:
        cr = _coranks(ints, p).reshape(count, 2)
        sel = np.nonzero((cr[:, 0] == len(cond[0])) & (cr[:, 1] == len(cond[1])))[0]
    hs = _batch_types(ints[sel, 0], p, exp.policy)
    need = [j for j, h in enumerate(hs) if h is not SATURATED and (cond is None or h == cond[0])]
    ks = dict(zip(need, _batch_types(ints[sel[need], 1], p, exp.policy)))
    keep = [j for j in need if ks[j] is not SATURATED and (cond is None or ks[j] == cond[1])]
    gs = dict(zip(keep, _product_types(ints[sel[keep], 0], ints[sel[keep], 1], p, exp.policy)))
    saturated = sum(h is SATURATED for h in hs) + sum(t is SATURATED for t in ks.values())
    res.histogram.exclude(saturated)
    for j in keep:
        if gs[j] is SATURATED:
            res.histogram.exclude()
        else:
            res.histogram.add((hs[j], ks[j], gs[j]))
    res.skipped = count - len(keep) - saturated
    if exp.emit_samples:
        show = lambda t: None if t is None or t is SATURATED else list(t)
        for j in range(len(sel)):
            res.records.append({
                "index": start + int(sel[j]), "p": p,
                "factor_types": [show(hs[j]), show(ks.get(j))],
                "type": show(gs.get(j)),
            })
    return res


def _chunk_k1(exp: Experiment, rng, count: int, start: int) -> ChunkResult:
    res = ChunkResult()
    p, n = exp.primes[0], exp.n
    ints = exp.dist.draw(rng, (count, n, n))
    cr = _coranks(ints, p) if n else np.zeros(count, dtype=np.int64)
    sel = np.nonzero(cr > 0)[0]
    types: list = [Partition()] * count
    for i, t in zip(sel, _batch_types(ints[sel], p, exp.policy)):
        types[i] = t
    for i, t in enumerate(types):
        if t is SATURATED:
            res.histogram.exclude()
        else:
            res.histogram.add(t)
        if exp.emit_samples:
            rec = SampleRecord(start + i, p, 0, t is SATURATED, () if t is SATURATED else (t,))
            res.records.append(rec.to_json())
    return res


def _chunk_general(exp: Experiment, rng, count: int, start: int, targets) -> ChunkResult:
    res = ChunkResult()
    n, k = exp.n, exp.k
    ints = exp.dist.draw(rng, (count, k, n, n))
    for i in range(count):
        idx = start + i
        outs = [flag_from_ints(ints[i], p, exp.policy, exp.bounds, idx, exp.mode == "flag") for p in exp.primes]
        recs = [o[0] for o in outs]
        if exp.emit_samples:
            res.records.extend(r.to_json() for r in recs)
        if any(r.saturated for r in recs):
            res.histogram.exclude()
            continue
        if exp.mode == "flag":
            if all(r.flag is not None for r in recs):
                key = recs[0].flag if len(recs) == 1 else tuple(r.flag for r in recs)
            else:
                key = ("types",) + tuple((r.p, r.types) for r in recs)
            res.histogram.add(key)
            continue
        _, G, chain = outs[0]
        try:
            counts = [count_surjections_with_flag(G, chain, T, Tc, exp.bounds.max_homs) for _, T, Tc in targets]
        except BoundsExceeded:
            res.histogram.exclude()
            continue
        res.histogram.add(recs[0].types)
        for (fc, _, _), c in zip(targets, counts):
            s, s2, m = res.moment_sums.get(fc, (0, 0, 0))
            res.moment_sums[fc] = (s + c, s2 + c * c, m + 1)
    return res


def run_chunk(exp: Experiment, chunk: int) -> ChunkResult:
    start = chunk * exp.chunk_size
    count = min(exp.chunk_size, exp.samples - start)
    rng = stream_rng(exp.seed, exp.stream, chunk)
    if exp.mode == "corank":
        return _chunk_corank(exp, rng, count, start)
    if exp.mode == "convolution":
        return _chunk_convolution(exp, rng, count, start)
    if exp.mode == "flag" and exp.k == 1 and len(exp.primes) == 1:
        return _chunk_k1(exp, rng, count, start)
    targets = moment_targets(exp.primes[0], exp.k, exp.moment_max_order) if exp.mode == "moment" else None
    return _chunk_general(exp, rng, count, start, targets)


def _run_chunk_args(args) -> ChunkResult:
    return run_chunk(*args)


def run_experiment(exp: Experiment, threads: int = 1) -> ChunkResult:
    """Run all chunks and merge them in chunk order."""
    check_nondegenerate(exp.dist, exp.primes)
    out = ChunkResult()
    jobs = [(exp, c) for c in range(exp.chunks)]
    if threads <= 1 or len(jobs) <= 1:
        for job in jobs:
            out = out.merge(run_chunk(*job))
        return out
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(_run_chunk_args, jobs, chunksize=max(1, len(jobs) // (4 * threads))):
            out = out.merge(part)
    return out


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    samples: int
    excluded: int


def moment_estimates(result: ChunkResult) -> dict:
    out = {}
    for key, (s, s2, m) in result.moment_sums.items():
        if m == 0:
            out[key] = MomentEstimate(float("nan"), float("nan"), 0, result.histogram.excluded)
            continue
        mean = s / m
        var = (s2 - s * s / m) / (m - 1) if m > 1 else 0.0
        out[key] = MomentEstimate(mean, math.sqrt(max(var, 0.0) / m), m, result.histogram.excluded)
    return out


def estimate_moment(
    dist: EntryDistribution,
    n: int,
    k: int,
    p: int,
    target: FlagClass,
    samples: int,
    seed: int = 0,
    threads: int = 1,
    max_order: int | None = None,
) -> MomentEstimate:
    """Monte Carlo mean of the number of flag surjections onto ``target``."""
    top = ExplicitGroup(p, target.nu).order
    exp = Experiment("moment", dist, n, k, (p,), samples, seed,
                     moment_max_order=max(top, max_order or 0))
    res = run_experiment(exp, threads)
    est = moment_estimates(res)
    if target not in est:
        return MomentEstimate(float("nan"), float("nan"), 0, res.histogram.excluded)
    return est[target]
