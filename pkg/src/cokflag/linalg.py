"""Exact linear algebra over Z/p^N and F_p.

Matrices are stored as int64 arrays of residues. Powers of two up to 2**64
are handled with wrapping arithmetic; odd moduli below 2**31 go through the
compiled kernels and larger odd moduli (up to 2**63) through a pure-Python
fallback.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .partitions import Partition

MAX_MODULUS_BITS = 63


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class RingSpec:
    """The residue ring Z/p^N."""

    p: int
    N: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.N < 1:
            raise ValueError("precision exponent N must be >= 1")
        # wrapping int64 arithmetic is exact modulo 2**64
        if self.p == 2:
            if self.N > 64:
                raise ValueError(f"modulus 2^{self.N} exceeds the 64-bit residue guard")
        elif self.modulus >= 2**MAX_MODULUS_BITS:
            raise ValueError(f"modulus {self.p}^{self.N} exceeds the 63-bit residue guard")

    @property
    def modulus(self) -> int:
        return self.p**self.N

    @property
    def mask(self) -> int:
        # int64 bit pattern of 2**N - 1 (all ones when N == 64)
        if self.p != 2:
            return 0
        return -1 if self.N >= 64 else (1 << self.N) - 1

    @property
    def compiled(self) -> bool:
        return self.p == 2 or self.modulus < _kernels.ODD_MODULUS_LIMIT

    def kernel_args(self) -> tuple[int, int, int, int]:
        # the modulus is unused on the masked power-of-two path
        m = 0 if self.p == 2 else self.modulus
        return self.p, self.N, m, self.mask

    def reduce(self, values) -> np.ndarray:
        """Reduce integers (array-like of any int dtype or Python ints)."""
        arr = np.asarray(values)
        if arr.dtype == object or arr.dtype.kind not in "iu":
            arr = np.array([int(x) % self.modulus for x in arr.ravel()], dtype=object).reshape(arr.shape)
            if self.p == 2 and self.N == 64:
                return arr.astype(np.uint64).view(np.int64)
            return arr.astype(np.int64)
        if self.p == 2:
            return arr.astype(np.int64) & self.mask
        return np.mod(arr.astype(np.int64), self.modulus)


class Saturated:
    """Marker for a cokernel whose Smith form has an entry vanishing mod p^N."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "SATURATED"

    def __reduce__(self):
        return (Saturated, ())


SATURATED = Saturated()


@dataclass(frozen=True, eq=False)
class MatrixMod:
    ring: RingSpec
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            raise ValueError("entries must be a 2-d array")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_ints(cls, ring: RingSpec, rows) -> "MatrixMod":
        arr = np.asarray(rows)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        return cls(ring, ring.reduce(arr))

    @classmethod
    def identity(cls, ring: RingSpec, n: int) -> "MatrixMod":
        return cls(ring, np.eye(n, dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def residues(self) -> list[list[int]]:
        """Entries as Python ints in [0, p^N)."""
        m = self.ring.modulus
        return [[int(x) % m for x in row] for row in self.entries.tolist()]

    def __matmul__(self, other: "MatrixMod") -> "MatrixMod":
        return matmul(self, other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MatrixMod)
            and self.ring == other.ring
            and self.entries.shape == other.entries.shape
            and bool(np.array_equal(self.entries, other.entries))
        )

    def __hash__(self):
        return hash((self.ring, self.entries.shape, self.entries.tobytes()))

    def to_json(self) -> dict:
        return {
            "p": self.ring.p,
            "N": self.ring.N,
            "rows": self.rows,
            "cols": self.cols,
            "entries": [x for row in self.residues() for x in row],
        }

    @classmethod
    def from_json(cls, data) -> "MatrixMod":
        if isinstance(data, str):
            data = json.loads(data)
        ring = RingSpec(int(data["p"]), int(data["N"]))
        flat = [int(x) for x in data["entries"]]
        rows, cols = int(data["rows"]), int(data["cols"])
        if len(flat) != rows * cols:
            raise ValueError("entry count does not match dimensions")
        arr = np.array(flat, dtype=object).reshape(rows, cols)
        return cls(ring, ring.reduce(arr))


@dataclass(frozen=True)
class SnfResult:
    """U @ M @ V = diag(p**d_i), with d_i = N standing for a zero entry."""

    d: tuple[int, ...]
    U: MatrixMod
    V: MatrixMod

    def diagonal(self) -> MatrixMod:
        ring = self.U.ring
        D = np.zeros((self.U.rows, self.V.rows), dtype=np.int64)
        for i, v in enumerate(self.d):
            if v < ring.N:
                D[i, i] = ring.p**v
        return MatrixMod(ring, D)


# -- pure-Python fallback -------------------------------------------------

def _valuation(x: int, p: int, N: int) -> int:
    if x == 0:
        return N
    v = 0
    while v < N and x % p == 0:
        x //= p
        v += 1
    return v


def _snf_python(A: list[list[int]], p: int, N: int, transforms: bool):
    m = p**N
    rows = len(A)
    cols = len(A[0]) if rows else 0
    A = [[x % m for x in row] for row in A]
    U = [[int(i == j) for j in range(rows)] for i in range(rows)] if transforms else None
    V = [[int(i == j) for j in range(cols)] for i in range(cols)] if transforms else None
    r = min(rows, cols)
    vals = [N] * r
    for k in range(r):
        best = (N, -1, -1)
        for i in range(k, rows):
            for j in range(k, cols):
                if A[i][j]:
                    v = _valuation(A[i][j], p, N)
                    if v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best[0] == 0:
                break
        v, i, j = best
        if i < 0:
            break
        vals[k] = v
        A[k], A[i] = A[i], A[k]
        if transforms:
            U[k], U[i] = U[i], U[k]
        for row in A:
            row[k], row[j] = row[j], row[k]
        if transforms:
            for row in V:
                row[k], row[j] = row[j], row[k]
        pv = p**v
        inv = pow(A[k][k] // pv, -1, m)
        A[k] = [x * inv % m for x in A[k]]
        if transforms:
            U[k] = [x * inv % m for x in U[k]]
        for i2 in range(k + 1, rows):
            if A[i2][k]:
                f = A[i2][k] // pv
                A[i2] = [(a - f * b) % m for a, b in zip(A[i2], A[k])]
                if transforms:
                    U[i2] = [(a - f * b) % m for a, b in zip(U[i2], U[k])]
        for j2 in range(k + 1, cols):
            if A[k][j2]:
                f = A[k][j2] // pv
                A[k][j2] = 0
                if transforms:
                    for row in V:
                        row[j2] = (row[j2] - f * row[k]) % m
    return vals, U, V


# -- public operations -----------------------------------------------------

def snf(M: MatrixMod) -> SnfResult:
    """Smith normal form over Z/p^N by minimum-valuation pivoting."""
    ring = M.ring
    if M.rows == 0 or M.cols == 0:
        return SnfResult((), MatrixMod.identity(ring, M.rows), MatrixMod.identity(ring, M.cols))
    if ring.compiled:
        vals, U, V = _kernels.snf_full(M.entries.copy(), *ring.kernel_args())
        return SnfResult(tuple(int(v) for v in vals), MatrixMod(ring, U), MatrixMod(ring, V))
    vals, U, V = _snf_python(M.residues(), ring.p, ring.N, True)
    return SnfResult(tuple(vals), MatrixMod.from_ints(ring, U), MatrixMod.from_ints(ring, V))


def smith_valuations(M: MatrixMod) -> tuple[int, ...]:
    """Diagonal valuations only (skips the transforms)."""
    ring = M.ring
    if M.rows == 0 or M.cols == 0:
        return ()
    if ring.compiled:
        vals = _kernels.snf_valuations(M.entries.copy(), *ring.kernel_args())
        return tuple(int(v) for v in vals)
    return tuple(_snf_python(M.residues(), ring.p, ring.N, False)[0])


def valuations_to_type(vals: Sequence[int], N: int):
    """Cokernel partition from square-matrix Smith valuations, or SATURATED."""
    if any(v >= N for v in vals):
        return SATURATED
    return Partition(vals)


def cokernel_type(M: MatrixMod):
    """Type of the p-part of cok(M), or SATURATED when precision is too low."""
    if M.rows != M.cols:
        raise ValueError("cokernel_type expects a square matrix")
    return valuations_to_type(smith_valuations(M), M.ring.N)


def matmul(A: MatrixMod, B: MatrixMod) -> MatrixMod:
    if A.ring != B.ring:
        raise ValueError("ring mismatch")
    if A.cols != B.rows:
        raise ValueError(f"cannot multiply {A.rows}x{A.cols} by {B.rows}x{B.cols}")
    ring = A.ring
    if ring.compiled:
        p, _, m, mask = ring.kernel_args()
        return MatrixMod(ring, _kernels.matmul_mod(A.entries, B.entries, p, m, mask))
    a, b, m = A.residues(), B.residues(), ring.modulus
    cols = list(zip(*b))
    out = [[sum(x * y for x, y in zip(row, col)) % m for col in cols] for row in a]
    return MatrixMod.from_ints(ring, np.array(out, dtype=object).reshape(A.rows, B.cols))


def product_chain(mats: Sequence[MatrixMod]) -> list[MatrixMod]:
    """Left-to-right partial products [M1, M1 M2, ..., M1...Mk]."""
    if not mats:
        return []
    ring, shape = mats[0].ring, mats[0].entries.shape
    for M in mats:
        if M.ring != ring:
            raise ValueError("all matrices must share one ring")
        if M.entries.shape != shape or shape[0] != shape[1]:
            raise ValueError("all matrices must be square of the same size")
    out = [mats[0]]
    for M in mats[1:]:
        out.append(matmul(out[-1], M))
    return out


def pack_gf2(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix (or a stack of them) row-wise into uint64 words.

    The word count is padded to a multiple of 4, as the rank kernel expects.
    """
    bits = np.asarray(bits)
    ncols = bits.shape[-1]
    words = -(-max(ncols, 1) // 256) * 4
    padded = np.zeros(bits.shape[:-1] + (words * 64,), dtype=np.uint8)
    padded[..., :ncols] = bits & 1
    return np.packbits(padded, axis=-1, bitorder="little").view(np.uint64)


def rank_mod_p(M, p: int | None = None) -> int:
    """Rank over F_p of an integer matrix (or a MatrixMod, reduced mod p)."""
    if isinstance(M, MatrixMod):
        p = M.ring.p if p is None else p
        arr = M.entries
        if M.ring.p == 2:
            arr = arr & 1
    else:
        if p is None:
            raise ValueError("p is required for plain integer matrices")
        arr = np.asarray(M, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        return 0
    if p == 2:
        return int(_kernels.rank_gf2_packed(pack_gf2(arr & 1), arr.shape[1]))
    return int(_kernels.rank_mod_p(np.mod(arr, p).astype(np.int64), p))


def corank_mod_p(M, p: int | None = None) -> int:
    arr = M.entries if isinstance(M, MatrixMod) else np.asarray(M)
    return arr.shape[0] - rank_mod_p(M, p)


def unit_mod(x: int, ring: RingSpec) -> bool:
    return int(x) % ring.p != 0


def det_mod(M: MatrixMod) -> int:
    """Determinant mod p^N via exact rational elimination (small matrices)."""
    from fractions import Fraction

    a = [[Fraction(x) for x in row] for row in M.residues()]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    assert det.denominator == 1
    return int(det) % M.ring.modulus
