"""Compiled inner loops for modular linear algebra.

All kernels work on int64 arrays. For p = 2 arithmetic is done with
wrapping int64 operations followed by a bit mask, which is exact modulo
2**N for every N <= 64. For odd p the modulus must stay below 2**31 so
that a product of two residues fits in an int64.
"""

import numpy as np
from numba import njit

ODD_MODULUS_LIMIT = 2**31


@njit(cache=True, inline="always")
def _reduce(x, p, m, mask):
    if p == 2:
        return x & mask
    r = x % m
    return r


@njit(cache=True)
def _valuation(x, p, N):
    if x == 0:
        return N
    v = 0
    if p == 2:
        while v < N and (x & 1) == 0:
            x = x >> 1
            v += 1
        return v
    while v < N and x % p == 0:
        x = x // p
        v += 1
    return v


@njit(cache=True)
def _unit_inverse(u, p, m, mask):
    if p == 2:
        x = u
        for _ in range(6):
            x = x * (2 - u * x)
        return x & mask
    a, b = u % m, m
    x0, x1 = 1, 0
    while b != 0:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
    return x0 % m


@njit(cache=True)
def _div_pow(x, p, v, pv):
    # exact division of a representative divisible by p**v
    if p == 2:
        return x >> v
    return x // pv


@njit(cache=True)
def _find_pivot(A, k, p, N):
    rows, cols = A.shape
    best_v = N
    bi = -1
    bj = -1
    for i in range(k, rows):
        for j in range(k, cols):
            x = A[i, j]
            if x == 0:
                continue
            if p == 2:
                unit = (x & 1) == 1
            else:
                unit = x % p != 0
            if unit:
                return i, j, 0
            v = _valuation(x, p, N)
            if v < best_v:
                best_v = v
                bi = i
                bj = j
    return bi, bj, best_v


@njit(cache=True)
def snf_full(A, p, N, m, mask):
    """In-place valuation-pivot Smith form; returns (valuations, U, V)."""
    rows, cols = A.shape
    U = np.eye(rows, dtype=np.int64)
    V = np.eye(cols, dtype=np.int64)
    r = min(rows, cols)
    vals = np.full(r, N, dtype=np.int64)
    for k in range(r):
        i, j, v = _find_pivot(A, k, p, N)
        if i < 0:
            break
        vals[k] = v
        if i != k:
            for c in range(cols):
                A[k, c], A[i, c] = A[i, c], A[k, c]
            for c in range(rows):
                U[k, c], U[i, c] = U[i, c], U[k, c]
        if j != k:
            for c in range(rows):
                A[c, k], A[c, j] = A[c, j], A[c, k]
            for c in range(cols):
                V[c, k], V[c, j] = V[c, j], V[c, k]
        pv = 1
        for _ in range(v):
            pv *= p
        unit = _div_pow(A[k, k], p, v, pv)
        inv = _unit_inverse(unit, p, m, mask)
        for c in range(k, cols):
            A[k, c] = _reduce(A[k, c] * inv, p, m, mask)
        for c in range(rows):
            U[k, c] = _reduce(U[k, c] * inv, p, m, mask)
        for i2 in range(k + 1, rows):
            x = A[i2, k]
            if x == 0:
                continue
            f = _div_pow(x, p, v, pv)
            for c in range(k, cols):
                A[i2, c] = _reduce(A[i2, c] - f * A[k, c], p, m, mask)
            for c in range(rows):
                U[i2, c] = _reduce(U[i2, c] - f * U[k, c], p, m, mask)
        for j2 in range(k + 1, cols):
            x = A[k, j2]
            if x == 0:
                continue
            f = _div_pow(x, p, v, pv)
            A[k, j2] = 0
            for c in range(cols):
                V[c, j2] = _reduce(V[c, j2] - f * V[c, k], p, m, mask)
    return vals, U, V


@njit(cache=True)
def snf_valuations(A, p, N, m, mask):
    """Smith valuations only; destroys A. Column operations are skipped
    because they never change the valuations of the remaining block."""
    rows, cols = A.shape
    r = min(rows, cols)
    vals = np.full(r, N, dtype=np.int64)
    for k in range(r):
        i, j, v = _find_pivot(A, k, p, N)
        if i < 0:
            break
        vals[k] = v
        if i != k:
            for c in range(k, cols):
                A[k, c], A[i, c] = A[i, c], A[k, c]
        if j != k:
            for c in range(k, rows):
                A[c, k], A[c, j] = A[c, j], A[c, k]
        pv = 1
        for _ in range(v):
            pv *= p
        unit = _div_pow(A[k, k], p, v, pv)
        inv = _unit_inverse(unit, p, m, mask)
        for c in range(k + 1, cols):
            A[k, c] = _reduce(A[k, c] * inv, p, m, mask)
        A[k, k] = pv
        for i2 in range(k + 1, rows):
            x = A[i2, k]
            if x == 0:
                continue
            f = _div_pow(x, p, v, pv)
            for c in range(k + 1, cols):
                A[i2, c] = _reduce(A[i2, c] - f * A[k, c], p, m, mask)
            A[i2, k] = 0
    return vals


@njit(cache=True)
def batch_valuations(mats, p, N, m, mask):
    out = np.empty((mats.shape[0], min(mats.shape[1], mats.shape[2])), dtype=np.int64)
    for b in range(mats.shape[0]):
        A = mats[b].copy()
        out[b] = snf_valuations(A, p, N, m, mask)
    return out


@njit(cache=True)
def matmul_mod(A, B, p, m, mask):
    n, l = A.shape
    l2, q = B.shape
    C = np.zeros((n, q), dtype=np.int64)
    for i in range(n):
        for k in range(l):
            a = A[i, k]
            if a == 0:
                continue
            for j in range(q):
                if p == 2:
                    C[i, j] += a * B[k, j]
                else:
                    C[i, j] = (C[i, j] + a * B[k, j]) % m
    if p == 2:
        for i in range(n):
            for j in range(q):
                C[i, j] &= mask
    return C


@njit(cache=True)
def batch_matmul_mod(A, B, p, m, mask):
    out = np.empty((A.shape[0], A.shape[1], B.shape[2]), dtype=np.int64)
    for b in range(A.shape[0]):
        out[b] = matmul_mod(A[b], B[b], p, m, mask)
    return out


@njit(cache=True)
def rank_mod_p(A, p):
    """Row-echelon rank over F_p (p odd or 2); destroys A."""
    rows, cols = A.shape
    rank = 0
    for c in range(cols):
        piv = -1
        for r in range(rank, rows):
            if A[r, c] % p != 0:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(c, cols):
                A[rank, j], A[piv, j] = A[piv, j], A[rank, j]
        inv = 1
        if p != 2:
            inv = _unit_inverse(A[rank, c] % p, p, p, 0)
        for j in range(c, cols):
            A[rank, j] = (A[rank, j] * inv) % p
        for r in range(rank + 1, rows):
            f = A[r, c] % p
            if f == 0:
                continue
            for j in range(c, cols):
                A[r, j] = (A[r, j] - f * A[rank, j]) % p
        rank += 1
        if rank == rows:
            break
    return rank


@njit(cache=True)
def rank_gf2_packed(W, ncols):
    """Rank of a bit-packed F_2 matrix (rows x words); destroys W.

    The word count must be a multiple of 4 (see ``pack_gf2``). Elimination
    is branch-free and unrolled four words at a time: every lower row is
    xored with the pivot row masked by its own pivot bit, which is faster
    than branching on random bits.
    """
    rows, words = W.shape
    rank = 0
    one = np.uint64(1)
    zero = np.uint64(0)
    for c in range(ncols):
        w = c >> 6
        sh = np.uint64(c & 63)
        piv = -1
        for r in range(rank, rows):
            if (W[r, w] >> sh) & one:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(words):
                t = W[rank, j]
                W[rank, j] = W[piv, j]
                W[piv, j] = t
        # the group holding the pivot word goes last: it clears the bit
        # that the masks are read from
        for j0 in range(words - 4, ((w >> 2) << 2) - 1, -4):
            p0 = W[rank, j0]
            p1 = W[rank, j0 + 1]
            p2 = W[rank, j0 + 2]
            p3 = W[rank, j0 + 3]
            for r in range(rank + 1, rows):
                m = zero - ((W[r, w] >> sh) & one)
                W[r, j0] ^= p0 & m
                W[r, j0 + 1] ^= p1 & m
                W[r, j0 + 2] ^= p2 & m
                W[r, j0 + 3] ^= p3 & m
        rank += 1
        if rank == rows:
            break
    return rank


@njit(cache=True)
def matmul_gf2_packed(A, B, ncols_a):
    """Product of packed F_2 matrices by the method of four Russians:
    xor-combinations of each block of 8 rows of B are tabulated once and
    looked up by the corresponding byte of each row of A."""
    rows = A.shape[0]
    words = B.shape[1]
    C = np.zeros((rows, words), dtype=np.uint64)
    table = np.zeros((256, words), dtype=np.uint64)
    nblocks = (ncols_a + 7) >> 3
    for blk in range(nblocks):
        base = blk * 8
        width = min(8, ncols_a - base)
        for idx in range(1, 1 << width):
            low = idx & (-idx)
            bitpos = 0
            while (low >> bitpos) != 1:
                bitpos += 1
            prev = idx ^ low
            for j in range(words):
                table[idx, j] = table[prev, j] ^ B[base + bitpos, j]
        w = base >> 6
        sh = np.uint64(base & 63)
        for i in range(rows):
            byte = (A[i, w] >> sh) & np.uint64(255)
            b = np.int64(byte)
            for j in range(words):
                C[i, j] ^= table[b, j]
    return C


@njit(cache=True)
def batch_corank_triples_gf2(A, B, n):
    """For packed pairs (A_b, B_b) return coranks of A, B and AB."""
    out = np.empty((A.shape[0], 3), dtype=np.int64)
    for b in range(A.shape[0]):
        C = matmul_gf2_packed(A[b], B[b], n)
        out[b, 0] = n - rank_gf2_packed(A[b].copy(), n)
        out[b, 1] = n - rank_gf2_packed(B[b].copy(), n)
        out[b, 2] = n - rank_gf2_packed(C, n)
    return out


@njit(cache=True)
def batch_corank_triples(A, B, p):
    out = np.empty((A.shape[0], 3), dtype=np.int64)
    n = A.shape[1]
    for b in range(A.shape[0]):
        C = matmul_mod(A[b], B[b], p, p, 1)
        out[b, 0] = n - rank_mod_p(A[b].copy(), p)
        out[b, 1] = n - rank_mod_p(B[b].copy(), p)
        out[b, 2] = n - rank_mod_p(C, p)
    return out


@njit(cache=True)
def aut_search(mode, p, mods, strides, coords, parent, addtab, cand, ncand, red,
               qdig, sub_masks, sub_basis, out_counts, out_perms):
    """Depth-first enumeration of automorphisms of an abelian p-group.

    Generator i is sent to a candidate element of order dividing its own
    order; a tuple of images is an automorphism exactly when the images
    are independent modulo p * G (tracked as a subspace of F_p^n). Element
    indices have generator 0 varying fastest, so the images of elements
    whose highest nonzero coordinate is d are filled in at depth d.

    mode 0 counts automorphisms, mode 1 adds to out_counts[s] for every
    automorphism mapping subgroup s into itself, mode 2 counts automorphisms
    stabilizing every listed subgroup at once (result in out_counts[0]),
    mode 3 writes element permutations to out_perms. Returns the number of
    automorphisms, or -1 when out_perms overflows.
    """
    n = mods.shape[0]
    order = coords.shape[0]
    if n == 0:
        if mode == 1:
            for s in range(sub_masks.shape[0]):
                out_counts[s] += 1
        elif mode == 2:
            out_counts[0] += 1
        elif mode == 3:
            if out_perms.shape[0] < 1:
                return -1
            out_perms[0, 0] = 0
        return 1
    qsize = qdig.shape[0]
    spans = np.zeros((n + 1, qsize), dtype=np.uint8)
    spans[0, 0] = 1
    pos = np.full(n, -1, dtype=np.int64)
    perm = np.zeros(order, dtype=np.int64)
    qpow = np.empty(n, dtype=np.int64)
    acc = 1
    for i in range(n):
        qpow[i] = acc
        acc *= p
    count = 0
    depth = 0
    while depth >= 0:
        pos[depth] += 1
        if pos[depth] >= ncand[depth]:
            pos[depth] = -1
            depth -= 1
            continue
        y = cand[depth, pos[depth]]
        r = red[y]
        if spans[depth, r]:
            continue
        if mode != 0:
            lo = strides[depth]
            hi = lo * mods[depth]
            if addtab.shape[0] > 1:
                for x in range(lo, hi):
                    perm[x] = addtab[perm[parent[x]], y]
            else:
                for x in range(lo, hi):
                    a = perm[parent[x]]
                    out = 0
                    for i in range(n):
                        out += ((coords[a, i] + coords[y, i]) % mods[i]) * strides[i]
                    perm[x] = out
        if depth + 1 < n:
            nxt = spans[depth + 1]
            nxt[:] = 0
            for q in range(qsize):
                if spans[depth, q]:
                    for k in range(p):
                        idx = 0
                        for i in range(n):
                            idx += ((qdig[q, i] + k * qdig[r, i]) % p) * qpow[i]
                        nxt[idx] = 1
            depth += 1
            continue
        count += 1
        if mode == 0:
            continue
        if mode == 1 or mode == 2:
            alls = True
            for s in range(sub_masks.shape[0]):
                ok = True
                for j in range(sub_basis.shape[1]):
                    b = sub_basis[s, j]
                    if b < 0:
                        break
                    if sub_masks[s, perm[b]] == 0:
                        ok = False
                        break
                if mode == 1:
                    if ok:
                        out_counts[s] += 1
                elif not ok:
                    alls = False
                    break
            if mode == 2 and alls:
                out_counts[0] += 1
        else:
            if count > out_perms.shape[0]:
                return -1
            for x in range(order):
                out_perms[count - 1, x] = perm[x]
    return count
