"""Carry-less polynomial arithmetic over GF(2) and the parity-mask construction
behind exactly k-wise independent sample spaces.

Polynomials are plain ints (bit i = coefficient of x^i). Field elements of
GF(2^m) are ints < 2^m reduced modulo a fixed irreducible polynomial.
"""

from __future__ import annotations

import numpy as np


def clmul(a: int, b: int) -> int:
    """Carry-less product of two polynomials."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def clmod(a: int, p: int) -> int:
    """Remainder of a modulo p (p != 0)."""
    dp = p.bit_length() - 1
    while a.bit_length() - 1 >= dp and a:
        a ^= p << (a.bit_length() - 1 - dp)
    return a


def gf_mul(a: int, b: int, p: int) -> int:
    return clmod(clmul(a, b), p)


def gf_pow(a: int, e: int, p: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = gf_mul(r, a, p)
        a = gf_mul(a, a, p)
        e >>= 1
    return r


def irreducible_poly(m: int) -> int:
    """Smallest (as an int) irreducible polynomial of degree m over GF(2).

    Trial division by every polynomial of degree 1..m//2 suffices: a reducible
    polynomial has a factor of degree at most m//2.
    """
    if m < 1:
        raise ValueError("degree must be positive")
    for cand in range((1 << m) | 1, 1 << (m + 1), 2):  # constant term 1
        ok = True
        for q in range(2, 1 << (m // 2 + 1)):
            if q.bit_length() < 2:
                continue
            if clmod(cand, q) == 0:
                ok = False
                break
        if ok:
            return cand
    raise RuntimeError(f"no irreducible polynomial of degree {m} found")


def gf_trace(a: int, p: int, m: int) -> int:
    """Trace map GF(2^m) -> GF(2): a + a^2 + a^4 + ... + a^(2^(m-1))."""
    t = a
    cur = a
    for _ in range(m - 1):
        cur = gf_mul(cur, cur, p)
        t ^= cur
    if t not in (0, 1):
        raise AssertionError("trace left the base field; bad modulus")
    return t


def kwise_masks(n: int, k: int):
    """Parity masks for an exactly k-wise independent sample space.

    Returns (masks, nbits) with masks an int64 array of length n. Row s of the
    space (s a seed in [0, 2^nbits)) has bits

        x_i = parity(popcount(s & masks[i])),

    i.e. x_i = c_0 + Tr(sum_j c_j * alpha_i^(2j-1)) where the seed packs one
    free bit c_0 and h = floor(k/2) field elements c_1..c_h of GF(2^m),
    m = ceil(log2(n+1)), and alpha_i = i. Distinct nonzero alphas and the odd
    powers make any k of the masks linearly independent, so any k columns are
    exactly uniform over the 2^nbits seeds.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    h = k // 2
    m = max(n.bit_length(), 1)  # 2^m >= n+1
    p = irreducible_poly(m)
    nbits = 1 + h * m
    masks = np.zeros(n, dtype=np.int64)
    for i in range(1, n + 1):
        bits = 1  # seed bit 0 is the free uniform bit c_0
        a = i
        asq = gf_mul(a, a, p)
        apow = a  # a^(2j-1) for j = 1
        for j in range(h):
            if j > 0:
                apow = gf_mul(apow, asq, p)
            for t in range(m):
                # coefficient of seed bit (1 + j*m + t): Tr(x^t * a^(2j-1))
                if gf_trace(gf_mul(1 << t, apow, p), p, m):
                    bits |= 1 << (1 + j * m + t)
        masks[i - 1] = bits
    return masks, nbits


def rows_from_seeds(masks, seeds) -> np.ndarray:
    """Materialize pool rows for the given seeds; shape (len(seeds), len(masks))."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    cols = [
        (np.bitwise_count(seeds & np.uint64(m)) & np.uint64(1)).astype(np.uint8)
        for m in masks
    ]
    return np.stack(cols, axis=1)
