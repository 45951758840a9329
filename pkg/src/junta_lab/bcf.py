"""Construction of d-wise bipartite connected families.

greedy_bcf derandomizes the probabilistic argument: it keeps the exact
potential X(A) (total excess component count over all graphs) and appends,
each step, the pool assignment destroying the most components. Scoring every
pool row at once is the trick: pool rows are GF(2)-linear in seed bits
(parity masks), every graph's merge indicator depends on at most d1+2*d2 row
bits, so the score function's Walsh spectrum over the seed space has few
nonzero coefficients. We maintain that spectrum G incrementally (each
component merge touches 2^(d1+2*d2) coefficients) and read all 2^B scores per
step with one fast Walsh-Hadamard transform. All spectrum values are dyadic
rationals with denominator at most 2^(2d) and magnitude below 2^53, so
float64 arithmetic is exact and score ties are exact ties.

Internal pattern codes here are LSB-first (t-th listed variable at bit t);
this is self-contained and independent of the verifier's conventions.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .core import (
    AssignmentSet,
    ContractError,
    ConstructionError,
    ConstructionInfeasible,
    as_rng,
)
from .designs import initial_potential, verify_bcf
from . import gf2


class GreedyStuckError(ConstructionError):
    """No pool assignment decreased the potential; carries the stuck family."""

    def __init__(self, message: str, partial: AssignmentSet):
        super().__init__(message)
        self.partial = partial


def fwht(a: np.ndarray) -> np.ndarray:
    """In-place unnormalized Walsh-Hadamard transform (length a power of 2)."""
    nn = a.shape[0]
    h = 1
    while h < nn:
        b = a.reshape(-1, 2, h)
        x = b[:, 0, :].copy()
        b[:, 0, :] = x + b[:, 1, :]
        b[:, 1, :] = x - b[:, 1, :]
        h *= 2
    return a


_WLUT = {}
_SGN = {}


def _chi(k: int) -> np.ndarray:
    idx = np.arange(1 << k, dtype=np.uint32)
    pc = np.bitwise_count(idx[:, None] & idx[None, :])
    return np.where(pc & 1, -1, 1).astype(np.int32)


def _wlut(d2: int) -> np.ndarray:
    """Walsh coefficients of pattern-set indicators: row L, column T holds
    sum over patterns p in L of (-1)^popcount(p & T)."""
    if d2 not in _WLUT:
        s = 1 << d2
        ind = ((np.arange(1 << s, dtype=np.uint32)[:, None] >> np.arange(s)[None, :]) & 1).astype(np.int32)
        _WLUT[d2] = ind @ _chi(d2)
    return _WLUT[d2]


def _sgn(d1: int) -> np.ndarray:
    if d1 not in _SGN:
        _SGN[d1] = _chi(d1)
    return _SGN[d1]


@dataclass
class _Block:
    """All graphs sharing one (d1, d2) split, over unordered (i, k) pairs."""

    d1: int
    d2: int
    weight: int
    icols: np.ndarray  # (S, d2) 0-based variable ids
    kcols: np.ndarray
    jcols: np.ndarray  # (S, d1)
    zvals: np.ndarray  # (S, d1) bits
    zcode: np.ndarray  # (S,) z packed LSB-first
    comp: np.ndarray  # (S, 2s) component id per vertex
    compl_: np.ndarray  # (S, 2s) left-pattern mask per component id
    compr: np.ndarray  # (S, 2s) right-pattern mask per component id
    tcount: np.ndarray  # (S,) live component count
    alive: np.ndarray  # (S,) tcount > 1

    @property
    def size(self) -> int:
        return self.comp.shape[0]

    def compact(self) -> None:
        keep = self.alive
        if keep.all():
            return
        for name in ("icols", "kcols", "jcols", "zvals", "zcode", "comp", "compl_", "compr", "tcount", "alive"):
            setattr(self, name, getattr(self, name)[keep])


def _subset_words(subs: np.ndarray, n: int) -> np.ndarray:
    C = subs.shape[0]
    W = (n + 63) // 64
    out = np.zeros((C, W), dtype=np.uint64)
    for t in range(subs.shape[1]):
        col = subs[:, t]
        out[np.arange(C), col // 64] |= np.uint64(1) << (col % 64).astype(np.uint64)
    return out


def _disjoint_pairs(subs: np.ndarray, n: int) -> np.ndarray:
    """Index pairs (a, b), a < b, of disjoint subsets."""
    C = subs.shape[0]
    words = _subset_words(subs, n)
    inter = np.zeros((C, C), dtype=bool)
    for w in range(words.shape[1]):
        inter |= (words[:, w][:, None] & words[:, w][None, :]) != 0
    a, b = np.nonzero(~inter)
    keep = a < b
    return np.stack([a[keep], b[keep]], axis=1)


def _build_blocks(n: int, d: int) -> list:
    blocks = []
    for d2 in range(d, -1, -1):
        d1 = d - d2
        if n < d1 + 2 * d2:
            continue
        if d2 == 0:
            pair_i = np.zeros((1, 0), dtype=np.int32)
            pair_k = np.zeros((1, 0), dtype=np.int32)
            pairs_union = np.zeros((1, (n + 63) // 64), dtype=np.uint64)
            weight = 1
        else:
            subs = np.array(list(combinations(range(n), d2)), dtype=np.int32)
            pr = _disjoint_pairs(subs, n)
            if len(pr) == 0:
                continue
            pair_i = subs[pr[:, 0]]
            pair_k = subs[pr[:, 1]]
            words = _subset_words(subs, n)
            pairs_union = words[pr[:, 0]] | words[pr[:, 1]]
            weight = 2
        if d1 == 0:
            icols, kcols = pair_i, pair_k
            jcols = np.zeros((len(icols), 0), dtype=np.int32)
        else:
            sel_idx = []
            sel_j = []
            for J in combinations(range(n), d1):
                free = np.ones(len(pair_i), dtype=bool)
                for v in J:
                    free &= (pairs_union[:, v // 64] >> np.uint64(v % 64)) & np.uint64(1) == 0
                idx = np.nonzero(free)[0]
                if len(idx):
                    sel_idx.append(idx)
                    sel_j.append(np.tile(np.array(J, dtype=np.int32), (len(idx), 1)))
            if not sel_idx:
                continue
            idx = np.concatenate(sel_idx)
            icols, kcols = pair_i[idx], pair_k[idx]
            jcols = np.vstack(sel_j)
        # z expansion
        nz = 1 << d1
        S0 = len(icols)
        icols = np.repeat(icols, nz, axis=0)
        kcols = np.repeat(kcols, nz, axis=0)
        jcols = np.repeat(jcols, nz, axis=0)
        zcode = np.tile(np.arange(nz, dtype=np.int32), S0)
        zvals = ((zcode[:, None] >> np.arange(d1)[None, :]) & 1).astype(np.uint8)
        S = len(icols)
        s = 1 << d2
        mask_dtype = np.uint8 if s <= 8 else np.uint32
        comp = np.tile(np.arange(2 * s, dtype=np.int8), (S, 1))
        compl_ = np.tile(
            np.concatenate([1 << np.arange(s), np.zeros(s, dtype=np.int64)]).astype(mask_dtype),
            (S, 1),
        )
        compr = np.tile(
            np.concatenate([np.zeros(s, dtype=np.int64), 1 << np.arange(s)]).astype(mask_dtype),
            (S, 1),
        )
        tcount = np.full(S, 2 * s, dtype=np.int16)
        alive = np.ones(S, dtype=bool)
        blocks.append(
            _Block(d1, d2, weight, icols, kcols, jcols, zvals, zcode, comp, compl_, compr, tcount, alive)
        )
    return blocks


def _event_data(blk: _Block, row: np.ndarray):
    """Specs where this row merges two components: (indices, cl, cr)."""
    S = blk.size
    if S == 0:
        return np.zeros(0, dtype=np.int64), None, None
    if blk.d1:
        jm = (row[blk.jcols] == blk.zvals).all(axis=1)
    else:
        jm = np.ones(S, dtype=bool)
    if blk.d2:
        w = (1 << np.arange(blk.d2)).astype(np.int64)
        li = row[blk.icols].astype(np.int64) @ w
        ki = row[blk.kcols].astype(np.int64) @ w
    else:
        li = np.zeros(S, dtype=np.int64)
        ki = np.zeros(S, dtype=np.int64)
    rows_idx = np.arange(S)
    cl = blk.comp[rows_idx, li]
    cr = blk.comp[rows_idx, (1 << blk.d2) + ki]
    ev = blk.alive & jm & (cl != cr)
    eidx = np.nonzero(ev)[0]
    return eidx, cl[eidx], cr[eidx]


def _scatter_events(G, masks, blk: _Block, eidx, cl, cr) -> None:
    """Fold the spectrum change of the pending merges into G (call before
    mutating component state)."""
    d1, d2 = blk.d1, blk.d2
    s = 1 << d2
    tensor_w = (1 << d1) * s * s
    wl = _wlut(d2)
    sg = _sgn(d1)
    scale = -blk.weight / float(1 << (d1 + 2 * d2))
    chunk = max(1, (1 << 21) // tensor_w)
    for lo in range(0, len(eidx), chunk):
        e = eidx[lo : lo + chunk]
        ecl = cl[lo : lo + chunk]
        ecr = cr[lo : lo + chunk]
        L1 = blk.compl_[e, ecl].astype(np.int64)
        R1 = blk.compr[e, ecl].astype(np.int64)
        L2 = blk.compl_[e, ecr].astype(np.int64)
        R2 = blk.compr[e, ecr].astype(np.int64)
        wl1 = wl[L1]
        wr1 = wl[R1]
        wl2 = wl[L2]
        wr2 = wl[R2]
        cross = wl1[:, :, None] * wr2[:, None, :] + wl2[:, :, None] * wr1[:, None, :]
        coef = scale * (
            sg[blk.zcode[e]][:, :, None, None].astype(np.float64)
            * cross[:, None, :, :].astype(np.float64)
        )
        idx = np.zeros((len(e), 1), dtype=np.int64)
        for t in range(d2):
            m = masks[blk.kcols[e, t]]
            idx = np.concatenate([idx, idx ^ m[:, None]], axis=1)
        for t in range(d2):
            m = masks[blk.icols[e, t]]
            idx = np.concatenate([idx, idx ^ m[:, None]], axis=1)
        for t in range(d1):
            m = masks[blk.jcols[e, t]]
            idx = np.concatenate([idx, idx ^ m[:, None]], axis=1)
        G += np.bincount(idx.ravel(), weights=coef.ravel(), minlength=G.shape[0])


def _apply_merges(blk: _Block, eidx, cl, cr) -> None:
    keep = np.minimum(cl, cr).astype(np.int8)
    dead = np.maximum(cl, cr).astype(np.int8)
    blk.compl_[eidx, keep] |= blk.compl_[eidx, dead]
    blk.compr[eidx, keep] |= blk.compr[eidx, dead]
    blk.compl_[eidx, dead] = 0
    blk.compr[eidx, dead] = 0
    sub = blk.comp[eidx]
    blk.comp[eidx] = np.where(sub == dead[:, None], keep[:, None], sub)
    blk.tcount[eidx] -= 1
    blk.alive[eidx] = blk.tcount[eidx] > 1


def greedy_size_bound(n: int, d: int) -> int:
    """Guaranteed greedy output size: ceil(2d 2^(d+1) ln(2n))."""
    if d == 0:
        return 1
    return math.ceil(2 * d * (1 << (d + 1)) * math.log(2 * n))


def _feasibility(n: int, d: int):
    """Estimated state bytes and element-ops for the greedy run."""
    mem = 0.0
    events = 0.0
    scan = 0.0
    for d2 in range(d + 1):
        d1 = d - d2
        if n < d1 + 2 * d2:
            continue
        if d2 == 0:
            S = math.comb(n, d1) * (1 << d1)
        else:
            S = (math.comb(n, d2) * math.comb(n - d2, d2) // 2) * math.comb(n - 2 * d2, d1) * (1 << d1)
        s = 1 << d2
        mem += S * (6 * s + 4 * d2 + 3 * d1 + 10)
        if d2 == d:
            mem += math.comb(n, d2) ** 2  # pair matrix temp
        events += S * (2 * s - 1) * (1 << (d1 + 2 * d2)) * 2
        scan += S * (d + 5)
    steps = greedy_size_bound(n, d)
    return mem, events + scan * steps


_MEM_LIMIT = 2.4e9
_OPS_LIMIT = 1.5e11


def _force_heavy(force: bool) -> bool:
    return force or os.environ.get("JUNTA_LAB_FORCE_HEAVY") == "1"


def greedy_bcf(n: int, d: int, pool="kwise", trace=None, force: bool = False) -> AssignmentSet:
    """Greedy family: append the pool assignment minimizing the new potential
    (ties to the lexicographically smallest assignment) until it hits zero.

    pool: "kwise" (a (2d)-wise independent parity-mask space, the default),
    "exhaustive" (all of {0,1}^n, tiny n), or an explicit AssignmentSet.
    Raises GreedyStuckError when no pool row decreases the potential, and
    ConstructionInfeasible when the estimated state or work exceeds the
    budget (override with force=True or JUNTA_LAB_FORCE_HEAVY=1).
    """
    if not 0 <= d <= n:
        raise ContractError("need 0 <= d <= n")
    if d == 0:
        if isinstance(pool, AssignmentSet):
            rows = pool.as_array()
            best = min(range(len(rows)), key=lambda r: tuple(rows[r]))
            row = rows[best]
        else:
            row = np.zeros(n, dtype=np.uint8)
        if trace is not None:
            trace.extend([1, 0])
        return AssignmentSet(n, row[None, :])
    if d > 4 and not isinstance(pool, AssignmentSet):
        raise ConstructionInfeasible("spectrum tables beyond d=4 are not supported")
    mem, ops = _feasibility(n, d)
    if (mem > _MEM_LIMIT or ops > _OPS_LIMIT) and not _force_heavy(force):
        raise ConstructionInfeasible(
            f"estimated {mem/1e9:.1f} GB state and {ops:.1e} element-ops at "
            f"(n={n}, d={d}); force=True or JUNTA_LAB_FORCE_HEAVY=1 overrides"
        )

    blocks = _build_blocks(n, d)
    X = initial_potential(n, d)
    check = sum(blk.weight * blk.size * ((1 << (blk.d2 + 1)) - 1) for blk in blocks)
    if check != X:
        raise AssertionError("block enumeration disagrees with the closed form")

    spectrum = not isinstance(pool, AssignmentSet)
    if spectrum:
        if pool == "exhaustive":
            if n > 22:
                raise ConstructionInfeasible("exhaustive pool needs 2^n scores; n too large")
            masks = (np.int64(1) << np.arange(n, dtype=np.int64))
            B = n
        elif pool == "kwise":
            masks, B = gf2.kwise_masks(n, min(2 * d, n))
            if n <= B:
                masks = (np.int64(1) << np.arange(n, dtype=np.int64))
                B = n
        else:
            raise ContractError(f"unknown pool {pool!r}")
        G = np.zeros(1 << B, dtype=np.float64)
        G[0] = sum(blk.weight * (blk.size >> blk.d1) for blk in blocks)
    else:
        if pool.n != n:
            raise ContractError("pool is over the wrong variable count")
        if len(pool) == 0:
            raise ContractError("empty pool")
        pool_rows = pool.as_array()

    out = []
    if trace is not None:
        trace.append(X)
    max_steps = 4 * greedy_size_bound(n, d) + 16
    for _ in range(max_steps):
        if X == 0:
            break
        if spectrum:
            sc = fwht(G.copy())
            best = sc.max()
            if best < 0.5:
                raise GreedyStuckError(
                    "no pool assignment decreases the potential", AssignmentSet(n, np.array(out) if out else None)
                )
            cand = np.nonzero(sc == best)[0].astype(np.uint64)
            row = np.empty(n, dtype=np.uint8)
            for i in range(n):
                bits = np.bitwise_count(cand & np.uint64(masks[i])) & np.uint64(1)
                zero = bits == 0
                if zero.any():
                    cand = cand[zero]
                    row[i] = 0
                else:
                    row[i] = 1
            expected = int(best)
        else:
            best_cnt = -1
            row = None
            for r in pool_rows:
                cnt = 0
                for blk in blocks:
                    eidx, _, _ = _event_data(blk, r)
                    cnt += blk.weight * len(eidx)
                key = tuple(r)
                if cnt > best_cnt or (cnt == best_cnt and key < tuple(row)):
                    best_cnt, row = cnt, r
            if best_cnt < 1:
                raise GreedyStuckError(
                    "no pool assignment decreases the potential", AssignmentSet(n, np.array(out) if out else None)
                )
            expected = best_cnt

        merged = 0
        for blk in blocks:
            eidx, cl, cr = _event_data(blk, row)
            if len(eidx) == 0:
                continue
            if spectrum:
                _scatter_events(G, masks, blk, eidx, cl, cr)
            _apply_merges(blk, eidx, cl, cr)
            merged += blk.weight * len(eidx)
            if blk.alive.sum() < 0.6 * blk.size and blk.size > 4096:
                blk.compact()
        if merged != expected:
            raise AssertionError("score bookkeeping diverged from merge count")
        X -= merged
        out.append(row.copy())
        if trace is not None:
            trace.append(X)
    else:
        raise GreedyStuckError(
            "potential failed to reach zero within the step budget",
            AssignmentSet(n, np.array(out) if out else None),
        )
    return AssignmentSet(n, np.array(out, dtype=np.uint8))


def random_size(n: int, d: int, delta: float) -> int:
    """Rows making E[X] <= delta, hence Pr[not connected] <= delta."""
    x0 = initial_potential(n, d)
    rate = math.log((1 << (d + 1)) / ((1 << (d + 1)) - 1))
    return max(1, math.ceil(math.log(x0 / delta) / rate))


def random_bcf(
    n: int,
    d: int,
    rng=None,
    delta: float = 0.1,
    verify: bool = True,
    max_attempts: int = 64,
) -> AssignmentSet:
    """Uniform rows of the closed-form size; with verify=True redraws until
    the verifier passes (expected attempts about 1/(1-delta))."""
    if not 0 <= d <= n:
        raise ContractError("need 0 <= d <= n")
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0,1)")
    m = random_size(n, d, delta)
    stream = as_rng(rng) if rng is not None else None
    for attempt in range(max_attempts):
        r = stream if stream is not None else np.random.default_rng(
            np.random.SeedSequence((0xBCFBCF, n, d, attempt))
        )
        A = AssignmentSet(n, r.integers(0, 2, size=(m, n), dtype=np.uint8))
        if not verify:
            return A
        if verify_bcf(A, d) is None:
            return A
    raise ConstructionError(f"no verified family in {max_attempts} draws of {m} rows")


@lru_cache(maxsize=None)
def build_bcf(n: int, d: int) -> AssignmentSet:
    """Default family for learners.

    d <= 1: greedy (instant at this depth, and the output stays inside the
    2d 2^{d+1} ln(2n) size bound, which the d=1 random size does not).
    Otherwise the seeded random construction, verified when verification is
    tractable, else sized for failure probability 1e-9.
    """
    if d <= 1:
        return greedy_bcf(n, d)
    verify_cost = math.comb(n, d) * (1 << (1 << min(d, 3)))
    if d <= 3 and verify_cost <= 3e7:
        return random_bcf(n, d, rng=None, delta=0.1, verify=True)
    return random_bcf(n, d, rng=None, delta=1e-9, verify=False)
