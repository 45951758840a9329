"""Adaptive junta learners: binary-search discovery, the universal-set
learner, two-round PHF/partition learners, and the O(d log d)-round learner.

Round discipline: every o.ask() is one round. Procedures that can run in
parallel (per-bin identification, per-partition searches) merge their queries
into a single batch so the rounds counter reflects wall-clock rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ContractError,
    Junta,
    LearnFailure,
    as_bits,
    as_rng,
    prune,
    reorder_positions,
)
from .oracle import ConcatBatch, LearnerResult, Oracle, ProjectedBatch, QueryStats, RowBatch
from .designs import phf_build, random_universal_set
from .nonadaptive import ProjectionMap, _RandnaPlan, _select_survivor, _stats_delta, _wrapper_reps, equivset_plan


@dataclass(frozen=True)
class Partition:
    """A collapse of n variables into B bins (B = d^3 in the learners)."""

    n: int
    B: int
    bins: tuple

    def __post_init__(self):
        if len(self.bins) != self.n:
            raise ContractError("partition must assign every variable a bin")
        if any(not 1 <= b <= self.B for b in self.bins):
            raise ContractError("bin out of range")

    def preimage(self, b: int) -> list:
        return [j + 1 for j in range(self.n) if self.bins[j] == b]

    def expand(self, vrows: np.ndarray) -> np.ndarray:
        """Rows over bins -> rows over variables (x_j := v_{bin(j)})."""
        vrows = np.atleast_2d(np.asarray(vrows, dtype=np.uint8))
        return vrows[:, np.asarray(self.bins, dtype=np.int64) - 1]

    def batch(self, inner):
        return ProjectedBatch(np.asarray(self.bins, dtype=np.int64) - 1, inner)


@dataclass
class PhaseState:
    """Per-partition progress of staged discovery: found bins and the pair of
    assignments that certified each one."""

    discovered: list
    witnesses: list


class BinSearchState:
    """One binary search localizing a relevant index, driven query by query.

    Invariant: f(a) = fa differs from f(a2) = fa2 and the assignments differ
    exactly on the active set y. Each fed answer halves y; done when |y| = 1.
    """

    def __init__(self, a, fa: int, a2, fa2: int, y):
        self.a = np.asarray(a, dtype=np.uint8).copy()
        self.a2 = np.asarray(a2, dtype=np.uint8).copy()
        if int(fa) == int(fa2):
            raise ContractError("binary search endpoints must disagree")
        self.fa = int(fa)
        self.fa2 = int(fa2)
        self.y = sorted(int(v) for v in y)
        if not self.y:
            raise ContractError("empty differing set")
        self.queries = 0

    @property
    def done(self) -> bool:
        return len(self.y) == 1

    @property
    def result(self) -> int:
        if not self.done:
            raise ContractError("search still running")
        return self.y[0]

    @property
    def witness(self):
        return self.a, self.a2

    def _split(self):
        half = (len(self.y) + 1) // 2
        return self.y[:half], self.y[half:]

    def query(self) -> np.ndarray:
        """Midpoint assignment: matches a on the first half of y, a2 on the rest."""
        z, rest = self._split()
        mid = self.a.copy()
        for v in rest:
            mid[v - 1] = self.a2[v - 1]
        return mid

    def feed(self, ans: int) -> None:
        z, rest = self._split()
        mid = self.query()
        self.queries += 1
        if int(ans) != self.fa:
            # (a, mid) disagree and differ exactly on the second half
            self.y = rest
            self.a2 = mid
            self.fa2 = int(ans)
        else:
            # (mid, a2) disagree and differ exactly on the first half
            self.y = z
            self.a = mid


def binary_search_relevant(
    o: Oracle, a, a2, y, fa: Optional[int] = None, fa2: Optional[int] = None,
    with_witness: bool = False,
):
    """Localize one relevant index inside y with <= ceil(log2 |y|) single-query
    rounds. fa/fa2 are the known answers at a/a2; omitting them costs two
    extra queries up front."""
    a = as_bits(a)
    a2 = as_bits(a2, len(a))
    yset = sorted(int(v) for v in y)
    diff = {int(i) + 1 for i in np.nonzero(a != a2)[0]}
    if diff != set(yset):
        raise ContractError("y must be exactly the differing index set")
    if fa is None:
        fa = int(o.ask(a[None, :])[0])
    if fa2 is None:
        fa2 = int(o.ask(a2[None, :])[0])
    if int(fa) == int(fa2):
        raise ContractError("precondition violated: f(a) = f(a2)")
    st = BinSearchState(a, fa, a2, fa2, yset)
    while not st.done:
        q = st.query()
        st.feed(int(o.ask(q[None, :])[0]))
    if with_witness:
        return st.result, st.witness
    return st.result


def _identify_plan(a, a2, y, fa: int, fa2: int):
    """Rows and decoder for the one-round identification matrix.

    Row r < L sets y-members whose position has bit r to their a2 value; the
    last row sets all of y (so no column is the complement of another).
    decode maps the answer vector back to the unique matching y member.
    """
    a = np.asarray(a, dtype=np.uint8)
    a2 = np.asarray(a2, dtype=np.uint8)
    y = sorted(int(v) for v in y)
    k = len(y)
    L = max(0, (k - 1).bit_length())
    rows = np.repeat(a[None, :], L + 1, axis=0)
    for pos, v in enumerate(y):
        for r in range(L):
            if (pos >> r) & 1:
                rows[r, v - 1] = a2[v - 1]
        rows[L, v - 1] = a2[v - 1]
    def decode(ans) -> int:
        bits = [1 if int(x) == int(fa2) else 0 for x in ans]
        if bits[L] != 1:
            raise LearnFailure(
                "identification sanity row kept the base value",
                witness=(tuple(y), tuple(bits)),
            )
        p = sum(bits[r] << r for r in range(L))
        if p >= k:
            raise LearnFailure(
                "identification decoded no column", witness=(tuple(y), tuple(bits))
            )
        return y[p]
    return rows, decode


def oneround_identify(
    o: Oracle, a, a2, y, fa: Optional[int] = None, fa2: Optional[int] = None
) -> int:
    """Find the single relevant index in y with one round of
    ceil(log2 |y|)+1 queries. a and a2 must agree outside y and get different
    answers; when fa/fa2 are omitted, a and a2 join the same batch."""
    a = as_bits(a)
    a2 = as_bits(a2, len(a))
    if fa is None or fa2 is None:
        probe = _identify_plan(a, a2, y, 0, 1)[0]  # rows independent of fa
        batch = np.vstack([a[None, :], a2[None, :], probe])
        ans = o.ask(batch)
        fa, fa2 = int(ans[0]), int(ans[1])
        if fa == fa2:
            raise ContractError("precondition violated: f(a) = f(a2)")
        _, decode = _identify_plan(a, a2, y, fa, fa2)
        return decode(ans[2:])
    rows, decode = _identify_plan(a, a2, y, int(fa), int(fa2))
    return decode(o.ask(rows))


# ---------------------------------------------------------------------------
# universal-set adaptive learner


def _first_conflict(rows: list, ans: list, R: list):
    """First pair (insertion order) agreeing on R with different answers."""
    seen = {}
    idx = [v - 1 for v in sorted(R)]
    for i, (row, val) in enumerate(zip(rows, ans)):
        key = tuple(int(b) for b in row[idx])
        if key in seen:
            j = seen[key][0]
            if ans[j] != val:
                return j, i
            continue
        seen[key] = (i, val)
    return None


def learn_adaptive_universal(
    o: Oracle, n: int, d: int, U: Optional[object] = None
) -> Junta:
    """Ask a universal set once, then grow the relevant set one variable per
    phase: any two asked assignments agreeing on the found set R with
    different answers certify a missing variable, localized by binary search.
    Universality guarantees such a pair exists whenever R is incomplete."""
    if not 0 <= d <= n:
        raise ContractError("need 0 <= d <= n")
    if U is None:
        U = random_universal_set(
            n, d, 0.05, np.random.default_rng(np.random.SeedSequence((0xDE5, n, d)))
        )
    if U.n != n:
        raise ContractError("universal set is over the wrong variable count")
    rows = [r.copy() for r in U.as_array()]
    ans = [int(x) for x in o.ask(U)]
    R: list = []
    while True:
        hit = _first_conflict(rows, ans, R)
        if hit is None:
            break
        i, j = hit
        a, a2 = rows[i], rows[j]
        y = [int(v) + 1 for v in np.nonzero(a != a2)[0]]
        st = BinSearchState(a, ans[i], a2, ans[j], y)
        while not st.done:
            q = st.query()
            val = int(o.ask(q[None, :])[0])
            rows.append(q)
            ans.append(val)
            st.feed(val)
        R.append(st.result)
        if len(R) > d:
            raise LearnFailure(
                "more than d variables discovered", witness=tuple(sorted(R))
            )
    rel = sorted(R)
    dd = len(rel)
    idx = [v - 1 for v in rel]
    table = [-1] * (1 << dd)
    for row, val in zip(rows, ans):
        code = 0
        for p in idx:
            code = (code << 1) | int(row[p])
        table[code] = val
    if any(t < 0 for t in table):
        missing = next(c for c, t in enumerate(table) if t < 0)
        raise LearnFailure(
            "pattern unrealized in the asked history (set not universal)",
            witness=(tuple(rel), missing),
        )
    return prune(Junta(n, tuple(rel), tuple(table)))


# ---------------------------------------------------------------------------
# two-round learners


def _sensitive_pair_indices(cand: Junta, pos: int):
    """Lexicographically first table index pair differing exactly in the
    bit at position pos (MSB-first) with different table values."""
    dd = len(cand.relevant)
    bit = 1 << (dd - 1 - pos)
    for u in range(1 << dd):
        if u & bit:
            continue
        if cand.table[u] != cand.table[u | bit]:
            return u, u | bit
    return None


def _bins_assignment(cand: Junta, q: int, u: int) -> np.ndarray:
    """Assignment over q bins: pattern u on the candidate's bins, 0 elsewhere."""
    v = np.zeros(q, dtype=np.uint8)
    dd = len(cand.relevant)
    for t, b in enumerate(cand.relevant):
        v[b - 1] = (u >> (dd - 1 - t)) & 1
    return v


def _identify_round(o: Oracle, n: int, expand, preimage, cand: Junta, q: int):
    """Round-2 identification shared by the two-round learners: one batch of
    per-bin identification matrices, decoded to original variables."""
    if not cand.relevant:
        o.ask(np.zeros((1, n), dtype=np.uint8))  # keep the round counter at 2
        return []
    plans = []
    seg = []
    all_rows = []
    for pos, b in enumerate(cand.relevant):
        pair = _sensitive_pair_indices(cand, pos)
        if pair is None:
            raise LearnFailure("listed bin is not sensitive in the table", witness=b)
        u, u2 = pair
        a = expand(_bins_assignment(cand, q, u))[0]
        a2 = expand(_bins_assignment(cand, q, u2))[0]
        y = preimage(b)
        rows, decode = _identify_plan(a, a2, y, cand.table[u], cand.table[u2])
        plans.append(decode)
        seg.append(len(rows))
        all_rows.append(rows)
    ans = o.ask(np.vstack(all_rows))
    out = []
    off = 0
    for decode, ln in zip(plans, seg):
        out.append(decode(ans[off : off + ln]))
        off += ln
    return out


def learn_tworound_det(o: Oracle, n: int, d: int) -> Junta:
    """Round 1: learn every hash-collapsed function (d^3 bins) from one
    batched equivalent-set design; round 2: identify, inside each relevant
    bin of the best candidate, the original variable carrying it."""
    if not 1 <= d <= n:
        raise ContractError("need 1 <= d <= n")
    q = d ** 3
    H = phf_build(n, q, d, mode="random", delta=0.05)
    maps = [ProjectionMap(n, min(q, H.q), tuple(int(b) for b in row)) for row in H.maps]
    q = maps[0].q
    A, solve = equivset_plan(q, d)
    inner = RowBatch(A.as_array())
    ans = o.ask(ConcatBatch([pm.batch(inner) for pm in maps]))
    m = inner.nrows
    cands = []
    for i in range(len(maps)):
        try:
            cands.append(solve(ans[i * m : (i + 1) * m]))
        except LearnFailure:
            cands.append(None)
    if all(c is None for c in cands):
        raise LearnFailure("no collapsed function was learnable")
    best = max((c for c in cands if c is not None), key=lambda c: len(c.relevant))
    i0 = next(i for i, c in enumerate(cands) if c is not None and len(c.relevant) == len(best.relevant))
    cand, pm = cands[i0], maps[i0]
    if not cand.relevant:
        o.ask(np.zeros((1, n), dtype=np.uint8))
        return Junta(n, (), cand.table)
    def expand(v):
        return np.atleast_2d(v)[:, np.asarray(pm.table, dtype=np.int64) - 1]
    vars_in_pos = _identify_round(o, n, expand, pm.preimage, cand, q)
    return reorder_positions(vars_in_pos, cand.table, n)


def _partition_count(d: int, delta: float) -> int:
    if d == 1 or delta > 1 / d:
        return 1
    return math.ceil(math.log(1 / delta) / math.log(d))


def learn_tworound_rand(o: Oracle, n: int, d: int, delta: float, rng) -> LearnerResult:
    """Like the deterministic two-round learner with random partitions into
    d^3 bins instead of a hash family; each partition separates the relevant
    set except with probability <= C(d,2)/d^3 <= 1/d."""
    if not 1 <= d <= n:
        raise ContractError("need 1 <= d <= n")
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0,1)")
    rng = as_rng(rng)
    q = d ** 3
    P = _partition_count(d, delta)
    parts = [
        Partition(n, q, tuple(int(b) for b in rng.integers(1, q + 1, size=n)))
        for _ in range(P)
    ]
    A, solve = equivset_plan(q, d)
    inner = RowBatch(A.as_array())
    q0, r0, b0 = o.stats.queries, o.stats.rounds, len(o.stats.batch_sizes)
    ans = o.ask(ConcatBatch([p.batch(inner) for p in parts]))
    m = inner.nrows
    cands = []
    for i in range(P):
        try:
            cands.append(solve(ans[i * m : (i + 1) * m]))
        except LearnFailure:
            cands.append(None)
    detail = {"partitions": P}
    if all(c is None for c in cands):
        o.ask(np.zeros((1, n), dtype=np.uint8))
        return LearnerResult(
            Junta(n, (), (0,)), _stats_delta(o, q0, r0, b0), False,
            witness="no collapsed function was learnable", detail=detail,
        )
    best = max((c for c in cands if c is not None), key=lambda c: len(c.relevant))
    i0 = next(i for i, c in enumerate(cands) if c is not None and len(c.relevant) == len(best.relevant))
    cand, part = cands[i0], parts[i0]
    try:
        if not cand.relevant:
            o.ask(np.zeros((1, n), dtype=np.uint8))
            out = Junta(n, (), cand.table)
        else:
            vars_in_pos = _identify_round(o, n, part.expand, part.preimage, cand, q)
            out = reorder_positions(vars_in_pos, cand.table, n)
    except LearnFailure as e:
        return LearnerResult(
            Junta(n, (), (0,)), _stats_delta(o, q0, r0, b0), False,
            witness=e.witness, detail=detail,
        )
    return LearnerResult(out, _stats_delta(o, q0, r0, b0), True, detail=detail)


def learn_poly_tworound(o: Oracle, n: int, d: int, delta: float, rng) -> LearnerResult:
    """Two rounds in poly(2^d, n) time: round 1 pairs each random partition
    with one sensitivity-sampler instance at delta' = max(delta, 1/d); round 2
    identifies variables inside the best valid candidate's bins."""
    if not 1 <= d <= n:
        raise ContractError("need 1 <= d <= n")
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0,1)")
    rng = as_rng(rng)
    q = d ** 3
    R, dp = _wrapper_reps(d, delta)
    parts = [
        Partition(n, q, tuple(int(b) for b in rng.integers(1, q + 1, size=n)))
        for _ in range(R)
    ]
    root = tuple(int(x) for x in rng.integers(0, 2**63, size=2))
    plans = [_RandnaPlan(q, d, dp, root + (r,)) for r in range(R)]
    batch = ConcatBatch(
        [parts[r].batch(b) for r in range(R) for b in plans[r].batches()]
    )
    q0, r0, b0 = o.stats.queries, o.stats.rounds, len(o.stats.batch_sizes)
    ans = np.asarray(o.ask(batch), dtype=np.uint8)
    cands = []
    off = 0
    for p in plans:
        j, _, _ = p.solve(ans[off : off + p.query_count])
        cands.append(j)
        off += p.query_count
    survivor, i0 = _select_survivor(cands)
    detail = {"partitions": R, "round1_queries": sum(p.query_count for p in plans)}
    if survivor is None:
        o.ask(np.zeros((1, n), dtype=np.uint8))
        return LearnerResult(
            Junta(n, (), (0,)), _stats_delta(o, q0, r0, b0), False,
            witness="no valid candidate", detail=detail,
        )
    part = parts[i0]
    try:
        if not survivor.relevant:
            o.ask(np.zeros((1, n), dtype=np.uint8))
            out = Junta(n, (), survivor.table)
        else:
            vars_in_pos = _identify_round(o, n, part.expand, part.preimage, survivor, q)
            out = reorder_positions(vars_in_pos, survivor.table, n)
    except LearnFailure as e:
        return LearnerResult(
            Junta(n, (), (0,)), _stats_delta(o, q0, r0, b0), False,
            witness=e.witness, detail=detail,
        )
    return LearnerResult(out, _stats_delta(o, q0, r0, b0), True, detail=detail)


# ---------------------------------------------------------------------------
# O(d log d)-round learner


def learn_multiround(o: Oracle, n: int, d: int, delta: float, rng) -> LearnerResult:
    """Staged learner in at most 3 + d*ceil(3*log2 d) rounds.

    Round 1 asks, per partition, a pool over its d^3 bins. Discovery then
    interleaves binary searches across partitions (one shared batch per
    round-group): a pool pair agreeing on the discovered bins I_p with
    different answers certifies a new relevant bin. The best partition's bins
    are tabulated in one round (other bins pinned to 0) and one final round
    identifies the variable inside each relevant bin."""
    if not 1 <= d <= n:
        raise ContractError("need 1 <= d <= n")
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0,1)")
    rng = as_rng(rng)
    q = d ** 3
    P = _partition_count(d, delta)
    dp = 1 / d if P > 1 else delta
    parts = [
        Partition(n, q, tuple(int(b) for b in rng.integers(1, q + 1, size=n)))
        for _ in range(P)
    ]
    t_pool = math.ceil((1 << d) * (math.log(2 * d) + math.log(2 / dp)))
    pools = [rng.integers(0, 2, size=(t_pool, q), dtype=np.uint8) for _ in range(P)]
    q0, r0, b0 = o.stats.queries, o.stats.rounds, len(o.stats.batch_sizes)
    round1 = np.vstack([parts[p].expand(pools[p]) for p in range(P)])
    ans1 = np.asarray(o.ask(round1), dtype=np.uint8)
    pool_ans = [ans1[p * t_pool : (p + 1) * t_pool] for p in range(P)]

    states = [PhaseState([], []) for _ in range(P)]
    searches: list = [None] * P
    stalled = [False] * P
    search_queries = 0
    while True:
        for p in range(P):
            while searches[p] is None and not stalled[p]:
                hit = _first_conflict(
                    list(pools[p]), [int(x) for x in pool_ans[p]], states[p].discovered
                )
                if hit is None or len(states[p].discovered) >= d:
                    stalled[p] = True
                    break
                i, j = hit
                y = [int(v) + 1 for v in np.nonzero(pools[p][i] != pools[p][j])[0]]
                st = BinSearchState(pools[p][i], int(pool_ans[p][i]), pools[p][j], int(pool_ans[p][j]), y)
                if st.done:
                    states[p].discovered.append(st.result)
                    states[p].witnesses.append(st.witness)
                else:
                    searches[p] = st
        active = [p for p in range(P) if searches[p] is not None]
        if not active:
            break
        batch = np.vstack([parts[p].expand(searches[p].query()) for p in active])
        ans = o.ask(batch)
        search_queries += len(active)
        for pos, p in enumerate(active):
            st = searches[p]
            st.feed(int(ans[pos]))
            if st.done:
                states[p].discovered.append(st.result)
                states[p].witnesses.append(st.witness)
                searches[p] = None

    p0 = max(range(P), key=lambda p: len(states[p].discovered))
    I = sorted(states[p0].discovered)
    part = parts[p0]
    k = len(I)
    pats = ((np.arange(1 << k)[:, None] >> np.arange(k - 1, -1, -1)[None, :]) & 1).astype(np.uint8)
    stage2_rows = np.zeros((1 << k, q), dtype=np.uint8)
    stage2_rows[:, np.asarray(I, dtype=np.int64) - 1] = pats
    ans2 = np.asarray(o.ask(part.expand(stage2_rows)), dtype=np.uint8)
    cand = prune(Junta(q, tuple(I), tuple(int(x) for x in ans2)))
    detail = {
        "partitions": P,
        "pool_rows": t_pool * P,
        "search_queries": search_queries,
        "stage2": 1 << k,
        "I_sizes": [len(s.discovered) for s in states],
    }
    try:
        if not cand.relevant:
            out = Junta(n, (), cand.table)
        else:
            vars_in_pos = _identify_round(o, n, part.expand, part.preimage, cand, q)
            out = reorder_positions(vars_in_pos, cand.table, n)
    except LearnFailure as e:
        return LearnerResult(
            Junta(n, (), (0,)), _stats_delta(o, q0, r0, b0), False,
            witness=e.witness, detail=detail,
        )
    stats = _stats_delta(o, q0, r0, b0)
    detail["stage3"] = stats.queries - detail["pool_rows"] - search_queries - detail["stage2"]
    return LearnerResult(out, stats, True, detail=detail)
