"""One-round junta learners.

Every learner here fixes all of its queries in advance and submits them as a
single oracle batch (the rounds counter ends at 1). The deterministic
learners return the Junta directly and raise LearnFailure when the input
design cannot explain the answers; the Monte Carlo learners return a
LearnerResult and flag failure instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .core import (
    AssignmentSet,
    ContractError,
    Junta,
    LearnFailure,
    as_rng,
    plurality,
    prune,
    reorder_positions,
)
from .oracle import (
    ConcatBatch,
    LazyBitMatrix,
    LearnerResult,
    Oracle,
    PerturbationBatch,
    ProjectedBatch,
    QueryStats,
    RowBatch,
)
from .designs import phf_build
from .bcf import build_bcf


@dataclass(frozen=True)
class ProjectionMap:
    """A variable collapse [n] -> [q]; bins are 1-based like variables."""

    n: int
    q: int
    table: tuple

    def __post_init__(self):
        if len(self.table) != self.n:
            raise ContractError("projection table must have one bin per variable")
        if any(not 1 <= b <= self.q for b in self.table):
            raise ContractError("bin out of range")

    def batch(self, inner):
        """Expand a batch over bin variables to the full variable set."""
        return ProjectedBatch(np.asarray(self.table, dtype=np.int64) - 1, inner)

    def preimage(self, b: int) -> list:
        return [j + 1 for j in range(self.n) if self.table[j] == b]


@dataclass
class SensitivityEstimate:
    """Per-variable estimates of Pr_b[f(a+b)=f(a) and b_i=1] at one base a."""

    a: np.ndarray
    counts: np.ndarray
    m: int

    @property
    def phat(self) -> np.ndarray:
        return self.counts / self.m


def _stats_delta(o: Oracle, q0: int, r0: int, b0: int) -> QueryStats:
    s = o.stats
    return QueryStats(s.queries - q0, s.rounds - r0, list(s.batch_sizes[b0:]))


# ---------------------------------------------------------------------------
# equivalent-set learner


def _scan_consistent(rows: np.ndarray, ans: np.ndarray, n: int, d: int):
    """First d-subset (lex order) whose projected table is single-valued and
    complete; returns (subset 0-based, table array) or None."""
    a0 = ans == 0
    a1 = ~a0
    npat = 1 << d
    w = (1 << np.arange(d - 1, -1, -1)).astype(np.int64) if d else None
    for subset in combinations(range(n), d):
        codes = rows[:, subset].astype(np.int64) @ w if d else np.zeros(len(rows), np.int64)
        occ0 = np.zeros(npat, dtype=bool)
        occ1 = np.zeros(npat, dtype=bool)
        occ0[codes[a0]] = True
        occ1[codes[a1]] = True
        if (occ0 & occ1).any() or not (occ0 | occ1).all():
            continue
        return subset, occ1.astype(np.uint8)
    return None


def _first_subset_witness(rows: np.ndarray, ans: np.ndarray, n: int, d: int):
    subset = tuple(range(d))
    w = (1 << np.arange(d - 1, -1, -1)).astype(np.int64) if d else None
    codes = rows[:, subset].astype(np.int64) @ w if d else np.zeros(len(rows), np.int64)
    seen = {}
    for r in range(len(rows)):
        c = int(codes[r])
        if c in seen and ans[seen[c]] != ans[r]:
            return (tuple(v + 1 for v in subset), "conflict", (seen[c], r))
        seen.setdefault(c, r)
    missing = [c for c in range(1 << d) if c not in seen]
    return (tuple(v + 1 for v in subset), "incomplete", tuple(missing))


def _equivset_solve(rows: np.ndarray, ans: np.ndarray, n: int, d: int) -> Junta:
    hit = _scan_consistent(rows, ans, n, d)
    if hit is None:
        raise LearnFailure(
            "no d-subset explains the answers",
            witness=_first_subset_witness(rows, ans, n, d),
        )
    subset, table = hit
    return prune(Junta(n, tuple(v + 1 for v in subset), tuple(int(x) for x in table)))


def equivset_plan(q: int, d: int, design: Optional[AssignmentSet] = None):
    """Plan form of learn_equivset: (rows to ask, solve(answers) -> Junta)."""
    A = design if design is not None else build_bcf(q, d)
    rows = A.as_array()

    def solve(ans: np.ndarray) -> Junta:
        return _equivset_solve(rows, np.asarray(ans, dtype=np.uint8), q, d)

    return A, solve


def learn_equivset(o: Oracle, n: int, d: int, A: Optional[AssignmentSet] = None) -> Junta:
    """Ask a d-wise bipartite connected family once; return the junta of the
    lexicographically first d-subset whose projected answer table is
    consistent. Connectivity of the family makes any consistent table
    equivalent to the target, so the first hit is as good as the right one.
    """
    if not 0 <= d <= n:
        raise ContractError("need 0 <= d <= n")
    A, solve = equivset_plan(n, d, A)
    if A.n != n:
        raise ContractError("design is over the wrong variable count")
    return solve(o.ask(A))


# ---------------------------------------------------------------------------
# block-expansion learner


def learn_block_expansion(o: Oracle, n: int, d: int, U: AssignmentSet) -> Junta:
    """One round of |U|*(n+1) queries: each universal-set row plus all its
    single-bit flips. A variable is relevant iff some flip changes the answer;
    the table is filled from the queried rows (universality covers every
    pattern of the realized relevant set)."""
    if not 0 <= d <= n:
        raise ContractError("need 0 <= d <= n")
    if U.n != n:
        raise ContractError("universal set is over the wrong variable count")
    base = U.as_array()
    t = len(base)
    blocks = np.repeat(base[:, None, :], n + 1, axis=1)
    for i in range(n):
        blocks[:, i + 1, i] ^= 1
    rows = blocks.reshape(-1, n)
    ans = np.asarray(o.ask(rows), dtype=np.uint8).reshape(t, n + 1)
    changed = ans[:, 1:] != ans[:, [0]]
    rel = np.nonzero(changed.any(axis=0))[0]
    if len(rel) > d:
        raise LearnFailure(
            "more than d variables respond to flips",
            witness=tuple(int(v) + 1 for v in rel),
        )
    dd = len(rel)
    codes = rows[:, rel].astype(np.int64) @ (1 << np.arange(dd - 1, -1, -1)) if dd else np.zeros(len(rows), np.int64)
    flat = ans.reshape(-1)
    occ0 = np.zeros(1 << dd, dtype=bool)
    occ1 = np.zeros(1 << dd, dtype=bool)
    occ0[codes[flat == 0]] = True
    occ1[codes[flat == 1]] = True
    if (occ0 & occ1).any():
        c = int(np.nonzero(occ0 & occ1)[0][0])
        raise LearnFailure(
            "rows agreeing on the detected variables disagree in answer",
            witness=(tuple(int(v) + 1 for v in rel), c),
        )
    if not (occ0 | occ1).all():
        c = int(np.nonzero(~(occ0 | occ1))[0][0])
        raise LearnFailure(
            "pattern missing for the detected variables (set not universal)",
            witness=(tuple(int(v) + 1 for v in rel), c),
        )
    j = Junta(n, tuple(int(v) + 1 for v in rel), tuple(int(x) for x in occ1.astype(np.uint8)))
    return prune(j)


# ---------------------------------------------------------------------------
# deterministic reduction


def reduce_deterministic(
    base: Optional[Callable],
    o: Oracle,
    n: int,
    d: int,
    q: int,
) -> Junta:
    """Learn an n-variable junta through an (n,q,d+1)-perfect hash family.

    base is a plan-form one-round learner for q-variable functions:
    base(q, d) -> (AssignmentSet over q variables, solve(answers) -> Junta);
    None selects the equivalent-set learner. All projected copies share one
    oracle round. A (d+1)-subset family makes the intersection rule exact:
    for any non-relevant variable u there is a maximal-arity hash separating
    relevant + {u}, which expels u from the intersection D.
    """
    if q < 2 * (d + 1) ** 2:
        raise ContractError("need q >= 2(d+1)^2")
    if not 0 <= d <= n:
        raise ContractError("need 0 <= d <= n")
    if base is None:
        base = equivset_plan
    H = phf_build(n, q, d + 1, mode="random", delta=0.05)
    maps = [ProjectionMap(n, q, tuple(int(b) for b in row)) for row in H.maps]
    A, solve = base(q, d)
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
        raise LearnFailure("no projection produced a candidate")
    dprime = max(len(c.relevant) for c in cands if c is not None)
    vmax = [i for i, c in enumerate(cands) if c is not None and len(c.relevant) == dprime]
    if dprime == 0:
        return Junta(n, (), cands[vmax[0]].table)
    D = None
    for i in vmax:
        binset = set(cands[i].relevant)
        hit = {j for j in range(1, n + 1) if maps[i].table[j - 1] in binset}
        D = hit if D is None else (D & hit)
    i0 = vmax[0]
    vars_in_pos = []
    for b in cands[i0].relevant:
        members = [j for j in maps[i0].preimage(b) if j in D]
        if len(members) != 1:
            raise LearnFailure(
                "a relevant bin is not isolated by the hash family",
                witness=(b, tuple(members)),
            )
        vars_in_pos.append(members[0])
    return reorder_positions(vars_in_pos, cands[i0].table, n)


# ---------------------------------------------------------------------------
# randomized sensitivity learner


@dataclass
class _RandnaPlan:
    """Query plan for one repetition of the sensitivity sampler.

    Rows, in batch order: t uniform bases; for each base, m perturbations
    with Bernoulli(1/(3d)) noise; m2 uniform fill rows for the truth table.
    The noise matrix stays lazy: the oracle materializes only relevant
    columns, and the remaining per-variable counts are drawn as Binomials.
    """

    nvars: int
    d: int
    delta: float
    key: tuple
    t: int = field(init=False)
    m: int = field(init=False)
    m2: int = field(init=False)

    def __post_init__(self):
        d, dp, n = self.d, self.delta, self.nvars
        self.t = math.ceil((1 << d) * (math.log(d) + math.log(3 / dp)))
        self.m = math.ceil(600 * d * (math.log(n) + math.log(3 * self.t / dp)))
        self.m2 = math.ceil((1 << d) * (d * math.log(2) + math.log(3 / dp)))
        rng = np.random.default_rng(np.random.SeedSequence(self.key + (0,)))
        self.bases = rng.integers(0, 2, size=(self.t, n), dtype=np.uint8)
        self.noise = LazyBitMatrix(self.t * self.m, n, 1, 3 * d, self.key + (1,))
        self.fill = LazyBitMatrix(self.m2, n, 1, 2, self.key + (2,))

    @property
    def query_count(self) -> int:
        return self.t * (1 + self.m) + self.m2

    def batches(self) -> list:
        return [RowBatch(self.bases), PerturbationBatch(self.bases, self.m, self.noise), self.fill]

    def solve(self, ans: np.ndarray, collect: bool = False):
        """Returns (junta or None, failure reason, estimates)."""
        t, m, m2, d, n = self.t, self.m, self.m2, self.d, self.nvars
        fa = ans[:t]
        pert = ans[t : t + t * m].reshape(t, m)
        fill_ans = ans[t + t * m :]
        flags = (pert == fa[:, None]).astype(np.uint8)
        counts = self.noise.segment_counts(flags.ravel(), m)  # (t, nvars)
        ests = (
            [SensitivityEstimate(self.bases[a].copy(), counts[a].copy(), m) for a in range(t)]
            if collect
            else None
        )
        low = counts < 0.15 * m / d
        marked = np.nonzero(low.any(axis=0))[0]
        if len(marked) > d:
            return None, "too many variables", ests
        dd = len(marked)
        wpow = 1 << np.arange(dd - 1, -1, -1) if dd else None
        tab_rows = np.concatenate(
            [
                np.stack([self.bases[:, j] for j in marked], axis=1) if dd else np.zeros((t, 0), np.uint8),
                np.stack([self.fill.column(int(j)) for j in marked], axis=1) if dd else np.zeros((m2, 0), np.uint8),
            ]
        )
        vals = np.concatenate([fa, fill_ans])
        codes = tab_rows.astype(np.int64) @ wpow if dd else np.zeros(len(vals), np.int64)
        occ0 = np.zeros(1 << dd, dtype=bool)
        occ1 = np.zeros(1 << dd, dtype=bool)
        occ0[codes[vals == 0]] = True
        occ1[codes[vals == 1]] = True
        if (occ0 & occ1).any():
            return None, "table conflict", ests
        if not (occ0 | occ1).all():
            return None, "table incomplete", ests
        j = Junta(n, tuple(int(v) + 1 for v in marked), tuple(int(x) for x in occ1.astype(np.uint8)))
        return j, None, ests


def _wrapper_reps(d: int, delta: float):
    """Repetition schedule: for delta <= 1/d (d >= 2) repeat the 1/d instance
    ceil(ln(1/delta)/ln d) times; otherwise one instance at delta."""
    if d >= 2 and delta <= 1 / d:
        return math.ceil(math.log(1 / delta) / math.log(d)), 1 / d
    return 1, delta


def _select_survivor(cands: list):
    """Discard candidates claiming never-used variables; keep the survivor
    with the most relevant variables, first index winning ties."""
    best = None
    best_i = -1
    for i, c in enumerate(cands):
        if c is None:
            continue
        if prune(c).relevant != c.relevant:
            continue
        if best is None or len(c.relevant) > len(best.relevant):
            best, best_i = c, i
    return best, best_i


def _randna_run(o_ask, nvars: int, d: int, delta: float, keys: list, collect: bool = False):
    """Shared core: build R plans, ask them in one batch via o_ask, reconcile."""
    R, dp = _wrapper_reps(d, delta)
    plans = [_RandnaPlan(nvars, d, dp, keys[r]) for r in range(R)]
    batch = ConcatBatch([b for p in plans for b in p.batches()])
    ans = np.asarray(o_ask(batch), dtype=np.uint8)
    cands = []
    reasons = []
    ests = None
    off = 0
    for p in plans:
        j, why, e = p.solve(ans[off : off + p.query_count], collect=collect and ests is None)
        if e is not None:
            ests = e
        cands.append(j)
        reasons.append(why)
        off += p.query_count
    survivor, idx = _select_survivor(cands)
    detail = {
        "reps": R,
        "delta_rep": dp,
        "reasons": reasons,
        "survivor_index": idx,
        "query_count": sum(p.query_count for p in plans),
    }
    if collect:
        detail["estimates"] = ests
    return survivor, detail


def learn_randomized_nonadaptive(
    o: Oracle, n: int, d: int, delta: float, rng
) -> LearnerResult:
    """Sensitivity sampling in one round: mark variable i when, at some base
    a, the fraction of perturbations with f(a+b)=f(a) and b_i=1 drops below
    0.15/d (irrelevant variables sit near 1/(3d) >= 0.2/d, variables with
    influence at a sit at or below 0.1/d). Succeeds with probability 1-delta.
    """
    if not 1 <= d <= n:
        raise ContractError("need 1 <= d <= n")
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0,1)")
    rng = as_rng(rng)
    root = tuple(int(x) for x in rng.integers(0, 2**63, size=2))
    R, _ = _wrapper_reps(d, delta)
    keys = [root + (r,) for r in range(R)]
    q0, r0, b0 = o.stats.queries, o.stats.rounds, len(o.stats.batch_sizes)
    survivor, detail = _randna_run(o.ask, n, d, delta, keys, collect=True)
    stats = _stats_delta(o, q0, r0, b0)
    if survivor is None:
        return LearnerResult(Junta(n, (), (0,)), stats, False, witness="no valid candidate", detail=detail)
    return LearnerResult(survivor, stats, True, detail=detail)


# ---------------------------------------------------------------------------
# randomized hash reduction


def learn_randomized_reduction(
    o: Oracle, n: int, d: int, delta: float, rng, _partitions=None
) -> LearnerResult:
    """Collapse n variables into q = 8d^2 bins under many random hashes, run
    the sensitivity learner at delta=1/8 on every collapsed function in the
    same round, then majority-vote variables back through the hashes.

    W holds the variables appearing in more than half of the back-mapped
    relevant sets; hashes whose relevant bins each contain exactly one W
    variable vote, and the plurality of their remapped candidates wins.
    """
    if not 1 <= d <= n:
        raise ContractError("need 1 <= d <= n")
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0,1)")
    rng = as_rng(rng)
    q = 8 * d * d
    P = math.ceil(32 * math.log(3 * n / delta))
    if _partitions is None:
        tables = rng.integers(1, q + 1, size=(P, n), dtype=np.int64)
    else:
        tables = np.asarray(_partitions, dtype=np.int64)
        P = len(tables)
    maps = [ProjectionMap(n, q, tuple(int(b) for b in row)) for row in tables]
    root = tuple(int(x) for x in rng.integers(0, 2**63, size=2))
    R, dp = _wrapper_reps(d, 1 / 8)
    plans = []
    for h in range(P):
        plans.append([_RandnaPlan(q, d, dp, root + (h, r)) for r in range(R)])
    parts = []
    for h in range(P):
        for p in plans[h]:
            parts.extend(maps[h].batch(b) for b in p.batches())
    q0, r0, b0 = o.stats.queries, o.stats.rounds, len(o.stats.batch_sizes)
    ans = np.asarray(o.ask(ConcatBatch(parts)), dtype=np.uint8)
    off = 0
    hash_cands = []
    for h in range(P):
        cands = []
        for p in plans[h]:
            j, _, _ = p.solve(ans[off : off + p.query_count])
            cands.append(j)
            off += p.query_count
        survivor, _ = _select_survivor(cands)
        hash_cands.append(survivor)

    votes = np.zeros(n + 1, dtype=np.int64)
    for h in range(P):
        c = hash_cands[h]
        if c is None or not c.relevant:
            continue
        binset = set(c.relevant)
        for j in range(1, n + 1):
            if maps[h].table[j - 1] in binset:
                votes[j] += 1
    W = {j for j in range(1, n + 1) if votes[j] * 2 > P}

    finals = []
    for h in range(P):
        c = hash_cands[h]
        if c is None:
            finals.append(Junta(n, (), (0,)))
            continue
        if not c.relevant:
            finals.append(Junta(n, (), c.table))
            continue
        vars_in_pos = []
        ok = True
        for b in c.relevant:
            members = [j for j in maps[h].preimage(b) if j in W]
            if len(members) != 1:
                ok = False
                break
            vars_in_pos.append(members[0])
        if ok:
            finals.append(reorder_positions(vars_in_pos, c.table, n))
    stats = _stats_delta(o, q0, r0, b0)
    detail = {"hashes": P, "W": sorted(W), "eligible": len(finals)}
    if not finals:
        return LearnerResult(Junta(n, (), (0,)), stats, False, witness="no hash isolates W", detail=detail)
    return LearnerResult(plurality(finals), stats, True, detail=detail)
