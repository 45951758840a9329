"""Combinatorial designs consumed by the learners, with exact verifiers.

Four object families: (n,d)-universal sets, k-wise independent sample
spaces, d-wise bipartite connected families, and (n,q,d)-perfect hash
families. Constructions are randomized or greedy; every family has an
independent verifier so constructions can be gated on proof rather than
probability.

The bipartite-family verifier avoids the quadratic scan over subset pairs:
the graph B(i,j,k,z,A) is disconnected iff some union of i-pattern classes
equals some union of k-pattern classes as row sets (a component's rows are
simultaneously a class union on both sides), or some class is empty (an
isolated vertex). Hashing every proper class union therefore finds all
disconnected pairs in near-linear time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Optional

import numpy as np

from .core import (
    AssignmentSet,
    ContractError,
    ConstructionError,
    ConstructionInfeasible,
    Junta,
    all_assignments,
    as_rng,
    prune,
)
from . import gf2


@dataclass(frozen=True)
class UniversalWitness:
    """A d-subset and pattern no row of the checked set realizes."""

    indices: tuple
    pattern: tuple

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(v) for v in self.indices))
        object.__setattr__(self, "pattern", tuple(int(b) for b in self.pattern))


@dataclass(frozen=True)
class BipartiteSpec:
    """Parameters (i, j, k, z) of one bipartite graph B(i,j,k,z,A)."""

    d1: int
    d2: int
    i: tuple
    j: tuple
    k: tuple
    z: tuple

    def __post_init__(self):
        object.__setattr__(self, "i", tuple(int(v) for v in self.i))
        object.__setattr__(self, "j", tuple(int(v) for v in self.j))
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        object.__setattr__(self, "z", tuple(int(b) for b in self.z))
        if len(self.i) != self.d2 or len(self.k) != self.d2 or len(self.j) != self.d1:
            raise ContractError("index tuple lengths must match d1/d2")
        if len(self.z) != self.d1:
            raise ContractError("z must have length d1")
        allv = self.i + self.j + self.k
        if len(set(allv)) != len(allv):
            raise ContractError("i, j, k must be pairwise disjoint")


class ComponentState:
    """Union-find over the 2^(d2+1) vertices of one bipartite graph."""

    def __init__(self, nvertices: int):
        self.parent = list(range(nvertices))
        self.t = nvertices

    def find(self, v: int) -> int:
        p = self.parent
        while p[v] != v:
            p[v] = p[p[v]]
            v = p[v]
        return v

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        self.t -= 1
        return True


# ---------------------------------------------------------------------------
# universal sets


def verify_universal(S: AssignmentSet, d: int) -> Optional[UniversalWitness]:
    """None iff S is (n,d)-universal; else the lexicographically first missing
    (indices, pattern), patterns ordered as binary numbers (first index = MSB)."""
    n = S.n
    if d > n:
        raise ContractError("d exceeds the variable count")
    if d == 0:
        return None
    rows = S.as_array()
    full = (1 << (1 << d)) - 1
    weights = (1 << np.arange(d - 1, -1, -1)).astype(np.int64)
    for subset in combinations(range(1, n + 1), d):
        cols = rows[:, [v - 1 for v in subset]].astype(np.int64)
        occ = 0
        if len(cols):
            codes = cols @ weights
            occ = int(np.bitwise_or.reduce(1 << codes.astype(np.int64)))
        if occ != full:
            for code in range(1 << d):
                if not (occ >> code) & 1:
                    pattern = tuple((code >> (d - 1 - t)) & 1 for t in range(d))
                    return UniversalWitness(subset, pattern)
    return None


def random_universal_set(n: int, d: int, delta: float, rng) -> AssignmentSet:
    """m = ceil(2^d (d ln n + d + ln(1/delta))) uniform rows; universal with
    probability >= 1-delta by the union bound over C(n,d) 2^d patterns."""
    rng = as_rng(rng)
    if d > n:
        raise ContractError("d exceeds the variable count")
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0,1)")
    if d == 0:
        return AssignmentSet(n, rng.integers(0, 2, size=(1, n), dtype=np.uint8))
    m = math.ceil((1 << d) * (d * math.log(n) + d + math.log(1 / delta)))
    return AssignmentSet(n, rng.integers(0, 2, size=(m, n), dtype=np.uint8))


def witness_term(n: int, w: UniversalWitness) -> Junta:
    """The conjunction that is 1 exactly where the witness pattern holds."""
    d = len(w.indices)
    code = 0
    for b in w.pattern:
        code = (code << 1) | b
    table = [0] * (1 << d)
    table[code] = 1
    return Junta(n, w.indices, tuple(table))


# ---------------------------------------------------------------------------
# k-wise independent sample spaces


def kwise_independent_set(n: int, k: int) -> AssignmentSet:
    """Sample space whose every k columns are exactly uniform.

    Parity-mask construction over GF(2^m) (one free bit plus floor(k/2) trace
    polynomials in odd powers): 2^(1 + floor(k/2) ceil(log2(n+1))) rows, i.e.
    at most 2 (2n)^(floor(k/2)). Falls back to the full cube when that is
    smaller (tiny n).
    """
    if not 1 <= k <= n:
        raise ContractError("need 1 <= k <= n")
    masks, nbits = gf2.kwise_masks(n, k)
    if n < nbits:
        return AssignmentSet(n, all_assignments(n))
    rows = gf2.rows_from_seeds(masks, np.arange(1 << nbits, dtype=np.uint64))
    return AssignmentSet(n, rows)


def verify_kwise(S: AssignmentSet, k: int) -> Optional[tuple]:
    """None iff every k-column projection hits each pattern exactly |S|/2^k
    times; else the first (indices, pattern) off count."""
    n = S.n
    if not 1 <= k <= n:
        raise ContractError("need 1 <= k <= n")
    rows = S.as_array()
    m = len(rows)
    if m % (1 << k):
        sub = tuple(range(1, k + 1))
        return (sub, (0,) * k)
    expected = m >> k
    weights = (1 << np.arange(k - 1, -1, -1)).astype(np.int64)
    for subset in combinations(range(1, n + 1), k):
        codes = rows[:, [v - 1 for v in subset]].astype(np.int64) @ weights
        counts = np.bincount(codes, minlength=1 << k)
        if (counts != expected).any():
            code = int(np.nonzero(counts != expected)[0][0])
            pattern = tuple((code >> (k - 1 - t)) & 1 for t in range(k))
            return (subset, pattern)
    return None


# ---------------------------------------------------------------------------
# bipartite connected families


def initial_potential(n: int, d: int) -> int:
    """X of the empty assignment set: every graph contributes all its vertices
    minus one, summed over ordered disjoint (i,k) pairs and all (j,z)."""
    if d > n:
        raise ContractError("d exceeds the variable count")
    total = 0
    for d2 in range(d + 1):
        d1 = d - d2
        if n < d1 + 2 * d2:
            continue
        specs = (
            math.comb(n, d2)
            * math.comb(n - d2, d2)
            * math.comb(n - 2 * d2, d1)
            * (1 << d1)
        )
        total += specs * ((1 << (d2 + 1)) - 1)
    return total


def _spec_iter(n: int, d: int):
    """All BipartiteSpec parameter tuples in enumeration order
    (d1 ascending, then i, k, j, z lexicographically)."""
    for d1 in range(d + 1):
        d2 = d - d1
        for i in combinations(range(1, n + 1), d2):
            rest = [v for v in range(1, n + 1) if v not in i]
            for k in combinations(rest, d2):
                rest2 = [v for v in rest if v not in k]
                for j in combinations(rest2, d1):
                    for z in product((0, 1), repeat=d1):
                        yield BipartiteSpec(d1, d2, i, j, k, z)


def _graph_components(rows: np.ndarray, spec: BipartiteSpec) -> ComponentState:
    """Union-find state of one graph B(i,j,k,z,A)."""
    d2 = spec.d2
    cs = ComponentState(1 << (d2 + 1))
    if len(rows) == 0:
        return cs
    mask = np.ones(len(rows), dtype=bool)
    for v, zb in zip(spec.j, spec.z):
        mask &= rows[:, v - 1] == zb
    sel = rows[mask]
    if len(sel) == 0:
        return cs
    if d2 == 0:
        cs.union(0, 1)
        return cs
    w = (1 << np.arange(d2 - 1, -1, -1)).astype(np.int64)
    pi = sel[:, [v - 1 for v in spec.i]].astype(np.int64) @ w
    pk = sel[:, [v - 1 for v in spec.k]].astype(np.int64) @ w
    for code in np.unique(pi * (1 << d2) + pk):
        code = int(code)
        cs.union(code >> d2, (1 << d2) + (code & ((1 << d2) - 1)))
    return cs


def connectivity_potential(A: AssignmentSet, d: int, ops_limit: int = 20_000_000) -> int:
    """Sum of (component count - 1) over every graph B(i,j,k,z,A).

    Direct enumeration with union-find; desk scale only (the spec count grows
    like n^(2d) 2^d).
    """
    n = A.n
    if d > n:
        raise ContractError("d exceeds the variable count")
    nspecs = 0
    for d2 in range(d + 1):
        d1 = d - d2
        if n < d1 + 2 * d2:
            continue
        nspecs += (
            math.comb(n, d2)
            * math.comb(n - d2, d2)
            * math.comb(n - 2 * d2, d1)
            * (1 << d1)
        )
    if nspecs * max(len(A), 1) > ops_limit:
        raise ConstructionInfeasible(
            f"{nspecs} graphs over {len(A)} rows exceeds the enumeration budget"
        )
    rows = A.as_array()
    total = 0
    for spec in _spec_iter(n, d):
        total += _graph_components(rows, spec).t - 1
    return total


def _pack_literals(rows: np.ndarray):
    """Per-variable row bitsets: lit[v][b] = uint64 words of rows with x_v=b."""
    m, n = rows.shape
    nwords = max((m + 63) // 64, 1)
    lit1 = np.zeros((n, nwords), dtype=np.uint64)
    lit0 = np.zeros((n, nwords), dtype=np.uint64)
    pad = nwords * 64
    buf = np.zeros(pad, dtype=np.uint8)
    for v in range(n):
        buf[:m] = rows[:, v]
        lit1[v] = np.packbits(buf, bitorder="little").view(np.uint64)
        buf[:m] ^= 1
        lit0[v] = np.packbits(buf, bitorder="little").view(np.uint64)
        buf[:m] = 0
    return lit0, lit1, nwords


def _allrows_mask(m: int, nwords: int) -> np.ndarray:
    out = np.zeros(nwords, dtype=np.uint64)
    full = np.uint64(0xFFFFFFFFFFFFFFFF)
    for w in range(m // 64):
        out[w] = full
    if m % 64:
        out[m // 64] = np.uint64((1 << (m % 64)) - 1)
    return out


def _first_isolated_candidate(subsets, bad, setmasks):
    """Enumeration-first (I, K) pair where one side has an empty class."""
    badlist = [s for s in range(len(subsets)) if bad[s]]
    if not badlist:
        return None
    for si in range(len(subsets)):
        if bad[si]:
            for sk in range(len(subsets)):
                if sk != si and not (setmasks[si] & setmasks[sk]):
                    return (subsets[si], subsets[sk])
        else:
            for sk in badlist:
                if sk != si and not (setmasks[si] & setmasks[sk]):
                    return (subsets[si], subsets[sk])
    return None


def _group_candidates(lit0, lit1, fmask, variables, d2, nwords):
    """Disconnected (I, K) pairs among d2-subsets of `variables` under a fixed
    (j, z) row filter. Returns the enumeration-first pair or None.

    Hashes every proper nonempty union of pattern classes; two disjoint
    subsets sharing a union value give a disconnected graph, as does any
    subset with an empty class (isolated vertex).
    """
    subsets = list(combinations(variables, d2))
    if len(subsets) < 2:
        return None
    S = len(subsets)
    npat = 1 << d2
    # split classes variable by variable; index 2c+b keeps earlier variables
    # in higher bits, so codes come out with the first subset element as MSB
    classes = np.empty((S, npat, nwords), dtype=np.uint64)
    classes[:, 0, :] = fmask
    width = 1
    for t in range(d2):
        col = np.array([s[t] - 1 for s in subsets])
        c0 = lit0[col][:, None, :]
        c1 = lit1[col][:, None, :]
        old = classes[:, :width, :].copy()
        classes[:, 0 : 2 * width : 2, :] = old & c0
        classes[:, 1 : 2 * width : 2, :] = old & c1
        width *= 2

    setmasks = [0] * S
    for s, sub in enumerate(subsets):
        msk = 0
        for v in sub:
            msk |= 1 << v
        setmasks[s] = msk

    bad = (
        np.bitwise_count(classes).sum(axis=2, dtype=np.int64) == 0
    ).any(axis=1)
    iso = _first_isolated_candidate(subsets, bad, setmasks)

    nunions = 1 << npat
    unions = np.zeros((S, nunions, nwords), dtype=np.uint64)
    for umask in range(1, nunions):
        low = umask & -umask
        unions[:, umask, :] = unions[:, umask ^ low, :] | classes[:, low.bit_length() - 1, :]
    proper = np.arange(1, nunions - 1)
    keys = unions[:, proper, :].reshape(S * len(proper), nwords)
    void = np.ascontiguousarray(keys).view(np.dtype((np.void, 8 * nwords))).ravel()
    order = np.argsort(void, kind="stable")
    sv = void[order]
    runs = np.nonzero(sv[1:] != sv[:-1])[0] + 1
    starts = np.concatenate([[0], runs])
    ends = np.concatenate([runs, [len(sv)]])
    sub_of = order // len(proper)

    best = None
    for a, b in zip(starts, ends):
        if b - a < 2:
            continue
        members = np.unique(sub_of[a:b])
        if len(members) < 2:
            continue
        common = setmasks[members[0]]
        for s in members[1:]:
            common &= setmasks[s]
            if not common:
                break
        if common:
            continue
        for x in range(len(members)):
            for y in range(x + 1, len(members)):
                if not (setmasks[members[x]] & setmasks[members[y]]):
                    pair = (subsets[members[x]], subsets[members[y]])
                    if best is None or pair < best:
                        best = pair
    if iso is not None and (best is None or iso < best):
        best = iso
    return best


def verify_bcf(A: AssignmentSet, d: int) -> Optional[BipartiteSpec]:
    """None iff every graph B(i,j,k,z,A) is connected; else the first
    disconnected spec in enumeration order (d1 asc, then i, k, j, z)."""
    n = A.n
    if d > n:
        raise ContractError("d exceeds the variable count")
    rows = A.as_array()
    m = len(rows)
    if d == 0:
        if m >= 1:
            return None
        return BipartiteSpec(0, 0, (), (), (), ())
    if d >= 4:
        # the class-union table has 2^(2^d2) entries per subset; beyond d2=3
        # fall back to the direct per-graph scan (tiny n only)
        nspecs = sum(
            math.comb(n, d - d1) * math.comb(n - (d - d1), d - d1)
            * math.comb(n - 2 * (d - d1), d1) * (1 << d1)
            for d1 in range(d + 1)
            if n >= d1 + 2 * (d - d1)
        )
        if nspecs * max(m, 1) > 50_000_000:
            raise ConstructionInfeasible(
                f"{nspecs} graphs over {m} rows exceeds the enumeration budget"
            )
        for spec in _spec_iter(n, d):
            if _graph_components(rows, spec).t > 1:
                return spec
        return None
    lit0, lit1, nwords = _pack_literals(rows) if m else (None, None, 1)
    if m == 0:
        lit0 = np.zeros((n, 1), dtype=np.uint64)
        lit1 = np.zeros((n, 1), dtype=np.uint64)
    allmask = _allrows_mask(m, nwords)

    for d1 in range(d + 1):
        d2 = d - d1
        if d2 == 0:
            w = verify_universal(A, d)
            if w is not None:
                return BipartiteSpec(d1, 0, (), w.indices, (), w.pattern)
            continue
        if n - d1 < 2 * d2:
            continue
        best = None
        for j in combinations(range(1, n + 1), d1):
            variables = [v for v in range(1, n + 1) if v not in j]
            for z in product((0, 1), repeat=d1):
                fmask = allmask.copy()
                for v, zb in zip(j, z):
                    fmask &= (lit1 if zb else lit0)[v - 1]
                pair = _group_candidates(lit0, lit1, fmask, variables, d2, nwords)
                if pair is not None:
                    key = (pair[0], pair[1], j, z)
                    if best is None or key < best:
                        best = key
        if best is not None:
            return BipartiteSpec(d1, d2, best[0], best[2], best[1], best[3])
    return None


def disconnection_counterexample(A: AssignmentSet, spec: BipartiteSpec):
    """Two distinct d-juntas agreeing on every row of A, derived from the cut
    of a disconnected graph B(i,j,k,z,A).

    f1 is [x_j=z and x_i-pattern in C_L], f2 is [x_j=z and x_k-pattern in
    C_R], where C is the component of the graph containing left vertex 0.
    Edges never cross a component cut, so the functions agree on A; a proper
    component makes them distinct.
    """
    rows = A.as_array()
    cs = _graph_components(rows, spec)
    d2 = spec.d2
    nleft = 1 << d2
    root0 = cs.find(0)
    in_comp = [cs.find(v) == root0 for v in range(2 * nleft)]
    if all(in_comp):
        raise ContractError("the given graph is connected; no counterexample")
    cl = {p for p in range(nleft) if in_comp[p]}
    cr = {p for p in range(nleft) if in_comp[nleft + p]}

    def side_junta(side_vars, side_patterns):
        vs = sorted(side_vars + list(spec.j))
        dd = len(vs)
        pos = {v: t for t, v in enumerate(vs)}
        table = []
        for pat in range(1 << dd):
            bits = {v: (pat >> (dd - 1 - pos[v])) & 1 for v in vs}
            if any(bits[v] != zb for v, zb in zip(spec.j, spec.z)):
                table.append(0)
                continue
            code = 0
            for v in side_vars:
                code = (code << 1) | bits[v]
            table.append(1 if code in side_patterns else 0)
        return prune(Junta(A.n, tuple(vs), tuple(table)))

    return side_junta(list(spec.i), cl), side_junta(list(spec.k), cr)


# ---------------------------------------------------------------------------
# perfect hash families


@dataclass
class HashFamily:
    """Maps [n] -> [q] (values 1-based); the PHF property is a promise of the
    construction, certified by verify_phf."""

    n: int
    q: int
    maps: np.ndarray

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=np.int32)
        if self.maps.ndim != 2 or self.maps.shape[1] != self.n:
            raise ContractError("maps must form an (M, n) table")
        if self.maps.size and (self.maps.min() < 1 or self.maps.max() > self.q):
            raise ContractError("map values must lie in 1..q")

    def __len__(self):
        return self.maps.shape[0]

    def to_text(self) -> str:
        return "".join(" ".join(str(v) for v in row) + "\n" for row in self.maps)

    @classmethod
    def from_text(cls, text: str, q: Optional[int] = None) -> "HashFamily":
        rows = []
        for ln in text.splitlines():
            ln = ln.strip()
            if ln:
                rows.append([int(v) for v in ln.split()])
        if not rows:
            raise ContractError("empty hash family text")
        arr = np.array(rows, dtype=np.int32)
        return cls(arr.shape[1], int(q if q is not None else arr.max()), arr)

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_text())

    @classmethod
    def load(cls, path, q: Optional[int] = None) -> "HashFamily":
        with open(path) as f:
            return cls.from_text(f.read(), q)


def verify_phf(H: HashFamily, d: int) -> Optional[tuple]:
    """None iff every d-subset of [n] is injective under some map; else the
    lexicographically first uncovered subset."""
    if d > H.n:
        raise ContractError("d exceeds the domain size")
    if d <= 1:
        return None
    maps = H.maps
    for subset in combinations(range(1, H.n + 1), d):
        cols = maps[:, [v - 1 for v in subset]]
        cols = np.sort(cols, axis=1)
        ok = (cols[:, 1:] != cols[:, :-1]).all(axis=1).any()
        if not ok:
            return subset
    return None


def _phf_random_size(n: int, q: int, d: int, delta: float) -> int:
    p = 1.0
    for i in range(d):
        p *= 1 - i / q
    return math.ceil((math.log(math.comb(n, d)) + math.log(1 / delta)) / math.log(1 / (1 - p)))


def phf_build(
    n: int,
    q: int,
    d: int,
    mode: str = "random",
    delta: float = 0.05,
    rng=None,
    max_size: Optional[int] = None,
    retries: int = 32,
) -> HashFamily:
    """Build an (n,q,d)-perfect hash family.

    random mode: independent uniform tables of the closed-form size, verified,
    redrawn on failure. greedy mode: seeded candidate stream, each step keeps
    the table separating the most still-unseparated d-subsets (desk scale).
    """
    if d < 1:
        raise ContractError("d must be positive")
    if d == 1:
        return HashFamily(n, q, np.ones((1, n), dtype=np.int32))
    if q >= n:
        return HashFamily(n, q, np.arange(1, n + 1, dtype=np.int32)[None, :])
    if mode == "random":
        if q < 2 * d * d:
            raise ContractError("random mode needs q >= 2d^2")
        rng = as_rng(rng) if rng is not None else np.random.default_rng(
            np.random.SeedSequence((0x70F1, n, q, d))
        )
        M = _phf_random_size(n, q, d, delta)
        for _ in range(retries):
            H = HashFamily(n, q, rng.integers(1, q + 1, size=(M, n), dtype=np.int32))
            if verify_phf(H, d) is None:
                return H
        raise ConstructionError(
            f"no verified family of size {M} after {retries} draws"
        )
    if mode == "greedy":
        if q < d:
            raise ContractError("greedy mode needs q >= d")
        rng = as_rng(rng) if rng is not None else np.random.default_rng(
            np.random.SeedSequence((0x70F1, n, q, d))
        )
        uncovered = np.array(list(combinations(range(n), d)), dtype=np.int64)
        chosen = []
        cap = max_size if max_size is not None else 16 * _phf_random_size(n, q, d, 0.5)
        while len(uncovered):
            if len(chosen) >= cap:
                raise ConstructionError("greedy covering exceeded the size cap")
            cands = rng.integers(1, q + 1, size=(32, n), dtype=np.int32)
            vals = cands[:, uncovered]
            vals = np.sort(vals, axis=2)
            sep = (vals[:, :, 1:] != vals[:, :, :-1]).all(axis=2)
            best = int(sep.sum(axis=1).argmax())
            if not sep[best].any():
                continue
            chosen.append(cands[best])
            uncovered = uncovered[~sep[best]]
        if not chosen:
            chosen.append(rng.integers(1, q + 1, size=n, dtype=np.int32))
        return HashFamily(n, q, np.stack(chosen))
    raise ContractError(f"unknown mode {mode!r}")
