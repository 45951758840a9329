"""Membership oracle with query/round accounting, plus batch objects.

A batch is anything exposing `nrows`, `n`, and `column(j)` returning the j-th
variable column (0-based internally) as a uint8 vector of length nrows. The
oracle only materializes the columns its target actually reads, so batches
backed by lazily generated random bits stay cheap even at millions of rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import AssignmentSet, ContractError, Junta


@dataclass
class QueryStats:
    queries: int = 0
    rounds: int = 0
    batch_sizes: list = field(default_factory=list)


@dataclass
class LearnerResult:
    output: Junta
    stats: QueryStats
    ok: bool
    witness: Optional[object] = None
    detail: Optional[dict] = None


class RowBatch:
    """A fully materialized (m, n) bit matrix."""

    def __init__(self, rows):
        rows = np.asarray(rows, dtype=np.uint8)
        if rows.ndim != 2:
            raise ContractError("rows must be two-dimensional")
        self._rows = rows
        self.nrows = rows.shape[0]
        self.n = rows.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self._rows[:, j]


class PerturbationBatch:
    """Rows a_b xor noise, grouped in segments of m rows per base assignment.

    Row (b*m + r) equals bases[b] xor the r-th noise row of the given bit
    matrix. Noise columns are pulled lazily so irrelevant variables are never
    materialized.
    """

    def __init__(self, bases, m: int, noise: "LazyBitMatrix"):
        bases = np.asarray(bases, dtype=np.uint8)
        if bases.ndim != 2:
            raise ContractError("bases must be two-dimensional")
        t, n = bases.shape
        if noise.nrows != t * m or noise.ncols != n:
            raise ContractError("noise matrix shape mismatch")
        self._bases = bases
        self._m = m
        self._noise = noise
        self.nrows = t * m
        self.n = n

    def column(self, j: int) -> np.ndarray:
        return np.repeat(self._bases[:, j], self._m) ^ self._noise.column(j)


class ProjectedBatch:
    """Expands queries over q bin variables to n real variables: x_j := v_{h(j)}."""

    def __init__(self, bins0, inner):
        # bins0: length-n array of 0-based bin indices into the inner batch
        self._bins = np.asarray(bins0, dtype=np.int64)
        if self._bins.ndim != 1:
            raise ContractError("bin table must be one-dimensional")
        if self._bins.size and (self._bins.min() < 0 or self._bins.max() >= inner.n):
            raise ContractError("bin index out of range")
        self._inner = inner
        self._memo = {}
        self.nrows = inner.nrows
        self.n = self._bins.shape[0]

    def column(self, j: int) -> np.ndarray:
        b = int(self._bins[j])
        if b not in self._memo:
            self._memo[b] = self._inner.column(b)
        return self._memo[b]


class ConcatBatch:
    """Concatenation of sub-batches over the same variable set."""

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise ContractError("empty concatenation")
        n = parts[0].n
        if any(p.n != n for p in parts):
            raise ContractError("sub-batches disagree on n")
        self.parts = parts
        self.n = n
        self.nrows = sum(p.nrows for p in parts)

    def column(self, j: int) -> np.ndarray:
        return np.concatenate([p.column(j) for p in self.parts])


class LazyBitMatrix:
    """Bernoulli(num/den) bit matrix generated per column from a seed key.

    Column j is drawn from its own deterministic stream, so any subset of
    columns can be materialized independently. segment_counts() returns, for
    each segment of m consecutive rows and each column, the count of rows with
    flag set and bit 1: exact dot products for columns already materialized,
    and fresh Binomial draws for untouched columns (valid jointly because the
    flags cannot depend on bits never generated). Afterwards the matrix is
    sealed: untouched columns no longer exist in any consistent sense.
    """

    def __init__(self, nrows: int, ncols: int, num: int, den: int, key: tuple):
        if not (0 < num < den):
            raise ContractError("need 0 < num < den")
        self.nrows = nrows
        self.ncols = ncols
        self.n = ncols  # batch protocol alias
        self.num = num
        self.den = den
        self.key = tuple(int(x) for x in key)
        self._cache = {}
        self._sealed = False

    def column(self, j: int) -> np.ndarray:
        if not 0 <= j < self.ncols:
            raise ContractError("column index out of range")
        if j not in self._cache:
            if self._sealed:
                raise RuntimeError("matrix sealed; column was already counted out")
            rng = np.random.default_rng(np.random.SeedSequence(self.key + (j,)))
            bits = rng.integers(0, self.den, size=self.nrows)
            self._cache[j] = (bits < self.num).astype(np.uint8)
        return self._cache[j]

    def segment_counts(self, flags, m: int) -> np.ndarray:
        if self._sealed:
            raise RuntimeError("segment_counts may be called once")
        flags = np.asarray(flags, dtype=np.uint8)
        if flags.shape != (self.nrows,) or self.nrows % m:
            raise ContractError("flags must cover whole segments")
        t = self.nrows // m
        seg_flags = flags.reshape(t, m).sum(axis=1).astype(np.int64)
        p = self.num / self.den
        out = np.empty((t, self.ncols), dtype=np.int64)
        for j in range(self.ncols):
            if j in self._cache:
                out[:, j] = (flags & self._cache[j]).reshape(t, m).sum(axis=1)
            else:
                rng = np.random.default_rng(np.random.SeedSequence(self.key + (j, 1)))
                out[:, j] = rng.binomial(seg_flags, p)
        self._sealed = True
        return out


class JuntaTarget:
    """Oracle backend evaluating a hidden Junta; reads only relevant columns."""

    def __init__(self, j: Junta):
        self.junta = j
        self.n = j.n

    def answers(self, batch) -> np.ndarray:
        if isinstance(batch, ConcatBatch):
            return np.concatenate([self.answers(p) for p in batch.parts])
        j = self.junta
        if not j.relevant:
            return np.full(batch.nrows, j.table[0], dtype=np.uint8)
        idx = np.zeros(batch.nrows, dtype=np.int64 if len(j.relevant) > 7 else np.uint8)
        for r in j.relevant:
            idx = (idx << 1) | batch.column(r - 1)
        return np.asarray(j.table, dtype=np.uint8)[idx.astype(np.int64)]


class FunctionTarget:
    """Oracle backend for an arbitrary row evaluator (adversary tests)."""

    def __init__(self, func, n: int):
        self.func = func
        self.n = n

    def answers(self, batch) -> np.ndarray:
        if batch.nrows * self.n > 1 << 24:
            raise ContractError("function target would materialize too many bits")
        mat = np.stack([batch.column(j) for j in range(self.n)], axis=1)
        return np.fromiter(
            (int(self.func(row)) for row in mat), dtype=np.uint8, count=batch.nrows
        )


class Oracle:
    """Answers batched membership queries and counts queries/rounds."""

    def __init__(self, target, n: Optional[int] = None):
        if isinstance(target, Junta):
            target = JuntaTarget(target)
        elif callable(target) and not hasattr(target, "answers"):
            if n is None:
                raise ContractError("a bare evaluator needs an explicit n")
            target = FunctionTarget(target, n)
        self.target = target
        self.n = target.n
        self.stats = QueryStats()

    def ask(self, batch) -> np.ndarray:
        """Submit one round of queries; returns the uint8 answer vector."""
        if isinstance(batch, AssignmentSet):
            batch = RowBatch(batch.as_array())
        elif isinstance(batch, np.ndarray):
            batch = RowBatch(batch)
        if batch.n != self.n:
            raise ContractError(f"batch is over {batch.n} variables, target has {self.n}")
        if batch.nrows == 0:
            raise ContractError("a round must contain at least one query")
        ans = self.target.answers(batch)
        self.stats.queries += batch.nrows
        self.stats.rounds += 1
        self.stats.batch_sizes.append(batch.nrows)
        return ans


def query_batch(o: Oracle, batch) -> list:
    """One round of membership queries; answers align with batch rows."""
    return [int(b) for b in o.ask(batch)]
