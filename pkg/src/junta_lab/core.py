"""Junta model: assignments, truth-table juntas, and function equivalence.

Variable indices are 1-based in every public interface. A junta stores its
relevant variables as a strictly increasing tuple and its truth table indexed
by the pattern of those variables in list order, first listed variable as the
most significant bit. A constant function has an empty relevant tuple and a
one-entry table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


class ContractError(ValueError):
    """A caller violated an operation precondition."""


class LearnFailure(Exception):
    """A learner could not produce a consistent junta."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class ConstructionError(Exception):
    """A design construction did not reach its target property."""


class ConstructionInfeasible(ConstructionError):
    """The construction would exceed the configured memory or work budget."""


def as_rng(rng) -> np.random.Generator:
    """Coerce an int seed or Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ContractError("a seed or Generator is required; no ambient entropy")
    return np.random.default_rng(rng)


def as_bits(a, n: Optional[int] = None) -> np.ndarray:
    """Coerce a 0/1 string, sequence, or array into a uint8 vector."""
    if isinstance(a, str):
        arr = np.array([int(c) for c in a.strip()], dtype=np.uint8)
    else:
        arr = np.asarray(a, dtype=np.uint8)
    if arr.ndim != 1:
        raise ContractError("assignment must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ContractError("assignment entries must be bits")
    if n is not None and arr.shape[0] != n:
        raise ContractError(f"assignment has length {arr.shape[0]}, expected {n}")
    return arr


def all_assignments(n: int) -> np.ndarray:
    """All 2^n assignments as a (2^n, n) uint8 matrix, row r = binary of r (MSB first)."""
    if n < 0 or n > 24:
        raise ContractError("exhaustive assignment enumeration needs 0 <= n <= 24")
    r = np.arange(1 << n, dtype=np.int64)
    return ((r[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)


class AssignmentSet:
    """An ordered list of assignments over n variables (duplicates allowed)."""

    __slots__ = ("n", "_rows")

    def __init__(self, n: int, rows=None):
        if n < 1:
            raise ContractError("n must be positive")
        self.n = n
        if rows is None:
            self._rows = np.zeros((0, n), dtype=np.uint8)
        else:
            arr = np.asarray(rows, dtype=np.uint8)
            if arr.ndim != 2 or arr.shape[1] != n:
                raise ContractError("rows must form a (m, n) bit matrix")
            if arr.size and arr.max() > 1:
                raise ContractError("rows must be bits")
            self._rows = arr.copy()

    def as_array(self) -> np.ndarray:
        return self._rows

    def append(self, row) -> None:
        row = as_bits(row, self.n)
        self._rows = np.vstack([self._rows, row[None, :]])

    def __len__(self) -> int:
        return self._rows.shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self._rows[i].copy()

    def __iter__(self):
        for r in self._rows:
            yield r.copy()

    def __eq__(self, other):
        return (
            isinstance(other, AssignmentSet)
            and self.n == other.n
            and self._rows.shape == other._rows.shape
            and bool((self._rows == other._rows).all())
        )

    def __repr__(self):
        return f"AssignmentSet(n={self.n}, rows={len(self)})"

    def to_text(self) -> str:
        return "".join("".join(map(str, r)) + "\n" for r in self._rows)

    @classmethod
    def from_text(cls, text: str, n: Optional[int] = None) -> "AssignmentSet":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ContractError("empty assignment-set text")
        width = len(lines[0])
        rows = []
        for ln in lines:
            if len(ln) != width or any(c not in "01" for c in ln):
                raise ContractError(f"bad assignment row: {ln!r}")
            rows.append([int(c) for c in ln])
        if n is not None and width != n:
            raise ContractError(f"rows have width {width}, expected {n}")
        return cls(width, np.array(rows, dtype=np.uint8))

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_text())

    @classmethod
    def load(cls, path, n: Optional[int] = None) -> "AssignmentSet":
        with open(path) as f:
            return cls.from_text(f.read(), n)


@dataclass(frozen=True)
class Junta:
    """A function over n variables depending only on the listed variables."""

    n: int
    relevant: tuple
    table: tuple

    def __post_init__(self):
        object.__setattr__(self, "relevant", tuple(int(r) for r in self.relevant))
        object.__setattr__(self, "table", tuple(int(b) for b in self.table))
        if self.n < 1:
            raise ContractError("n must be positive")
        rel = self.relevant
        if any(not 1 <= r <= self.n for r in rel):
            raise ContractError("relevant indices must lie in 1..n")
        if any(rel[i] >= rel[i + 1] for i in range(len(rel) - 1)):
            raise ContractError("relevant indices must be strictly increasing")
        if len(self.table) != 1 << len(rel):
            raise ContractError("table length must be 2^(number of relevant variables)")
        if any(b not in (0, 1) for b in self.table):
            raise ContractError("table entries must be bits")

    @property
    def arity(self) -> int:
        return len(self.relevant)


def eval_junta(j: Junta, a) -> int:
    """Evaluate j at assignment a (any bit-vector-like of length n)."""
    a = as_bits(a, j.n)
    idx = 0
    for r in j.relevant:
        idx = (idx << 1) | int(a[r - 1])
    return j.table[idx]


def eval_junta_rows(j: Junta, rows: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over a (m, n) bit matrix."""
    rows = np.asarray(rows, dtype=np.uint8)
    if rows.ndim != 2 or rows.shape[1] != j.n:
        raise ContractError("rows must be a (m, n) bit matrix")
    if not j.relevant:
        return np.full(rows.shape[0], j.table[0], dtype=np.uint8)
    cols = np.array([r - 1 for r in j.relevant])
    d = len(cols)
    w = (1 << np.arange(d - 1, -1, -1)).astype(np.int64)
    idx = rows[:, cols].astype(np.int64) @ w
    return np.asarray(j.table, dtype=np.uint8)[idx]


def sensitive_wrt(j: Junta, a, i: int) -> bool:
    """Does flipping variable i at assignment a change the value of j?"""
    a = as_bits(a, j.n)
    if not 1 <= i <= j.n:
        raise ContractError("variable index out of range")
    b = a.copy()
    b[i - 1] ^= 1
    return eval_junta(j, a) != eval_junta(j, b)


def prune(j: Junta) -> Junta:
    """Drop listed variables the table does not actually depend on."""
    d = len(j.relevant)
    if d == 0:
        return j
    tbl = np.asarray(j.table, dtype=np.uint8)
    idx = np.arange(1 << d)
    keep = []
    for p in range(d):
        bit = 1 << (d - 1 - p)
        if (tbl[idx] != tbl[idx ^ bit]).any():
            keep.append(p)
    if len(keep) == d:
        return j
    kd = len(keep)
    new_tbl = []
    for mpat in range(1 << kd):
        old = 0
        for q, p in enumerate(keep):
            if (mpat >> (kd - 1 - q)) & 1:
                old |= 1 << (d - 1 - p)
        new_tbl.append(int(tbl[old]))
    return Junta(j.n, tuple(j.relevant[p] for p in keep), tuple(new_tbl))


def check_junta(j: Junta) -> bool:
    """True when every listed relevant variable is actually relevant."""
    return prune(j).relevant == j.relevant


def relevant_variables_bruteforce(evalf, n: int, d: Optional[int] = None) -> list:
    """Exact relevant set of a black-box function by full enumeration (n <= 20).

    `evalf` is called on each length-n uint8 assignment; a Junta may be passed
    directly. `d` is accepted for signature compatibility with callers that
    know a bound; the scan is exhaustive regardless.
    """
    if n > 20:
        raise ContractError("brute force limited to n <= 20")
    rows = all_assignments(n)
    if isinstance(evalf, Junta):
        vals = eval_junta_rows(evalf, rows).astype(np.uint8)
    else:
        vals = np.fromiter((int(evalf(r)) for r in rows), dtype=np.uint8, count=len(rows))
    idx = np.arange(1 << n)
    out = []
    for i in range(1, n + 1):
        bit = 1 << (n - i)
        if (vals[idx] != vals[idx ^ bit]).any():
            out.append(i)
    return out


def juntas_equivalent(j1: Junta, j2: Junta) -> bool:
    """Function equality, checked over all patterns of the union of listed variables."""
    if j1.n != j2.n:
        raise ContractError("juntas must share the same n")
    union = sorted(set(j1.relevant) | set(j2.relevant))
    k = len(union)
    if k > 22:
        raise ContractError("union of relevant sets too large to enumerate")
    pats = all_assignments(k)

    def vals(j):
        if not j.relevant:
            return np.full(len(pats), j.table[0], dtype=np.uint8)
        pos = [union.index(r) for r in j.relevant]
        dd = len(pos)
        w = (1 << np.arange(dd - 1, -1, -1)).astype(np.int64)
        idx = pats[:, pos].astype(np.int64) @ w
        return np.asarray(j.table, dtype=np.uint8)[idx]

    return bool((vals(j1) == vals(j2)).all())


def plurality(candidates: Sequence[Junta]) -> Junta:
    """Representative of the largest equivalence class; ties go to the class
    whose first member appears earliest in the list."""
    if not candidates:
        raise ContractError("plurality of an empty candidate list")
    classes = []  # [representative, count, first_index]
    for pos, c in enumerate(candidates):
        for cl in classes:
            if juntas_equivalent(cl[0], c):
                cl[1] += 1
                break
        else:
            classes.append([c, 1, pos])
    best = max(classes, key=lambda cl: (cl[1], -cl[2]))
    return best[0]


def random_junta(n: int, d: int, rng, exact: bool = False) -> Junta:
    """Uniform d' <= d junta: d random indices and a random table, then pruned.

    With exact=True, resample until all d listed variables survive pruning.
    """
    rng = as_rng(rng)
    if not 0 <= d <= n:
        raise ContractError("need 0 <= d <= n")
    if d == 0:
        return Junta(n, (), (int(rng.integers(0, 2)),))
    while True:
        rel = tuple(sorted(int(v) + 1 for v in rng.choice(n, size=d, replace=False)))
        table = tuple(int(b) for b in rng.integers(0, 2, size=1 << d))
        j = prune(Junta(n, rel, table))
        if not exact or j.arity == d:
            return j


def reorder_positions(vars_in_pos_order: Sequence[int], table: Sequence[int], n: int) -> Junta:
    """Build a junta from a table whose bit positions carry arbitrary distinct
    variables (first position = MSB); variables are sorted and the table is
    permuted to match, then pruned."""
    vs = [int(v) for v in vars_in_pos_order]
    if len(set(vs)) != len(vs):
        raise ContractError("positions must carry distinct variables")
    k = len(vs)
    if len(table) != 1 << k:
        raise ContractError("table length mismatch")
    order = sorted(range(k), key=lambda t: vs[t])
    rank = [0] * k
    for newpos, oldpos in enumerate(order):
        rank[oldpos] = newpos
    tbl = []
    for newpat in range(1 << k):
        old = 0
        for t in range(k):
            if (newpat >> (k - 1 - rank[t])) & 1:
                old |= 1 << (k - 1 - t)
        tbl.append(int(table[old]))
    return prune(Junta(n, tuple(sorted(vs)), tuple(tbl)))


# ---------------------------------------------------------------------------
# file formats


def junta_to_text(j: Junta) -> str:
    rel = ",".join(str(r) for r in j.relevant)
    tab = "".join(str(b) for b in j.table)
    return f"n={j.n}\nrelevant={rel}\ntable={tab}\n"


def junta_from_text(text: str) -> Junta:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) != 3:
        raise ContractError("junta text must have exactly three lines")
    if not (lines[0].startswith("n=") and lines[1].startswith("relevant=") and lines[2].startswith("table=")):
        raise ContractError("junta text lines must be n=, relevant=, table=")
    n = int(lines[0][2:])
    relpart = lines[1][len("relevant="):]
    rel = tuple(int(v) for v in relpart.split(",")) if relpart else ()
    tabpart = lines[2][len("table="):]
    if any(c not in "01" for c in tabpart):
        raise ContractError("table must be 0/1 characters")
    return Junta(n, rel, tuple(int(c) for c in tabpart))


def save_junta(j: Junta, path) -> None:
    with open(path, "w") as f:
        f.write(junta_to_text(j))


def load_junta(path) -> Junta:
    with open(path) as f:
        return junta_from_text(f.read())
