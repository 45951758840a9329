"""Batch objects and the lazy column protocol behind the oracle."""

import numpy as np
import pytest

from junta_lab.core import AssignmentSet, ContractError, Junta, eval_junta, random_junta
from junta_lab.oracle import (
    ConcatBatch,
    FunctionTarget,
    LazyBitMatrix,
    Oracle,
    PerturbationBatch,
    ProjectedBatch,
    RowBatch,
    query_batch,
)


def test_query_batch_helper():
    o = Oracle(Junta(2, (1,), (0, 1)))
    assert query_batch(o, AssignmentSet(2, [[0, 0], [1, 0]])) == [0, 1]
    assert o.stats.queries == 2 and o.stats.rounds == 1


def test_callable_target_needs_n():
    with pytest.raises(ContractError):
        Oracle(lambda a: 0)
    o = Oracle(lambda a: int(a[0] ^ a[2]), n=3)
    got = o.ask(np.array([[1, 0, 0], [1, 1, 1]], dtype=np.uint8))
    assert list(got) == [1, 0]


def test_function_target_materialization_guard():
    t = FunctionTarget(lambda a: 0, 1 << 13)
    with pytest.raises(ContractError):
        t.answers(RowBatch(np.zeros((1 << 12, 1 << 13), dtype=np.uint8)))


def test_junta_vs_function_target_agree():
    rng = np.random.default_rng(3)
    for _ in range(10):
        j = random_junta(9, 3, rng)
        rows = rng.integers(0, 2, size=(40, 9), dtype=np.uint8)
        a = Oracle(j).ask(rows)
        b = Oracle(lambda r, j=j: eval_junta(j, r), n=9).ask(rows)
        assert (a == b).all()


def test_batch_n_mismatch():
    o = Oracle(Junta(4, (), (0,)))
    with pytest.raises(ContractError):
        o.ask(np.zeros((2, 5), dtype=np.uint8))


def test_perturbation_batch_layout():
    bases = np.array([[0, 0, 1], [1, 1, 0]], dtype=np.uint8)
    noise = LazyBitMatrix(4, 3, 1, 2, key=(1, 2))
    pb = PerturbationBatch(bases, 2, noise)
    assert pb.nrows == 4 and pb.n == 3
    for j in range(3):
        want = np.repeat(bases[:, j], 2) ^ noise.column(j)
        assert (pb.column(j) == want).all()
    with pytest.raises(ContractError):
        PerturbationBatch(bases, 3, noise)


def test_projected_batch_expansion():
    inner = RowBatch(np.array([[0, 1], [1, 0], [1, 1]], dtype=np.uint8))
    pb = ProjectedBatch([1, 0, 0, 1], inner)
    assert pb.nrows == 3 and pb.n == 4
    assert (pb.column(0) == inner.column(1)).all()
    assert (pb.column(2) == inner.column(0)).all()
    with pytest.raises(ContractError):
        ProjectedBatch([0, 2], inner)


def test_concat_batch():
    a = RowBatch(np.zeros((2, 3), dtype=np.uint8))
    b = RowBatch(np.ones((3, 3), dtype=np.uint8))
    cb = ConcatBatch([a, b])
    assert cb.nrows == 5
    assert list(cb.column(1)) == [0, 0, 1, 1, 1]
    with pytest.raises(ContractError):
        ConcatBatch([a, RowBatch(np.zeros((1, 4), dtype=np.uint8))])
    with pytest.raises(ContractError):
        ConcatBatch([])


def test_lazy_matrix_determinism_and_bias():
    m1 = LazyBitMatrix(20000, 4, 1, 6, key=(7, 7))
    m2 = LazyBitMatrix(20000, 4, 1, 6, key=(7, 7))
    c = m1.column(2)
    assert (c == m2.column(2)).all()
    assert (m1.column(0) != m1.column(1)).any()
    # mean within 5 sigma of 1/6
    p = c.mean()
    assert abs(p - 1 / 6) < 5 * np.sqrt((1 / 6) * (5 / 6) / 20000)


def test_lazy_matrix_segment_counts_exact_for_cached():
    m = LazyBitMatrix(30, 3, 1, 3, key=(9,))
    col1 = m.column(1).copy()
    flags = np.random.default_rng(1).integers(0, 2, size=30).astype(np.uint8)
    counts = m.segment_counts(flags, 10)
    assert counts.shape == (3, 3)
    want = (flags & col1).reshape(3, 10).sum(axis=1)
    assert (counts[:, 1] == want).all()
    # untouched columns got binomial draws within range
    seg = flags.reshape(3, 10).sum(axis=1)
    assert (counts[:, 0] <= seg).all() and (counts[:, 0] >= 0).all()
    # sealed afterwards
    with pytest.raises(RuntimeError):
        m.segment_counts(flags, 10)
    with pytest.raises(RuntimeError):
        m.column(0)
    # already-materialized columns stay readable
    assert (m.column(1) == col1).all()


def test_oracle_reads_only_relevant_columns():
    # a junta target over 10^6 lazy columns must not materialize them all
    j = Junta(1000000, (5, 999999), (0, 1, 1, 0))
    m = LazyBitMatrix(200, 1000000, 1, 2, key=(3,))
    o = Oracle(j)
    ans = o.ask(m)
    assert ans.shape == (200,)
    assert len(m._cache) == 2
    assert (ans == (m.column(4) ^ m.column(999998))).all()
