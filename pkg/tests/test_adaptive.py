"""Adaptive learners: binary search, one-round identification, the
universal-set learner, and the two-round / multi-round families."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from junta_lab.adaptive import (
    _partition_count,
    binary_search_relevant,
    learn_adaptive_universal,
    learn_multiround,
    learn_poly_tworound,
    learn_tworound_det,
    learn_tworound_rand,
    oneround_identify,
)
from junta_lab.core import (
    AssignmentSet,
    ContractError,
    Junta,
    LearnFailure,
    juntas_equivalent,
    prune,
    random_junta,
)
from junta_lab.designs import random_universal_set
from junta_lab.nonadaptive import _wrapper_reps
from junta_lab.oracle import Oracle


def test_binsearch_spec_example():
    o = Oracle(Junta(3, (3,), (0, 1)))
    got = binary_search_relevant(o, [0, 0, 0], [1, 1, 1], [1, 2, 3], fa=0, fa2=1)
    assert got == 3
    assert o.stats.queries <= 2


def test_binsearch_singleton_needs_no_queries():
    o = Oracle(Junta(1, (1,), (0, 1)))
    assert binary_search_relevant(o, [0], [1], [1], fa=0, fa2=1) == 1
    assert o.stats.queries == 0


def test_binsearch_equal_answers_rejected():
    o = Oracle(Junta(3, (3,), (0, 1)))
    with pytest.raises(ContractError):
        binary_search_relevant(o, [0, 0, 0], [1, 1, 0], [1, 2], fa=0, fa2=0)
    with pytest.raises(ContractError):
        binary_search_relevant(o, [0, 0, 0], [1, 1, 0], [1, 2, 3], fa=0, fa2=1)


def test_binsearch_witness_pair():
    o = Oracle(Junta(6, (4,), (0, 1)))
    a = np.zeros(6, dtype=np.uint8)
    a2 = np.ones(6, dtype=np.uint8)
    got, (w, w2) = binary_search_relevant(
        o, a, a2, [1, 2, 3, 4, 5, 6], fa=0, fa2=1, with_witness=True
    )
    assert got == 4
    diff = np.nonzero(w != w2)[0]
    assert list(diff) == [3]
    assert int(o.ask(w[None, :])[0]) != int(o.ask(w2[None, :])[0])


@given(st.data())
def test_binsearch_finds_the_relevant_index(data):
    n = data.draw(st.integers(2, 10))
    k = data.draw(st.integers(1, n))
    extra = data.draw(st.sets(st.integers(1, n), max_size=n))
    y = sorted(extra | {k})
    a = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)),
                 dtype=np.uint8)
    a[k - 1] = 0
    a2 = a.copy()
    for v in y:
        a2[v - 1] ^= 1
    o = Oracle(Junta(n, (k,), (0, 1)))
    got = binary_search_relevant(o, a, a2, y, fa=0, fa2=1)
    assert got == k
    assert o.stats.queries <= max(0, (len(y) - 1).bit_length())
    assert o.stats.rounds == o.stats.queries


def test_oneround_identify_example():
    o = Oracle(Junta(3, (3,), (0, 1)))
    got = oneround_identify(o, [0, 0, 0], [1, 1, 1], [1, 2, 3], fa=0, fa2=1)
    assert got == 3
    assert o.stats.queries == 3 and o.stats.rounds == 1  # ceil(log2 3) + 1


def test_oneround_identify_batches_endpoints_when_unknown():
    o = Oracle(Junta(4, (2,), (0, 1)))
    got = oneround_identify(o, [0, 0, 0, 0], [1, 1, 1, 1], [1, 2, 3, 4])
    assert got == 2
    assert o.stats.rounds == 1
    assert o.stats.queries == 2 + 2 + 1


def test_oneround_identify_ambiguous_answers():
    # parity of three variables lights every probe row, decoding past
    # the last column
    table = (0, 1, 1, 0, 1, 0, 0, 1)
    o = Oracle(Junta(3, (1, 2, 3), table))
    with pytest.raises(LearnFailure):
        oneround_identify(o, [0, 0, 0], [1, 1, 1], [1, 2, 3], fa=0, fa2=1)


def test_adapuniv_xor():
    target = Junta(8, (2, 5), (0, 1, 1, 0))
    o = Oracle(target)
    got = learn_adaptive_universal(o, 8, 2)
    assert got == target
    assert o.stats.rounds <= 1 + 2 * math.ceil(math.log2(8))


def test_adapuniv_constant_single_round():
    o = Oracle(Junta(8, (), (1,)))
    got = learn_adaptive_universal(o, 8, 2)
    assert got == Junta(8, (), (1,))
    assert o.stats.rounds == 1


def test_adapuniv_tiny_explicit_universal():
    U = AssignmentSet(3, [[0, 0, 0], [1, 1, 1]])
    o = Oracle(Junta(3, (3,), (0, 1)))
    got = learn_adaptive_universal(o, 3, 1, U)
    assert got == Junta(3, (3,), (0, 1))
    assert o.stats.rounds <= 1 + math.ceil(math.log2(3))
    assert o.stats.queries == 3


def test_adapuniv_too_many_variables():
    U = random_universal_set(8, 2, 0.05, np.random.default_rng(0))
    o = Oracle(Junta(8, (2, 5), (0, 1, 1, 0)))
    with pytest.raises(LearnFailure) as ei:
        learn_adaptive_universal(o, 8, 1, U)
    assert ei.value.witness == (2, 5)


def test_adapuniv_wrong_width_universal():
    U = AssignmentSet(3, [[0, 0, 0], [1, 1, 1]])
    o = Oracle(Junta(4, (1,), (0, 1)))
    with pytest.raises(ContractError):
        learn_adaptive_universal(o, 4, 1, U)


def test_tworound_det_random_targets():
    rng = np.random.default_rng(3)
    for n, d in [(16, 2), (32, 2), (8, 1)]:
        for _ in range(5):
            target = random_junta(n, d, rng)
            o = Oracle(target)
            got = learn_tworound_det(o, n, d)
            assert juntas_equivalent(got, target)
            assert o.stats.rounds == 2


def test_tworound_det_constant_still_two_rounds():
    o = Oracle(Junta(16, (), (0,)))
    got = learn_tworound_det(o, 16, 2)
    assert got == Junta(16, (), (0,))
    assert o.stats.rounds == 2


def test_tworound_det_exhaustive_small():
    from itertools import combinations, product

    seen = set()
    for k in (0, 1, 2):
        for rel in combinations(range(1, 6), k):
            for table in product((0, 1), repeat=1 << k):
                target = prune(Junta(5, rel, table))
                key = (target.relevant, target.table)
                if key in seen:
                    continue
                seen.add(key)
                o = Oracle(target)
                assert juntas_equivalent(learn_tworound_det(o, 5, 2), target)


def test_tworound_det_repeatable_query_count():
    counts = []
    for _ in range(2):
        o = Oracle(Junta(32, (7, 20), (0, 1, 1, 1)))
        learn_tworound_det(o, 32, 2)
        counts.append(o.stats.queries)
    assert counts[0] == counts[1]


def test_partition_count():
    assert _partition_count(1, 0.01) == 1
    assert _partition_count(2, 0.6) == 1  # delta > 1/d
    assert _partition_count(2, 0.01) == math.ceil(math.log(100) / math.log(2))
    assert _partition_count(3, 0.01) == 5


def test_tworound_rand_rate_and_shape():
    fails = 0
    for seed in range(15):
        rng = np.random.default_rng((21, seed))
        target = random_junta(16, 2, rng)
        o = Oracle(target)
        r = learn_tworound_rand(o, 16, 2, 0.1, rng)
        assert r.stats.rounds == 2
        assert r.detail["partitions"] == _partition_count(2, 0.1)
        fails += not (r.ok and juntas_equivalent(r.output, target))
    assert fails <= 2


def test_tworound_rand_constant():
    r = learn_tworound_rand(Oracle(Junta(16, (), (1,))), 16, 2, 0.5,
                            np.random.default_rng(1))
    assert r.ok and r.output == Junta(16, (), (1,))
    assert r.stats.rounds == 2 and r.detail["partitions"] == 1


def test_tworound_rand_bad_params():
    o = Oracle(Junta(4, (1,), (0, 1)))
    with pytest.raises(ContractError):
        learn_tworound_rand(o, 4, 0, 0.1, np.random.default_rng(0))
    with pytest.raises(ContractError):
        learn_tworound_rand(o, 4, 1, 0.0, np.random.default_rng(0))


def test_tworound_rand_stats_are_per_call():
    o = Oracle(Junta(16, (5,), (0, 1)))
    r1 = learn_tworound_rand(o, 16, 1, 0.2, np.random.default_rng(2))
    r2 = learn_tworound_rand(o, 16, 1, 0.2, np.random.default_rng(3))
    assert r1.stats.rounds == 2 and r2.stats.rounds == 2
    assert r1.stats.queries + r2.stats.queries == o.stats.queries


def test_poly_tworound_rate_and_shape():
    fails = 0
    for seed in range(15):
        rng = np.random.default_rng((22, seed))
        target = random_junta(16, 2, rng)
        o = Oracle(target)
        r = learn_poly_tworound(o, 16, 2, 0.2, rng)
        assert r.stats.rounds == 2
        assert r.detail["partitions"] == _wrapper_reps(2, 0.2)[0]
        assert r.stats.queries >= r.detail["round1_queries"]
        fails += not (r.ok and juntas_equivalent(r.output, target))
    assert fails <= 2


def test_poly_tworound_constant():
    r = learn_poly_tworound(Oracle(Junta(8, (), (0,))), 8, 2, 0.3,
                            np.random.default_rng(7))
    assert r.ok and r.output == Junta(8, (), (0,))
    assert r.stats.rounds == 2


def test_multiround_rate_and_round_bound():
    bound = 3 + 2 * math.ceil(3 * math.log2(2))
    fails = 0
    for seed in range(10):
        rng = np.random.default_rng((23, seed))
        target = random_junta(16, 2, rng)
        o = Oracle(target)
        r = learn_multiround(o, 16, 2, 0.25, rng)
        assert r.stats.rounds <= bound
        fails += not (r.ok and juntas_equivalent(r.output, target))
    assert fails <= 2


def test_multiround_d1_three_rounds():
    for seed in range(5):
        rng = np.random.default_rng((24, seed))
        target = random_junta(32, 1, rng)
        while not target.relevant:
            target = random_junta(32, 1, rng)
        o = Oracle(target)
        r = learn_multiround(o, 32, 1, 0.2, rng)
        assert r.ok and juntas_equivalent(r.output, target)
        assert r.stats.rounds == 3


def test_multiround_constant_two_rounds():
    r = learn_multiround(Oracle(Junta(16, (), (1,))), 16, 2, 0.25,
                         np.random.default_rng(9))
    assert r.ok and r.output == Junta(16, (), (1,))
    assert r.stats.rounds == 2


def test_multiround_query_ledger():
    rng = np.random.default_rng(41)
    o = Oracle(Junta(16, (4, 13), (0, 1, 1, 0)))
    r = learn_multiround(o, 16, 2, 0.25, rng)
    d = r.detail
    total = d["pool_rows"] + d["search_queries"] + d["stage2"] + d["stage3"]
    assert total == r.stats.queries == o.stats.queries
