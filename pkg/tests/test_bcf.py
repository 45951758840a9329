"""The greedy potential-descent construction and its random counterpart."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from junta_lab.bcf import (
    GreedyStuckError,
    build_bcf,
    fwht,
    greedy_bcf,
    greedy_size_bound,
    random_bcf,
    random_size,
)
from junta_lab.core import AssignmentSet, ConstructionInfeasible, ContractError, all_assignments
from junta_lab.designs import connectivity_potential, initial_potential, verify_bcf


def test_greedy_2_1_frozen():
    trace = []
    A = greedy_bcf(2, 1, pool="exhaustive", trace=trace)
    assert ["".join(map(str, r)) for r in A] == ["00", "11", "01"]
    assert trace == [10, 6, 2, 0]
    assert verify_bcf(A, 1) is None


def test_greedy_d0():
    A = greedy_bcf(5, 0)
    assert len(A) == 1 and verify_bcf(A, 0) is None


def test_greedy_8_2():
    trace = []
    A = greedy_bcf(8, 2, trace=trace)
    assert len(A) <= greedy_size_bound(8, 2) == 89
    assert verify_bcf(A, 2) is None
    assert trace[0] == initial_potential(8, 2) == 5068 and trace[-1] == 0


def test_spectrum_matches_direct_scoring():
    # the Walsh-spectrum scorer and per-candidate potential evaluation must
    # pick identical rows at every step
    tr1, tr2 = [], []
    A1 = greedy_bcf(6, 2, pool="exhaustive", trace=tr1)
    A2 = greedy_bcf(6, 2, pool=AssignmentSet(6, all_assignments(6)), trace=tr2)
    assert tr1 == tr2
    assert (A1.as_array() == A2.as_array()).all()


def test_trace_matches_potential_oracle():
    trace = []
    A = greedy_bcf(5, 2, pool="exhaustive", trace=trace)
    rows = A.as_array()
    for k in range(len(A) + 1):
        assert trace[k] == connectivity_potential(AssignmentSet(5, rows[:k] if k else None), 2)


def test_contraction_every_step():
    for n, d in [(8, 1), (8, 2), (8, 3), (16, 2)]:
        trace = []
        greedy_bcf(n, d, trace=trace)
        shrink = (1 << (d + 1)) - 1
        for a, b in zip(trace, trace[1:]):
            assert b * (1 << (d + 1)) <= a * shrink


def test_feasibility_guard():
    with pytest.raises(ConstructionInfeasible):
        greedy_bcf(64, 3)
    with pytest.raises(ConstructionInfeasible):
        greedy_bcf(16, 5)
    with pytest.raises(ConstructionInfeasible):
        greedy_bcf(30, 2, pool="exhaustive")


def test_greedy_stuck_pool():
    # a pool with a single repeated row cannot drive the potential to zero
    with pytest.raises(GreedyStuckError) as ei:
        greedy_bcf(2, 1, pool=AssignmentSet(2, [[0, 0]]))
    assert len(ei.value.partial) == 1


def test_size_bound_formula():
    assert greedy_size_bound(8, 2) == 89
    assert greedy_size_bound(16, 2) == 111
    assert greedy_size_bound(64, 3) == 466
    assert greedy_size_bound(4, 0) == 1


def test_random_bcf_sizes_and_gating():
    A = random_bcf(8, 2)
    assert len(A) == random_size(8, 2, 0.1) == 82
    assert verify_bcf(A, 2) is None
    B = random_bcf(8, 2)
    assert (A.as_array() == B.as_array()).all()  # fixed internal seed chain


def test_random_bcf_with_explicit_rng():
    rng = np.random.default_rng(3)
    A = random_bcf(8, 2, rng=rng)
    assert verify_bcf(A, 2) is None


def test_build_bcf_routes():
    # d=1 goes through the greedy construction (small and inside the bound)
    assert len(build_bcf(16, 1)) == 6
    assert len(build_bcf(64, 1)) == 8
    # d>=2 uses the verified random size at delta=0.1
    assert len(build_bcf(16, 2)) == 104
    assert len(build_bcf(32, 2)) == 125
    assert build_bcf(16, 2) is build_bcf(16, 2)  # cached


@given(st.integers(0, 2**20 - 1), st.integers(1, 4))
def test_fwht_involution(seed, k):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << k)
    w = fwht(fwht(v.copy()))
    assert np.allclose(w, v * (1 << k))


def test_greedy_rejects_bad_args():
    with pytest.raises(ContractError):
        greedy_bcf(2, 3)
    with pytest.raises(ContractError):
        greedy_bcf(4, 2, pool="bogus")
    with pytest.raises(ContractError):
        greedy_bcf(4, 2, pool=AssignmentSet(5, [[0, 0, 0, 0, 1]]))
