"""Exact learning of d-juntas from membership queries.

Combinatorial design constructions (universal sets, k-wise independent
spaces, bipartite connected families, perfect hash families), deterministic
and Monte Carlo learners built on them, and a benchmark harness checking
query/round accounting against explicit bounds.
"""

from .core import (
    AssignmentSet,
    ContractError,
    ConstructionError,
    ConstructionInfeasible,
    Junta,
    LearnFailure,
    all_assignments,
    as_bits,
    as_rng,
    check_junta,
    eval_junta,
    eval_junta_rows,
    junta_from_text,
    junta_to_text,
    juntas_equivalent,
    load_junta,
    plurality,
    prune,
    random_junta,
    relevant_variables_bruteforce,
    save_junta,
    sensitive_wrt,
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
    query_batch,
)
from .designs import (
    BipartiteSpec,
    ComponentState,
    HashFamily,
    UniversalWitness,
    connectivity_potential,
    disconnection_counterexample,
    initial_potential,
    kwise_independent_set,
    phf_build,
    random_universal_set,
    verify_bcf,
    verify_kwise,
    verify_phf,
    verify_universal,
)
from .bcf import GreedyStuckError, build_bcf, greedy_bcf, random_bcf
from .nonadaptive import (
    learn_block_expansion,
    learn_equivset,
    learn_randomized_nonadaptive,
    learn_randomized_reduction,
    reduce_deterministic,
)
from .adaptive import (
    binary_search_relevant,
    learn_adaptive_universal,
    learn_multiround,
    learn_poly_tworound,
    learn_tworound_det,
    learn_tworound_rand,
    oneround_identify,
)
from .bench import BenchConfig, BenchRecord, emit_report, run_bench

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
