"""Seeded benchmark harness over the learners.

A config is key=value lines with comma lists for the grid axes.  Every
(n, d, delta) grid point gets `trials` targets, drawn per trial from
SeedSequence((seed, point_index, trial)) and shared across algorithms so
records are comparable row for row.  emit_report compares the max observed
query count per point against the algorithm's registered closed-form bound;
for the deterministic algorithms ratio <= 1.0 is a hard gate, for the Monte
Carlo ones the report shows the failure rate against delta with a Wilson 95%
interval.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adaptive import (
    learn_adaptive_universal,
    learn_multiround,
    learn_poly_tworound,
    learn_tworound_det,
    learn_tworound_rand,
    _partition_count,
)
from .bcf import build_bcf, greedy_size_bound
from .core import ContractError, Junta, juntas_equivalent, random_junta
from .designs import random_universal_set, _phf_random_size
from .nonadaptive import (
    learn_block_expansion,
    learn_equivset,
    learn_randomized_nonadaptive,
    learn_randomized_reduction,
    reduce_deterministic,
    _RandnaPlan,
    _wrapper_reps,
)
from .oracle import LearnerResult, Oracle

CSV_HEADER = "algo,n,d,delta,seed,queries,rounds,ok,ms"

# delta used for the fixed design inputs of the deterministic-by-default
# learners (universal sets, hash families); not the learner's own delta
DESIGN_DELTA = 0.05


def default_universal(n: int, d: int):
    """The universal set the bench and the adaptive learner default to."""
    return random_universal_set(
        n, d, DESIGN_DELTA, np.random.default_rng(np.random.SeedSequence((0xDE5, n, d)))
    )


# ---------------------------------------------------------------------------
# config / records


@dataclass(frozen=True)
class BenchConfig:
    algos: tuple
    ns: tuple
    ds: tuple
    deltas: tuple
    trials: int
    seed: int
    out: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ContractError("trials must be >= 1")
        unknown = [a for a in self.algos if a not in ALGOS]
        if unknown:
            raise ContractError(f"unknown algorithms: {unknown}")
        if not (self.algos and self.ns and self.ds and self.deltas):
            raise ContractError("algos, n, d and delta must all be non-empty")
        for n, d, _ in self.grid():
            if d > n:
                raise ContractError(f"grid point has d={d} > n={n}")

    def grid(self):
        return [(n, d, dl) for n in self.ns for d in self.ds for dl in self.deltas]

    @classmethod
    def parse(cls, text: str) -> "BenchConfig":
        kv = {}
        for ln in text.splitlines():
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            if "=" not in ln:
                raise ContractError(f"bad config line: {ln!r}")
            k, v = ln.split("=", 1)
            kv[k.strip()] = v.strip()
        known = {"algos", "n", "d", "delta", "trials", "seed", "out"}
        extra = set(kv) - known
        if extra:
            raise ContractError(f"unknown config keys: {sorted(extra)}")
        missing = {"algos", "n", "d", "delta", "trials", "seed"} - set(kv)
        if missing:
            raise ContractError(f"missing config keys: {sorted(missing)}")
        ints = lambda v: tuple(int(x) for x in v.split(","))
        return cls(
            algos=tuple(x.strip() for x in kv["algos"].split(",")),
            ns=ints(kv["n"]),
            ds=ints(kv["d"]),
            deltas=tuple(float(x) for x in kv["delta"].split(",")),
            trials=int(kv["trials"]),
            seed=int(kv["seed"]),
            out=kv.get("out", ""),
        )


@dataclass(frozen=True)
class BenchRecord:
    algo: str
    n: int
    d: int
    delta: float
    seed: int
    queries: int
    rounds: int
    ok: bool
    ms: float


def write_records(records, path) -> None:
    with open(path, "w") as f:
        f.write(records_to_text(records))


def records_to_text(records) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.algo},{r.n},{r.d},{r.delta:g},{r.seed},"
            f"{r.queries},{r.rounds},{int(r.ok)},{r.ms:.3f}"
        )
    return "\n".join(lines) + "\n"


def records_from_text(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ContractError("missing or wrong CSV header")
    out = []
    for ln in lines[1:]:
        p = ln.split(",")
        if len(p) != 9:
            raise ContractError(f"bad record line: {ln!r}")
        out.append(
            BenchRecord(
                p[0], int(p[1]), int(p[2]), float(p[3]), int(p[4]),
                int(p[5]), int(p[6]), bool(int(p[7])), float(p[8]),
            )
        )
    return out


def read_records(path):
    with open(path) as f:
        return records_from_text(f.read())


# ---------------------------------------------------------------------------
# algorithm registry

def _run_equivset(o, n, d, delta, rng):
    return learn_equivset(o, n, d)


def _run_block(o, n, d, delta, rng):
    return learn_block_expansion(o, n, d, default_universal(n, d))


def _run_detreduce(o, n, d, delta, rng):
    return reduce_deterministic(None, o, n, d, 2 * d * (d + 1) ** 2)


def _run_randna(o, n, d, delta, rng):
    return learn_randomized_nonadaptive(o, n, d, delta, rng)


def _run_randred(o, n, d, delta, rng):
    return learn_randomized_reduction(o, n, d, delta, rng)


def _run_adapuniv(o, n, d, delta, rng):
    return learn_adaptive_universal(o, n, d)


def _run_det2r(o, n, d, delta, rng):
    return learn_tworound_det(o, n, d)


def _run_rand2r(o, n, d, delta, rng):
    return learn_tworound_rand(o, n, d, delta, rng)


def _run_poly2r(o, n, d, delta, rng):
    return learn_poly_tworound(o, n, d, delta, rng)


def _run_multi(o, n, d, delta, rng):
    return learn_multiround(o, n, d, delta, rng)


ALGOS = {
    "equivset": _run_equivset,
    "block": _run_block,
    "detreduce": _run_detreduce,
    "randna": _run_randna,
    "randred": _run_randred,
    "adapuniv": _run_adapuniv,
    "det2r": _run_det2r,
    "rand2r": _run_rand2r,
    "poly2r": _run_poly2r,
    "multi": _run_multi,
}

DET_ALGOS = frozenset({"equivset", "block", "detreduce", "adapuniv", "det2r"})


# ---------------------------------------------------------------------------
# query bounds (closed forms with this package's constants)

def _universal_size(n: int, d: int) -> int:
    return math.ceil((1 << d) * (d * math.log(n) + d + math.log(1 / DESIGN_DELTA)))


def _phf_count(n: int, q: int, d: int) -> int:
    # mirrors phf_build's shortcuts
    if d <= 1 or q >= n:
        return 1
    return _phf_random_size(n, q, d, DESIGN_DELTA)


def _log2ceil(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


def _identify_slack(n: int, d: int) -> int:
    # round 2 of the two-round learners: per relevant bin a sensitive pair
    # plus a (log2 of the bin size)+1 identification matrix, plus the dummy
    # row the constant case spends to stay at two rounds
    return d * (_log2ceil(n) + 3) + 1


def _bound_equivset(n, d, delta):
    return greedy_size_bound(n, d)


def _bound_block(n, d, delta):
    return _universal_size(n, d) * (n + 1)


def _bound_detreduce(n, d, delta):
    q = 2 * d * (d + 1) ** 2
    return _phf_count(n, q, d + 1) * len(build_bcf(q, d))


def _bound_adapuniv(n, d, delta):
    return _universal_size(n, d) + d * _log2ceil(n)


def _bound_det2r(n, d, delta):
    q = d ** 3
    return _phf_count(n, q, d) * len(build_bcf(q, d)) + _identify_slack(n, d)


def _bound_randna(n, d, delta):
    reps, dp = _wrapper_reps(d, delta)
    return reps * _RandnaPlan(n, d, dp, (0,)).query_count


def _bound_randred(n, d, delta):
    q = 8 * d * d
    P = math.ceil(32 * math.log(3 * n / delta))
    reps, dp = _wrapper_reps(d, 1 / 8)
    return P * reps * _RandnaPlan(q, d, dp, (0,)).query_count


def _bound_rand2r(n, d, delta):
    q = d ** 3
    return _partition_count(d, delta) * len(build_bcf(q, d)) + _identify_slack(n, d)


def _bound_poly2r(n, d, delta):
    q = d ** 3
    reps, dp = _wrapper_reps(d, delta)
    return reps * _RandnaPlan(q, d, dp, (0,)).query_count + _identify_slack(n, d)


def _bound_multi(n, d, delta):
    P = _partition_count(d, delta)
    dp = 1 / d if P > 1 else delta
    t_pool = math.ceil((1 << d) * (math.log(2 * d) + math.log(2 / dp)))
    return P * t_pool + P * d * _log2ceil(n) + (1 << d) + _identify_slack(n, d)


BOUNDS = {
    "equivset": _bound_equivset,
    "block": _bound_block,
    "detreduce": _bound_detreduce,
    "randna": _bound_randna,
    "randred": _bound_randred,
    "adapuniv": _bound_adapuniv,
    "det2r": _bound_det2r,
    "rand2r": _bound_rand2r,
    "poly2r": _bound_poly2r,
    "multi": _bound_multi,
}


# ---------------------------------------------------------------------------
# running

def _trial_seed(master: int, point_index: int, trial: int) -> int:
    ss = np.random.SeedSequence((master, point_index, trial))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_trial(algo: str, n: int, d: int, delta: float, seed: int) -> BenchRecord:
    rng = np.random.default_rng(seed)
    target = random_junta(n, d, rng)
    o = Oracle(target)
    t0 = time.perf_counter()
    try:
        res = ALGOS[algo](o, n, d, delta, rng)
    except Exception:
        res = None
    ms = round((time.perf_counter() - t0) * 1000, 3)
    if isinstance(res, LearnerResult):
        out, ok = res.output, res.ok
    elif isinstance(res, Junta):
        out, ok = res, True
    else:
        out, ok = None, False
    ok = bool(ok and out is not None and juntas_equivalent(out, target))
    return BenchRecord(algo, n, d, delta, seed, o.stats.queries, o.stats.rounds, ok, ms)


def _thread_count() -> int:
    env = os.environ.get("JUNTA_LAB_THREADS", "")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_bench(cfg: BenchConfig):
    """One record per (algorithm, grid point, trial); deterministic up to the
    ms column. Trial errors become ok=False records, not exceptions."""
    tasks = []
    for pi, (n, d, dl) in enumerate(cfg.grid()):
        for trial in range(cfg.trials):
            seed = _trial_seed(cfg.seed, pi, trial)
            for algo in cfg.algos:
                tasks.append((algo, n, d, dl, seed))
    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(lambda t: _run_trial(*t), tasks))
    else:
        records = [_run_trial(*t) for t in tasks]
    records.sort(key=lambda r: (r.algo, r.n, r.d, r.delta, r.seed))
    return records


# ---------------------------------------------------------------------------
# reporting

def wilson_interval(fails: int, trials: int, z: float = 1.96):
    """95% score interval for the failure probability."""
    if trials == 0:
        return (0.0, 1.0)
    p = fails / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def emit_report(records) -> str:
    """Per (algo, n, d, delta) aggregate table; deterministic rows gate on
    max-queries/bound <= 1.0, Monte Carlo rows report failure rate vs delta."""
    if not records:
        raise ContractError("no records to report")
    groups = {}
    for r in records:
        groups.setdefault((r.algo, r.n, r.d, r.delta), []).append(r)
    head = (
        f"{'algo':<10}{'n':>5}{'d':>3}{'delta':>7}{'trials':>7}{'ok':>6}"
        f"{'meanq':>10}{'maxq':>8}{'maxr':>5}{'bound':>8}{'ratio':>7}  status"
    )
    lines = [head, "-" * len(head)]
    for key in sorted(groups):
        algo, n, d, dl = key
        rs = groups[key]
        t = len(rs)
        nok = sum(r.ok for r in rs)
        meanq = sum(r.queries for r in rs) / t
        maxq = max(r.queries for r in rs)
        maxr = max(r.rounds for r in rs)
        bound = BOUNDS[algo](n, d, dl)
        ratio = maxq / bound
        if algo in DET_ALGOS:
            status = "PASS" if ratio <= 1.0 and nok == t else "FAIL"
        else:
            lo, hi = wilson_interval(t - nok, t)
            status = f"fail={1 - nok / t:.3f} delta={dl:g} CI95=[{lo:.3f},{hi:.3f}]"
        lines.append(
            f"{algo:<10}{n:>5}{d:>3}{dl:>7g}{t:>7}{nok / t:>6.2f}"
            f"{meanq:>10.1f}{maxq:>8}{maxr:>5}{bound:>8}{ratio:>7.3f}  {status}"
        )
    return "\n".join(lines) + "\n"
