"""junta-lab command line: design construction/verification, learning runs
against a stored target, and the benchmark pipeline.

Exit codes: 0 success, 1 verification or learning failure, 2 usage error.
Randomized paths need --seed; there is no ambient entropy anywhere.
"""

import argparse
import sys

import numpy as np

from . import bench as benchmod
from .adaptive import learn_adaptive_universal
from .bcf import greedy_bcf, random_bcf
from .core import (
    AssignmentSet,
    ConstructionError,
    ContractError,
    LearnFailure,
    juntas_equivalent,
    junta_to_text,
    load_junta,
)
from .designs import (
    HashFamily,
    kwise_independent_set,
    phf_build,
    random_universal_set,
    verify_bcf,
    verify_kwise,
    verify_phf,
    verify_universal,
)
from .nonadaptive import learn_block_expansion, learn_equivset
from .oracle import LearnerResult, Oracle

RANDOMIZED_ALGOS = sorted(set(benchmod.ALGOS) - benchmod.DET_ALGOS)
DESIGN_ALGOS = {"equivset", "block", "adapuniv"}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="junta-lab", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("construct", help="build a design and print/store it")
    c.add_argument("kind", choices=["universal", "kwise", "bcf", "phf"])
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--d", type=int, required=True,
                   help="depth/strength parameter (independence order for kwise)")
    c.add_argument("--q", type=int, help="range size (phf only)")
    c.add_argument("--delta", type=float)
    c.add_argument("--seed", type=int)
    c.add_argument("--mode", choices=["random", "greedy"], default="random",
                   help="bcf/phf construction route")
    c.add_argument("--out")

    v = sub.add_parser("verify", help="check a stored design, print a witness on failure")
    v.add_argument("kind", choices=["universal", "kwise", "bcf", "phf"])
    v.add_argument("--in", dest="infile", required=True)
    v.add_argument("--d", type=int, required=True)
    v.add_argument("--q", type=int, help="range size (phf; default = max entry)")

    l = sub.add_parser("learn", help="run a learner against a stored target junta")
    l.add_argument("--algo", choices=sorted(benchmod.ALGOS), required=True)
    l.add_argument("--n", type=int, required=True)
    l.add_argument("--d", type=int, required=True)
    l.add_argument("--delta", type=float, default=0.1)
    l.add_argument("--seed", type=int)
    l.add_argument("--target", required=True)
    l.add_argument("--design", help="assignment-set file (equivset/block/adapuniv)")

    b = sub.add_parser("bench", help="run a benchmark config, write CSV records")
    b.add_argument("--config", required=True)
    b.add_argument("--out")

    r = sub.add_parser("report", help="aggregate CSV records against the bounds")
    r.add_argument("--in", dest="infile", required=True)
    return p


def _cmd_construct(args) -> int:
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    if args.kind == "universal":
        if args.seed is None:
            print("construct universal is randomized: --seed is required", file=sys.stderr)
            return 2
        text = random_universal_set(args.n, args.d, args.delta or 0.05, rng).to_text()
    elif args.kind == "kwise":
        text = kwise_independent_set(args.n, args.d).to_text()
    elif args.kind == "bcf":
        if args.mode == "greedy":
            text = greedy_bcf(args.n, args.d).to_text()
        else:
            text = random_bcf(args.n, args.d, rng=rng, delta=args.delta or 0.1).to_text()
    else:
        if args.q is None:
            print("construct phf needs --q", file=sys.stderr)
            return 2
        text = phf_build(args.n, args.q, args.d, mode=args.mode,
                         delta=args.delta or 0.05, rng=rng).to_text()
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_verify(args) -> int:
    if args.kind == "phf":
        H = HashFamily.load(args.infile, q=args.q)
        w = verify_phf(H, args.d)
        size, n = len(H), H.n
    else:
        S = AssignmentSet.load(args.infile)
        size, n = len(S), S.n
        if args.kind == "universal":
            w = verify_universal(S, args.d)
        elif args.kind == "kwise":
            w = verify_kwise(S, args.d)
        else:
            w = verify_bcf(S, args.d)
    if w is None:
        print(f"OK {args.kind} n={n} d={args.d} size={size}")
        return 0
    print(f"FAIL {args.kind} witness: {w}")
    return 1


def _cmd_learn(args) -> int:
    target = load_junta(args.target)
    if target.n != args.n:
        print(f"target is over n={target.n}, not n={args.n}", file=sys.stderr)
        return 2
    if args.algo in RANDOMIZED_ALGOS and args.seed is None:
        print(f"--algo {args.algo} is randomized: --seed is required", file=sys.stderr)
        return 2
    if args.design and args.algo not in DESIGN_ALGOS:
        print(f"--design is not accepted by {args.algo}", file=sys.stderr)
        return 2
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    o = Oracle(target)
    try:
        if args.design:
            D = AssignmentSet.load(args.design, n=args.n)
            fn = {"equivset": learn_equivset, "block": learn_block_expansion,
                  "adapuniv": learn_adaptive_universal}[args.algo]
            res = fn(o, args.n, args.d, D)
        else:
            res = benchmod.ALGOS[args.algo](o, args.n, args.d, args.delta, rng)
    except LearnFailure as e:
        print(f"learning failed: {e}")
        print(f"queries={o.stats.queries} rounds={o.stats.rounds} ok=False")
        return 1
    if isinstance(res, LearnerResult):
        out, ok = res.output, res.ok
    else:
        out, ok = res, True
    ok = bool(ok and juntas_equivalent(out, target))
    sys.stdout.write(junta_to_text(out))
    print(f"queries={o.stats.queries} rounds={o.stats.rounds} ok={ok}")
    return 0 if ok else 1


def _cmd_bench(args) -> int:
    with open(args.config) as f:
        cfg = benchmod.BenchConfig.parse(f.read())
    records = benchmod.run_bench(cfg)
    out = args.out or cfg.out
    if out:
        benchmod.write_records(records, out)
        print(f"wrote {len(records)} records to {out}")
    else:
        sys.stdout.write(benchmod.records_to_text(records))
    return 0


def _cmd_report(args) -> int:
    records = benchmod.read_records(args.infile)
    text = benchmod.emit_report(records)
    sys.stdout.write(text)
    gate_failed = any(
        ln.endswith("FAIL") for ln in text.splitlines()
    )
    return 1 if gate_failed else 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        if args.cmd == "construct":
            return _cmd_construct(args)
        if args.cmd == "verify":
            return _cmd_verify(args)
        if args.cmd == "learn":
            return _cmd_learn(args)
        if args.cmd == "bench":
            return _cmd_bench(args)
        return _cmd_report(args)
    except ContractError as e:
        print(f"invalid request: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"missing file: {e.filename}", file=sys.stderr)
        return 2
    except ConstructionError as e:
        print(f"construction failed: {e}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(cli_main())
