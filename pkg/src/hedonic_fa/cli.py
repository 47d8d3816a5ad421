"""``hedonic-fa`` command line: gen, solve, bench, verify.

Exit codes: 0 success (or property holds), 1 property violated, 2 usage,
parse or guard error, 3 sampled audit with no violation found.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import approx, exact, generators, manipulability
from .core import ContractError, Instance, Model, Welfare, social_welfare
from .io import dumps, instance_to_json, partition_to_json, read_instance

log = logging.getLogger("hedonic_fa")

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_SAMPLED = 0, 1, 2, 3
BENCH_COLUMNS = ["family", "n", "seed", "f", "f_within", "sw_mech_num", "sw_ref_num", "ref_kind", "ratio"]


def _ints(text: str) -> list[int]:
    """'4,5,8-10' -> [4, 5, 8, 9, 10]."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# --- gen -------------------------------------------------------------------


def _need(args, name: str):
    val = getattr(args, name)
    if val is None:
        raise ContractError(f"--{name.replace('_', '-')} is required for this family")
    return val


def build_instance(args) -> tuple[Instance, dict | None]:
    fam = args.family
    if fam == "star":
        return generators.gen_star(_need(args, "n"), inward=args.inward), None
    if fam == "lower-bound":
        return generators.gen_lower_bound(_need(args, "n")), None
    if fam == "random":
        n = _need(args, "n")
        p = 0.5 if args.p is None else args.p
        seed = 0 if args.seed is None else args.seed
        return generators.gen_random(n, p, seed, args.model), None
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    if fam == "octopus":
        n = _need(args, "n")
        h = args.head_size if args.head_size is not None else -(-n // 2)
        head = range(1, h + 1)
        cf = [j for j in range(1, n) if rng.random() < (0.5 if args.p is None else args.p)]
        return generators.gen_octopus(n, 0, head, cf), None
    if fam == "gen-octopus":
        sizes = _ints(_need(args, "tentacles"))
        h = _need(args, "head_size")
        head = list(range(1, h + 1))
        tents, nxt = [], h + 1
        for s in sizes:
            tents.append(list(range(nxt, nxt + s)))
            nxt += s
        cf = [j for j in range(1, nxt) if rng.random() < (0.5 if args.p is None else args.p)]
        return generators.gen_generalized_octopus(0, head, tents, cf), None
    if fam == "almost-clique":
        n = _need(args, "n")
        k = _need(args, "clique_size")
        if not 1 <= k < n:
            raise ContractError("--clique-size must be in [1, n)")
        clique, hinge = set(range(k)), k
        p = 0.3 if args.p is None else args.p
        edges = []
        for u in range(n):
            for v in range(n):
                if u == v:
                    continue
                bad = (u in clique and v not in clique | {hinge}) or (v in clique and u not in clique | {hinge})
                if not bad and not (u in clique and v in clique) and rng.random() < p:
                    edges.append((u, v))
        return generators.gen_almost_isolated_clique(n, clique, hinge, edges), None
    if fam == "reduce-3p":
        tp = generators.ThreePartitionInstance(_ints(_need(args, "xs")), _need(args, "t"))
        inst, layout = generators.reduce_3partition(tp)
        return inst, layout.to_json()
    raise ContractError(f"unknown family {fam!r}")


def cmd_gen(args) -> int:
    inst, layout = build_instance(args)
    _emit(dumps(instance_to_json(inst)), args.out)
    if layout is not None:
        if args.out in (None, "-"):
            log.warning("layout sidecar not written: --out is stdout")
        else:
            Path(str(args.out) + ".layout.json").write_text(dumps(layout))
    return EXIT_OK


# --- solve -------------------------------------------------------------------


def cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    result: dict
    if args.mech == "exact":
        res = exact.solve_optimal(inst, override_guard=args.override_guard)
        result = partition_to_json(res.partition, res.opt_value)
        result["optima_count"] = res.optima_count
    elif args.mech == "ea-exact":
        # same friend graph, scored with enemies-aversion valuations
        ea = Instance(inst.n, inst.friends, Model.EA)
        res = exact.solve_optimal(ea, override_guard=args.override_guard)
        result = partition_to_json(res.partition, res.opt_value)
        result["optima_count"] = res.optima_count
    elif args.mech == "approx":
        trace = approx.mechanism2(inst)
        result = partition_to_json(trace.partition, social_welfare(inst, trace.partition))
        result["trace"] = trace.to_json()
    elif args.mech == "rand":
        seed = 0 if args.seed is None else args.seed
        part = approx.rand_mech(inst, seed)
        result = partition_to_json(part, social_welfare(inst, part))
        result["seed"] = seed
    else:
        raise ContractError(f"unknown mechanism {args.mech!r}")
    result["mechanism"] = args.mech
    _emit(dumps(result), args.out)
    return EXIT_OK


# --- bench -------------------------------------------------------------------


def _fmt_ratio(r) -> str:
    if r is None:
        return ""
    if r == float("inf"):
        return "unbounded"
    return str(r)


def bench_row(family: str, n: int, seed: int | None, p: float) -> tuple[dict, bool]:
    """One benchmark record and whether the friendship-retention bound held."""
    if family == "lower-bound":
        inst = generators.gen_lower_bound(n)
        ref: Welfare | None = social_welfare(inst, generators.gen_lb_block_partition(n))
        kind = "lb_block"
    elif family == "random":
        inst = generators.gen_random(n, p, seed or 0)
        if n <= exact.MAX_EXACT_AGENTS:
            ref, kind = exact.solve_optimal(inst).opt_value, "exact"
        else:
            ref, kind = None, "none"
    else:
        raise ContractError(f"unknown bench family {family!r}")
    trace = approx.mechanism2(inst)
    sw = social_welfare(inst, trace.partition)
    ratio = approx.approximation_ratio(inst, ref, sw) if ref is not None else None
    row = {
        "family": family,
        "n": n,
        "seed": "" if seed is None else seed,
        "f": trace.total_friendships,
        "f_within": trace.friendships_within,
        "sw_mech_num": sw.numerator,
        "sw_ref_num": "" if ref is None else ref.numerator,
        "ref_kind": kind,
        "ratio": _fmt_ratio(ratio),
    }
    return row, approx.retains_friendships(n, trace.friendships_within, trace.total_friendships)


def _bench_task(task):
    return bench_row(*task)


def bench_csv(tasks: list[tuple[str, int, int | None, float]], workers: int = 1) -> tuple[str, bool]:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_task, tasks))
    else:
        results = [bench_row(*t) for t in tasks]
    results.sort(key=lambda r: (r[0]["family"], r[0]["n"], -1 if r[0]["seed"] == "" else r[0]["seed"]))
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row, _ in results:
        w.writerow(row)
    return buf.getvalue(), all(ok for _, ok in results)


def cmd_bench(args) -> int:
    tasks = []
    for fam in args.families:
        if fam not in ("lower-bound", "random"):
            raise ContractError(f"unknown bench family {fam!r}")
        ns = _ints(args.n) if args.n else ([64, 256, 1024] if fam == "lower-bound" else [8])
        if fam == "lower-bound":
            tasks += [(fam, n, None, 0.0) for n in ns]
        else:
            seeds = _ints(args.seed) if args.seed else [0]
            p = 0.3 if args.p is None else args.p
            tasks += [(fam, n, s, p) for n in ns for s in seeds]
    text, ok = bench_csv(tasks, manipulability.threads())
    _emit(text, args.out)
    if not ok:
        print("friendship-retention bound violated", file=sys.stderr)
        return EXIT_VIOLATED
    return EXIT_OK


# --- verify ------------------------------------------------------------------


def cmd_verify(args) -> int:
    mech = manipulability.MECHANISMS[args.mech]()
    audit = manipulability.audit_nom if args.target == "nom" else manipulability.audit_sp
    report = audit(
        mech, args.n, mode=args.mode, samples=args.samples, seed=args.seed or 0, override_guard=args.override_guard
    )
    _emit(dumps(report.to_json()), args.out)
    if args.out not in (None, "-"):
        stem = Path(args.out)
        for k, v in enumerate(report.violations[: args.max_witnesses]):
            for tag, w in (("truthful", v.truthful_witness), ("deviation", v.deviation_witness)):
                if w is not None:
                    stem.with_name(f"{stem.stem}.witness{k}.{tag}.json").write_text(dumps(instance_to_json(w)))
    ok = report.nom_ok if args.target == "nom" else report.sp_ok
    label = args.target.upper()
    if not ok:
        v = report.violations[0]
        # sampled envelopes only bound the true ones, so a sampled NOM hit is a candidate
        if args.target == "nom" and not report.exhaustive:
            label += " (sampled candidate)"
        print(
            f"{label} violated for {mech.kind} at n={args.n}: agent {v.agent}, true friends {sorted(v.true_type)}, "
            f"declares {sorted(v.deviation)} (condition {v.condition}): {v.truthful_value} -> {v.deviating_value}",
            file=sys.stderr,
        )
        return EXIT_VIOLATED
    if not report.exhaustive:
        print(f"{label}: no violation in {report.profiles_evaluated} sampled profiles (not a certificate)", file=sys.stderr)
        return EXIT_SAMPLED
    print(f"{label} holds for {mech.kind} at n={args.n} ({report.profiles_evaluated} profiles)", file=sys.stderr)
    return EXIT_OK


# --- entry -------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hedonic-fa", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument(
        "family", choices=["star", "octopus", "gen-octopus", "almost-clique", "lower-bound", "reduce-3p", "random"]
    )
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--xs")
    g.add_argument("--t", type=int)
    g.add_argument("--model", default="FA", choices=["FA", "EA"])
    g.add_argument("--head-size", type=int)
    g.add_argument("--tentacles", help="comma-separated tentacle sizes")
    g.add_argument("--clique-size", type=int)
    g.add_argument("--inward", action="store_true", help="leaves befriend the center instead")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run a mechanism on an instance file")
    s.add_argument("instance")
    s.add_argument("--mech", required=True, choices=["exact", "approx", "rand", "ea-exact"])
    s.add_argument("--seed", type=int)
    s.add_argument("--override-guard", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="approximation-ratio benchmark to CSV")
    b.add_argument("families", nargs="*", help="any of: lower-bound, random")
    b.add_argument("--n", help="sizes, e.g. 64,256,1024 or 4-9")
    b.add_argument("--seed", help="seeds for random, e.g. 0-99")
    b.add_argument("--p", type=float)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="exhaustive or sampled NOM / SP audit")
    v.add_argument("target", choices=["nom", "sp"])
    v.add_argument("--mech", required=True, choices=sorted(manipulability.MECHANISMS))
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--mode", default="exhaustive", choices=["exhaustive", "sample"])
    v.add_argument("--samples", type=int, default=256)
    v.add_argument("--seed", type=int)
    v.add_argument("--max-witnesses", type=int, default=1)
    v.add_argument("--override-guard", action="store_true")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ContractError, exact.GuardError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
