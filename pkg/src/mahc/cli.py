"""Command-line entry point: learn, evaluate, score, prune, generate, benchmark.

Exit codes: 0 success, 1 data or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

from mahc.benchmark import load_config, load_network, run_benchmark
from mahc.dataset import load_dataset, write_dataset
from mahc.errors import MahcError
from mahc.graph import MixedGraph, graph_file_nodes, read_dag, read_mixed, to_cpdag, write_dag, write_mixed
from mahc.metrics import compute_metrics, confusion, pair_penalties
from mahc.pruning import preprocess_and_prune
from mahc.scoring import ScoreCache, graph_bic, graph_free_parameters
from mahc.search import SearchConfig, run_algorithm
from mahc.synth import NoiseLog, NoiseSpec, forward_sample, inject_noise

ALGO_CHOICES = ("hc", "tabu", "mahc", "mahc-prune-only", "mahc-avg-only")


def _kv(**items) -> None:
    for k, v in items.items():
        if isinstance(v, float):
            v = f"{v:.6f}".rstrip("0").rstrip(".") if k != "bic_log2" else f"{v:.1f}"
        print(f"{k}={v}")


def cmd_learn(args: argparse.Namespace) -> int:
    d = load_dataset(args.data)
    cfg = SearchConfig(algorithm=args.algo, m_p=args.mp, m_s=args.ms)
    deadline = time.monotonic() + args.time_limit if args.time_limit else None
    result = run_algorithm(d, cfg, deadline=deadline)
    if args.out:
        write_dag(result.graph, d.names, args.out)
    if args.trace:
        result.write_trace(args.trace, d.names)
    _kv(
        bic_log2=result.plain_bic,
        objective=result.final_objective,
        edges=result.edges,
        free_parameters=result.free_parameters,
        iterations=result.iterations,
        runtime_s=result.runtime_s,
        status="timeout" if result.timed_out else "ok",
    )
    return 0


def _graph_kind(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().replace(" ", "").strip()
    return "mixed" if head == "node1,mark,node2" else "dag"


def _read_any(path: str, kind: str, names: list[str]) -> MixedGraph:
    if kind == "mixed":
        return read_mixed(path, names)
    return to_cpdag(read_dag(path, names))


def cmd_evaluate(args: argparse.Namespace) -> int:
    if args.data:
        names = load_dataset(args.data).names
    else:
        names = list(dict.fromkeys(graph_file_nodes(args.true) + graph_file_nodes(args.learned)))
    true_g = _read_any(args.true, args.true_kind or _graph_kind(args.true), names)
    learnt_g = _read_any(args.learned, args.learned_kind, names)
    report = compute_metrics(confusion(true_g, learnt_g))
    if args.penalties:
        with open(args.penalties, "w", encoding="utf-8") as fh:
            fh.write("node1,node2,true_mark,learnt_mark,penalty\n")
            for a, b, t, l, pen in pair_penalties(true_g, learnt_g):
                fh.write(f"{names[a]},{names[b]},{t or ''},{l or ''},{pen:g}\n")
    if args.out_cpdag:
        write_mixed(learnt_g, names, args.out_cpdag)
    print(report.report(), end="")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    d = load_dataset(args.data)
    g = read_dag(args.graph, d.names)
    _kv(bic_log2=graph_bic(d, g), free_parameters=graph_free_parameters(g, d.cardinalities))
    return 0


def cmd_prune(args: argparse.Namespace) -> int:
    d = load_dataset(args.data)
    result = preprocess_and_prune(d, args.mp, ScoreCache(d))
    if args.out_forbidden:
        with open(args.out_forbidden, "w", encoding="utf-8") as fh:
            fh.write("parent,child\n")
            for a, b in result.forbidden:
                fh.write(f"{d.names[a]},{d.names[b]}\n")
    text = result.report()
    if args.stats:
        Path(args.stats).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    bn = load_network(args.network)
    d = forward_sample(bn, args.n, args.seed)
    if args.noise:
        kinds = tuple(k.strip() for k in args.noise.split(",") if k.strip())
        log = NoiseLog()
        d = inject_noise(d, NoiseSpec(args.rate, kinds, seed=args.seed + 1), log)
        print(f"missing_cells={log.missing_cells}", file=sys.stderr)
        print(f"removed={','.join(log.removed)}", file=sys.stderr)
        print(f"flipped_cells={log.flipped_cells}", file=sys.stderr)
        print(f"merged={','.join(log.merged)}", file=sys.stderr)
    write_dataset(d, args.out)
    _kv(rows=d.n, variables=d.num_vars)
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg.output = Path(args.out)
    if args.time_limit:
        cfg.time_limit = args.time_limit
    rows = run_benchmark(cfg)
    ok = sum(r["status"] == "ok" for r in rows)
    _kv(experiments=len(rows), ok=ok, output=str(cfg.output))
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    from mahc.oracles import OracleReport, oracle_bic

    d = load_dataset(args.data)
    g = read_dag(args.graph, d.names)
    print(OracleReport("graph_bic", graph_bic(d, g), oracle_bic(d, g)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mahc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a DAG from a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--algo", required=True, choices=ALGO_CHOICES)
    p.add_argument("--mp", type=int, default=3)
    p.add_argument("--ms", type=int, default=8)
    p.add_argument("--out")
    p.add_argument("--trace")
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("evaluate", help="compare a learnt graph with a true graph")
    p.add_argument("--learned", required=True)
    p.add_argument("--true", required=True)
    p.add_argument("--learned-kind", choices=("dag", "mixed"), default="dag")
    p.add_argument("--true-kind", choices=("dag", "mixed"), default=None)
    p.add_argument("--data", help="dataset whose header fixes the node set")
    p.add_argument("--penalties", help="write per-pair penalties as CSV")
    p.add_argument("--out-cpdag", help="write the learnt graph's CPDAG")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="log2-BIC of a DAG")
    p.add_argument("--data", required=True)
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("prune", help="pre-process parent sets and report forbidden arcs")
    p.add_argument("--data", required=True)
    p.add_argument("--mp", type=int, default=3)
    p.add_argument("--out-forbidden")
    p.add_argument("--stats")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("generate", help="sample a dataset from a network file")
    p.add_argument("--network", required=True, help="network file or builtin:asia")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise", help="comma list of missing,latent,error,merge")
    p.add_argument("--rate", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("benchmark", help="run a JSON experiment config")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--time-limit", type=float, default=None)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("oracle")
    p.add_argument("--data", required=True)
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (MahcError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
