"""
Command-line front end.

    python -m app.cli solve dcd graph.gr [annotations] -k 2 -d 1 [--oracle] [--trace] [--verify]
    python -m app.cli gen --family half-graph -n 5 --seed 7 | python -m app.cli semiladder -

Reports are JSON on standard output. Exit codes: 0 yes-instance (or success),
1 no-instance (or a failed check), 2 usage or input error.
"""

import argparse
import json
import logging
import sys
from typing import Optional, Sequence, Tuple

import yaml

from app.cache import config_cache
from app.data.generate_graphs import FAMILIES, generate_graph, make_rng, random_annotations
from app.services.corpus import run_bench, run_corpus
from app.services.decomposition import parse_decomposition
from app.services.graph import (
    AnnotatedInstance,
    Graph,
    InvariantViolation,
    members,
    parse_annotations,
    parse_graph,
    serialize_annotations,
    serialize_graph,
)
from app.services.runner import (
    PROBLEMS,
    build_solve_report,
    decomposition_report,
    run_oracle,
    semiladder_report,
    solve_instance,
    solve_unbreakable,
    tree_model,
    verify_report,
)
from app.services.skeleton import ROUTES

logger = logging.getLogger("dcd_solver")

EXIT_YES = 0
EXIT_NO = 1
EXIT_ERROR = 2


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r") as f:
        return f.read()


def _emit(payload) -> None:
    if hasattr(payload, "model_dump_json"):
        sys.stdout.write(payload.model_dump_json(by_alias=True, indent=2) + "\n")
    else:
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")


def _load_instance(args) -> Tuple[Graph, AnnotatedInstance]:
    if args.graph == "-" and getattr(args, "annotations", None) == "-":
        raise ValueError("graph and annotations cannot both be read from stdin")
    g = parse_graph(_read(args.graph))
    forbidden, red, blue = 0, g.all_vertices, g.all_vertices
    if getattr(args, "annotations", None):
        forbidden, red, blue = parse_annotations(_read(args.annotations), g)
    return g, AnnotatedInstance(g, forbidden, red, blue, args.k, args.d)


# ============================================================================
# Commands
# ============================================================================

def cmd_solve(args) -> int:
    g, inst = _load_instance(args)
    td = parse_decomposition(_read(args.decomposition), g) if args.decomposition else None
    outcome = solve_instance(args.problem, inst, td, args.q, oracle=args.oracle, trace=args.trace,
                             timing=args.timing)
    report = build_solve_report(outcome)
    if args.verify:
        check = verify_report(report, inst)
        if not check.valid:
            raise InvariantViolation(f"emitted certificate failed verification: {check.errors}")
    _emit(report)
    return EXIT_YES if outcome.verdict else EXIT_NO


def cmd_unbreakable(args) -> int:
    g = parse_graph(_read(args.graph))
    outcome = solve_unbreakable(args.command, g, args.q, args.k, args.d, route=args.route,
                                oracle=args.oracle, timing=args.timing)
    report = build_solve_report(outcome)
    if args.verify:
        check = verify_report(report, outcome.inst)
        if not check.valid:
            raise InvariantViolation(f"emitted certificate failed verification: {check.errors}")
    _emit(report)
    return EXIT_YES if outcome.verdict else EXIT_NO


def cmd_oracle(args) -> int:
    _, inst = _load_instance(args)
    result = run_oracle(args.problem, inst)
    payload = {
        "schema": config_cache.get_schema_version(),
        "problem": args.problem,
        "verdict": result.verdict,
        "deleted": [v + 1 for v in members(result.deleted)],
    }
    if result.tree is not None:
        payload["elimination_tree"] = tree_model(result.tree).model_dump()
    _emit(payload)
    return EXIT_YES if result.verdict else EXIT_NO


def cmd_semiladder(args) -> int:
    g = parse_graph(_read(args.graph))
    _emit(semiladder_report(g, args.cap))
    return EXIT_YES


def cmd_decompose(args) -> int:
    g = parse_graph(_read(args.graph))
    report = decomposition_report(g, args.k, args.q_target)
    _emit(report)
    return EXIT_YES if report.valid else EXIT_NO


def cmd_validate(args) -> int:
    g = parse_graph(_read(args.graph))
    td = parse_decomposition(_read(args.decomposition), g)
    report = decomposition_report(g, args.k, td=td, q=args.q)
    _emit(report)
    return EXIT_YES if report.valid else EXIT_NO


def cmd_gen(args) -> int:
    g = generate_graph(args.family, args.n, p=args.p, seed=args.seed)
    comment = f"{args.family} n={args.n} seed={args.seed}" + (f" p={args.p}" if args.family.startswith("erdos") else "")
    sys.stdout.write(serialize_graph(g, [comment]))
    if args.annotations:
        forbidden, red, blue = random_annotations(g, make_rng(args.seed, (1,)))
        with open(args.annotations, "w") as f:
            f.write(serialize_annotations(forbidden, red, blue))
    return EXIT_YES


def _corpus_config(path: Optional[str]):
    if path is None:
        return config_cache.get_corpus_config()
    return yaml.safe_load(_read(path)) or {}


def cmd_corpus(args) -> int:
    summary = run_corpus(_corpus_config(args.config), mutation=args.mutation, timing=args.timing)
    _emit(summary)
    clean = (summary.disagreements == 0 and summary.errors == 0 and not summary.volume_violations
             and not summary.semi_ladder_violations)
    return EXIT_YES if clean else EXIT_NO


def cmd_bench(args) -> int:
    _emit(run_bench(_corpus_config(args.config), repeats=args.repeats))
    return EXIT_YES


# ============================================================================
# Parser
# ============================================================================

def _instance_args(p: argparse.ArgumentParser, annotations: bool = True):
    p.add_argument("graph", help="Graph file in the p/e format, '-' for stdin")
    if annotations:
        p.add_argument("annotations", nargs="?", help="F/R/B annotation file, '-' for stdin")
    p.add_argument("-k", type=int, required=True, help="Deletion budget or elimination depth")
    p.add_argument("-d", type=int, required=True, help="Dominators per component")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcd-solver", description="Dominated cluster deletion solvers")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at INFO instead of WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="Solve dcd, eddc or apd through the decomposition DP")
    p.add_argument("problem", choices=PROBLEMS)
    _instance_args(p)
    p.add_argument("--decomposition", help="Tree decomposition file in the t/n format")
    p.add_argument("-q", type=int, help="Unbreakability claimed for --decomposition")
    p.add_argument("--oracle", action="store_true", help="Also report the brute-force verdict")
    p.add_argument("--trace", action="store_true", help="Report Black-White branching statistics")
    p.add_argument("--verify", action="store_true", help="Re-check the certificate as emitted")
    p.add_argument("--timing", action="store_true", help="Report wall time")
    p.set_defaults(handler=cmd_solve)

    for name in ("dcd-unbreakable", "eddc-unbreakable"):
        p = sub.add_parser(name, help=f"Skeleton solver for {name.split('-')[0]} on an unbreakable graph")
        _instance_args(p, annotations=False)
        p.add_argument("-q", type=int, required=True)
        p.add_argument("--route", choices=ROUTES)
        p.add_argument("--oracle", action="store_true")
        p.add_argument("--verify", action="store_true")
        p.add_argument("--timing", action="store_true")
        p.set_defaults(handler=cmd_unbreakable)

    p = sub.add_parser("oracle", help="Brute-force reference verdict")
    p.add_argument("problem", choices=PROBLEMS)
    _instance_args(p)
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("semiladder", help="Semi-ladder index with witness")
    p.add_argument("graph")
    p.add_argument("--cap", type=int)
    p.set_defaults(handler=cmd_semiladder)

    p = sub.add_parser("decompose", help="Build an unbreakable tree decomposition")
    p.add_argument("graph")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--q-target", type=int)
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("validate", help="Validate a decomposition against (q,k)")
    p.add_argument("graph")
    p.add_argument("decomposition")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-q", type=int)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("gen", help="Seeded graph generator")
    p.add_argument("--family", required=True, help=f"One of {', '.join(FAMILIES)}")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-p", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--annotations", help="Also write random F/R/B annotations to this file")
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("corpus", help="Compare solvers with the oracles over a corpus grid")
    p.add_argument("--config", help="Corpus YAML; defaults to app/config/corpus.yaml")
    p.add_argument("--mutation", action="store_true", help="Relax the DP bag deletion gate by one")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(handler=cmd_corpus)

    p = sub.add_parser("bench", help="Time the solvers over a corpus grid")
    p.add_argument("--config")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        _emit({"schema": config_cache.get_schema_version(), "error": str(exc)})
        return EXIT_ERROR
    except InvariantViolation as exc:
        logger.error(f"Invariant violation | command={args.command} | error={exc}")
        _emit({"schema": config_cache.get_schema_version(), "error": f"internal invariant violated: {exc}"})
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
