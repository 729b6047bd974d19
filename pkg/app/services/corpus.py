"""
Corpus runner and benchmark harness.

run_corpus solves every (instance, problem, k, d) combination of a corpus
config and compares each verdict with the brute-force oracle. run_bench
times the solvers over the same grid.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging
import statistics
import time

import pandas as pd

from app.cache import config_cache
from app.data.generate_graphs import CorpusInstance, corpus_instances
from app.schemas import BenchReport, BenchRow, CorpusRun, CorpusSummary
from app.services.baggraph import bag_graph_volume, full_bag_graphs
from app.services.decomposition import build_decomposition
from app.services.dp import solve_adcd
from app.services.graph import InvariantViolation, serialize_annotations, serialize_graph
from app.services.oracle import OracleBudgetError
from app.services.runner import run_oracle, solve_instance
from app.services.semiladder import semi_ladder_index

logger = logging.getLogger("dcd_solver")


def _grid(config: Dict[str, Any]):
    grid = config.get("grid", {}) or {}
    return list(grid.get("k", [0])), list(grid.get("d", [0]))


def _failure(item: CorpusInstance, run: CorpusRun) -> Dict[str, str]:
    return {
        "name": item.name,
        "problem": run.problem,
        "k": str(run.k),
        "d": str(run.d),
        "verdict": "error" if run.verdict is None else ("yes" if run.verdict else "no"),
        "oracle_verdict": "none" if run.oracle_verdict is None else ("yes" if run.oracle_verdict else "no"),
        "error": run.error or "",
        "graph": serialize_graph(item.graph),
        "annotations": serialize_annotations(item.forbidden, item.red, item.blue),
    }


def _run_one(item: CorpusInstance, problem: str, k: int, d: int, oracle: bool,
             mutation: bool, timing: bool) -> Optional[CorpusRun]:
    inst = item.instance(k, d)
    run = CorpusRun(name=item.name, family=item.family, n=item.n, problem=problem, k=k, d=d, agree=True)
    try:
        oracle_verdict = run_oracle(problem, inst).verdict if oracle else None
    except OracleBudgetError as exc:
        logger.debug(f"Corpus run skipped | name={item.name} | reason={exc}")
        return None
    started = time.perf_counter()
    try:
        if mutation:
            result = solve_adcd(inst.graph, inst, trace=True, mutation=True)
            verdict = result.verdict
            report = result.black_white
            run.leaves = report.leaves if report else 0
            run.beta_observed = report.beta_observed if report else 0
        else:
            outcome = solve_instance(problem, inst, trace=True)
            verdict = outcome.verdict
            black_white = outcome.stats.get("black_white") or {}
            run.leaves = black_white.get("leaves", 0)
            run.beta_observed = black_white.get("beta_observed", 0)
    except (ValueError, InvariantViolation) as exc:
        logger.error(f"Corpus run failed | name={item.name} | problem={problem} | k={k} | d={d} | error={exc}")
        run.error = str(exc)
        run.agree = False
        return run
    if timing:
        run.wall_ms = round((time.perf_counter() - started) * 1000, 3)
    run.verdict = verdict
    run.oracle_verdict = oracle_verdict
    run.agree = oracle_verdict is None or oracle_verdict == verdict
    if not run.agree:
        logger.warning(f"Oracle disagreement | name={item.name} | problem={problem} | k={k} | d={d} | "
                       f"solver={verdict} | oracle={oracle_verdict}")
    return run


def _check_volume(item: CorpusInstance, ks: List[int], ds: List[int]) -> Tuple[int, List[str]]:
    """Bag-graph volume bound of the built decomposition, for every grid (k, d)."""
    checks, violations = 0, []
    for k in ks:
        td, q = build_decomposition(item.graph, k)
        for d in ds:
            volume = bag_graph_volume(item.graph, td, q, d)
            checks += 1
            if not volume.holds:
                logger.warning(f"Bag-graph volume exceeded | name={item.name} | k={k} | d={d} | q={q} | "
                               f"total={volume.total} | bound={volume.bound}")
                violations.append(f"{item.name} k={k} d={d}")
    return checks, violations


def _check_semi_ladder(item: CorpusInstance, ks: List[int], ds: List[int]) -> Tuple[int, List[str]]:
    """Semi-ladder index of every full bag graph against q + ℓ + 4, ℓ the index of the instance graph."""
    ladder = semi_ladder_index(item.graph, item.graph.vertex_count).index
    checks, violations = 0, []
    for k in ks:
        td, q = build_decomposition(item.graph, k)
        bound = q + ladder + 4
        for d in ds:
            for bg in full_bag_graphs(item.graph, td, q, d):
                found = semi_ladder_index(bg.graph, bound + 1)
                checks += 1
                if found.index > bound:
                    logger.warning(f"Bag-graph semi-ladder exceeded | name={item.name} | k={k} | d={d} | q={q} | "
                                   f"node={bg.node} | index={found.index} | bound={bound}")
                    violations.append(f"{item.name} k={k} d={d} node={bg.node}")
    return checks, violations


def _per_family(runs: List[CorpusRun], timing: bool) -> Dict[str, Dict[str, float]]:
    if not runs:
        return {}
    df = pd.DataFrame([r.model_dump() for r in runs])
    df["disagree"] = ~df["agree"]
    df["yes"] = df["verdict"].fillna(False).astype(bool)
    aggregations = {
        "runs": ("agree", "size"),
        "disagreements": ("disagree", "sum"),
        "yes_rate": ("yes", "mean"),
        "mean_leaves": ("leaves", "mean"),
        "max_beta": ("beta_observed", "max"),
    }
    if timing:
        aggregations["mean_ms"] = ("wall_ms", "mean")
    table = df.groupby("family", sort=True).agg(**aggregations)
    return {family: {col: round(float(value), 6) for col, value in row.items()}
            for family, row in table.iterrows()}


def run_corpus(config: Optional[Dict[str, Any]] = None, *, mutation: bool = False,
               timing: bool = False) -> CorpusSummary:
    """
    Compare the DP solvers with the oracles over a corpus grid.

    Args:
        config: Corpus config; defaults to app/config/corpus.yaml
        mutation: Run the DCD DP with its bag deletion gate relaxed by one
        timing: Record per-run wall time

    Returns:
        CorpusSummary; failures are sorted smallest instance first
    """
    config = config_cache.get_corpus_config() if config is None else config
    problems = ["dcd"] if mutation else list(config.get("problems", ["dcd", "eddc"]))
    ks, ds = _grid(config)
    oracle = bool(config.get("oracle", True))
    runs: List[CorpusRun] = []
    failures = []
    volume_checks = 0
    volume_violations: List[str] = []
    ladder_checks = 0
    ladder_violations: List[str] = []
    semi_ladder = bool(config.get("semi_ladder_check", True))
    for item in corpus_instances(config):
        checks, violations = _check_volume(item, ks, ds)
        volume_checks += checks
        volume_violations.extend(violations)
        if semi_ladder:
            checks, violations = _check_semi_ladder(item, ks, ds)
            ladder_checks += checks
            ladder_violations.extend(violations)
        for problem in problems:
            for k in ks:
                for d in ds:
                    run = _run_one(item, problem, k, d, oracle, mutation, timing)
                    if run is None:
                        continue
                    runs.append(run)
                    if not run.agree:
                        failures.append((item.graph.vertex_count, item.graph.edge_count, len(failures),
                                         _failure(item, run)))
    failures.sort(key=lambda f: f[:3])
    summary = CorpusSummary(
        schema=config_cache.get_schema_version(),
        instances=len(runs),
        disagreements=sum(1 for r in runs if not r.agree and r.error is None),
        errors=sum(1 for r in runs if r.error is not None),
        failures=[f[3] for f in failures],
        per_family=_per_family(runs, timing),
        max_beta_observed=max((r.beta_observed for r in runs), default=0),
        runs=runs,
        seed=config.get("seed"),
        mutation=mutation,
        volume_checks=volume_checks,
        volume_violations=volume_violations,
        semi_ladder_checks=ladder_checks,
        semi_ladder_violations=ladder_violations,
    )
    logger.info(f"Corpus run completed | runs={summary.instances} | disagreements={summary.disagreements} | "
                f"errors={summary.errors} | mutation={mutation}")
    return summary


def run_bench(config: Optional[Dict[str, Any]] = None, *, repeats: int = 3,
              problems: Optional[Sequence[str]] = None) -> BenchReport:
    """
    Time every solve of a corpus grid.

    Args:
        config: Corpus config; defaults to app/config/corpus.yaml
        repeats: Timed solves per combination
        problems: Override the config's problem list

    Returns:
        BenchReport with median and minimum milliseconds per run and per family
    """
    if repeats <= 0:
        raise ValueError("repeats must be positive")
    config = config_cache.get_corpus_config() if config is None else config
    problems = list(problems or config.get("problems", ["dcd", "eddc"]))
    ks, ds = _grid(config)
    rows: List[BenchRow] = []
    for item in corpus_instances(config):
        for problem in problems:
            for k in ks:
                for d in ds:
                    inst = item.instance(k, d)
                    samples = []
                    verdict = False
                    for _ in range(repeats):
                        outcome = solve_instance(problem, inst, timing=True)
                        verdict = outcome.verdict
                        samples.append(outcome.stats["wall_ms"])
                    rows.append(BenchRow(name=item.name, family=item.family, n=item.n, problem=problem,
                                         k=k, d=d, verdict=verdict, median_ms=statistics.median(samples),
                                         min_ms=min(samples)))
    per_family: Dict[str, Dict[str, float]] = {}
    if rows:
        df = pd.DataFrame([r.model_dump() for r in rows])
        table = df.groupby(["family", "problem"], sort=True)["median_ms"].agg(["count", "mean", "max"])
        for (family, problem), row in table.iterrows():
            per_family[f"{family}/{problem}"] = {col: round(float(value), 3) for col, value in row.items()}
    logger.info(f"Bench completed | rows={len(rows)} | repeats={repeats}")
    return BenchReport(schema=config_cache.get_schema_version(), repeats=repeats, seed=config.get("seed"),
                       rows=rows, per_family=per_family)
