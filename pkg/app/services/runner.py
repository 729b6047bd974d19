"""
Solve dispatch shared by the CLI and the HTTP routers.

Every positive verdict is re-checked by the certificate checkers before a
report is built from it.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple
import logging
import time

from app.cache import config_cache
from app.schemas import (
    BranchStats,
    CertificateModel,
    ComponentDominators,
    DecompositionReportModel,
    EliminationTreeModel,
    SemiLadderReport,
    SolveReport,
    SolveStats,
)
from app.services.certificates import (
    CertificateReport,
    check_apd_certificate,
    check_dcd_certificate,
    check_eddc_certificate,
)
from app.services.decomposition import (
    TreeDecomposition,
    build_decomposition,
    decomposition_q,
    is_unbreakable_set,
    serialize_decomposition,
    validate_decomposition,
)
from app.services.domination import annotated_partial_domination
from app.services.dp import BlackWhiteReport, DpStats, solve_adcd
from app.services.dp_extended import solve_aeddc
from app.services.elimination import EliminationTree
from app.services.graph import AnnotatedInstance, Graph, InvariantViolation, VertexSet, members, to_mask
from app.services.oracle import OracleBudget, OracleResult, brute_apd, brute_dcd, brute_eddc
from app.services.semiladder import semi_ladder_index
from app.services.skeleton import solve_dcd_unbreakable, solve_eddc_unbreakable

logger = logging.getLogger("dcd_solver")

PROBLEMS = ("dcd", "eddc", "apd")
UNBREAKABLE_PROBLEMS = ("dcd-unbreakable", "eddc-unbreakable")


@dataclass
class SolveOutcome:
    problem: str
    inst: AnnotatedInstance
    verdict: bool
    deleted: VertexSet = 0
    dominators: Tuple[Tuple[VertexSet, VertexSet], ...] = ()
    tree: Optional[EliminationTree] = None
    stats: Dict[str, Any] = field(default_factory=dict)
    oracle_verdict: Optional[bool] = None
    certificate: Optional[CertificateReport] = None


def run_oracle(problem: str, inst: AnnotatedInstance, budget: Optional[OracleBudget] = None) -> OracleResult:
    """
    Brute-force reference verdict.

    Raises:
        ValueError: for an unknown problem
        OracleBudgetError: if the instance exceeds the oracle budget
    """
    if problem in ("dcd", "dcd-unbreakable"):
        return brute_dcd(inst, budget)
    if problem in ("eddc", "eddc-unbreakable"):
        return brute_eddc(inst, budget)
    if problem == "apd":
        return brute_apd(inst, budget)
    raise ValueError(f"unknown problem {problem!r}, expected one of {PROBLEMS}")


def check_outcome(outcome: SolveOutcome) -> CertificateReport:
    if outcome.problem in ("eddc", "eddc-unbreakable"):
        return check_eddc_certificate(outcome.inst, outcome.tree, outcome.dominators)
    if outcome.problem == "apd":
        dom = outcome.dominators[0][1] if outcome.dominators else 0
        return check_apd_certificate(outcome.inst, outcome.deleted, dom)
    return check_dcd_certificate(outcome.inst, outcome.deleted, outcome.dominators)


def _dp_stats(stats: DpStats, report: Optional[BlackWhiteReport]) -> Dict[str, Any]:
    result: Dict[str, Any] = {
        "q": stats.q,
        "nodes": stats.nodes,
        "branches": stats.branches,
        "leaves": stats.leaves,
        "marks_tested": stats.marks_tested,
    }
    if report is not None:
        result["black_white"] = {
            "searches": report.searches,
            "leaves": report.leaves,
            "size": report.size,
            "depth": report.depth,
            "alpha": report.alpha,
            "beta_observed": report.beta_observed,
            "beta_nominal": report.beta_nominal,
            "exceeds_nominal": report.exceeds_nominal,
        }
    return result


def _finish(outcome: SolveOutcome, oracle: bool, started: float, timing: bool) -> SolveOutcome:
    if outcome.verdict:
        outcome.certificate = check_outcome(outcome)
        if not outcome.certificate.valid:
            raise InvariantViolation(f"solver emitted an invalid certificate: {outcome.certificate.errors}")
    if oracle:
        outcome.oracle_verdict = run_oracle(outcome.problem, outcome.inst).verdict
    elapsed_ms = (time.perf_counter() - started) * 1000
    if timing:
        outcome.stats["wall_ms"] = round(elapsed_ms, 3)
    slow_ms = config_cache.get_section("api").get("slow_solve_ms", 2000)
    if elapsed_ms > slow_ms:
        logger.warning(f"Slow solve | problem={outcome.problem} | n={outcome.inst.graph.vertex_count} | "
                       f"wall_ms={elapsed_ms:.1f}")
    logger.info(f"Solve completed | problem={outcome.problem} | n={outcome.inst.graph.vertex_count} | "
                f"k={outcome.inst.k} | d={outcome.inst.d} | verdict={'yes' if outcome.verdict else 'no'}")
    return outcome


def solve_instance(problem: str, inst: AnnotatedInstance, td: Optional[TreeDecomposition] = None,
                   q: Optional[int] = None, *, oracle: bool = False, trace: bool = False,
                   timing: bool = False, neutral_shortcut: Optional[bool] = None) -> SolveOutcome:
    """
    Solve one annotated instance.

    Args:
        problem: dcd, eddc or apd
        inst: Annotated instance
        td: Optional tree decomposition (dcd and eddc)
        q: Optional unbreakability parameter claimed for td
        oracle: Also compute the brute-force verdict
        trace: Collect Black-White statistics
        timing: Record wall time in the stats
        neutral_shortcut: Override the configured DP shortcut

    Returns:
        SolveOutcome with a checked certificate on yes-instances

    Raises:
        ValueError: for an unknown problem or an invalid decomposition
    """
    started = time.perf_counter()
    if problem == "dcd":
        result = solve_adcd(inst.graph, inst, td, q, trace=trace, neutral_shortcut=neutral_shortcut)
        outcome = SolveOutcome(problem, inst, result.verdict, result.deleted, result.dominators,
                               stats=_dp_stats(result.stats, result.black_white))
    elif problem == "eddc":
        result = solve_aeddc(inst.graph, inst, td, q, trace=trace, neutral_shortcut=neutral_shortcut)
        outcome = SolveOutcome(problem, inst, result.verdict, result.deleted, result.dominators,
                               tree=result.tree, stats=_dp_stats(result.stats, result.black_white))
    elif problem == "apd":
        solution = annotated_partial_domination(inst)
        if solution is None:
            outcome = SolveOutcome(problem, inst, False)
        else:
            rest = inst.graph.all_vertices & ~solution.deleted
            outcome = SolveOutcome(problem, inst, True, solution.deleted, ((rest, solution.dominators),))
    else:
        raise ValueError(f"unknown problem {problem!r}, expected one of {PROBLEMS}")
    return _finish(outcome, oracle, started, timing)


def solve_unbreakable(problem: str, g: Graph, q: int, k: int, d: int, *, route: Optional[str] = None,
                      oracle: bool = False, timing: bool = False) -> SolveOutcome:
    """
    Run the skeleton solvers on a plain (q,k)-unbreakable graph.

    Raises:
        ValueError: if g is not (q,k)-unbreakable or the problem is unknown
    """
    started = time.perf_counter()
    if not is_unbreakable_set(g, g.all_vertices, q, k).holds:
        raise ValueError(f"graph is not ({q},{k})-unbreakable")
    inst = AnnotatedInstance.plain(g, k, d)
    if problem == "dcd-unbreakable":
        solution = solve_dcd_unbreakable(g, q, k, d, route)
        outcome = SolveOutcome(problem, inst, solution is not None)
        if solution is not None:
            outcome.deleted, outcome.dominators = solution.deleted, solution.dominators
            outcome.stats = {"q": q, "route": solution.route, "skeleton": members(solution.skeleton)}
    elif problem == "eddc-unbreakable":
        solution = solve_eddc_unbreakable(g, q, k, d, route)
        outcome = SolveOutcome(problem, inst, solution is not None)
        if solution is not None:
            outcome.deleted, outcome.dominators, outcome.tree = solution.deleted, solution.dominators, solution.tree
            outcome.stats = {"q": q, "route": solution.route, "skeleton": members(solution.skeleton)}
    else:
        raise ValueError(f"unknown problem {problem!r}, expected one of {UNBREAKABLE_PROBLEMS}")
    outcome.stats.setdefault("q", q)
    return _finish(outcome, oracle, started, timing)


# ============================================================================
# Reports
# ============================================================================

def _ids(mask: VertexSet):
    return [v + 1 for v in members(mask)]


def tree_model(tree: EliminationTree) -> EliminationTreeModel:
    parents = tree.parent_map()
    return EliminationTreeModel(
        parent={str(v + 1): (None if p is None else p + 1) for v, p in sorted(parents.items())},
        depth=tree.depth,
    )


def build_solve_report(outcome: SolveOutcome) -> SolveReport:
    """Convert an outcome into the versioned JSON report."""
    certificate = None
    if outcome.verdict:
        check = outcome.certificate or check_outcome(outcome)
        certificate = CertificateModel(
            deleted=_ids(outcome.deleted),
            dominators=[ComponentDominators(component=_ids(c), dominators=_ids(dm)) for c, dm in outcome.dominators],
            elimination_tree=tree_model(outcome.tree) if outcome.tree is not None else None,
            valid=check.valid,
            errors=check.errors,
        )
    stats = dict(outcome.stats)
    black_white = stats.pop("black_white", None)
    return SolveReport(
        schema=config_cache.get_schema_version(),
        problem=outcome.problem,
        verdict=outcome.verdict,
        certificate=certificate,
        stats=SolveStats(
            q=stats.get("q"),
            nodes=stats.get("nodes", 0),
            branches=stats.get("branches", 0),
            leaves=stats.get("leaves", 0),
            marks_tested=stats.get("marks_tested", 0),
            wall_ms=stats.get("wall_ms"),
            black_white=BranchStats(**black_white) if black_white else None,
            route=stats.get("route"),
            skeleton=[v + 1 for v in stats["skeleton"]] if "skeleton" in stats else None,
        ),
        oracle_verdict=outcome.oracle_verdict,
    )


def verify_report(report: SolveReport, inst: AnnotatedInstance) -> CertificateReport:
    """
    Re-check the certificate as it appears in an emitted report, ids and all.

    Raises:
        ValueError: if the report names vertices outside the instance
    """
    result = CertificateReport()
    if not report.verdict:
        return result
    cert = report.certificate
    if cert is None:
        result.fail("yes-report without a certificate")
        return result
    n = inst.graph.vertex_count

    def mask(ids) -> VertexSet:
        for v in ids:
            if not 1 <= v <= n:
                raise ValueError(f"report names vertex {v} outside 1..{n}")
        return to_mask(v - 1 for v in ids)

    dominators = tuple((mask(c.component), mask(c.dominators)) for c in cert.dominators)
    if report.problem in ("eddc", "eddc-unbreakable"):
        parents = {}
        if cert.elimination_tree is not None:
            parents = {int(v) - 1: (None if p is None else p - 1) for v, p in cert.elimination_tree.parent.items()}
        return check_eddc_certificate(inst, EliminationTree.from_parent_map(parents), dominators)
    if report.problem == "apd":
        return check_apd_certificate(inst, mask(cert.deleted), dominators[0][1] if dominators else 0)
    return check_dcd_certificate(inst, mask(cert.deleted), dominators)


def semiladder_report(g: Graph, cap: Optional[int] = None) -> SemiLadderReport:
    cap = config_cache.get_section("semiladder").get("default_cap", 8) if cap is None else cap
    result = semi_ladder_index(g, cap)
    return SemiLadderReport(
        schema=config_cache.get_schema_version(),
        index=result.index,
        exceeds_cap=result.exceeds_cap,
        a=[v + 1 for v in result.witness.a_seq],
        b=[v + 1 for v in result.witness.b_seq],
    )


def decomposition_report(g: Graph, k: int, q_target: Optional[int] = None,
                         td: Optional[TreeDecomposition] = None, q: Optional[int] = None) -> DecompositionReportModel:
    """
    Build (or take) a decomposition and validate it.

    With td given, it is validated against q (default: its certified q)
    instead of being built.
    """
    if td is None:
        td, certified = build_decomposition(g, k, q_target)
    else:
        certified = decomposition_q(g, td, k)
    check = validate_decomposition(g, td, certified if q is None else q, k)
    logger.info(f"Decomposition checked | n={g.vertex_count} | k={k} | nodes={len(td.nodes)} | "
                f"q={certified} | valid={check.valid}")
    return DecompositionReportModel(
        schema=config_cache.get_schema_version(),
        q=certified if q is None else q,
        k=k,
        nodes=len(td.nodes),
        valid=check.valid,
        violation=check.violation,
        detail=check.detail or None,
        decomposition=serialize_decomposition(td),
    )
