"""
Brute-force reference solvers.

These implement the problem definitions directly and are the ground truth for
every cross-check. They depend only on graph primitives and the red-blue
dominating set search, never on the skeleton, bag-graph or DP solvers.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Tuple
import logging

from app.cache import config_cache
from app.services.domination import red_blue_domination_number, red_blue_dominating_set
from app.services.elimination import EliminationTree
from app.services.graph import (
    AnnotatedInstance,
    Graph,
    VertexSet,
    closed_neighborhood,
    connected_components,
    iter_members,
    lowest,
    members,
    popcount,
    to_mask,
)

logger = logging.getLogger("dcd_solver")


class OracleBudgetError(ValueError):
    """Input exceeds the oracle budget."""


@dataclass(frozen=True)
class OracleBudget:
    max_vertices: int
    max_k: int
    max_d: int

    @classmethod
    def default(cls) -> "OracleBudget":
        budget = config_cache.get_oracle_budget()
        return cls(budget["max_vertices"], budget["max_k"], budget["max_d"])

    def check(self, n: int, k: int, d: int):
        if n > self.max_vertices or k > self.max_k or d > self.max_d:
            raise OracleBudgetError(
                f"instance (n={n}, k={k}, d={d}) exceeds oracle budget "
                f"(n<={self.max_vertices}, k<={self.max_k}, d<={self.max_d})"
            )


@dataclass(frozen=True)
class OracleResult:
    """Verdict with witness: deleted set (or forest) and dominators per remaining component."""
    verdict: bool
    deleted: VertexSet = 0
    dominators: Tuple[Tuple[VertexSet, VertexSet], ...] = ()
    tree: Optional[EliminationTree] = None


def _dominators(g: Graph, red: VertexSet, blue: VertexSet, d: int,
                removed: VertexSet) -> Optional[Tuple[Tuple[VertexSet, VertexSet], ...]]:
    result = []
    for comp in connected_components(g, removed):
        dom = red_blue_dominating_set(g, red & comp, blue & comp, d)
        if dom is None:
            return None
        result.append((comp, dom))
    return tuple(result)


# ============================================================================
# Dominated Cluster Deletion
# ============================================================================

def brute_dcd(inst: AnnotatedInstance, budget: Optional[OracleBudget] = None) -> OracleResult:
    """
    Try every S of at most k non-forbidden vertices, in canonical order.

    Returns:
        OracleResult; on yes-instances deleted is the first working S
    """
    g = inst.graph
    (budget or OracleBudget.default()).check(g.vertex_count, inst.k, inst.d)
    pool = members(g.all_vertices & ~inst.forbidden)
    for size in range(0, min(inst.k, len(pool)) + 1):
        for combo in combinations(pool, size):
            removed = to_mask(combo)
            doms = _dominators(g, inst.red, inst.blue, inst.d, removed)
            if doms is not None:
                return OracleResult(True, removed, doms)
    return OracleResult(False)


def brute_apd(inst: AnnotatedInstance, budget: Optional[OracleBudget] = None) -> OracleResult:
    """
    Annotated Partial Domination by trying every S of at most k non-forbidden
    vertices; dominators is a single (remaining vertices, D) pair.
    """
    g = inst.graph
    (budget or OracleBudget.default()).check(g.vertex_count, inst.k, inst.d)
    pool = members(g.all_vertices & ~inst.forbidden)
    for size in range(0, min(inst.k, len(pool)) + 1):
        for combo in combinations(pool, size):
            removed = to_mask(combo)
            dom = red_blue_dominating_set(g, inst.red & ~removed, inst.blue & ~removed, inst.d)
            if dom is not None:
                return OracleResult(True, removed, ((g.all_vertices & ~removed, dom),))
    return OracleResult(False)


# ============================================================================
# Elimination distance
# ============================================================================

class EliminationOracle:
    """
    Memoized recursion of the elimination-distance definition.

    passes(C, j) for a connected vertex set C: C is red-blue dominated by at
    most d blue vertices, or j > 0 and deleting some non-forbidden v leaves
    components that all pass at j - 1.
    """

    def __init__(self, g: Graph, forbidden: VertexSet, red: VertexSet, blue: VertexSet, d: int):
        self.g = g
        self.forbidden = forbidden
        self.red = red
        self.blue = blue
        self.d = d
        self._base: Dict[VertexSet, bool] = {}
        self._memo: Dict[Tuple[VertexSet, int], Optional[int]] = {}

    def base(self, comp: VertexSet) -> bool:
        if comp not in self._base:
            self._base[comp] = red_blue_domination_number(
                self.g, self.red & comp, self.blue & comp, self.d) is not None
        return self._base[comp]

    def choice(self, comp: VertexSet, depth: int) -> Optional[int]:
        """-1 when comp passes without deletion, a vertex to delete, or None when it fails."""
        key = (comp, depth)
        if key in self._memo:
            return self._memo[key]
        result: Optional[int] = None
        if self.base(comp):
            result = -1
        elif depth > 0:
            for v in iter_members(comp & ~self.forbidden):
                rest = comp & ~(1 << v)
                if all(self.passes(c, depth - 1) for c in self._split(rest)):
                    result = v
                    break
        self._memo[key] = result
        return result

    def passes(self, comp: VertexSet, depth: int) -> bool:
        return self.choice(comp, depth) is not None

    def _split(self, vertices: VertexSet) -> List[VertexSet]:
        return connected_components(self.g, self.g.all_vertices & ~vertices)

    def solve(self, depth: int) -> bool:
        return all(self.passes(c, depth) for c in self._split(self.g.all_vertices))

    def witness(self, depth: int) -> Tuple[EliminationTree, VertexSet, List[VertexSet]]:
        """Forest, deleted set and final components for a passing instance."""
        parents: Dict[int, Optional[int]] = {}
        finals: List[VertexSet] = []

        def build(comp: VertexSet, j: int, parent: Optional[int]):
            v = self.choice(comp, j)
            if v == -1:
                finals.append(comp)
                return
            parents[v] = parent
            for c in self._split(comp & ~(1 << v)):
                build(c, j - 1, v)

        for comp in self._split(self.g.all_vertices):
            build(comp, depth, None)
        tree = EliminationTree.from_parent_map(parents)
        return tree, to_mask(parents), sorted(finals, key=lowest)


def brute_eddc(inst: AnnotatedInstance, budget: Optional[OracleBudget] = None) -> OracleResult:
    """
    Elimination distance at most k to graphs whose components have a
    red-blue dominating set of size at most d.
    """
    g = inst.graph
    (budget or OracleBudget.default()).check(g.vertex_count, inst.k, inst.d)
    oracle = EliminationOracle(g, inst.forbidden, inst.red, inst.blue, inst.d)
    if not oracle.solve(inst.k):
        return OracleResult(False)
    tree, deleted, finals = oracle.witness(inst.k)
    doms = tuple((c, red_blue_dominating_set(g, inst.red & c, inst.blue & c, inst.d)) for c in finals)
    return OracleResult(True, deleted, doms, tree)


def brute_treedepth(g: Graph, budget: Optional[OracleBudget] = None) -> Tuple[int, EliminationTree]:
    """
    Treedepth as elimination distance to the empty graph (d = 0, every vertex red).

    Returns:
        Tuple of (treedepth, elimination forest)
    """
    (budget or OracleBudget.default()).check(g.vertex_count, 0, 0)
    oracle = EliminationOracle(g, 0, g.all_vertices, g.all_vertices, 0)
    depth = 0
    while not oracle.solve(depth):
        depth += 1
    tree, _, _ = oracle.witness(depth)
    return depth, tree


# ============================================================================
# Skeleton enumeration
# ============================================================================

def _large_component(g: Graph, removed: VertexSet, q: int) -> Optional[VertexSet]:
    large = [c for c in connected_components(g, removed) if popcount(c) > q]
    return large[0] if len(large) == 1 else None


def skeleton_of(g: Graph, s_prime: VertexSet, q: int) -> Optional[VertexSet]:
    """
    Members of s_prime with a neighbour in the large component C of g - s_prime
    and a neighbour outside N[C]; None when no unique large component exists.
    """
    large = _large_component(g, s_prime, q)
    if large is None:
        return None
    around = closed_neighborhood(g, large)
    return to_mask(v for v in iter_members(s_prime)
                   if g.adjacency[v] & large and g.adjacency[v] & ~around)


def _elimination_depth(g: Graph, s: VertexSet) -> int:
    """Least depth of a rooted forest making s tree-structured in g."""
    memo: Dict[VertexSet, int] = {}

    def depth_of(vertices: VertexSet) -> int:
        if not vertices & s:
            return 0
        if vertices in memo:
            return memo[vertices]
        comps = connected_components(g, g.all_vertices & ~vertices)
        if len(comps) > 1:
            value = max(depth_of(c) for c in comps)
        else:
            value = 1 + min(depth_of(vertices & ~(1 << v)) for v in iter_members(vertices & s))
        memo[vertices] = value
        return value

    return depth_of(g.all_vertices)


def brute_skeletons(g: Graph, q: int, k: int, d: int, kind: str,
                    budget: Optional[OracleBudget] = None) -> List[VertexSet]:
    """
    Skeletons of every valid solution of the unannotated problem.

    kind "dcd": solutions are sets of at most k vertices; kind "eddc":
    tree-structured sets of elimination depth at most k.

    Returns:
        Distinct skeletons in canonical order
    """
    if kind not in ("dcd", "eddc"):
        raise ValueError(f"unknown skeleton kind {kind!r}")
    (budget or OracleBudget.default()).check(g.vertex_count, k, d)
    everything = g.all_vertices
    found = set()
    pool = members(everything)
    limit = k if kind == "dcd" else len(pool)
    for size in range(0, min(limit, len(pool)) + 1):
        for combo in combinations(pool, size):
            s_prime = to_mask(combo)
            if _dominators(g, everything, everything, d, s_prime) is None:
                continue
            if kind == "eddc" and _elimination_depth(g, s_prime) > k:
                continue
            skeleton = skeleton_of(g, s_prime, q)
            if skeleton is not None:
                found.add(skeleton)
    return sorted(found, key=lambda m: (popcount(m), members(m)))
