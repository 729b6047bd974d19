"""
Skeleton machinery and exact solvers for Dominated Cluster Deletion and
Elimination Distance to Dominated Clusters on (q,k)-unbreakable graphs.

A skeleton of a solution S' is the part of S' adjacent both to the large
component C'0 of G - S' and to something outside N[C'0]. Candidate skeletons
are enumerated by branching on a small dominating set; each candidate is then
extended by brute force on the small side and partial domination on the large
component.
"""

from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Dict, List, Optional, Sequence, Set, Tuple
import logging

from app.cache import config_cache
from app.services.domination import min_dominating_set, partial_domination
from app.services.elimination import EliminationTree, validate_elimination_tree
from app.services.graph import (
    Graph,
    InvariantViolation,
    VertexSet,
    canonical_key,
    closed_neighborhood,
    connected_components,
    iter_members,
    members,
    popcount,
    subsets_up_to,
    to_mask,
)
from app.services.oracle import EliminationOracle

logger = logging.getLogger("dcd_solver")

__all__ = [
    "Skeleton",
    "DcdSolution",
    "EddcSolution",
    "extract_skeleton",
    "skeleton_candidates",
    "skeletons_via_dominator_guessing",
    "candidate_family",
    "check_skeleton_dcd",
    "solve_dcd_unbreakable",
    "extend_eddc_skeleton",
    "solve_eddc_unbreakable",
    "validate_elimination_tree",
]

ROUTES = ("annotated", "dominators")


@dataclass(frozen=True)
class Skeleton:
    vertices: VertexSet
    kind: str

    def __post_init__(self):
        if self.kind not in ("dcd", "eddc"):
            raise ValueError(f"unknown skeleton kind {self.kind!r}")


@dataclass(frozen=True)
class DcdSolution:
    deleted: VertexSet
    dominators: Tuple[Tuple[VertexSet, VertexSet], ...]
    skeleton: VertexSet = 0
    route: str = "brute"


@dataclass(frozen=True)
class EddcSolution:
    tree: EliminationTree
    dominators: Tuple[Tuple[VertexSet, VertexSet], ...]
    skeleton: VertexSet = 0
    route: str = "brute"

    @property
    def deleted(self) -> VertexSet:
        return self.tree.vertices


def _route(route: Optional[str]) -> str:
    chosen = route or config_cache.get_section("skeleton").get("route", "annotated")
    if chosen not in ROUTES:
        raise ValueError(f"unknown skeleton route {chosen!r}, expected one of {ROUTES}")
    return chosen


def _large_components(g: Graph, removed: VertexSet, q: int) -> List[VertexSet]:
    return [c for c in connected_components(g, removed) if popcount(c) > q]


def _dominators(g: Graph, removed: VertexSet, d: int) -> Optional[Tuple[Tuple[VertexSet, VertexSet], ...]]:
    result = []
    for comp in connected_components(g, removed):
        dom = min_dominating_set(g, d, removed=g.all_vertices & ~comp)
        if dom is None:
            return None
        result.append((comp, dom))
    return tuple(result)


def extract_skeleton(g: Graph, s_prime: VertexSet, q: int) -> Optional[VertexSet]:
    """
    Members of s_prime with a neighbour in the large component C'0 of
    g - s_prime and a neighbour outside N[C'0].

    Returns:
        The skeleton, or None when g - s_prime has no unique component above q
    """
    large = _large_components(g, s_prime, q)
    if len(large) != 1:
        return None
    around = closed_neighborhood(g, large[0])
    return to_mask(v for v in iter_members(s_prime)
                   if g.adjacency[v] & large[0] and g.adjacency[v] & ~around)


# ============================================================================
# Candidate families
# ============================================================================

def skeleton_candidates(g: Graph, q: int, k: int, d: int) -> List[VertexSet]:
    """
    Candidate skeletons by branching on a dominating set X of size at most q+d,
    the neighbours Y of low-degree members of X and the neighbours Z of
    low-degree members of Y.

    Returns:
        Distinct candidates in canonical order; empty when g has no
        dominating set of size q+d
    """
    memo: Dict[Tuple[VertexSet, int], Optional[frozenset]] = {}

    def family(removed: VertexSet, budget: int) -> Optional[frozenset]:
        if budget == 0:
            return frozenset({0})
        key = (removed, budget)
        if key in memo:
            return memo[key]
        x = min_dominating_set(g, q + d, removed)
        if x is None:
            memo[key] = None
            return None
        alive = g.all_vertices & ~removed
        y = 0
        for v in iter_members(x):
            if g.degree(v, removed) <= q:
                y |= g.adjacency[v] & alive
        z = 0
        for v in iter_members(y):
            if g.degree(v, removed) <= q:
                z |= g.adjacency[v] & alive
        found: Set[VertexSet] = {0}
        for v in iter_members(x | y | z):
            sub = family(removed | (1 << v), budget - 1)
            if sub:
                found.update(s | (1 << v) for s in sub)
        memo[key] = frozenset(found)
        return memo[key]

    result = family(0, k)
    if result is None:
        return []
    return sorted(result, key=canonical_key)


def skeletons_via_dominator_guessing(g: Graph, q: int, k: int, d: int) -> List[Tuple[VertexSet, VertexSet]]:
    """
    For every guess D (|D| <= d) of the large component's dominators: S1 is
    everything outside N[D] and S2 the neighbours of low-degree S1 members.
    Branches with |S1| > q or |S2| > q + kq are dropped.

    Returns:
        List of (D, S2) pairs in canonical order of D
    """
    result = []
    for dom in subsets_up_to(g.all_vertices, d):
        s1 = g.all_vertices & ~closed_neighborhood(g, dom)
        if popcount(s1) > q:
            continue
        s2 = 0
        for u in iter_members(s1):
            if g.degree(u) <= q:
                s2 |= g.adjacency[u]
        if popcount(s2) > q + k * q:
            continue
        result.append((dom, s2))
    return result


def candidate_family(g: Graph, q: int, k: int, d: int, route: Optional[str] = None) -> List[VertexSet]:
    """Candidate skeletons from the selected route, deduplicated and canonically ordered."""
    if _route(route) == "annotated":
        return skeleton_candidates(g, q, k, d)
    found: Set[VertexSet] = set()
    for _, s2 in skeletons_via_dominator_guessing(g, q, k, d):
        found.update(subsets_up_to(s2, k))
    return sorted(found, key=canonical_key)


# ============================================================================
# Dominated Cluster Deletion
# ============================================================================

def _min_cluster_deletion(g: Graph, comp: VertexSet, budget: int, d: int) -> Optional[VertexSet]:
    """Fewest deletions inside comp leaving pieces of domination number at most d."""
    for s in subsets_up_to(comp, budget):
        rest = comp & ~s
        if all(min_dominating_set(g, d, g.all_vertices & ~piece) is not None
               for piece in connected_components(g, g.all_vertices & ~rest)):
            return s
    return None


def check_skeleton_dcd(g: Graph, s: VertexSet, q: int, k: int, d: int) -> Optional[DcdSolution]:
    """
    Extend a candidate skeleton: optimal deletions on the small side, then
    partial domination of the large component with the remaining budget.

    Returns:
        DcdSolution or None when s cannot be extended
    """
    if popcount(s) > k:
        return None
    comps = connected_components(g, s)
    large = [c for c in comps if popcount(c) > q]
    if len(large) > 1:
        return None
    left = k - popcount(s)
    deleted = s
    for comp in comps:
        if large and comp == large[0]:
            continue
        extra = _min_cluster_deletion(g, comp, left, d)
        if extra is None:
            return None
        left -= popcount(extra)
        deleted |= extra
    if large:
        c0 = large[0]
        apd = partial_domination(g, 0, c0, c0, left, d)
        if apd is None:
            return None
        deleted |= apd.deleted
    doms = _dominators(g, deleted, d)
    if doms is None:
        raise InvariantViolation("skeleton extension left a component with domination number above d")
    return DcdSolution(deleted, doms, s, "skeleton")


def solve_dcd_unbreakable(g: Graph, q: int, k: int, d: int, route: Optional[str] = None) -> Optional[DcdSolution]:
    """
    Dominated Cluster Deletion on a (q,k)-unbreakable graph.

    Graphs with fewer than 3q+1 vertices are solved by per-component brute
    force, since a deletion need not leave a unique large component there.

    Returns:
        DcdSolution (deleted set, per-component dominators) or None
    """
    if g.vertex_count < 3 * q + 1:
        deleted = 0
        for comp in connected_components(g):
            extra = _min_cluster_deletion(g, comp, k - popcount(deleted), d)
            if extra is None:
                logger.info(f"DCD unbreakable solve | n={g.vertex_count} | q={q} | k={k} | d={d} | "
                            f"route=brute | verdict=no")
                return None
            deleted |= extra
        return DcdSolution(deleted, _dominators(g, deleted, d), 0, "brute")
    chosen = _route(route)
    candidates = candidate_family(g, q, k, d, chosen)
    for s in candidates:
        solution = check_skeleton_dcd(g, s, q, k, d)
        if solution is not None:
            logger.info(f"DCD unbreakable solve | n={g.vertex_count} | q={q} | k={k} | d={d} | "
                        f"route={chosen} | candidates={len(candidates)} | verdict=yes")
            return DcdSolution(solution.deleted, solution.dominators, s, chosen)
    logger.info(f"DCD unbreakable solve | n={g.vertex_count} | q={q} | k={k} | d={d} | "
                f"route={chosen} | candidates={len(candidates)} | verdict=no")
    return None


# ============================================================================
# Elimination Distance to Dominated Clusters
# ============================================================================

def _interleavings(order: Sequence[int], extra: Sequence[int]) -> List[Tuple[int, ...]]:
    """Every sequence over order + extra keeping `order` in its given relative order."""
    total = len(order) + len(extra)
    result = []
    for positions in combinations(range(total), len(order)):
        for arrangement in permutations(extra):
            chain: List[int] = []
            it_order, it_extra = iter(order), iter(arrangement)
            for i in range(total):
                chain.append(next(it_order) if i in positions else next(it_extra))
            result.append(tuple(chain))
    return result


def extend_eddc_skeleton(g: Graph, s: VertexSet, order: Sequence[int], q: int, k: int, d: int,
                         oracle: Optional[EliminationOracle] = None) -> Optional[EliminationTree]:
    """
    Extend a skeleton with a guessed linear order to a depth-k elimination forest.

    Small-side vertices Q join the chain (any interleaving that keeps the
    skeleton's order). Each remaining small component hangs below its deepest
    chain neighbour at position j and must be solved at depth k - j. Deletions
    in the large component come from partial domination and extend the chain.

    Raises:
        InvariantViolation: if g - s has two components above q
    """
    m = popcount(s)
    if m > k:
        return None
    large = _large_components(g, s, q)
    if len(large) > 1:
        raise InvariantViolation("two components above q under a small skeleton")
    c0 = large[0] if large else 0
    small = g.all_vertices & ~s & ~c0
    oracle = oracle or EliminationOracle(g, 0, g.all_vertices, g.all_vertices, d)
    for q_set in subsets_up_to(small, k - m):
        pieces = connected_components(g, g.all_vertices & ~(small & ~q_set))
        for chain in _interleavings(list(order), members(q_set)):
            position = {v: i + 1 for i, v in enumerate(chain)}
            placements = []
            for piece in pieces:
                around = 0
                for v in iter_members(piece):
                    around |= g.adjacency[v]
                j = max((position[v] for v in iter_members(around & to_mask(chain))), default=0)
                if not oracle.passes(piece, k - j):
                    break
                placements.append((piece, j))
            else:
                budget = k - len(chain)
                tail: Tuple[int, ...] = ()
                if c0:
                    apd = partial_domination(g, 0, c0, c0, budget, d)
                    if apd is None:
                        continue
                    tail = tuple(iter_members(apd.deleted))
                return _assemble_forest(g, oracle, chain + tail, placements, k)
    return None


def _assemble_forest(g: Graph, oracle: EliminationOracle, chain: Sequence[int],
                     placements: Sequence[Tuple[VertexSet, int]], k: int) -> EliminationTree:
    parents: Dict[int, Optional[int]] = {}
    for i, v in enumerate(chain):
        parents[v] = chain[i - 1] if i else None

    def hang(comp: VertexSet, depth: int, parent: Optional[int]):
        v = oracle.choice(comp, depth)
        if v == -1:
            return
        parents[v] = parent
        for c in connected_components(g, g.all_vertices & ~(comp & ~(1 << v))):
            hang(c, depth - 1, v)

    for piece, j in placements:
        hang(piece, k - j, chain[j - 1] if j else None)
    return EliminationTree.from_parent_map(parents)


def solve_eddc_unbreakable(g: Graph, q: int, k: int, d: int, route: Optional[str] = None) -> Optional[EddcSolution]:
    """
    Elimination Distance to Dominated Clusters on a (q,k)-unbreakable graph.

    Below max(3q(k+q), 3q+1) vertices the memoized recursion is used directly.
    Otherwise every candidate skeleton and every linear order of it is
    extended in canonical order.

    Returns:
        EddcSolution (elimination forest, per-component dominators) or None
    """
    oracle = EliminationOracle(g, 0, g.all_vertices, g.all_vertices, d)
    if g.vertex_count < max(3 * q * (k + q), 3 * q + 1):
        if not oracle.solve(k):
            return None
        tree, _, _ = oracle.witness(k)
        return EddcSolution(tree, _dominators(g, tree.vertices, d), 0, "brute")
    chosen = _route(route)
    candidates = candidate_family(g, q, k, d, chosen)
    for s in candidates:
        for order in permutations(members(s)):
            tree = extend_eddc_skeleton(g, s, order, q, k, d, oracle)
            if tree is None:
                continue
            if not validate_elimination_tree(g, tree) or tree.depth > k:
                raise InvariantViolation("assembled elimination forest is not tree-structured within depth k")
            doms = _dominators(g, tree.vertices, d)
            if doms is None:
                raise InvariantViolation("assembled elimination forest leaves an undominated component")
            logger.info(f"EDDC unbreakable solve | n={g.vertex_count} | q={q} | k={k} | d={d} | "
                        f"route={chosen} | candidates={len(candidates)} | verdict=yes")
            return EddcSolution(tree, doms, s, chosen)
    logger.info(f"EDDC unbreakable solve | n={g.vertex_count} | q={q} | k={k} | d={d} | "
                f"route={chosen} | candidates={len(candidates)} | verdict=no")
    return None
