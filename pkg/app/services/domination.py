"""
Dominating-set primitives and the Annotated Partial Domination solver.
"""

from dataclasses import dataclass
from typing import Iterator, Optional, Protocol
import logging

from app.services.graph import (
    AnnotatedInstance,
    Graph,
    VertexSet,
    closed_neighborhood,
    iter_members,
    lowest,
    popcount,
    subsets_up_to,
)

logger = logging.getLogger("dcd_solver")


@dataclass(frozen=True)
class PartialDominationSolution:
    """Deleted set X and dominators D of an Annotated Partial Domination instance."""
    deleted: VertexSet
    dominators: VertexSet


# ============================================================================
# Dominating sets
# ============================================================================

def _lex_first_cover(
    g: Graph,
    targets: VertexSet,
    candidates: VertexSet,
    size: int,
) -> Optional[VertexSet]:
    """
    Lexicographically first set of at most `size` candidates whose closed
    neighbourhood covers targets, searching combinations in lex order.
    """
    order = list(iter_members(candidates))
    suffix = [0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        suffix[i] = suffix[i + 1] | (1 << order[i])

    def feasible(start: int, undominated: VertexSet) -> bool:
        pool = suffix[start]
        for u in iter_members(undominated):
            if not (g.adjacency[u] | (1 << u)) & pool:
                return False
        return True

    def search(start: int, chosen: VertexSet, dominated: VertexSet, left: int) -> Optional[VertexSet]:
        undominated = targets & ~dominated
        if not undominated:
            return chosen
        if left == 0 or not feasible(start, undominated):
            return None
        for i in range(start, len(order)):
            v = order[i]
            found = search(i + 1, chosen | (1 << v), dominated | g.adjacency[v] | (1 << v), left - 1)
            if found is not None:
                return found
        return None

    return search(0, 0, 0, size)


def _cover_exists(g: Graph, targets: VertexSet, candidates: VertexSet, size: int) -> bool:
    """Branch on the smallest uncovered target; faster than lex search for existence."""
    if not targets:
        return True
    if size == 0:
        return False
    u = lowest(targets)
    options = (g.adjacency[u] | (1 << u)) & candidates
    for v in iter_members(options):
        if _cover_exists(g, targets & ~(g.adjacency[v] | (1 << v)), candidates, size - 1):
            return True
    return False


def min_dominating_set(g: Graph, bound: int, removed: VertexSet = 0) -> Optional[VertexSet]:
    """
    Minimum dominating set of g - removed, if its size is at most bound.

    Among minimum-size dominating sets the lexicographically smallest is returned.

    Args:
        g: Graph
        bound: Size cap
        removed: Vertices treated as deleted

    Returns:
        Vertex set or None when the domination number exceeds bound
    """
    universe = g.all_vertices & ~removed
    for size in range(0, bound + 1):
        if _cover_exists(g, universe, universe, size):
            return _lex_first_cover(g, universe, universe, size)
    return None


def red_blue_domination_number(
    g: Graph,
    red: VertexSet,
    blue: VertexSet,
    cap: int,
) -> Optional[int]:
    """Least |D| with D subset of blue dominating red, or None if it exceeds cap."""
    for u in iter_members(red):
        if not (g.adjacency[u] | (1 << u)) & blue:
            return None
    for size in range(0, cap + 1):
        if _cover_exists(g, red, blue, size):
            return size
    return None


def red_blue_dominating_set(g: Graph, red: VertexSet, blue: VertexSet, d: int) -> Optional[VertexSet]:
    """
    Red-blue dominating set of minimum size, if that size is at most d.

    Args:
        g: Graph
        red: Vertices to dominate
        blue: Allowed dominators
        d: Size cap

    Returns:
        D subset of blue with red inside N[D], or None
    """
    size = red_blue_domination_number(g, red, blue, d)
    if size is None:
        return None
    return _lex_first_cover(g, red, blue, size)


# ============================================================================
# Annotated Partial Domination
# ============================================================================

class PartialDominationSolver(Protocol):
    def solve(self, g: Graph, forbidden: VertexSet, red: VertexSet, blue: VertexSet,
              k: int, d: int) -> Optional[PartialDominationSolution]:
        ...


def partial_domination_options(g: Graph, forbidden: VertexSet, red: VertexSet, blue: VertexSet,
                               k: int, d: int) -> Iterator[PartialDominationSolution]:
    """Every D of at most d blue vertices, in canonical order, whose undominated reds are a legal deletion."""
    for dominators in subsets_up_to(blue, d):
        residue = red & ~closed_neighborhood(g, dominators)
        if residue & forbidden or popcount(residue) > k:
            continue
        yield PartialDominationSolution(deleted=residue, dominators=dominators)


class EnumerationPartialDomination:
    """
    Direct enumeration back end: try every D of at most d blue vertices in
    canonical order and delete the reds it leaves undominated.
    """

    def solve(self, g: Graph, forbidden: VertexSet, red: VertexSet, blue: VertexSet,
              k: int, d: int) -> Optional[PartialDominationSolution]:
        return next(partial_domination_options(g, forbidden, red, blue, k, d), None)


# Global solver instance; replace to swap the back end for every caller
partial_domination_engine: PartialDominationSolver = EnumerationPartialDomination()


def partial_domination(g: Graph, forbidden: VertexSet, red: VertexSet, blue: VertexSet,
                       k: int, d: int) -> Optional[PartialDominationSolution]:
    """Annotated Partial Domination on explicit sets."""
    if k < 0:
        return None
    return partial_domination_engine.solve(g, forbidden, red, blue, k, d)


def annotated_partial_domination(inst: AnnotatedInstance) -> Optional[PartialDominationSolution]:
    """
    Delete at most k non-forbidden vertices so that at most d blue vertices
    dominate every remaining red vertex.

    Returns:
        PartialDominationSolution or None when infeasible
    """
    solution = partial_domination(inst.graph, inst.forbidden, inst.red, inst.blue, inst.k, inst.d)
    logger.debug(
        f"Partial domination | n={inst.graph.vertex_count} | k={inst.k} | d={inst.d} | "
        f"feasible={solution is not None}"
    )
    return solution
