"""
Semi-ladder witnesses and the semi-ladder index.

A semi-ladder of order n is a pair of sequences a_1..a_n, b_1..b_n of distinct
vertices with a_i b_j an edge whenever i > j and a_i b_i a non-edge.
"""

from dataclasses import dataclass, field
from typing import List, Tuple
import logging

from app.services.graph import Graph, iter_members, popcount

logger = logging.getLogger("dcd_solver")


@dataclass(frozen=True)
class SemiLadderWitness:
    a_seq: Tuple[int, ...]
    b_seq: Tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.a_seq)


@dataclass(frozen=True)
class SemiLadderResult:
    """
    index is exact when exceeds_cap is False; otherwise index == cap + 1 is a lower bound.
    """
    index: int
    witness: SemiLadderWitness = field(default_factory=lambda: SemiLadderWitness((), ()))
    exceeds_cap: bool = False


def verify_semi_ladder(g: Graph, w: SemiLadderWitness) -> bool:
    """
    Check both witness invariants in g.

    Raises:
        ValueError: if the sequences differ in length or name vertices outside g
    """
    if len(w.a_seq) != len(w.b_seq):
        raise ValueError("witness sequences must have equal length")
    for v in (*w.a_seq, *w.b_seq):
        if not 0 <= v < g.vertex_count:
            raise ValueError(f"witness vertex {v} out of range")
    if len(set(w.a_seq) | set(w.b_seq)) != 2 * w.order:
        return False
    for i, a in enumerate(w.a_seq):
        if g.has_edge(a, w.b_seq[i]):
            return False
        for j in range(i):
            if not g.has_edge(a, w.b_seq[j]):
                return False
    return True


def semi_ladder_index(g: Graph, cap: int) -> SemiLadderResult:
    """
    Largest semi-ladder order, searched by extending partial sequences one
    (a, b) pair at a time.

    Every future a must be adjacent to all b's chosen so far, so the search
    carries that common neighbourhood and prunes when it cannot beat the best.

    Args:
        g: Graph
        cap: Search cutoff; reaching cap + 1 stops the search

    Returns:
        SemiLadderResult with the index and a witness of that order
    """
    if cap < 0:
        raise ValueError("cap must be non-negative")
    best: List = [0, (), ()]
    everything = g.all_vertices

    def extend(a_seq: Tuple[int, ...], b_seq: Tuple[int, ...], used: int, common: int) -> bool:
        t = len(a_seq)
        if t > best[0]:
            best[0], best[1], best[2] = t, a_seq, b_seq
        if best[0] > cap:
            return True
        for a in iter_members(common & ~used):
            closed_a = g.adjacency[a] | (1 << a)
            for b in iter_members(everything & ~used & ~closed_a):
                taken = used | (1 << a) | (1 << b)
                next_common = common & g.adjacency[b]
                if t + 1 + popcount(next_common & ~taken) <= best[0]:
                    continue
                if extend(a_seq + (a,), b_seq + (b,), taken, next_common):
                    return True
        return False

    extend((), (), 0, everything)
    witness = SemiLadderWitness(tuple(best[1]), tuple(best[2]))
    exceeds = best[0] > cap
    logger.debug(f"Semi-ladder search | n={g.vertex_count} | cap={cap} | index={best[0]} | capped={exceeds}")
    return SemiLadderResult(index=min(best[0], cap + 1), witness=witness, exceeds_cap=exceeds)
