"""
Tree decompositions, (q,k)-unbreakability, regularization and a desk-scale
decomposition constructor.
"""

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterator, List, Mapping, Optional, Tuple
import logging

from app.cache import config_cache
from app.services.graph import (
    Graph,
    GraphFormatError,
    VertexSet,
    connected_components,
    is_connected,
    iter_members,
    lowest,
    members,
    open_neighborhood,
    popcount,
    to_mask,
)

logger = logging.getLogger("dcd_solver")


class DecompositionError(ValueError):
    """Malformed or invalid tree decomposition."""


@dataclass(frozen=True)
class TreeDecomposition:
    """
    Rooted tree (parent map, None at the root) with a bag per node.

    Derived views follow the usual conventions: adhesion(x) is the
    intersection with the parent bag (empty at the root), margin(x) the rest
    of the bag, cone(x) the union of bags below and including x, and
    component(x) the cone minus the adhesion.
    """
    parent: Mapping[int, Optional[int]]
    bags: Mapping[int, VertexSet]

    def __post_init__(self):
        if set(self.parent) != set(self.bags):
            raise DecompositionError("parent map and bags name different nodes")
        roots = [x for x, p in self.parent.items() if p is None]
        if len(roots) != 1:
            raise DecompositionError(f"expected exactly one root, found {len(roots)}")
        for x, p in self.parent.items():
            if p is not None and p not in self.parent:
                raise DecompositionError(f"node {x} has unknown parent {p}")
        for x in self.parent:
            seen = set()
            current: Optional[int] = x
            while current is not None:
                if current in seen:
                    raise DecompositionError(f"cycle through node {x}")
                seen.add(current)
                current = self.parent[current]
        object.__setattr__(self, "_children", self._child_lists())
        object.__setattr__(self, "_cones", {})

    def _child_lists(self) -> Dict[int, List[int]]:
        children: Dict[int, List[int]] = {x: [] for x in self.parent}
        for x in sorted(self.parent):
            p = self.parent[x]
            if p is not None:
                children[p].append(x)
        return children

    @property
    def root(self) -> int:
        return next(x for x, p in self.parent.items() if p is None)

    @property
    def nodes(self) -> List[int]:
        return sorted(self.parent)

    def children(self, x: int) -> List[int]:
        return self._children[x]

    def adhesion(self, x: int) -> VertexSet:
        p = self.parent[x]
        return 0 if p is None else self.bags[p] & self.bags[x]

    def margin(self, x: int) -> VertexSet:
        return self.bags[x] & ~self.adhesion(x)

    def cone(self, x: int) -> VertexSet:
        if x not in self._cones:
            mask = self.bags[x]
            for y in self.children(x):
                mask |= self.cone(y)
            self._cones[x] = mask
        return self._cones[x]

    def component(self, x: int) -> VertexSet:
        return self.cone(x) & ~self.adhesion(x)

    def postorder(self) -> List[int]:
        order: List[int] = []

        def visit(x: int):
            for y in self.children(x):
                visit(y)
            order.append(x)

        visit(self.root)
        return order


@dataclass(frozen=True)
class UnbreakabilityReport:
    holds: bool
    violating_separation: Optional[Tuple[VertexSet, VertexSet]] = None


@dataclass(frozen=True)
class DecompositionReport:
    valid: bool
    violation: Optional[str] = None
    node: Optional[int] = None
    detail: str = ""


# ============================================================================
# Separations and unbreakability
# ============================================================================

def _separators(universe: VertexSet, k: int) -> Iterator[VertexSet]:
    pool = members(universe)
    for size in range(0, min(k, len(pool)) + 1):
        for combo in combinations(pool, size):
            yield to_mask(combo)


def _splits(weights: List[int]) -> Dict[int, Tuple[int, ...]]:
    """Reachable left-side sums -> lexicographically first index tuple reaching it."""
    reach: Dict[int, Tuple[int, ...]] = {0: ()}
    for i, w in enumerate(weights):
        for total, picked in list(reach.items()):
            target = total + w
            if target not in reach:
                reach[target] = picked + (i,)
    return reach


def _best_split(g: Graph, x: VertexSet, separator: VertexSet, universe: VertexSet,
                q: Optional[int]) -> Tuple[int, Optional[Tuple[VertexSet, VertexSet]]]:
    """
    For a fixed separator, the largest achievable min(|A∩x|, |B∩x|) and, when q
    is given, the first separation with both sides above q.
    """
    comps = connected_components(g, ~(universe & ~separator) & g.all_vertices)
    weights = [popcount(c & x) for c in comps]
    base = popcount(separator & x)
    total = sum(weights)
    best = -1
    violation = None
    for s, picked in sorted(_splits(weights).items()):
        value = min(base + s, base + total - s)
        best = max(best, value)
        if q is not None and violation is None and value > q:
            left = separator
            for i in picked:
                left |= comps[i]
            right = separator
            for i, c in enumerate(comps):
                if i not in picked:
                    right |= c
            violation = (left, right)
    return best, violation


def is_unbreakable_set(g: Graph, x: VertexSet, q: int, k: int,
                       universe: Optional[VertexSet] = None,
                       separator_pool: Optional[VertexSet] = None) -> UnbreakabilityReport:
    """
    Decide whether x is (q,k)-unbreakable in g (or in g[universe]).

    Separators are enumerated by size then lexicographically; for each one a
    subset-sum over the components' x-weights decides whether both sides can
    keep more than q vertices of x.

    Args:
        separator_pool: Restrict separators to this set (bag graphs cut only interior vertices)

    Returns:
        UnbreakabilityReport with the first violating separation, if any
    """
    universe = g.all_vertices if universe is None else universe
    if popcount(x) <= q:
        return UnbreakabilityReport(True)
    pool = universe if separator_pool is None else separator_pool & universe
    for separator in _separators(pool, k):
        _, violation = _best_split(g, x, separator, universe, q)
        if violation is not None:
            return UnbreakabilityReport(False, violation)
    return UnbreakabilityReport(True)


def unbreakability_threshold(g: Graph, x: VertexSet, k: int,
                             universe: Optional[VertexSet] = None) -> int:
    """Least q for which x is (q,k)-unbreakable in g[universe]."""
    universe = g.all_vertices if universe is None else universe
    threshold = 0
    for separator in _separators(universe, k):
        best, _ = _best_split(g, x, separator, universe, None)
        threshold = max(threshold, best)
    return threshold


# ============================================================================
# Validation and regularization
# ============================================================================

def validate_decomposition(g: Graph, td: TreeDecomposition, q: int, k: int) -> DecompositionReport:
    """
    Check the decomposition axioms, adhesion sizes and per-bag unbreakability.

    Returns:
        DecompositionReport naming the first violated condition and its node
    """
    covered = 0
    for x in td.nodes:
        if td.bags[x] & ~g.all_vertices:
            return DecompositionReport(False, "vertex-range", x, "bag names vertices outside the graph")
        covered |= td.bags[x]
    if covered != g.all_vertices:
        missing = lowest(g.all_vertices & ~covered)
        return DecompositionReport(False, "vertex-coverage", None, f"vertex {missing + 1} occurs in no bag")
    for u, v in g.edges:
        pair = (1 << u) | (1 << v)
        if not any(td.bags[x] & pair == pair for x in td.nodes):
            return DecompositionReport(False, "edge-coverage", None, f"edge {u + 1} {v + 1} occurs in no bag")
    for v in range(g.vertex_count):
        tops = [x for x in td.nodes if td.bags[x] >> v & 1
                and (td.parent[x] is None or not td.bags[td.parent[x]] >> v & 1)]
        if len(tops) != 1:
            return DecompositionReport(False, "connectivity", tops[1] if len(tops) > 1 else None,
                                       f"occurrences of vertex {v + 1} are not connected")
    for x in td.nodes:
        if popcount(td.adhesion(x)) > q:
            return DecompositionReport(False, "adhesion-size", x, f"adhesion exceeds q={q}")
    for x in td.nodes:
        report = is_unbreakable_set(g, td.bags[x], q, k, universe=td.cone(x))
        if not report.holds:
            return DecompositionReport(False, "unbreakability", x,
                                       f"bag is not ({q},{k})-unbreakable in its cone")
    return DecompositionReport(True)


def regularity_violations(g: Graph, td: TreeDecomposition) -> List[Tuple[int, str]]:
    """Non-root nodes breaking a regularity clause, with the clause name."""
    problems = []
    for x in td.nodes:
        if x == td.root:
            continue
        comp = td.component(x)
        if not td.margin(x):
            problems.append((x, "empty-margin"))
        if not is_connected(g, comp):
            problems.append((x, "disconnected-component"))
        for v in iter_members(td.adhesion(x)):
            if not g.adjacency[v] & comp:
                problems.append((x, "idle-adhesion"))
                break
    return problems


def make_regular(g: Graph, td: TreeDecomposition) -> TreeDecomposition:
    """
    Regular decomposition covering the same graph.

    Each child subtree is restricted, per connected component K of what it
    adds below the parent bag, to K plus the parent-bag vertices adjacent to
    K; nodes whose restricted bag adds nothing are dissolved into the parent.
    """
    root = td.root
    parent: Dict[int, Optional[int]] = {root: None}
    bags: Dict[int, VertexSet] = {root: td.bags[root]}
    fresh = [max(td.nodes) + 1]

    def place(old_children: List[int], new_parent: int, parent_bag: VertexSet, region: VertexSet):
        for y in old_children:
            added = td.cone(y) & region & ~parent_bag
            if not added:
                continue
            for comp in connected_components(g, g.all_vertices & ~added):
                attach = open_neighborhood(g, comp) & parent_bag
                scope = comp | attach
                bag = td.bags[y] & scope
                if bag & comp:
                    if y in bags:
                        node = fresh[0]
                        fresh[0] += 1
                    else:
                        node = y
                    parent[node] = new_parent
                    bags[node] = bag
                    place(td.children(y), node, bag, scope)
                else:
                    place(td.children(y), new_parent, parent_bag, scope)

    place(td.children(root), root, td.bags[root], g.all_vertices)
    return TreeDecomposition(parent, bags)


# ============================================================================
# Construction
# ============================================================================

def default_q_target(k: int) -> int:
    section = config_cache.get_section("decomposition")
    return int(section.get("q_target_factor", 2)) * k + int(section.get("q_target_offset", 1))


def decomposition_q(g: Graph, td: TreeDecomposition, k: int) -> int:
    """Smallest q certifying td: adhesion sizes and per-bag unbreakability thresholds."""
    q = 0
    for x in td.nodes:
        q = max(q, popcount(td.adhesion(x)),
                unbreakability_threshold(g, td.bags[x], k, universe=td.cone(x)))
    return q


def build_decomposition(g: Graph, k: int, q_target: Optional[int] = None) -> Tuple[TreeDecomposition, int]:
    """
    Recursive splitter standing in for the randomized construction.

    A region with a separation of order at most k leaving more than q_target
    region vertices on both sides gets the bag adhesion + separator, and each
    component K of the rest becomes a child region K + (N(K) ∩ bag).

    Args:
        g: Graph
        k: Separation order
        q_target: Split threshold (config default 2k+1)

    Returns:
        Tuple of (regular decomposition, certified q)
    """
    target = default_q_target(k) if q_target is None else q_target
    parent: Dict[int, Optional[int]] = {}
    bags: Dict[int, VertexSet] = {}

    def split(region: VertexSet, adhesion: VertexSet, up: Optional[int]):
        node = len(parent)
        parent[node] = up
        report = is_unbreakable_set(g, region, target, k, universe=region)
        if not report.holds:
            left, right = report.violating_separation
            bag = adhesion | (left & right)
            pieces = []
            for comp in connected_components(g, g.all_vertices & ~(region & ~bag)):
                attach = open_neighborhood(g, comp) & bag
                pieces.append((comp | attach, attach))
            if all(scope != region for scope, _ in pieces):
                bags[node] = bag
                for scope, attach in pieces:
                    split(scope, attach, node)
                return
        bags[node] = region

    split(g.all_vertices, 0, None)
    td = make_regular(g, TreeDecomposition(parent, bags))
    q = decomposition_q(g, td, k)
    logger.info(f"Decomposition built | n={g.vertex_count} | k={k} | q_target={target} | "
                f"nodes={len(td.nodes)} | q={q}")
    return td, q


# ============================================================================
# File format
# ============================================================================

def parse_decomposition(text: str, g: Graph) -> TreeDecomposition:
    """
    Parse `t <count>` followed by `n <id> <parent|-> <bag ids...>` lines (1-based).

    Raises:
        GraphFormatError: on malformed lines
        DecompositionError: on structural problems (count, roots, cycles)
    """
    count: Optional[int] = None
    parent: Dict[int, Optional[int]] = {}
    bags: Dict[int, VertexSet] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == "t" and len(tokens) == 2:
                count = int(tokens[1])
            elif tokens[0] == "n" and len(tokens) >= 3:
                node = int(tokens[1]) - 1
                if node in parent:
                    raise GraphFormatError(number, f"duplicate node {node + 1}")
                parent[node] = None if tokens[2] == "-" else int(tokens[2]) - 1
                bag = 0
                for t in tokens[3:]:
                    v = int(t) - 1
                    if not 0 <= v < g.vertex_count:
                        raise GraphFormatError(number, f"vertex id {v + 1} out of range")
                    bag |= 1 << v
                bags[node] = bag
            else:
                raise GraphFormatError(number, f"malformed decomposition line {line!r}")
        except ValueError as e:
            if isinstance(e, GraphFormatError):
                raise
            raise GraphFormatError(number, "expected integer ids")
    if count is None:
        raise GraphFormatError(1, "missing 't <count>' line")
    if count != len(parent):
        raise DecompositionError(f"header announces {count} nodes, found {len(parent)}")
    return TreeDecomposition(parent, bags)


def serialize_decomposition(td: TreeDecomposition) -> str:
    lines = [f"t {len(td.nodes)}"]
    for x in td.nodes:
        p = td.parent[x]
        ids = " ".join(str(v + 1) for v in iter_members(td.bags[x]))
        lines.append(f"n {x + 1} {'-' if p is None else p + 1} {ids}".rstrip())
    return "\n".join(lines) + "\n"
