"""
Bag graphs: a node's bag with child components contracted into d-gadgets.

A p-gadget is a 1-subdivided star: apex a, blue inner vertices b_1..b_p each
adjacent to a, and red outer vertices b'_1..b'_p with b'_i adjacent only to
b_i. All gadget vertices are exterior and forbidden. The apex is attached to
the gadget's plug set in the bag, so a gadget keeps its plug vertices in one
component and forces p dominators of that component's budget onto itself.

Bag graphs use compact ids: interior vertices first (ascending original id),
then each gadget's apex, inner and outer vertices.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple
import logging

from app.services.decomposition import TreeDecomposition, is_unbreakable_set
from app.services.domination import partial_domination, red_blue_dominating_set
from app.services.graph import (
    Graph,
    InvariantViolation,
    VertexSet,
    canonical_key,
    component_of,
    connected_components,
    iter_members,
    open_neighborhood,
    popcount,
    serialize_graph,
    subsets_up_to,
    to_mask,
)

logger = logging.getLogger("dcd_solver")


@dataclass(frozen=True)
class GadgetSpec:
    """
    Request for one gadget of `size` plugged to `plug` (original ids).

    kind is "child" for a contracted child component, "adhesion" for a gadget
    standing in for the world outside the cone, "dominator" for a fixed
    dominator's claim on its own component.
    """
    plug: VertexSet
    size: int
    kind: str = "child"
    node: Optional[int] = None
    contracted: VertexSet = 0


@dataclass(frozen=True)
class DGadget:
    apex: int
    inner: Tuple[int, ...]
    outer: Tuple[int, ...]
    plug_targets: VertexSet

    @property
    def vertices(self) -> VertexSet:
        return (1 << self.apex) | to_mask(self.inner) | to_mask(self.outer)

    @property
    def size(self) -> int:
        return len(self.inner)


@dataclass(frozen=True)
class BagGraph:
    graph: Graph
    interior: VertexSet
    exterior: VertexSet
    gadgets: Tuple[DGadget, ...]
    provenance: Tuple[GadgetSpec, ...]
    origin: Tuple[int, ...]
    q: int
    node: Optional[int] = None

    def to_compact(self, original: VertexSet) -> VertexSet:
        """Compact ids of the interior vertices among `original`."""
        return to_mask(i for i, v in enumerate(self.origin) if original >> v & 1)

    def to_original(self, compact: VertexSet) -> VertexSet:
        """Original ids of the interior members of a compact set."""
        return to_mask(self.origin[i] for i in iter_members(compact & self.interior))

    def gadget_colors(self) -> Tuple[VertexSet, VertexSet, VertexSet]:
        """(forbidden, red, blue) of the gadget vertices."""
        red = blue = 0
        for gadget in self.gadgets:
            blue |= to_mask(gadget.inner)
            red |= to_mask(gadget.outer)
        return self.exterior, red, blue


@dataclass(frozen=True)
class BagSkeletonSolution:
    deleted: VertexSet
    component_dominators: Tuple[Tuple[VertexSet, VertexSet], ...]
    skeleton: VertexSet = 0
    route: str = "brute"


@dataclass(frozen=True)
class VolumeReport:
    total: int
    bound: int
    holds: bool


# ============================================================================
# Construction
# ============================================================================

def assemble_bag_graph(g: Graph, interior: VertexSet, gadgets: Sequence[GadgetSpec],
                       q: int, node: Optional[int] = None) -> BagGraph:
    """
    g[interior] plus the requested gadgets, relabelled to compact ids.

    Raises:
        ValueError: if a gadget plug leaves the interior
    """
    origin = tuple(iter_members(interior))
    index = {v: i for i, v in enumerate(origin)}
    adjacency: List[int] = []
    for v in origin:
        adjacency.append(to_mask(index[u] for u in iter_members(g.adjacency[v] & interior)))
    built: List[DGadget] = []
    for spec in gadgets:
        if spec.plug & ~interior:
            raise ValueError(f"gadget plug {sorted(iter_members(spec.plug))} is not inside the bag")
        if spec.size < 0:
            raise ValueError("gadget size must be non-negative")
        apex = len(adjacency)
        inner = tuple(range(apex + 1, apex + 1 + spec.size))
        outer = tuple(range(apex + 1 + spec.size, apex + 1 + 2 * spec.size))
        plug = to_mask(index[v] for v in iter_members(spec.plug))
        adjacency.append(plug | to_mask(inner))
        adjacency.extend(1 << apex | 1 << b_out for b_out in outer)
        adjacency.extend(1 << b_in for b_in in inner)
        for v in iter_members(plug):
            adjacency[v] |= 1 << apex
        built.append(DGadget(apex, inner, outer, plug))
    m = len(origin)
    graph = Graph(len(adjacency), tuple(adjacency))
    return BagGraph(
        graph=graph,
        interior=(1 << m) - 1,
        exterior=graph.all_vertices & ~((1 << m) - 1),
        gadgets=tuple(built),
        provenance=tuple(gadgets),
        origin=origin,
        q=q,
        node=node,
    )


def child_parts_from_cone(g: Graph, td: TreeDecomposition, x: int, s: VertexSet, size: int) -> List[GadgetSpec]:
    """
    Components of component(y) - s touching adhesion(y) - s, for every child y,
    each as a `size`-gadget plugged to its neighbours in bag(x) - s.
    """
    parts: List[GadgetSpec] = []
    for y in td.children(x):
        region = td.component(y) & ~s
        attach = td.adhesion(y) & ~s
        for comp in connected_components(g, g.all_vertices & ~region):
            plug = open_neighborhood(g, comp) & attach
            if plug:
                parts.append(GadgetSpec(plug, size, "child", y, comp))
    return parts


def build_bag_graph(g: Graph, td: TreeDecomposition, x: int, s: VertexSet,
                    child_parts: Sequence[GadgetSpec], extra_gadgets: Sequence[GadgetSpec] = (),
                    q: int = 0) -> BagGraph:
    """
    Bag graph of node x after deleting s.

    Args:
        g: Graph
        td: Tree decomposition
        x: Node id
        s: Deleted vertices inside cone(x)
        child_parts: One gadget per contracted child component
        extra_gadgets: Gadgets plugged to adhesion(x) or to fixed dominators
        q: Unbreakability parameter carried by the result

    Raises:
        ValueError: if s leaves the cone or a child part does not attach
            through its child's adhesion
    """
    if s & ~td.cone(x):
        raise ValueError("deleted set leaves the cone of the node")
    for part in child_parts:
        if part.node is not None and part.plug & ~td.adhesion(part.node):
            raise ValueError(f"part of child {part.node} plugs outside its adhesion")
    return assemble_bag_graph(g, td.bags[x] & ~s, list(child_parts) + list(extra_gadgets), q, x)


def full_bag_graphs(g: Graph, td: TreeDecomposition, q: int, d: int) -> List[BagGraph]:
    """Every node's bag graph with full-size child gadgets and one d-gadget per adhesion vertex."""
    graphs = []
    for x in td.nodes:
        parts = child_parts_from_cone(g, td, x, 0, d)
        extras = [GadgetSpec(1 << v, d, "adhesion") for v in iter_members(td.adhesion(x))]
        graphs.append(build_bag_graph(g, td, x, 0, parts, extras, q))
    return graphs


def bag_graph_volume(g: Graph, td: TreeDecomposition, q: int, d: int) -> VolumeReport:
    """Summed size of the full bag graphs against (4d+5)·q·|G|."""
    total = sum(bg.graph.vertex_count for bg in full_bag_graphs(g, td, q, d))
    bound = (4 * d + 5) * max(q, 1) * g.vertex_count
    return VolumeReport(total=total, bound=bound, holds=total <= bound)


def bag_graph_violations(bg: BagGraph, k: int) -> List[str]:
    """Structural checks: exterior pieces are single small gadgets and the interior is unbreakable."""
    problems = []
    g = bg.graph
    for comp in connected_components(g, ~bg.exterior & g.all_vertices):
        touched = [gad for gad in bg.gadgets if gad.vertices & comp]
        if len(touched) != 1 or touched[0].vertices != comp:
            problems.append("exterior component is not a single gadget")
            continue
        if popcount(open_neighborhood(g, comp) & bg.interior) > bg.q:
            problems.append("gadget has more than q interior neighbours")
    report = is_unbreakable_set(g, bg.interior, bg.q, k, separator_pool=bg.interior)
    if not report.holds:
        problems.append("interior is breakable by an interior separator")
    return problems


def dump_bag_graph(bg: BagGraph) -> str:
    """Graph text form with an `# interior:` line listing interior ids (1-based)."""
    interior = " ".join(str(v + 1) for v in iter_members(bg.interior))
    origin = " ".join(str(v + 1) for v in bg.origin)
    return serialize_graph(bg.graph, [f"interior: {interior}", f"origin: {origin}"])


# ============================================================================
# Saturation
# ============================================================================

def _exterior_reach(bg: BagGraph, start: VertexSet, removed: VertexSet) -> VertexSet:
    """Exterior vertices reachable from `start` through exterior vertices."""
    ext = bg.exterior & ~removed
    seen = start & ext
    frontier = seen
    while frontier:
        reach = 0
        for v in iter_members(frontier):
            reach |= bg.graph.adjacency[v]
        frontier = reach & ext & ~seen
        seen |= frontier
    return seen


def _interior_neighbors(bg: BagGraph, s: VertexSet, removed: VertexSet) -> VertexSet:
    mask = 0
    for v in iter_members(s):
        mask |= bg.graph.adjacency[v]
    return mask & bg.interior & ~removed


def close_set(bg: BagGraph, u: int, removed: VertexSet = 0) -> VertexSet:
    """Interior vertices other than u that are adjacent to u or linked to it through exterior vertices."""
    adjacent = bg.graph.adjacency[u] & ~removed
    via = _exterior_reach(bg, adjacent, removed)
    return (adjacent | _interior_neighbors(bg, via, removed)) & bg.interior & ~(1 << u)


def saturate(bg: BagGraph, u: int, q: int, removed: VertexSet = 0) -> VertexSet:
    """
    {u} plus its close set when that set has at most q members, else {u}.

    Raises:
        ValueError: if u is not a live interior vertex
    """
    if not (bg.interior & ~removed) >> u & 1:
        raise ValueError(f"saturation vertex {u} is not interior")
    close = close_set(bg, u, removed)
    return (1 << u) | close if popcount(close) <= q else 1 << u


def _saturate_exterior(bg: BagGraph, e: int, q: int, removed: VertexSet) -> VertexSet:
    reach = _exterior_reach(bg, 1 << e, removed)
    around = _interior_neighbors(bg, reach, removed)
    return (1 << e) | around if popcount(around) <= q else 1 << e


def saturate_power(bg: BagGraph, xs: VertexSet, q: int, i: int, removed: VertexSet = 0) -> VertexSet:
    """Apply the q-saturation operator i times to xs."""
    if i < 1:
        raise ValueError("saturation power must be at least 1")
    current = xs
    for _ in range(i):
        nxt = current
        for v in iter_members(current):
            if bg.interior >> v & 1:
                nxt |= saturate(bg, v, q, removed)
            else:
                nxt |= _saturate_exterior(bg, v, q, removed)
        if nxt == current:
            break
        current = nxt
    return current


# ============================================================================
# Annotated Dominated Cluster Deletion on bag graphs
# ============================================================================

class _BagSolver:
    """Shared state of one solve: colors, budgets and memoized skeleton families."""

    def __init__(self, bg: BagGraph, forbidden: VertexSet, red: VertexSet, blue: VertexSet, d: int):
        self.bg = bg
        self.g = bg.graph
        self.forbidden = forbidden
        self.red = red
        self.blue = blue
        self.d = d
        self.q = bg.q
        self._families: Dict[Tuple[VertexSet, int], frozenset] = {}

    def dominated(self, comp: VertexSet) -> Optional[VertexSet]:
        return red_blue_dominating_set(self.g, self.red & comp, self.blue & comp, self.d)

    def min_deletion(self, comp: VertexSet, budget: int) -> Optional[VertexSet]:
        """Fewest non-forbidden deletions inside comp leaving every piece dominated."""
        pool = comp & ~self.forbidden
        for s in subsets_up_to(pool, budget):
            rest = comp & ~s
            pieces = connected_components(self.g, self.g.all_vertices & ~rest)
            if all(self.dominated(p) is not None for p in pieces):
                return s
        return None

    def brute(self, alive: VertexSet, budget: int) -> Optional[VertexSet]:
        deleted = 0
        for comp in connected_components(self.g, self.g.all_vertices & ~alive):
            s = self.min_deletion(comp, budget - popcount(deleted))
            if s is None:
                return None
            deleted |= s
        return deleted

    def dominator_bound(self, alive: VertexSet, budget: int) -> int:
        exterior_red = popcount(self.bg.exterior & self.red & alive)
        return max(3 * self.q * self.d, self.q + exterior_red + self.d + budget)

    def family(self, alive: VertexSet, budget: int) -> frozenset:
        """Candidate skeletons: branch on the saturated dominating set, k times."""
        key = (alive, budget)
        if key in self._families:
            return self._families[key]
        if budget == 0:
            result = frozenset({0})
        else:
            x = red_blue_dominating_set(self.g, self.red & alive, self.blue & alive,
                                        self.dominator_bound(alive, budget))
            if x is None:
                result = frozenset()
            else:
                removed = self.g.all_vertices & ~alive
                sat = saturate_power(self.bg, x, self.q, max(self.q, 1), removed)
                found = set(self.family(alive, budget - 1))
                for v in iter_members(sat & self.bg.interior & alive & ~self.forbidden):
                    for s in self.family(alive & ~(1 << v), budget - 1):
                        found.add(s | (1 << v))
                result = frozenset(found)
        self._families[key] = result
        return result

    def extend(self, alive: VertexSet, skeleton: VertexSet, budget: int) -> Optional[VertexSet]:
        """Small side by per-component brute force, large component by partial domination."""
        rest = alive & ~skeleton
        comps = connected_components(self.g, self.g.all_vertices & ~rest)
        large = [c for c in comps if popcount(c & self.bg.interior) > self.q]
        if len(large) > 1:
            return None
        left = budget - popcount(skeleton)
        deleted = skeleton
        for comp in comps:
            if large and comp == large[0]:
                continue
            s = self.min_deletion(comp, left)
            if s is None:
                return None
            left -= popcount(s)
            deleted |= s
        if large:
            c0 = large[0]
            apd = partial_domination(self.g, self.forbidden & c0, self.red & c0, self.blue & c0, left, self.d)
            if apd is None:
                return None
            deleted |= apd.deleted
        return deleted


def bag_skeleton_family(bg: BagGraph, forbidden: VertexSet, red: VertexSet, blue: VertexSet,
                        d: int, budget: int) -> List[VertexSet]:
    """Candidate skeletons of at most `budget` interior vertices of bg, in canonical order."""
    solver = _BagSolver(bg, forbidden, red, blue, d)
    return sorted(solver.family(bg.graph.all_vertices, budget), key=canonical_key)


def solve_adcd_on_bag_graph(bg: BagGraph, forbidden: VertexSet, red: VertexSet, blue: VertexSet,
                            k: int, d: int) -> Optional[BagSkeletonSolution]:
    """
    Annotated Dominated Cluster Deletion on a bag graph.

    Reds without a blue vertex in reach are deleted first. Small interiors are
    solved by per-component brute force; otherwise candidate skeletons come from
    branching on the q-saturation of a red-blue dominating set, and each
    candidate (in canonical order) is extended on the small side and by
    partial domination on the large component.

    Args:
        bg: Bag graph
        forbidden, red, blue: Colors in compact ids; exterior must be forbidden
        k: Deletion budget
        d: Dominators per component

    Returns:
        BagSkeletonSolution or None for a no-instance

    Raises:
        ValueError: if an exterior vertex is not forbidden
    """
    if bg.exterior & ~forbidden:
        raise ValueError("exterior vertices must be forbidden")
    g = bg.graph
    if k < 0:
        return None
    solver = _BagSolver(bg, forbidden, red, blue, d)
    forced = 0
    for v in iter_members(red):
        if not (g.adjacency[v] | (1 << v)) & blue:
            forced |= 1 << v
    if forced & forbidden or popcount(forced) > k:
        return None
    alive = g.all_vertices & ~forced
    budget = k - popcount(forced)

    route = "brute"
    skeleton = 0
    if popcount(bg.interior & alive) < 3 * bg.q + 1:
        extra = solver.brute(alive, budget)
    else:
        route = "skeleton"
        extra = None
        for candidate in sorted(solver.family(alive, budget), key=canonical_key):
            extra = solver.extend(alive, candidate, budget)
            if extra is not None:
                skeleton = candidate
                break
    if extra is None:
        logger.debug(f"Bag solve | node={bg.node} | route={route} | k={k} | d={d} | verdict=no")
        return None

    deleted = forced | extra
    doms = []
    for comp in connected_components(g, deleted):
        dom = solver.dominated(comp)
        if dom is None:
            raise InvariantViolation("bag-graph solution leaves an undominated component")
        doms.append((comp, dom))
    if popcount(deleted) > k or deleted & forbidden:
        raise InvariantViolation("bag-graph solution breaks the deletion budget")
    logger.debug(f"Bag solve | node={bg.node} | route={route} | k={k} | d={d} | deleted={popcount(deleted)}")
    return BagSkeletonSolution(deleted, tuple(doms), skeleton, route)
