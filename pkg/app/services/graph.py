"""
Graph core: immutable graphs, bitmask vertex sets, text formats and statistics.

Vertex sets are plain Python integers used as bit vectors (bit v set means
vertex v is a member). Every enumeration walks ids in ascending order, which
keeps all solvers deterministic.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Tuple
import logging

logger = logging.getLogger("dcd_solver")

VertexSet = int


class GraphFormatError(ValueError):
    """Malformed graph, annotation or decomposition text."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class InvariantViolation(RuntimeError):
    """An internal algorithmic invariant failed; indicates a bug, not bad input."""


# ============================================================================
# Vertex set helpers
# ============================================================================

def to_mask(vertices: Iterable[int]) -> VertexSet:
    """Build a vertex set from an iterable of ids."""
    mask = 0
    for v in vertices:
        mask |= 1 << v
    return mask


def iter_members(mask: VertexSet) -> Iterator[int]:
    """Yield member ids in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def members(mask: VertexSet) -> List[int]:
    return list(iter_members(mask))


def popcount(mask: VertexSet) -> int:
    return bin(mask).count("1")


def lowest(mask: VertexSet) -> int:
    """Smallest member id; mask must be non-empty."""
    return (mask & -mask).bit_length() - 1


def subsets_up_to(pool: VertexSet, size: int) -> Iterator[VertexSet]:
    """
    Enumerate subsets of pool with at most `size` members.

    Order: ascending cardinality, then lexicographic on sorted member ids.
    """
    from itertools import combinations

    ids = members(pool)
    for r in range(0, min(size, len(ids)) + 1):
        for combo in combinations(ids, r):
            yield to_mask(combo)


def canonical_key(mask: VertexSet) -> Tuple[int, Tuple[int, ...]]:
    """Sort key giving (size, lexicographic) order of vertex sets."""
    ids = tuple(iter_members(mask))
    return (len(ids), ids)


# ============================================================================
# Graph
# ============================================================================

@dataclass(frozen=True)
class Graph:
    """
    Immutable simple undirected graph on vertices 0..vertex_count-1.

    adjacency[v] is the bitmask of neighbours of v.
    """
    vertex_count: int
    adjacency: Tuple[int, ...]

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        """
        Build a graph from an edge list.

        Raises:
            ValueError: on self-loops, duplicate edges or out-of-range ids
        """
        adjacency = [0] * vertex_count
        for u, v in edges:
            if not (0 <= u < vertex_count and 0 <= v < vertex_count):
                raise ValueError(f"vertex id out of range in edge ({u}, {v})")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if adjacency[u] >> v & 1:
                raise ValueError(f"duplicate edge ({u}, {v})")
            adjacency[u] |= 1 << v
            adjacency[v] |= 1 << u
        return cls(vertex_count, tuple(adjacency))

    @property
    def all_vertices(self) -> VertexSet:
        return (1 << self.vertex_count) - 1

    @property
    def edges(self) -> List[Tuple[int, int]]:
        """Edges (u, v) with u < v, sorted."""
        result = []
        for u in range(self.vertex_count):
            for v in iter_members(self.adjacency[u] >> (u + 1) << (u + 1)):
                result.append((u, v))
        return result

    @property
    def edge_count(self) -> int:
        return sum(popcount(a) for a in self.adjacency) // 2

    def neighbors(self, v: int) -> VertexSet:
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u] >> v & 1)

    def degree(self, v: int, removed: VertexSet = 0) -> int:
        return popcount(self.adjacency[v] & ~removed)

    def induced(self, vertices: VertexSet) -> Tuple["Graph", Tuple[int, ...]]:
        """
        Induced subgraph relabelled to 0..|vertices|-1.

        Returns:
            Tuple of (subgraph, origin) where origin[i] is the original id of new vertex i
        """
        origin = tuple(iter_members(vertices))
        index = {v: i for i, v in enumerate(origin)}
        adjacency = []
        for v in origin:
            adjacency.append(to_mask(index[u] for u in iter_members(self.adjacency[v] & vertices)))
        return Graph(len(origin), tuple(adjacency)), origin


@dataclass(frozen=True)
class AnnotatedInstance:
    """Graph with forbidden (F), red (R) and blue (B) sets and budgets k, d."""
    graph: Graph
    forbidden: VertexSet
    red: VertexSet
    blue: VertexSet
    k: int
    d: int

    def __post_init__(self):
        universe = self.graph.all_vertices
        for name in ("forbidden", "red", "blue"):
            if getattr(self, name) & ~universe:
                raise ValueError(f"{name} set contains vertices outside the graph")
        if self.k < 0 or self.d < 0:
            raise ValueError("budgets k and d must be non-negative")

    @classmethod
    def plain(cls, graph: Graph, k: int, d: int) -> "AnnotatedInstance":
        """Unannotated instance: F = empty, R = B = V."""
        return cls(graph, 0, graph.all_vertices, graph.all_vertices, k, d)

    def with_budgets(self, k: int, d: Optional[int] = None) -> "AnnotatedInstance":
        return AnnotatedInstance(self.graph, self.forbidden, self.red, self.blue,
                                 k, self.d if d is None else d)


@dataclass(frozen=True)
class GraphStats:
    max_degree: int
    degeneracy: int


# ============================================================================
# Elementary operations
# ============================================================================

def component_of(g: Graph, v: int, allowed: VertexSet) -> VertexSet:
    """Vertex set of the component containing v inside g[allowed]."""
    seen = 1 << v
    frontier = seen
    while frontier:
        reach = 0
        for u in iter_members(frontier):
            reach |= g.adjacency[u]
        frontier = reach & allowed & ~seen
        seen |= frontier
    return seen


def connected_components(g: Graph, removed: VertexSet = 0) -> List[VertexSet]:
    """
    Components of g - removed, ordered by minimum vertex id.

    Args:
        g: Graph
        removed: Vertices treated as deleted

    Returns:
        List of vertex sets partitioning V(g) minus removed
    """
    remaining = g.all_vertices & ~removed
    components = []
    while remaining:
        comp = component_of(g, lowest(remaining), remaining)
        components.append(comp)
        remaining &= ~comp
    return components


def is_connected(g: Graph, vertices: VertexSet) -> bool:
    if not vertices:
        return True
    return component_of(g, lowest(vertices), vertices) == vertices


def closed_neighborhood(g: Graph, s: VertexSet) -> VertexSet:
    """N[s]: s together with all neighbours of s."""
    result = s
    for v in iter_members(s):
        result |= g.adjacency[v]
    return result


def open_neighborhood(g: Graph, s: VertexSet) -> VertexSet:
    """N(s) minus s."""
    return closed_neighborhood(g, s) & ~s


def double_subdivide(g: Graph) -> Graph:
    """
    Replace every edge uv by two internally disjoint paths u-x-v and u-y-v.

    Original ids are kept as a prefix; the two subdivision vertices of the
    i-th sorted edge get ids n+2i and n+2i+1.
    """
    n = g.vertex_count
    edges = []
    for i, (u, v) in enumerate(g.edges):
        for mid in (n + 2 * i, n + 2 * i + 1):
            edges.append((u, mid))
            edges.append((mid, v))
    return Graph.from_edges(n + 2 * g.edge_count, edges)


def graph_stats(g: Graph) -> GraphStats:
    """
    Maximum degree and degeneracy (minimum-degree peeling).
    """
    max_degree = max((popcount(a) for a in g.adjacency), default=0)
    removed = 0
    degeneracy = 0
    for _ in range(g.vertex_count):
        best, best_deg = -1, -1
        for v in iter_members(g.all_vertices & ~removed):
            deg = g.degree(v, removed)
            if best < 0 or deg < best_deg:
                best, best_deg = v, deg
        degeneracy = max(degeneracy, best_deg)
        removed |= 1 << best
    return GraphStats(max_degree=max_degree, degeneracy=degeneracy)


# ============================================================================
# Text formats
# ============================================================================

def _content_lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line.split()


def _parse_id(token: str, n: int, line: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise GraphFormatError(line, f"invalid vertex id {token!r}")
    if not 1 <= value <= n:
        raise GraphFormatError(line, f"vertex id {value} out of range 1..{n}")
    return value - 1


def parse_graph(text: str) -> Graph:
    """
    Parse the line-oriented graph format.

    Format: header `p <n> <m>`, then m lines `e <u> <v>` (1-based ids);
    `#` starts a comment.

    Raises:
        GraphFormatError: with the offending line number
    """
    n: Optional[int] = None
    m = 0
    header_line = 0
    edges: List[Tuple[int, int]] = []
    seen: Dict[Tuple[int, int], int] = {}
    for number, tokens in _content_lines(text):
        if tokens[0] == "p":
            if n is not None:
                raise GraphFormatError(number, "duplicate header")
            if len(tokens) != 3:
                raise GraphFormatError(number, "malformed header, expected 'p <n> <m>'")
            try:
                n, m = int(tokens[1]), int(tokens[2])
            except ValueError:
                raise GraphFormatError(number, "malformed header, expected integers")
            if n < 0 or m < 0:
                raise GraphFormatError(number, "malformed header, negative count")
            header_line = number
        elif tokens[0] == "e":
            if n is None:
                raise GraphFormatError(number, "edge before header")
            if len(tokens) != 3:
                raise GraphFormatError(number, "malformed edge, expected 'e <u> <v>'")
            u = _parse_id(tokens[1], n, number)
            v = _parse_id(tokens[2], n, number)
            if u == v:
                raise GraphFormatError(number, f"self-loop at vertex {u + 1}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(number, f"duplicate edge {u + 1} {v + 1} (first on line {seen[key]})")
            seen[key] = number
            edges.append(key)
        else:
            raise GraphFormatError(number, f"unknown line type {tokens[0]!r}")
    if n is None:
        raise GraphFormatError(max(header_line, 1), "missing header 'p <n> <m>'")
    if len(edges) != m:
        raise GraphFormatError(header_line, f"header announces {m} edges, found {len(edges)}")
    return Graph.from_edges(n, edges)


def serialize_graph(g: Graph, comments: Iterable[str] = ()) -> str:
    """Canonical text form; parse_graph(serialize_graph(g)) == g."""
    lines = [f"# {c}" for c in comments]
    lines.append(f"p {g.vertex_count} {g.edge_count}")
    lines.extend(f"e {u + 1} {v + 1}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def parse_annotations(text: str, g: Graph) -> Tuple[VertexSet, VertexSet, VertexSet]:
    """
    Parse F/R/B annotation lines.

    An absent F line means the empty set; absent R or B means all vertices.

    Returns:
        Tuple of (forbidden, red, blue)
    """
    found: Dict[str, VertexSet] = {}
    for number, tokens in _content_lines(text):
        kind = tokens[0]
        if kind not in ("F", "R", "B"):
            raise GraphFormatError(number, f"unknown annotation {kind!r}, expected F, R or B")
        if kind in found:
            raise GraphFormatError(number, f"duplicate {kind} line")
        found[kind] = to_mask(_parse_id(t, g.vertex_count, number) for t in tokens[1:])
    return (found.get("F", 0),
            found.get("R", g.all_vertices),
            found.get("B", g.all_vertices))


def serialize_annotations(forbidden: VertexSet, red: VertexSet, blue: VertexSet) -> str:
    lines = []
    for kind, mask in (("F", forbidden), ("R", red), ("B", blue)):
        ids = " ".join(str(v + 1) for v in iter_members(mask))
        lines.append(f"{kind} {ids}".rstrip())
    return "\n".join(lines) + "\n"
