"""
Elimination forests of tree-structured deletion sets.

A deletion set S is tree-structured when there is a rooted forest labelled by S
such that every path between two members of S meets a vertex labelled by a
common ancestor. Node i of the forest carries vertex label[i]; parent[i] is -1
at roots.
"""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

from app.services.graph import (
    Graph,
    VertexSet,
    component_of,
    connected_components,
    iter_members,
    to_mask,
)


@dataclass(frozen=True)
class EliminationTree:
    parent: Tuple[int, ...]
    label: Tuple[int, ...]

    def __post_init__(self):
        if len(self.parent) != len(self.label):
            raise ValueError("parent and label must have equal length")
        if len(set(self.label)) != len(self.label):
            raise ValueError("labeling is not a bijection: repeated vertex")
        size = len(self.parent)
        for node, p in enumerate(self.parent):
            if not -1 <= p < size or p == node:
                raise ValueError(f"node {node} has invalid parent {p}")
        for node in range(size):
            seen = set()
            current = node
            while current != -1:
                if current in seen:
                    raise ValueError(f"parent map contains a cycle through node {node}")
                seen.add(current)
                current = self.parent[current]

    @classmethod
    def empty(cls) -> "EliminationTree":
        return cls((), ())

    @classmethod
    def from_parent_map(cls, parents: Mapping[int, Optional[int]]) -> "EliminationTree":
        """Build from vertex -> parent vertex (None for roots), nodes in ascending vertex order."""
        order = sorted(parents)
        index = {v: i for i, v in enumerate(order)}
        parent = []
        for v in order:
            p = parents[v]
            if p is not None and p not in index:
                raise ValueError(f"parent {p} of vertex {v} is not labelled")
            parent.append(-1 if p is None else index[p])
        return cls(tuple(parent), tuple(order))

    @property
    def vertices(self) -> VertexSet:
        return to_mask(self.label)

    def node_depths(self) -> List[int]:
        depths = [0] * len(self.parent)
        for node in range(len(self.parent)):
            depth, current = 0, node
            while current != -1:
                depth += 1
                current = self.parent[current]
            depths[node] = depth
        return depths

    @property
    def depth(self) -> int:
        return max(self.node_depths(), default=0)

    def parent_map(self) -> Dict[int, Optional[int]]:
        return {self.label[i]: (None if p == -1 else self.label[p]) for i, p in enumerate(self.parent)}

    def children(self, node: int) -> List[int]:
        return [i for i, p in enumerate(self.parent) if p == node]

    def roots(self) -> List[int]:
        return [i for i, p in enumerate(self.parent) if p == -1]


def validate_elimination_tree(g: Graph, et: EliminationTree) -> bool:
    """
    True iff every path between two labelled vertices meets a vertex labelled
    by a common ancestor.

    Checked by layer peeling: inside each component of the current graph all
    labelled vertices must descend from a single current root; that root is
    then removed and its children are checked in the same way.

    Raises:
        ValueError: if the labeling names vertices outside g
    """
    for v in et.label:
        if not 0 <= v < g.vertex_count:
            raise ValueError(f"labelled vertex {v} out of range")
    subtree: Dict[int, VertexSet] = {}

    def subtree_mask(node: int) -> VertexSet:
        if node not in subtree:
            mask = 1 << et.label[node]
            for child in et.children(node):
                mask |= subtree_mask(child)
            subtree[node] = mask
        return subtree[node]

    def peel(allowed: VertexSet, roots: List[int]) -> bool:
        owner: Dict[int, int] = {}
        for r in roots:
            comp = component_of(g, et.label[r], allowed)
            if comp in owner:
                return False
            if subtree_mask(r) & ~comp:
                return False
            owner[comp] = r
        for comp, r in owner.items():
            if not peel(comp & ~(1 << et.label[r]), et.children(r)):
                return False
        return True

    return peel(g.all_vertices, et.roots())


def elimination_tree_from_layers(g: Graph, layers: Mapping[int, int]) -> EliminationTree:
    """
    Build the elimination forest of a layered deletion set.

    layers maps each deleted vertex to its layer 1..k. In a valid layering every
    component of g minus the layers below i holds at most one layer-i vertex;
    the parent of a layer-j vertex is the layer-i vertex (largest i < j) in its
    component of g minus the layers below i.

    Raises:
        ValueError: if the layering is invalid
    """
    by_layer: Dict[int, VertexSet] = {}
    for v, layer in layers.items():
        if layer < 1:
            raise ValueError(f"vertex {v} has non-positive layer {layer}")
        by_layer[layer] = by_layer.get(layer, 0) | (1 << v)
    top = max(by_layer, default=0)
    below = [0] * (top + 2)
    for i in range(2, top + 2):
        below[i] = below[i - 1] | by_layer.get(i - 1, 0)
    for i in range(1, top + 1):
        for comp in connected_components(g, below[i]):
            if bin(comp & by_layer.get(i, 0)).count("1") > 1:
                raise ValueError(f"two layer-{i} vertices share a component")
    parents: Dict[int, Optional[int]] = {}
    for v, j in layers.items():
        parents[v] = None
        for i in range(j - 1, 0, -1):
            comp = component_of(g, v, g.all_vertices & ~below[i])
            hit = comp & by_layer.get(i, 0)
            if hit:
                parents[v] = next(iter_members(hit))
                break
    return EliminationTree.from_parent_map(parents)


def layers_of(et: EliminationTree) -> Dict[int, int]:
    """Vertex -> depth in the forest (roots at layer 1)."""
    return {et.label[i]: depth for i, depth in enumerate(et.node_depths())}
