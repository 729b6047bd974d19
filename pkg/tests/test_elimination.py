"""
Elimination forest tests.
"""

import pytest

from app.data.generate_graphs import generate_graph
from app.services.elimination import (
    EliminationTree,
    elimination_tree_from_layers,
    layers_of,
    validate_elimination_tree,
)
from app.services.graph import Graph, double_subdivide, is_connected, to_mask
from app.services.oracle import brute_treedepth


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


# ============================================================================
# 1. FOREST STRUCTURE
# ============================================================================

class TestEliminationTree:
    """Construction and measures."""

    def test_parent_map_round_trip(self):
        """Test from_parent_map keeps the vertex-level parents."""
        parents = {1: None, 0: 1, 2: 1}
        tree = EliminationTree.from_parent_map(parents)
        assert tree.parent_map() == parents
        assert tree.depth == 2
        assert tree.vertices == to_mask([0, 1, 2])

    def test_rejects_cycle(self):
        """Test a cyclic parent map is refused."""
        with pytest.raises(ValueError):
            EliminationTree((1, 0), (0, 1))

    def test_rejects_repeated_label(self):
        """Test labels must be distinct."""
        with pytest.raises(ValueError):
            EliminationTree((-1, 0), (3, 3))

    def test_empty_forest(self):
        """Test the empty forest has depth 0."""
        assert EliminationTree.empty().depth == 0


# ============================================================================
# 2. VALIDATION AND LAYERS
# ============================================================================

class TestValidation:
    """Tree-structure checks."""

    def test_middle_root_on_path(self):
        """Test the middle vertex of P3 as root above both ends is valid."""
        tree = EliminationTree.from_parent_map({1: None, 0: 1, 2: 1})
        assert validate_elimination_tree(path(3), tree)

    def test_two_roots_in_one_component(self):
        """Test two unrelated labels joined by an unlabelled path are invalid."""
        tree = EliminationTree.from_parent_map({0: None, 2: None})
        assert not validate_elimination_tree(path(3), tree)

    def test_siblings_must_be_separated(self):
        """Test siblings still connected below their parent are invalid."""
        tree = EliminationTree.from_parent_map({0: None, 1: 0, 2: 0})
        assert not validate_elimination_tree(path(3), tree)

    def test_out_of_range_label(self):
        """Test labels outside the graph raise."""
        with pytest.raises(ValueError):
            validate_elimination_tree(path(3), EliminationTree.from_parent_map({7: None}))

    def test_layers_round_trip(self):
        """Test layers_of and elimination_tree_from_layers agree on a valid forest."""
        g = path(7)
        tree = EliminationTree.from_parent_map({3: None, 1: 3, 5: 3, 0: 1, 2: 1, 4: 5, 6: 5})
        assert validate_elimination_tree(g, tree)
        rebuilt = elimination_tree_from_layers(g, layers_of(tree))
        assert rebuilt.parent_map() == tree.parent_map()

    def test_layers_reject_shared_component(self):
        """Test two layer-1 vertices in one component are refused."""
        with pytest.raises(ValueError):
            elimination_tree_from_layers(path(3), {0: 1, 2: 1})


# ============================================================================
# 3. TREEDEPTH
# ============================================================================

class TestTreedepth:
    """Treedepth as elimination distance to the empty graph."""

    def test_path_seven(self):
        """Test td(P7) = 3."""
        depth, tree = brute_treedepth(path(7))
        assert depth == 3
        assert validate_elimination_tree(path(7), tree)

    def test_cycle_four(self):
        """Test td(C4) = 3."""
        assert brute_treedepth(cycle(4))[0] == 3

    def test_double_subdivision_adds_one(self):
        """Test double subdivision raises treedepth by exactly one on small connected graphs."""
        graphs = [path(3), cycle(4), Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])]
        for seed in range(3):
            g = generate_graph("erdos_renyi", 5, p=0.5, seed=seed)
            if is_connected(g, g.all_vertices) and g.edge_count <= 5:
                graphs.append(g)
        for g in graphs:
            assert brute_treedepth(double_subdivide(g))[0] == brute_treedepth(g)[0] + 1
