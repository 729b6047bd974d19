"""
Seeded generator and corpus file tests.
"""

import os

import networkx as nx
import pytest

from app.data.generate_graphs import (
    FAMILIES,
    corpus_instances,
    disjoint_union,
    generate_graph,
    main,
    make_rng,
    random_annotations,
    write_corpus,
)
from app.services.graph import parse_annotations, parse_graph, popcount

SMALL_CORPUS = {
    "seed": 11,
    "families": [
        {"name": "erdos_renyi", "sizes": [5, 6], "edge_probabilities": [0.3], "repeats": 2},
        {"name": "cycle", "sizes": [4]},
    ],
    "annotations": {"random": True},
}


class TestGenerators:
    """Graph families."""

    @pytest.mark.parametrize("family", FAMILIES)
    def test_every_family_builds(self, family):
        """Test each family yields a graph with at least one vertex."""
        assert generate_graph(family, 4, seed=3).vertex_count >= 4

    def test_seeded_draws_repeat(self):
        """Test identical seed and spawn key give identical graphs and annotations."""
        a = generate_graph("erdos_renyi", 12, p=0.4, seed=5, spawn_key=(1, 2))
        b = generate_graph("erdos_renyi", 12, p=0.4, seed=5, spawn_key=(1, 2))
        assert a == b
        assert random_annotations(a, make_rng(5, (9,))) == random_annotations(b, make_rng(5, (9,)))

    def test_spawn_keys_differ(self):
        """Test different spawn keys give independent graphs."""
        graphs = {generate_graph("erdos_renyi", 12, p=0.5, seed=5, spawn_key=(i,)) for i in range(4)}
        assert len(graphs) > 1

    def test_family_shapes(self):
        """Test sizes against networkx counts."""
        assert generate_graph("cycle", 6).edge_count == 6
        assert generate_graph("star", 5).edge_count == 4
        assert generate_graph("clique", 5).edge_count == nx.complete_graph(5).number_of_edges()
        assert generate_graph("subdivided_clique", 4).vertex_count == 4 + 6
        assert generate_graph("double_subdivided_clique", 4).vertex_count == 4 + 2 * 6
        assert generate_graph("half-graph", 3).edge_count == 3
        assert generate_graph("crown", 3).edge_count == 6

    def test_bad_requests(self):
        """Test unknown families and bad sizes raise."""
        with pytest.raises(ValueError):
            generate_graph("petersen", 5)
        with pytest.raises(ValueError):
            generate_graph("path", 0)
        with pytest.raises(ValueError):
            generate_graph("cycle", 2)

    def test_disjoint_union(self):
        """Test disjoint union offsets ids."""
        g = disjoint_union([generate_graph("path", 2), generate_graph("path", 3)])
        assert g.vertex_count == 5
        assert g.edges == [(0, 1), (2, 3), (3, 4)]

    def test_annotation_extremes(self):
        """Test probability 0 and 1 give empty and full sets."""
        g = generate_graph("path", 6)
        forbidden, red, blue = random_annotations(g, make_rng(0), 0.0, 1.0, 1.0)
        assert forbidden == 0
        assert red == blue == g.all_vertices


class TestCorpus:
    """Corpus enumeration and files."""

    def test_instances_in_config_order(self):
        """Test names, counts and annotations of a small corpus."""
        items = list(corpus_instances(SMALL_CORPUS))
        assert [i.name for i in items] == [
            "erdos_renyi_n5_p30_r0", "erdos_renyi_n5_p30_r1",
            "erdos_renyi_n6_p30_r0", "erdos_renyi_n6_p30_r1",
            "cycle_n4_r0",
        ]
        assert items[0].spawn_key == (0, 0, 0, 0)
        assert items[-1].spawn_key == (1, 0, 0, 0)
        assert all(popcount(i.red) <= i.n for i in items)

    def test_corpus_is_reproducible(self):
        """Test two enumerations give identical instances."""
        assert list(corpus_instances(SMALL_CORPUS)) == list(corpus_instances(SMALL_CORPUS))

    def test_write_corpus(self, tmp_path):
        """Test written files parse back to the generated instances."""
        paths = write_corpus(str(tmp_path), SMALL_CORPUS)
        items = list(corpus_instances(SMALL_CORPUS))
        assert len(paths) == len(items)
        for path, item in zip(paths, items):
            with open(path) as f:
                g = parse_graph(f.read())
            assert g == item.graph
            with open(path[:-3] + ".ann") as f:
                assert parse_annotations(f.read(), g) == (item.forbidden, item.red, item.blue)

    def test_main_writes_default_corpus(self, tmp_path):
        """Test the module entry point writes .gr and .ann pairs."""
        main(["--out", str(tmp_path), "--seed", "3"])
        names = os.listdir(tmp_path)
        assert any(n.endswith(".gr") for n in names)
        assert sum(n.endswith(".gr") for n in names) == sum(n.endswith(".ann") for n in names)
