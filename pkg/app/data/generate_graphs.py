#!/usr/bin/env python3
"""
Seeded graph and annotation generators for tests, the corpus runner and the CLI.

Every random draw comes from a numpy Generator built on a SeedSequence, so an
instance is reproduced from (seed, spawn key) alone.

Usage:
    python -m app.data.generate_graphs                 # default corpus into data/graphs
    python -m app.data.generate_graphs --out dir --seed 7
"""

import argparse
import os
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from app.cache import config_cache
from app.services.graph import (
    AnnotatedInstance,
    Graph,
    VertexSet,
    double_subdivide,
    serialize_annotations,
    serialize_graph,
    to_mask,
)

FAMILIES = (
    "erdos_renyi",
    "path",
    "cycle",
    "clique",
    "star",
    "half_graph",
    "crown",
    "subdivided_clique",
    "double_subdivided_clique",
)


def make_rng(seed: int, spawn_key: Sequence[int] = ()) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(spawn_key)))


def _from_nx(nxg: nx.Graph) -> Graph:
    nxg = nx.convert_node_labels_to_integers(nxg, ordering="sorted")
    return Graph.from_edges(nxg.number_of_nodes(), nxg.edges())


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    """G(n,p): one uniform draw per vertex pair, pairs in lexicographic order."""
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def half_graph(n: int) -> Graph:
    """a_1..a_n, b_1..b_n with a_i b_j adjacent iff i > j; ids a_i = i-1, b_j = n+j-1."""
    return Graph.from_edges(2 * n, [(i, n + j) for i in range(n) for j in range(i)])


def crown(n: int) -> Graph:
    """K_{n,n} minus a perfect matching."""
    return Graph.from_edges(2 * n, [(i, n + j) for i in range(n) for j in range(n) if i != j])


def subdivided_clique(n: int) -> Graph:
    """K_n with every edge subdivided once; the subdivision vertices follow the n originals."""
    return _subdivide(nx.complete_graph(n))


def _subdivide(nxg: nx.Graph) -> Graph:
    n = nxg.number_of_nodes()
    edges = []
    for offset, (u, v) in enumerate(sorted(nxg.edges())):
        mid = n + offset
        edges.extend([(u, mid), (mid, v)])
    return Graph.from_edges(n + nxg.number_of_edges(), edges)


def disjoint_union(graphs: Sequence[Graph]) -> Graph:
    edges: List[Tuple[int, int]] = []
    offset = 0
    for g in graphs:
        edges.extend((u + offset, v + offset) for u, v in g.edges)
        offset += g.vertex_count
    return Graph.from_edges(offset, edges)


def generate_graph(family: str, n: int, *, p: float = 0.3, seed: int = 0,
                   spawn_key: Sequence[int] = ()) -> Graph:
    """
    Build one graph of a family.

    Args:
        family: One of FAMILIES (dashes are accepted for underscores)
        n: Size parameter (vertices, or side length for bipartite families)
        p: Edge probability for erdos_renyi
        seed: SeedSequence entropy
        spawn_key: SeedSequence spawn key

    Returns:
        Graph

    Raises:
        ValueError: for an unknown family or a non-positive size
    """
    family = family.replace("-", "_")
    if n <= 0:
        raise ValueError("family size must be positive")
    if family == "erdos_renyi":
        return erdos_renyi(n, p, make_rng(seed, spawn_key))
    if family == "path":
        return _from_nx(nx.path_graph(n))
    if family == "cycle":
        if n < 3:
            raise ValueError("a cycle needs at least 3 vertices")
        return _from_nx(nx.cycle_graph(n))
    if family == "clique":
        return _from_nx(nx.complete_graph(n))
    if family == "star":
        return _from_nx(nx.star_graph(n - 1))
    if family == "half_graph":
        return half_graph(n)
    if family == "crown":
        return crown(n)
    if family == "subdivided_clique":
        return subdivided_clique(n)
    if family == "double_subdivided_clique":
        return double_subdivide(_from_nx(nx.complete_graph(n)))
    raise ValueError(f"unknown family {family!r}, expected one of {FAMILIES}")


def random_annotations(g: Graph, rng: np.random.Generator, forbidden_probability: float = 0.15,
                       red_probability: float = 0.8, blue_probability: float = 0.8
                       ) -> Tuple[VertexSet, VertexSet, VertexSet]:
    """Independent F/R/B draws per vertex, in that order."""
    n = g.vertex_count
    draws = rng.random((3, n))
    forbidden = to_mask(np.flatnonzero(draws[0] < forbidden_probability).tolist())
    red = to_mask(np.flatnonzero(draws[1] < red_probability).tolist())
    blue = to_mask(np.flatnonzero(draws[2] < blue_probability).tolist())
    return forbidden, red, blue


@dataclass(frozen=True)
class CorpusInstance:
    name: str
    family: str
    n: int
    p: Optional[float]
    seed: int
    spawn_key: Tuple[int, ...]
    graph: Graph
    forbidden: VertexSet
    red: VertexSet
    blue: VertexSet

    def instance(self, k: int, d: int) -> AnnotatedInstance:
        return AnnotatedInstance(self.graph, self.forbidden, self.red, self.blue, k, d)


def corpus_instances(config: Optional[Dict[str, Any]] = None) -> Iterator[CorpusInstance]:
    """
    Instances of a corpus config (default: app/config/corpus.yaml), in config order.

    The spawn key of an instance is (family index, size index, probability index, repeat).
    """
    config = config_cache.get_corpus_config() if config is None else config
    seed = int(config.get("seed", 0))
    annotations = config.get("annotations", {}) or {}
    for fi, family in enumerate(config.get("families", []) or []):
        name = family["name"]
        probabilities = family.get("edge_probabilities") or [None]
        repeats = int(family.get("repeats", 1))
        for si, n in enumerate(family.get("sizes", [])):
            for pi, p in enumerate(probabilities):
                for r in range(repeats):
                    key = (fi, si, pi, r)
                    g = generate_graph(name, n, p=p if p is not None else 0.3, seed=seed, spawn_key=key)
                    forbidden, red, blue = 0, g.all_vertices, g.all_vertices
                    if annotations.get("random", False):
                        forbidden, red, blue = random_annotations(
                            g, make_rng(seed, key + (1,)),
                            annotations.get("forbidden_probability", 0.15),
                            annotations.get("red_probability", 0.8),
                            annotations.get("blue_probability", 0.8),
                        )
                    label = f"{name}_n{n}" + (f"_p{int(p * 100)}" if p is not None else "") + f"_r{r}"
                    yield CorpusInstance(label, name, n, p, seed, key, g, forbidden, red, blue)


def write_corpus(out_dir: str, config: Optional[Dict[str, Any]] = None) -> List[str]:
    """Write every corpus instance as <name>.gr and <name>.ann; returns the graph paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for item in corpus_instances(config):
        path = os.path.join(out_dir, f"{item.name}.gr")
        with open(path, "w") as f:
            f.write(serialize_graph(item.graph, [f"{item.family} n={item.n} seed={item.seed} key={list(item.spawn_key)}"]))
        with open(os.path.join(out_dir, f"{item.name}.ann"), "w") as f:
            f.write(serialize_annotations(item.forbidden, item.red, item.blue))
        written.append(path)
    return written


def main(argv: Optional[Sequence[str]] = None):
    parser = argparse.ArgumentParser(description="Write the seeded graph corpus")
    parser.add_argument("--out", default=os.path.join("data", "graphs"))
    parser.add_argument("--seed", type=int, default=None, help="Override the corpus seed")
    args = parser.parse_args(argv)
    config = dict(config_cache.get_corpus_config())
    if args.seed is not None:
        config["seed"] = args.seed
    written = write_corpus(args.out, config)
    print(f"Wrote {len(written)} instances to {args.out}")


if __name__ == "__main__":
    main()
