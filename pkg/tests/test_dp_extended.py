"""
Extended marks and the elimination-distance dynamic program.
"""

import pytest

from app.data.generate_graphs import generate_graph, make_rng, random_annotations
from app.services.certificates import check_eddc_certificate
from app.services.decomposition import build_decomposition
from app.services.dp_extended import (
    ExtendedMark,
    compute_extended_profile,
    extended_mark_dominates,
    neutral_extended_mark,
    solve_aeddc,
)
from app.services.graph import AnnotatedInstance, Graph, to_mask
from app.services.oracle import brute_eddc


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def complete_bipartite(left: int, right: int) -> Graph:
    return Graph.from_edges(left + right, [(i, left + j) for i in range(left) for j in range(right)])


class TestExtendedMarks:
    """Layered marks."""

    def test_neutral_mark(self):
        """Test the neutral mark deletes nothing and keeps one class per layer."""
        a = to_mask([0, 1])
        m = neutral_extended_mark(a, 2)
        assert m.deleted == 0
        assert m.layer_of(0) == 0
        assert m.reach_flags() == ((False, False),)

    def test_overlapping_layers_rejected(self):
        """Test one vertex on two layers is refused."""
        with pytest.raises(ValueError):
            ExtendedMark((to_mask([0]), to_mask([0])), 0, 0, ((), ()))

    def test_layer_lookup(self):
        """Test layer_of reports 1-based layers."""
        m = ExtendedMark((to_mask([0]), 0), 0, 0, (((to_mask([1]), False),), ((to_mask([1]), False),)),
                         (to_mask([1]),), (1,))
        assert m.layer_of(0) == 1
        assert m.deleted == to_mask([0])

    def test_domination_by_budget(self):
        """Test a smaller part budget dominates a larger one of the same shape."""
        a = to_mask([0])
        level = ((a, False),)
        cheap = ExtendedMark((0,), 0, 0, (level,), (a,), (0,))
        dear = ExtendedMark((0,), 0, 0, (level,), (a,), (1,))
        assert extended_mark_dominates(cheap, dear)
        assert not extended_mark_dominates(dear, cheap)


class TestExtendedProfiles:
    """Bottom-up profile generation."""

    def test_root_profile_decides_the_instance(self):
        """Test the root profile holds one mark exactly on yes-instances, each mark with a witness."""
        g = path(9)
        for k in (1, 2):
            inst = AnnotatedInstance.plain(g, k, 1)
            td, _ = build_decomposition(g, k)
            profiles = {}
            for x in td.postorder():
                profiles[x] = compute_extended_profile(g, inst, td, x, {y: profiles[y] for y in td.children(x)})
                assert set(profiles[x].witnesses) == profiles[x].marks
            root = profiles[td.root]
            assert len(root.marks) <= 1
            assert bool(root.marks) == brute_eddc(inst).verdict


class TestSolveAeddc:
    """End-to-end elimination distance."""

    def test_cycle_four_needs_depth_three(self):
        """Test C4 with d=0 needs an elimination forest of depth 3."""
        g = cycle(4)
        assert not solve_aeddc(g, AnnotatedInstance.plain(g, 2, 0)).verdict
        inst = AnnotatedInstance.plain(g, 3, 0)
        result = solve_aeddc(g, inst)
        assert result.verdict
        assert result.tree.depth <= 3
        assert check_eddc_certificate(inst, result.tree, result.dominators).valid

    def test_path_with_dominators(self):
        """Test P7 with d=1 is one elimination away from dominated pieces."""
        g = path(7)
        assert not solve_aeddc(g, AnnotatedInstance.plain(g, 0, 1)).verdict
        inst = AnnotatedInstance.plain(g, 1, 1)
        result = solve_aeddc(g, inst)
        assert result.verdict
        assert check_eddc_certificate(inst, result.tree, result.dominators).valid

    def test_no_instance_has_no_tree(self):
        """Test a negative verdict carries no forest."""
        g = cycle(4)
        result = solve_aeddc(g, AnnotatedInstance.plain(g, 0, 0))
        assert not result.verdict
        assert result.tree is None
        assert result.deleted == 0

    def test_matches_brute_force(self):
        """Test verdicts and forests agree with the oracle on random annotated graphs."""
        for seed in range(4):
            g = generate_graph("erdos_renyi", 7, p=0.3, seed=seed)
            forbidden, red, blue = random_annotations(g, make_rng(seed, (2,)))
            for k in (0, 1, 2):
                for d in (0, 1):
                    inst = AnnotatedInstance(g, forbidden, red, blue, k, d)
                    result = solve_aeddc(g, inst)
                    assert result.verdict == brute_eddc(inst).verdict
                    if result.verdict:
                        assert check_eddc_certificate(inst, result.tree, result.dominators).valid

    def test_skipped_child_keeps_its_eliminations(self):
        """Test a child skipped by the neutral shortcut still contributes its own layers."""
        g = Graph.from_edges(7, [(0, 1), (0, 3), (1, 2), (1, 4), (2, 3), (4, 6)])
        inst = AnnotatedInstance(g, 0, to_mask(range(1, 7)), to_mask([0, 1, 2, 3, 6]), 1, 1)
        assert brute_eddc(inst).verdict
        for shortcut in (True, False):
            result = solve_aeddc(g, inst, neutral_shortcut=shortcut)
            assert result.verdict
            assert check_eddc_certificate(inst, result.tree, result.dominators).valid

    def test_seeded_oracle_equivalence(self):
        """Test 320 seeded instances with n<=9, k<=3 and d<=1 against the oracle, certificates included."""
        checked = 0
        for seed in range(40):
            n = 5 + seed % 5
            p = (0.15, 0.3, 0.5)[seed % 3]
            g = generate_graph("erdos_renyi", n, p=p, seed=100 + seed)
            forbidden, red, blue = random_annotations(g, make_rng(100 + seed, (2,)))
            for k in (0, 1, 2, 3):
                for d in (0, 1):
                    inst = AnnotatedInstance(g, forbidden, red, blue, k, d)
                    result = solve_aeddc(g, inst)
                    assert result.verdict == brute_eddc(inst).verdict, (seed, k, d)
                    if result.verdict:
                        assert check_eddc_certificate(inst, result.tree, result.dominators).valid
                    checked += 1
        assert checked >= 300


class TestLayeredRoute:
    """Bag-graph layering of large bags."""

    def test_large_clique_is_layered_automatically(self):
        """Test K6 with k=1 reaches the bag-graph route and decides both ways."""
        g = complete(6)
        td, q = build_decomposition(g, 1)
        assert q == 1
        assert len(td.nodes) == 1
        one = AnnotatedInstance(g, 0, to_mask([5]), 0, 1, 1)
        two = AnnotatedInstance(g, 0, to_mask([4, 5]), 0, 1, 1)
        result = solve_aeddc(g, one)
        assert result.verdict
        assert result.deleted == to_mask([5])
        assert check_eddc_certificate(one, result.tree, result.dominators).valid
        assert not solve_aeddc(g, two).verdict
        assert not brute_eddc(two).verdict

    @pytest.mark.parametrize("g, red, blue, d, k, expected", [
        (complete(8), [6, 7], [], 1, 2, True),
        (complete(8), [6, 7], [], 1, 1, False),
        (complete_bipartite(4, 4), list(range(8)), [0, 1, 2, 3], 2, 2, True),
        (complete_bipartite(4, 4), list(range(8)), [0, 1, 2, 3], 2, 1, False),
    ])
    def test_forced_layering_matches_exhaustive(self, g, red, blue, d, k, expected):
        """Test the layered and exhaustive routes and the oracle agree on dense single bags."""
        inst = AnnotatedInstance(g, 0, to_mask(red), to_mask(blue), k, d)
        assert brute_eddc(inst).verdict == expected
        layered = solve_aeddc(g, inst, route="layered")
        exhaustive = solve_aeddc(g, inst, route="exhaustive")
        assert layered.verdict == exhaustive.verdict == expected
        if expected:
            assert check_eddc_certificate(inst, layered.tree, layered.dominators).valid
        td, _ = build_decomposition(g, k)
        assert (compute_extended_profile(g, inst, td, td.root, {}, route="layered").marks
                == compute_extended_profile(g, inst, td, td.root, {}, route="exhaustive").marks)

    def test_forced_layering_never_accepts_a_no_instance(self):
        """Test every layered yes on random graphs is a yes of the oracle with a valid forest."""
        for seed in range(6):
            g = generate_graph("erdos_renyi", 7, p=0.4, seed=seed)
            forbidden, red, blue = random_annotations(g, make_rng(seed, (6,)))
            for k in (1, 2):
                inst = AnnotatedInstance(g, forbidden, red, blue, k, 1)
                result = solve_aeddc(g, inst, route="layered")
                if result.verdict:
                    assert brute_eddc(inst).verdict
                    assert check_eddc_certificate(inst, result.tree, result.dominators).valid

    def test_unknown_route_rejected(self):
        """Test an unknown route name raises ValueError."""
        g = path(3)
        with pytest.raises(ValueError):
            solve_aeddc(g, AnnotatedInstance.plain(g, 1, 1), route="greedy")
