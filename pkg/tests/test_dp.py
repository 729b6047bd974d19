"""
Marks, profiles and the Dominated Cluster Deletion dynamic program.
"""

import pytest

from app.data.generate_graphs import generate_graph, make_rng, random_annotations
from app.services.certificates import check_dcd_certificate
from app.services.decomposition import DecompositionError, TreeDecomposition, decomposition_q
from app.services import dp
from app.services.dp import (
    Mark,
    compute_profile,
    domination_gate,
    enumerate_marks,
    mark_dominates,
    mark_realized_brute,
    set_partitions,
    solve_adcd,
)
from app.services.graph import AnnotatedInstance, Graph, popcount, to_mask
from app.services.oracle import brute_dcd


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def path_decomposition(n: int) -> TreeDecomposition:
    parent = {0: None}
    bags = {0: to_mask([0, 1])}
    for i in range(1, n - 1):
        parent[i] = i - 1
        bags[i] = to_mask([i, i + 1])
    return TreeDecomposition(parent, bags)


def cycle_decomposition() -> TreeDecomposition:
    """Path decomposition of C6 with two-vertex adhesions {1,5}, {1,4}, {2,4}."""
    parent = {0: None, 1: 0, 2: 1, 3: 2}
    bags = {0: to_mask([0, 1, 5]), 1: to_mask([1, 4, 5]), 2: to_mask([1, 2, 4]), 3: to_mask([2, 3, 4])}
    return TreeDecomposition(parent, bags)


def spider() -> Graph:
    """Center 0 with three legs of length three: 1-2-3, 4-5-6, 7-8-9."""
    return Graph.from_edges(10, [(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (5, 6), (0, 7), (7, 8), (8, 9)])


def spider_decomposition() -> TreeDecomposition:
    parent = {0: None, 1: 0, 2: 0, 3: 0}
    bags = {0: to_mask([0, 1, 4, 7]), 1: to_mask([1, 2, 3]), 2: to_mask([4, 5, 6]), 3: to_mask([7, 8, 9])}
    return TreeDecomposition(parent, bags)


def bottom_up(g: Graph, inst: AnnotatedInstance, td: TreeDecomposition, **kwargs):
    q = decomposition_q(g, td, inst.k)
    profiles = {}
    for x in td.postorder():
        profiles[x] = compute_profile(g, inst, td, x, {y: profiles[y] for y in td.children(x)}, q, **kwargs)
    return profiles


# ============================================================================
# 1. MARKS
# ============================================================================

class TestMarks:
    """Mark enumeration and domination order."""

    def test_single_vertex_adhesion(self):
        """Test a one-vertex adhesion with k=1 and d=1 has 14 marks."""
        marks = enumerate_marks(to_mask([0]), 1, 1)
        assert len(marks) == 14
        assert len(set(marks)) == 14
        assert marks == sorted(marks, key=Mark.sort_key)

    def test_empty_adhesion(self):
        """Test the empty adhesion has one mark per k_a."""
        marks = enumerate_marks(0, 2, 1)
        assert [m.k_a for m in marks] == [0, 1, 2]

    def test_set_partitions_count(self):
        """Test three elements have five set partitions."""
        assert len(list(set_partitions(to_mask([0, 1, 2])))) == 5
        assert list(set_partitions(0)) == [()]

    def test_overlapping_roles_rejected(self):
        """Test a vertex cannot be both deleted and a dominator."""
        with pytest.raises(ValueError):
            Mark(to_mask([0]), to_mask([0]), 0, 0)

    def test_partition_must_avoid_deleted(self):
        """Test partition parts may not contain deleted vertices."""
        with pytest.raises(ValueError):
            Mark(to_mask([0]), 0, 0, 0, (to_mask([0]),), (1,))

    def test_domination_order(self):
        """Test smaller k_a and smaller exempt sets dominate."""
        a = to_mask([0])
        tight = Mark(0, 0, 0, 0, (a,), (1,))
        loose = Mark(0, 0, 0, 1, (a,), (1,))
        exempt = Mark(0, 0, a, 1, (a,), (1,))
        assert mark_dominates(tight, loose)
        assert not mark_dominates(loose, tight)
        assert mark_dominates(loose, exempt)
        assert not mark_dominates(exempt, loose)

    def test_domination_needs_same_deletions(self):
        """Test marks with different s_a are incomparable."""
        a = to_mask([0, 1])
        assert not mark_dominates(Mark(to_mask([0]), 0, 0, 0, (to_mask([1]),), (1,)),
                                  Mark(0, 0, 0, 0, (a,), (1,)))


# ============================================================================
# 2. PROFILES
# ============================================================================

class TestProfiles:
    """Leaf profiles against exhaustive realization."""

    def test_leaf_profile_matches_brute_force(self):
        """Test the leaf of a path decomposition realizes exactly the brute-force marks."""
        g = path(5)
        td = path_decomposition(5)
        leaf = 3
        a = td.adhesion(leaf)
        for k in (0, 1):
            inst = AnnotatedInstance.plain(g, k, 1)
            q = decomposition_q(g, td, k)
            profile = compute_profile(g, inst, td, leaf, {}, q)
            for m in enumerate_marks(a, k, 1):
                expected = mark_realized_brute(g, inst, a, m, td.cone(leaf))
                assert (m in profile) == expected

    def test_minimal_marks_are_realized(self):
        """Test minimal marks are a subset of the realized marks."""
        g = path(5)
        td = path_decomposition(5)
        inst = AnnotatedInstance.plain(g, 1, 1)
        profile = compute_profile(g, inst, td, 3, {}, decomposition_q(g, td, 1))
        assert profile.minimal()
        assert set(profile.minimal()) <= profile.marks

    def test_every_node_matches_brute_force(self):
        """Test profiles at every node of multi-node decompositions realize exactly the brute-force marks."""
        cases = [(path(6), path_decomposition(6)), (Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)]),
                                                    cycle_decomposition())]
        for g, td in cases:
            for seed in range(3):
                forbidden, red, blue = random_annotations(g, make_rng(seed, (3,)))
                for k in (0, 1):
                    inst = AnnotatedInstance(g, forbidden, red, blue, k, 1)
                    profiles = bottom_up(g, inst, td)
                    for x in td.nodes:
                        a = td.adhesion(x)
                        for m in enumerate_marks(a, k, 1):
                            expected = mark_realized_brute(g, inst, a, m, td.cone(x))
                            assert (m in profiles[x]) == expected, (seed, k, x, m)

    def test_neutral_shortcut_keeps_every_profile(self):
        """Test the neutral-child shortcut changes no node's realized marks."""
        g = path(6)
        td = path_decomposition(6)
        for seed in range(3):
            forbidden, red, blue = random_annotations(g, make_rng(seed, (4,)))
            for k in (0, 1, 2):
                inst = AnnotatedInstance(g, forbidden, red, blue, k, 1)
                on = bottom_up(g, inst, td, neutral_shortcut=True)
                off = bottom_up(g, inst, td, neutral_shortcut=False)
                for x in td.nodes:
                    assert on[x].marks == off[x].marks

    def test_parts_joined_below_share_their_budgets(self):
        """Test two adhesion parts joined inside the cone get their summed budgets less d."""
        g = Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
        td = cycle_decomposition()
        inst = AnnotatedInstance.plain(g, 1, 1)
        profile = bottom_up(g, inst, td)[2]
        a = td.adhesion(2)
        assert a == to_mask([1, 4])
        parts = (to_mask([1]), to_mask([4]))
        exempt = to_mask([1, 4])
        # 2 dominates the joined path 1-2-3-4 once both ends are exempt
        joined = Mark(0, 0, exempt, 0, parts, (1, 1))
        starved = Mark(0, 0, exempt, 0, parts, (1, 0))
        undominated = Mark(0, 0, 0, 1, parts, (1, 1))
        split = Mark(0, to_mask([1]), to_mask([4]), 1, parts, (1, 1))
        assert mark_realized_brute(g, inst, a, joined, td.cone(2))
        assert not mark_realized_brute(g, inst, a, starved, td.cone(2))
        assert not mark_realized_brute(g, inst, a, undominated, td.cone(2))
        assert mark_realized_brute(g, inst, a, split, td.cone(2))
        assert joined in profile
        assert starved not in profile
        assert undominated not in profile
        assert split in profile


# ============================================================================
# 3. SOLVER
# ============================================================================

class TestSolveAdcd:
    """End-to-end dynamic program."""

    def test_path_nine(self):
        """Test P9 with d=1 needs two deletions."""
        g = path(9)
        assert not solve_adcd(g, AnnotatedInstance.plain(g, 0, 1)).verdict
        assert not solve_adcd(g, AnnotatedInstance.plain(g, 1, 1)).verdict
        inst = AnnotatedInstance.plain(g, 2, 1)
        result = solve_adcd(g, inst)
        assert result.verdict
        assert popcount(result.deleted) <= 2
        assert check_dcd_certificate(inst, result.deleted, result.dominators).valid

    def test_two_triangles(self):
        """Test separate triangles need no deletion, bridged ones need one."""
        apart = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        bridged = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
        assert solve_adcd(apart, AnnotatedInstance.plain(apart, 0, 1)).verdict
        assert not solve_adcd(bridged, AnnotatedInstance.plain(bridged, 0, 1)).verdict
        assert solve_adcd(bridged, AnnotatedInstance.plain(bridged, 1, 1)).verdict

    def test_forbidden_vertices_stay(self):
        """Test P9 with every vertex forbidden has no solution even with k=2."""
        g = path(9)
        inst = AnnotatedInstance(g, g.all_vertices, g.all_vertices, g.all_vertices, 2, 1)
        assert not solve_adcd(g, inst).verdict

    def test_matches_brute_force(self):
        """Test verdicts and certificates agree with the oracle on random annotated graphs."""
        for seed in range(5):
            g = generate_graph("erdos_renyi", 7, p=0.3, seed=seed)
            forbidden, red, blue = random_annotations(g, make_rng(seed, (1,)))
            for k in (0, 1, 2):
                for d in (0, 1, 2):
                    inst = AnnotatedInstance(g, forbidden, red, blue, k, d)
                    result = solve_adcd(g, inst)
                    assert result.verdict == brute_dcd(inst).verdict
                    if result.verdict:
                        assert check_dcd_certificate(inst, result.deleted, result.dominators).valid

    def test_seeded_oracle_equivalence(self):
        """Test 756 seeded instances with n<=10, k<=3 and d<=2 against the oracle, certificates included."""
        checked = 0
        for seed in range(63):
            n = 4 + seed % 7
            p = (0.15, 0.3, 0.5)[seed % 3]
            g = generate_graph("erdos_renyi", n, p=p, seed=200 + seed)
            forbidden, red, blue = random_annotations(g, make_rng(200 + seed, (1,)))
            for k in range(4):
                for d in range(3):
                    inst = AnnotatedInstance(g, forbidden, red, blue, k, d)
                    result = solve_adcd(g, inst)
                    assert result.verdict == brute_dcd(inst).verdict, (seed, k, d)
                    if result.verdict:
                        assert popcount(result.deleted) <= k
                        assert check_dcd_certificate(inst, result.deleted, result.dominators).valid
                    checked += 1
        assert checked >= 500

    def test_two_vertex_adhesions_match_brute_force(self):
        """Test a C6 decomposition with two-vertex adhesions agrees with the oracle."""
        g = Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
        for seed in range(4):
            forbidden, red, blue = random_annotations(g, make_rng(seed, (5,)))
            for k in (0, 1, 2):
                for d in (0, 1):
                    inst = AnnotatedInstance(g, forbidden, red, blue, k, d)
                    result = solve_adcd(g, inst, td=cycle_decomposition())
                    assert result.verdict == brute_dcd(inst).verdict
                    if result.verdict:
                        assert check_dcd_certificate(inst, result.deleted, result.dominators).valid

    def test_three_dominated_legs_pass_the_domination_gate(self, monkeypatch):
        """Test the spider's three legs need a gate above q*d at the root."""
        g = spider()
        inst = AnnotatedInstance.plain(g, 1, 1)
        assert brute_dcd(inst).verdict
        result = solve_adcd(g, inst, td=spider_decomposition())
        assert result.stats.q == 2
        assert domination_gate(2, 1) == 5
        assert result.verdict
        assert result.deleted == to_mask([0])
        monkeypatch.setattr(dp, "domination_gate", lambda q, d: q * d)
        assert not solve_adcd(g, inst, td=spider_decomposition()).verdict

    def test_supplied_decomposition(self):
        """Test a supplied path decomposition gives the same verdict."""
        g = path(9)
        inst = AnnotatedInstance.plain(g, 2, 1)
        result = solve_adcd(g, inst, td=path_decomposition(9))
        assert result.verdict
        assert result.stats.q == decomposition_q(g, result.td, 2)

    def test_too_small_q_rejected(self):
        """Test a q below the decomposition's certified value is refused."""
        g = path(9)
        with pytest.raises(DecompositionError):
            solve_adcd(g, AnnotatedInstance.plain(g, 1, 1), td=path_decomposition(9), q=0)

    def test_neutral_shortcut_does_not_change_verdicts(self):
        """Test switching the neutral-child shortcut off keeps every verdict."""
        for seed in range(3):
            g = generate_graph("erdos_renyi", 8, p=0.25, seed=seed)
            for k in (1, 2):
                inst = AnnotatedInstance.plain(g, k, 1)
                on = solve_adcd(g, inst, neutral_shortcut=True).verdict
                off = solve_adcd(g, inst, neutral_shortcut=False).verdict
                assert on == off


# ============================================================================
# 4. BRANCH ACCOUNTING
# ============================================================================

class TestBranchAccounting:
    """Black/White search tree reports."""

    def test_trace_report(self):
        """Test a traced solve reports a valid search discipline."""
        g = path(9)
        result = solve_adcd(g, AnnotatedInstance.plain(g, 2, 1), trace=True)
        report = result.black_white
        assert report is not None
        assert report.valid
        assert report.searches >= 1
        assert report.leaves >= 1
        assert report.beta_nominal == 2 + (2 * result.stats.q + 1) * 1

    def test_no_trace_no_report(self):
        """Test untraced solves carry no report."""
        g = path(4)
        assert solve_adcd(g, AnnotatedInstance.plain(g, 0, 2)).black_white is None

    def test_mutation_accepts_no_instance(self):
        """Test the relaxed deletion gate accepts P9 with one deletion."""
        g = path(9)
        inst = AnnotatedInstance.plain(g, 1, 1)
        assert not brute_dcd(inst).verdict
        result = solve_adcd(g, inst, td=path_decomposition(9), mutation=True)
        assert result.verdict
        assert result.deleted == 0
