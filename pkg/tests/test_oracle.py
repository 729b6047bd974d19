"""
Brute-force oracle tests.
"""

import pytest

from app.services.graph import AnnotatedInstance, Graph, popcount, to_mask
from app.services.oracle import (
    OracleBudget,
    OracleBudgetError,
    brute_apd,
    brute_dcd,
    brute_eddc,
    brute_skeletons,
    skeleton_of,
)


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


class TestOracles:
    """Exhaustive references."""

    def test_dcd_path_nine(self):
        """Test P9 with d=1 needs exactly two deletions."""
        g = path(9)
        assert not brute_dcd(AnnotatedInstance.plain(g, 1, 1)).verdict
        result = brute_dcd(AnnotatedInstance.plain(g, 2, 1))
        assert result.verdict
        assert popcount(result.deleted) == 2
        assert len(result.dominators) == 3

    def test_dcd_first_witness_is_canonical(self):
        """Test the first working deletion set is the smallest in canonical order."""
        result = brute_dcd(AnnotatedInstance.plain(path(7), 1, 1))
        assert result.deleted == to_mask([3])

    def test_apd_single_dominator_set(self):
        """Test APD returns one (remaining vertices, D) pair."""
        result = brute_apd(AnnotatedInstance.plain(path(5), 2, 1))
        assert result.verdict
        assert len(result.dominators) == 1

    def test_eddc_returns_forest(self):
        """Test a positive EDDC verdict comes with a forest of depth at most k."""
        result = brute_eddc(AnnotatedInstance.plain(path(7), 1, 1))
        assert result.verdict
        assert result.tree.depth <= 1
        assert result.deleted == result.tree.vertices

    def test_eddc_beats_dcd(self):
        """Test P13 with d=1 has elimination distance 2 but needs three deletions."""
        inst = AnnotatedInstance.plain(path(13), 2, 1)
        assert not brute_dcd(inst).verdict
        assert brute_eddc(inst).verdict

    def test_budget_refuses_large_inputs(self):
        """Test inputs above the oracle budget raise."""
        budget = OracleBudget(max_vertices=5, max_k=1, max_d=1)
        with pytest.raises(OracleBudgetError):
            brute_dcd(AnnotatedInstance.plain(path(6), 1, 1), budget)
        with pytest.raises(OracleBudgetError):
            brute_eddc(AnnotatedInstance.plain(path(4), 2, 1), budget)

    def test_default_budget_from_config(self):
        """Test the default budget reads the oracle section."""
        budget = OracleBudget.default()
        assert budget.max_vertices == 16
        assert budget.max_k == 6


class TestSkeletonOracle:
    """Skeletons of brute-force solutions."""

    def test_skeleton_of_pendant(self):
        """Test the cut vertex above a pendant is the skeleton."""
        g = Graph.from_edges(6, [(u, v) for u in range(5) for v in range(u + 1, 5)] + [(0, 5)])
        assert skeleton_of(g, to_mask([0]), 2) == to_mask([0])

    def test_unknown_kind(self):
        """Test only dcd and eddc skeletons exist."""
        with pytest.raises(ValueError):
            brute_skeletons(path(4), 1, 1, 1, "apd")

    def test_clique_skeletons_are_empty(self):
        """Test every deletion from a clique leaves nothing outside the large component."""
        g = Graph.from_edges(6, [(u, v) for u in range(6) for v in range(u + 1, 6)])
        assert brute_skeletons(g, 2, 2, 1, "dcd") == [0]
