"""
Corpus runner and benchmark tests.
"""

import pytest

from app.services.corpus import run_bench, run_corpus

SMALL_CORPUS = {
    "seed": 2025,
    "problems": ["dcd", "eddc"],
    "families": [
        {"name": "erdos_renyi", "sizes": [5, 6], "edge_probabilities": [0.3], "repeats": 1},
        {"name": "cycle", "sizes": [5]},
    ],
    "grid": {"k": [0, 1], "d": [0, 1]},
    "annotations": {"random": True},
    "oracle": True,
}

PATH_CORPUS = {
    "seed": 1,
    "problems": ["dcd"],
    "families": [{"name": "path", "sizes": [9]}],
    "grid": {"k": [0, 1], "d": [1]},
    "oracle": True,
}


class TestRunCorpus:
    """Solver-vs-oracle comparisons."""

    def test_small_corpus_agrees(self):
        """Test every run of a small corpus agrees with the oracle."""
        summary = run_corpus(SMALL_CORPUS)
        assert summary.instances == 3 * 2 * 2 * 2
        assert summary.disagreements == 0
        assert summary.errors == 0
        assert summary.failures == []
        assert set(summary.per_family) == {"erdos_renyi", "cycle"}
        assert summary.per_family["cycle"]["runs"] == 8
        assert summary.model_dump(by_alias=True)["schema"] == 1
        assert summary.volume_checks == 3 * 2 * 2
        assert summary.volume_violations == []
        assert summary.semi_ladder_checks >= 3 * 2 * 2

    def test_timing_is_opt_in(self):
        """Test wall times appear only when timing is requested."""
        plain = run_corpus(PATH_CORPUS)
        timed = run_corpus(PATH_CORPUS, timing=True)
        assert all(r.wall_ms is None for r in plain.runs)
        assert all(r.wall_ms is not None for r in timed.runs)
        assert "mean_ms" in timed.per_family["path"]
        assert "mean_ms" not in plain.per_family["path"]

    def test_empty_corpus(self):
        """Test a config without families passes trivially."""
        summary = run_corpus({"families": []})
        assert summary.instances == 0
        assert summary.disagreements == 0
        assert summary.per_family == {}
        assert summary.volume_checks == 0
        assert summary.semi_ladder_checks == 0

    def test_mutation_is_detected(self):
        """Test the relaxed deletion gate produces oracle disagreements on P9."""
        summary = run_corpus(PATH_CORPUS, mutation=True)
        assert summary.mutation
        assert summary.disagreements >= 1
        failure = summary.failures[0]
        assert failure["oracle_verdict"] == "no"
        assert failure["verdict"] == "yes"
        assert failure["graph"].startswith("p 9 8")

    def test_path_bag_graphs_keep_small_semi_ladders(self):
        """Test P9's full bag graphs stay within q + ℓ + 4 and the check can be switched off."""
        summary = run_corpus(PATH_CORPUS)
        assert summary.semi_ladder_checks >= 2
        assert summary.semi_ladder_violations == []
        skipped = run_corpus(dict(PATH_CORPUS, semi_ladder_check=False))
        assert skipped.semi_ladder_checks == 0

    def test_oracle_off(self):
        """Test runs without the oracle always count as agreeing."""
        summary = run_corpus(dict(PATH_CORPUS, oracle=False))
        assert all(r.oracle_verdict is None for r in summary.runs)
        assert summary.disagreements == 0


class TestRunBench:
    """Timing harness."""

    def test_bench_rows(self):
        """Test one row per solve and a per-family aggregate."""
        report = run_bench(PATH_CORPUS, repeats=2)
        assert len(report.rows) == 2
        assert all(r.min_ms <= r.median_ms for r in report.rows)
        assert set(report.per_family) == {"path/dcd"}
        assert report.per_family["path/dcd"]["count"] == 2

    def test_bench_problem_override(self):
        """Test the problem list can be overridden."""
        report = run_bench(PATH_CORPUS, repeats=1, problems=["eddc"])
        assert {r.problem for r in report.rows} == {"eddc"}

    def test_bench_needs_repeats(self):
        """Test non-positive repeat counts are rejected."""
        with pytest.raises(ValueError):
            run_bench(PATH_CORPUS, repeats=0)
