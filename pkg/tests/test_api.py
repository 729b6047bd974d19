"""
HTTP API tests for the solver service.
"""

from fastapi.testclient import TestClient

from app.data.generate_graphs import generate_graph
from app.main import app
from app.services.graph import serialize_graph

client = TestClient(app)

P7 = "p 7 6\ne 1 2\ne 2 3\ne 3 4\ne 4 5\ne 5 6\ne 6 7\n"


def test_root_endpoint():
    """Test the root endpoint."""
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["message"] == "Dominated Cluster Solver API"


def test_health_endpoint():
    """Test the health check reports the report schema."""
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert body["schema"] == 1


def test_response_headers():
    """Test request id and timing headers, echoing a caller's id."""
    response = client.get("/health", headers={"X-Request-ID": "req-42"})
    assert response.headers["X-Request-ID"] == "req-42"
    assert float(response.headers["X-Response-Time-Ms"]) >= 0


# ============================================================================
# 1. SOLVE
# ============================================================================

class TestSolveEndpoint:
    """POST /v1/solve."""

    def test_yes_instance(self):
        """Test P7 with k=1, d=1 returns a valid certificate with 1-based ids."""
        response = client.post("/v1/solve", json={"problem": "dcd", "graph": P7, "k": 1, "d": 1, "oracle": True})
        assert response.status_code == 200
        report = response.json()
        assert report["schema"] == 1
        assert report["verdict"] is True
        assert report["oracle_verdict"] is True
        assert report["certificate"]["deleted"] == [4]
        assert report["certificate"]["valid"] is True

    def test_no_instance(self):
        """Test P7 with k=0, d=1 is negative without a certificate."""
        response = client.post("/v1/solve", json={"problem": "dcd", "graph": P7, "k": 0, "d": 1})
        assert response.status_code == 200
        assert response.json()["verdict"] is False
        assert response.json()["certificate"] is None

    def test_eddc_with_trace(self):
        """Test EDDC returns a forest and Black-White statistics."""
        response = client.post("/v1/solve", json={"problem": "eddc", "graph": P7, "k": 1, "d": 1, "trace": True})
        assert response.status_code == 200
        report = response.json()
        assert report["certificate"]["elimination_tree"]["depth"] <= 1
        assert report["stats"]["black_white"] is not None

    def test_forbidden_annotation(self):
        """Test forbidding the middle vertex of P7 turns the instance negative."""
        response = client.post("/v1/solve", json={
            "problem": "dcd", "graph": P7, "annotations": "F 4\n", "k": 1, "d": 1
        })
        assert response.status_code == 200
        assert response.json()["verdict"] is False

    def test_malformed_graph(self):
        """Test an edge outside 1..n is a 400."""
        response = client.post("/v1/solve", json={"problem": "dcd", "graph": "p 2 1\ne 1 5\n", "k": 0, "d": 1})
        assert response.status_code == 400

    def test_graph_too_large(self):
        """Test graphs above the API vertex limit are a 413."""
        graph = serialize_graph(generate_graph("path", 25))
        response = client.post("/v1/solve", json={"problem": "dcd", "graph": graph, "k": 0, "d": 1})
        assert response.status_code == 413

    def test_unknown_problem(self):
        """Test the problem name is validated."""
        response = client.post("/v1/solve", json={"problem": "vertex-cover", "graph": P7, "k": 0, "d": 1})
        assert response.status_code == 422

    def test_negative_budget(self):
        """Test negative budgets are rejected by validation."""
        response = client.post("/v1/solve", json={"problem": "dcd", "graph": P7, "k": -1, "d": 1})
        assert response.status_code == 422


# ============================================================================
# 2. GRAPH TOOLS
# ============================================================================

class TestGraphEndpoints:
    """Semi-ladder, decomposition and generation."""

    def test_semiladder_half_graph(self):
        """Test the half-graph of order 5 has semi-ladder index 5."""
        graph = serialize_graph(generate_graph("half_graph", 5))
        response = client.post("/v1/semiladder", json={"graph": graph})
        assert response.status_code == 200
        report = response.json()
        assert report["index"] == 5
        assert len(report["a"]) == len(report["b"]) == 5

    def test_decompose(self):
        """Test a built decomposition of P7 validates."""
        response = client.post("/v1/decompose", json={"graph": P7, "k": 1})
        assert response.status_code == 200
        report = response.json()
        assert report["valid"] is True
        assert report["decomposition"].startswith("t ")

    def test_generate(self):
        """Test seeded generation is repeatable and carries a header comment."""
        body = {"family": "erdos_renyi", "n": 8, "p": 0.4, "seed": 3}
        first = client.post("/v1/generate", json=body).json()
        second = client.post("/v1/generate", json=body).json()
        assert first["graph"] == second["graph"]
        assert first["graph"].startswith("# erdos_renyi n=8 seed=3")
        assert first["annotations"] is None

    def test_generate_annotations(self):
        """Test annotate adds F/R/B lines."""
        response = client.post("/v1/generate", json={"family": "path", "n": 6, "annotate": True})
        assert response.status_code == 200
        assert response.json()["annotations"] is not None

    def test_generate_unknown_family(self):
        """Test unknown families are a 400."""
        response = client.post("/v1/generate", json={"family": "petersen", "n": 5})
        assert response.status_code == 400

    def test_generate_too_large(self):
        """Test generated graphs above the vertex limit are a 413."""
        response = client.post("/v1/generate", json={"family": "clique", "n": 30})
        assert response.status_code == 413
