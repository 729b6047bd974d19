"""
Pydantic schemas for request/response validation.

Vertex ids in every report are 1-based, matching the graph text format.
"""

from pydantic import BaseModel, ConfigDict, Field
from typing import Optional, List, Dict


class VersionedModel(BaseModel):
    """Reports carry the JSON schema version under the key "schema"."""
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(1, alias="schema", description="Report schema version")


# Request schemas
class SolveRequest(BaseModel):
    """Solve request for one instance."""
    problem: str = Field(pattern="^(dcd|eddc|apd)$", description="Problem: dcd, eddc or apd")
    graph: str = Field(description="Graph in the p/e text format")
    annotations: Optional[str] = Field(None, description="F/R/B annotation lines; absent means plain instance")
    k: int = Field(ge=0, le=16, description="Deletion budget (dcd, apd) or elimination depth (eddc)")
    d: int = Field(ge=0, le=8, description="Dominators allowed per component")
    decomposition: Optional[str] = Field(None, description="Tree decomposition in the t/n text format")
    oracle: bool = Field(False, description="Also run the brute-force oracle")
    trace: bool = Field(False, description="Collect Black-White branching statistics")


class SemiLadderRequest(BaseModel):
    """Semi-ladder index request."""
    graph: str = Field(description="Graph in the p/e text format")
    cap: Optional[int] = Field(None, ge=0, description="Stop once an order above cap is found")


class DecomposeRequest(BaseModel):
    """Decomposition request."""
    graph: str = Field(description="Graph in the p/e text format")
    k: int = Field(ge=0, le=8, description="Separator size bound")
    q_target: Optional[int] = Field(None, ge=0, description="Split threshold; defaults to 2k+1")


class GenerateRequest(BaseModel):
    """Seeded instance generation request."""
    family: str = Field(description="Generator family, e.g. erdos_renyi, path, half_graph")
    n: int = Field(gt=0, le=64, description="Size parameter of the family")
    p: float = Field(0.3, ge=0.0, le=1.0, description="Edge probability (erdos_renyi)")
    seed: int = Field(0, ge=0, description="Seed entropy")
    annotate: bool = Field(False, description="Also draw random F/R/B annotations")


# Response schemas
class ComponentDominators(BaseModel):
    """Dominators of one remaining component."""
    component: List[int] = Field(description="Vertices of the component")
    dominators: List[int] = Field(description="Blue vertices dominating its red vertices")


class EliminationTreeModel(BaseModel):
    """Elimination forest as a parent map."""
    parent: Dict[str, Optional[int]] = Field(description="Vertex -> parent vertex, null for roots")
    depth: int = Field(description="Longest root-to-leaf chain")


class CertificateModel(BaseModel):
    """Certificate of a yes-instance together with its check result."""
    deleted: List[int]
    dominators: List[ComponentDominators]
    elimination_tree: Optional[EliminationTreeModel] = None
    valid: bool = Field(description="Result of the independent certificate checker")
    errors: List[str] = Field(default_factory=list)


class BranchStats(BaseModel):
    """Black-White accounting of the DP branching."""
    searches: int
    leaves: int
    size: int
    depth: int
    alpha: int
    beta_observed: int
    beta_nominal: int
    exceeds_nominal: bool


class SolveStats(BaseModel):
    """Solver statistics; fields are only ever added."""
    q: Optional[int] = Field(None, description="Certified unbreakability of the decomposition")
    nodes: int = Field(0, description="Decomposition nodes")
    branches: int = Field(0, description="Child-mark branches explored")
    leaves: int = Field(0, description="Branches reaching a bag decision")
    marks_tested: int = Field(0, description="Candidate marks tested")
    wall_ms: Optional[float] = Field(None, description="Wall time, only when timing is requested")
    black_white: Optional[BranchStats] = None
    route: Optional[str] = Field(None, description="Skeleton route of the unbreakable-graph solvers")
    skeleton: Optional[List[int]] = Field(None, description="Skeleton of the returned solution")


class SolveReport(VersionedModel):
    """Solve report."""
    problem: str
    verdict: bool
    certificate: Optional[CertificateModel] = None
    stats: SolveStats
    oracle_verdict: Optional[bool] = None


class SemiLadderReport(VersionedModel):
    """Semi-ladder index with its witness sequences."""
    index: int
    exceeds_cap: bool
    a: List[int]
    b: List[int]


class DecompositionReportModel(VersionedModel):
    """Decomposition with its certified q and validation result."""
    q: int
    k: int
    nodes: int
    valid: bool
    violation: Optional[str] = None
    detail: Optional[str] = None
    decomposition: str = Field(description="Decomposition in the t/n text format")


class GeneratedInstance(VersionedModel):
    """Generated graph and optional annotations."""
    family: str
    n: int
    seed: int
    graph: str
    annotations: Optional[str] = None


class CorpusRun(BaseModel):
    """One solver-vs-oracle comparison."""
    name: str
    family: str
    n: int
    problem: str
    k: int
    d: int
    verdict: Optional[bool] = Field(None, description="Solver verdict; null when the solve raised")
    oracle_verdict: Optional[bool] = None
    agree: bool
    leaves: int = 0
    beta_observed: int = 0
    wall_ms: Optional[float] = Field(None, description="Only when timing is requested")
    error: Optional[str] = None


class BenchRow(BaseModel):
    """Timing of one benchmarked solve."""
    name: str
    family: str
    n: int
    problem: str
    k: int
    d: int
    verdict: bool
    median_ms: float
    min_ms: float


class BenchReport(VersionedModel):
    """Solver timings over a corpus grid."""
    repeats: int
    seed: Optional[int] = None
    rows: List[BenchRow] = Field(default_factory=list)
    per_family: Dict[str, Dict[str, float]] = Field(default_factory=dict)


class CorpusSummary(VersionedModel):
    """Solver-vs-oracle corpus summary."""
    instances: int = Field(description="Solver runs compared")
    disagreements: int
    errors: int = Field(0, description="Runs that raised instead of answering")
    failures: List[Dict[str, str]] = Field(default_factory=list,
                                           description="Failing runs, smallest instance first, with serialized inputs")
    per_family: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    max_beta_observed: int = Field(0, description="Largest Black-White beta over all DP traces")
    runs: List[CorpusRun] = Field(default_factory=list)
    seed: Optional[int] = None
    mutation: bool = False
    volume_checks: int = Field(0, description="Bag-graph volume bounds checked, one per (instance, k, d)")
    volume_violations: List[str] = Field(default_factory=list,
                                         description="Instances whose summed bag graphs exceed (4d+5)·q·|G|")
    semi_ladder_checks: int = Field(0, description="Full bag graphs whose semi-ladder index was bounded")
    semi_ladder_violations: List[str] = Field(default_factory=list,
                                              description="Bag graphs with semi-ladder index above q + ℓ + 4")
