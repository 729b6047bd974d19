"""
Graph router: semi-ladder index, decomposition and seeded generation.
"""

from fastapi import APIRouter, Depends, HTTPException
from typing import Any, Dict

from app.cache import config_cache
from app.data.generate_graphs import generate_graph, make_rng, random_annotations
from app.deps import get_api_limits, load_graph
from app.schemas import (
    DecomposeRequest,
    DecompositionReportModel,
    GenerateRequest,
    GeneratedInstance,
    SemiLadderReport,
    SemiLadderRequest,
)
from app.services.graph import serialize_annotations, serialize_graph
from app.services.runner import decomposition_report, semiladder_report

router = APIRouter()


@router.post("/semiladder", response_model=SemiLadderReport, response_model_by_alias=True)
async def semiladder(request: SemiLadderRequest, limits: Dict[str, Any] = Depends(get_api_limits)):
    """Semi-ladder index of a graph, with a witness of that order."""
    g = load_graph(request.graph, limits)
    try:
        return semiladder_report(g, request.cap)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/decompose", response_model=DecompositionReportModel, response_model_by_alias=True)
async def decompose(request: DecomposeRequest, limits: Dict[str, Any] = Depends(get_api_limits)):
    """Build a regular unbreakable tree decomposition and report its certified q."""
    g = load_graph(request.graph, limits)
    try:
        return decomposition_report(g, request.k, request.q_target)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/generate", response_model=GeneratedInstance, response_model_by_alias=True)
async def generate(request: GenerateRequest, limits: Dict[str, Any] = Depends(get_api_limits)):
    """Seeded graph of a generator family, optionally with random annotations."""
    try:
        g = generate_graph(request.family, request.n, p=request.p, seed=request.seed)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    if g.vertex_count > limits["max_vertices"]:
        raise HTTPException(
            status_code=413,
            detail=f"generated graph has {g.vertex_count} vertices, limit is {limits['max_vertices']}"
        )
    annotations = None
    if request.annotate:
        annotations = serialize_annotations(*random_annotations(g, make_rng(request.seed, (1,))))
    return GeneratedInstance(
        schema=config_cache.get_schema_version(),
        family=request.family,
        n=request.n,
        seed=request.seed,
        graph=serialize_graph(g, [f"{request.family} n={request.n} seed={request.seed}"]),
        annotations=annotations,
    )
