"""
Request dependencies: API limits and parsing of the text formats carried in request bodies.
"""

from fastapi import HTTPException, status
from typing import Any, Dict, Optional, Tuple

from app.cache import config_cache
from app.services.graph import AnnotatedInstance, Graph, GraphFormatError, parse_annotations, parse_graph


async def get_api_limits() -> Dict[str, Any]:
    """API section of solver.yaml with defaults filled in."""
    limits = dict(config_cache.get_section("api"))
    limits.setdefault("max_vertices", 24)
    limits.setdefault("slow_solve_ms", 2000)
    return limits


def load_graph(text: str, limits: Dict[str, Any]) -> Graph:
    """
    Parse a graph body and enforce the vertex limit.

    Raises:
        HTTPException: 400 on a malformed graph, 413 above the vertex limit
    """
    try:
        g = parse_graph(text)
    except GraphFormatError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"graph: {e}")
    if g.vertex_count > limits["max_vertices"]:
        raise HTTPException(
            status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
            detail=f"graph has {g.vertex_count} vertices, limit is {limits['max_vertices']}"
        )
    return g


def load_instance(graph: str, annotations: Optional[str], k: int, d: int,
                  limits: Dict[str, Any]) -> Tuple[Graph, AnnotatedInstance]:
    g = load_graph(graph, limits)
    forbidden, red, blue = 0, g.all_vertices, g.all_vertices
    if annotations:
        try:
            forbidden, red, blue = parse_annotations(annotations, g)
        except GraphFormatError as e:
            raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"annotations: {e}")
    return g, AnnotatedInstance(g, forbidden, red, blue, k, d)
