"""
Solve router: the decomposition DP solvers and the partial domination solver over HTTP.
"""

from fastapi import APIRouter, Depends, HTTPException, Request
from typing import Any, Dict
import logging

from app.deps import get_api_limits, load_instance
from app.schemas import SolveReport, SolveRequest
from app.services.decomposition import parse_decomposition
from app.services.graph import InvariantViolation
from app.services.runner import build_solve_report, solve_instance

logger = logging.getLogger("dcd_solver")

router = APIRouter()


@router.post("/solve", response_model=SolveReport, response_model_by_alias=True)
async def solve(
    request: SolveRequest,
    request_obj: Request,
    limits: Dict[str, Any] = Depends(get_api_limits)
):
    """
    Solve one dcd, eddc or apd instance.

    This endpoint:
    1. Parses the graph, annotations and optional decomposition
    2. Runs the solver for the requested problem
    3. Checks the certificate of a yes-instance
    4. Optionally runs the brute-force oracle
    """
    request_id = getattr(request_obj.state, "request_id", "unknown")
    logger.info(f"Processing solve request | request_id={request_id} | problem={request.problem} | "
                f"k={request.k} | d={request.d}")

    g, inst = load_instance(request.graph, request.annotations, request.k, request.d, limits)
    try:
        td = parse_decomposition(request.decomposition, g) if request.decomposition else None
        outcome = solve_instance(request.problem, inst, td, oracle=request.oracle, trace=request.trace)
    except InvariantViolation as e:
        logger.error(f"Solver invariant violated | request_id={request_id} | error={e}")
        raise HTTPException(status_code=500, detail=f"internal invariant violated: {e}")
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))

    return build_solve_report(outcome)
