"""HTTP facade over the healing engine.

Run with ``uvicorn cellheal.service.app:app`` or ``cellheal serve``.
Infeasible instances are not errors: the solve response reports them with the
blocking users. Errors are malformed scenarios (400/422) and instances beyond
the exhaustive solver's caps (400).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..oracle import OracleError
from ..orchestrator import NoFeasibleSolutionError
from ..scenario import ScenarioError
from . import handlers
from .models import (
    HealthResponse,
    OracleRequest,
    OracleResponse,
    RandomScenarioRequest,
    ScenarioResponse,
    SolveRequest,
    SolveResponse,
    SweepRequest,
    SweepResponse,
)

app = FastAPI(title="cellheal", version=__version__,
              description="Joint user association and drone placement for "
                          "cell-outage healing")


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/solve", response_model=SolveResponse)
def solve(request: SolveRequest) -> SolveResponse:
    try:
        return handlers.solve(request)
    except ScenarioError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except NoFeasibleSolutionError as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc


@app.post("/scenarios/random", response_model=ScenarioResponse)
def random_scenario(request: RandomScenarioRequest) -> ScenarioResponse:
    try:
        return handlers.random_scenario(request)
    except ScenarioError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/oracle", response_model=OracleResponse)
def oracle(request: OracleRequest) -> OracleResponse:
    try:
        return handlers.oracle_compare(request)
    except (ScenarioError, OracleError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/sweep", response_model=SweepResponse)
def sweep(request: SweepRequest) -> SweepResponse:
    return handlers.sweep(request)
