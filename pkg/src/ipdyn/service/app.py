"""FastAPI application wrapping the service layer.

Run locally with:

    uvicorn ipdyn.service.app:app

Invalid inputs map to HTTP 422, numerical failures to HTTP 500; handlers
are pure, so responses are byte-stable for identical request bodies.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import InvalidInputError, NumericalFailureError
from . import handlers, schemas

app = FastAPI(
    title="ipdyn",
    version=__version__,
    description="Infringement-dynamics simulation, analysis, calibration and policy optimization.",
)


@app.exception_handler(InvalidInputError)
async def _invalid_input(_request: Request, exc: InvalidInputError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(NumericalFailureError)
async def _numerical_failure(_request: Request, exc: NumericalFailureError):
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/simulate", response_model=schemas.SimulateResponse, response_model_by_alias=True)
def simulate(scenario: schemas.Scenario) -> schemas.SimulateResponse:
    return handlers.simulate(scenario)


@app.post("/analyze", response_model=schemas.AnalyzeResponse)
def analyze(scenario: schemas.Scenario) -> schemas.AnalyzeResponse:
    return handlers.analyze(scenario)


@app.post("/fit", response_model=schemas.FitResponse)
def run_fit(request: schemas.FitRequest) -> schemas.FitResponse:
    return handlers.run_fit(request)


@app.post("/optimize", response_model=schemas.OptimizeResponse)
def optimize(scenario: schemas.Scenario) -> schemas.OptimizeResponse:
    return handlers.optimize(scenario)


@app.post("/sweep", response_model=schemas.SweepResponse)
def sweep(scenario: schemas.Scenario) -> schemas.SweepResponse:
    return handlers.sweep(scenario)


@app.post("/stochastic", response_model=schemas.StochasticResponse)
def stochastic(scenario: schemas.Scenario) -> schemas.StochasticResponse:
    return handlers.stochastic(scenario)
