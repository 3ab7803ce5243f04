"""Pydantic schemas for scenarios, requests and responses.

Scenarios are strict: unknown keys are rejected so typos fail loudly, and
non-finite numbers are refused. The same models back the HTTP endpoints
and the CLI, which validates scenario files through them.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _finite(**kwargs):
    return Field(allow_inf_nan=False, **kwargs)


class ModelSection(StrictModel):
    """ModelParams fields as they appear in a scenario file."""

    alpha: float = _finite(ge=0)
    b: float = _finite(ge=0)
    n_max: float = _finite(gt=0)
    n0: float = _finite(default=0.0, ge=0)

    @model_validator(mode="after")
    def _n0_in_range(self):
        if self.n0 > self.n_max:
            raise ValueError(f"n0 must not exceed n_max ({self.n0} > {self.n_max})")
        return self


class RunSection(StrictModel):
    """Integration horizon and integrator settings."""

    t_end: float = _finite(gt=0)
    step: float = _finite(default=1e-3, gt=0)
    rel_tol: float = _finite(default=1e-8, gt=0)
    abs_tol: float = _finite(default=1e-9, gt=0)
    max_steps: int = Field(default=1_000_000, ge=1)
    tol_crit: float = _finite(default=1e-9, gt=0, le=0.1)
    adaptive: bool = False


class BoundsSection(StrictModel):
    """Optional per-parameter (lo, hi) overrides for calibration."""

    alpha: tuple[float, float] | None = None
    b: tuple[float, float] | None = None
    n_max: tuple[float, float] | None = None
    n0: tuple[float, float] | None = None

    def as_dict(self) -> dict:
        out = {}
        for name in ("alpha", "b", "n_max", "n0"):
            pair = getattr(self, name)
            if pair is not None:
                out[name] = (float(pair[0]), float(pair[1]))
        return out


class FitSection(StrictModel):
    """Calibration inputs; ``data`` points at a t,N CSV for the CLI."""

    data: str | None = None
    bounds: BoundsSection | None = None
    starts: int = Field(default=8, ge=1)
    seed: int = Field(default=0, ge=0)
    fit_n0: bool = False


class PolicySection(StrictModel):
    """Cost weights, horizon and search settings for schedule optimization."""

    c_protect: float = _finite(ge=0)
    c_infringe: float = _finite(ge=0)
    horizon: float = _finite(gt=0)
    segments: int = Field(default=1, ge=1)
    b_range: tuple[float, float]
    seed: int = Field(default=0, ge=0)
    grid_points: int = Field(default=33, ge=3)

    @model_validator(mode="after")
    def _sane(self):
        if self.c_protect == 0.0 and self.c_infringe == 0.0:
            raise ValueError("c_protect and c_infringe must not both be zero")
        lo, hi = self.b_range
        if lo < 0.0 or lo >= hi:
            raise ValueError(f"b_range must satisfy 0 <= lo < hi, got ({lo}, {hi})")
        return self


class AnalyzeSection(StrictModel):
    """Grids for the comparative-statics table and the regime map."""

    b_values: list[float] = Field(min_length=1)
    t_grid: list[float] = Field(min_length=1)
    alpha_grid: list[float] = Field(min_length=1)
    b_grid: list[float] = Field(min_length=1)


class SweepSection(StrictModel):
    """Parameter grids crossed into one summary row per cell."""

    alpha_grid: list[float] = Field(min_length=1)
    b_grid: list[float] = Field(min_length=1)
    n_max_grid: list[float] | None = None


class StochasticSection(StrictModel):
    """Ensemble settings; t_grid defaults to 11 uniform points on [0, t_end]."""

    runs: int = Field(ge=1)
    seed: int = Field(default=0, ge=0)
    t_grid: list[float] | None = None


class Scenario(StrictModel):
    """One deterministic run description, as read from a JSON file."""

    model: ModelSection
    run: RunSection
    analyze: AnalyzeSection | None = None
    fit: FitSection | None = None
    policy: PolicySection | None = None
    sweep: SweepSection | None = None
    stochastic: StochasticSection | None = None


class ObservationPoint(StrictModel):
    t: float = _finite(ge=0)
    n: float = _finite(ge=0)


class FitRequest(StrictModel):
    """Fit inputs with observations inline (the service never reads files)."""

    scenario: Scenario
    observations: list[ObservationPoint] = Field(min_length=1)


class SimulateSummary(StrictModel):
    regime: str
    limit: float
    lambda_: float = Field(serialization_alias="lambda")
    settling_time_95: float


class SimulateResponse(StrictModel):
    summary: SimulateSummary
    trajectory_csv: str


class AnalyzeResponse(StrictModel):
    regime_map_csv: str
    compare_levels_csv: str


class FitParams(StrictModel):
    alpha: float
    b: float
    n_max: float
    n0: float


class FitResponse(StrictModel):
    params: FitParams
    rss: float
    n_evals: int
    converged: bool
    low_confidence: bool
    degenerate: bool
    bounds: dict[str, tuple[float, float]]


class OptimizeResponse(StrictModel):
    breakpoints: list[float]
    levels: list[float]
    cost: float


class SweepResponse(StrictModel):
    sweep_csv: str


class StochasticResponse(StrictModel):
    trajectory_csv: str


class HealthResponse(StrictModel):
    status: str
    version: str
