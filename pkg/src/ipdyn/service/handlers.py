"""Service layer: pure functions from validated requests to response models.

Each handler is deterministic in its inputs (seeds included), so the HTTP
endpoints and the CLI produce identical bytes for identical scenarios.
All emitted floats are rounded to 12 significant digits here, once.
"""

from __future__ import annotations

import numpy as np

from ..analysis import compare_levels, regime_map, simulate_stochastic
from ..calibrate import fit
from ..errors import InvalidInputError
from ..integrate import IntegratorConfig, integrate, integrate_adaptive
from ..model import ModelParams, Trajectory, classify_regime, rhs, settling_time
from ..policy import CostSpec, optimize_schedule
from . import schemas

#: Number of uniform sample times when a stochastic section omits t_grid.
DEFAULT_STOCHASTIC_POINTS = 11


def fmt(x: float) -> str:
    """Render one float at 12 significant digits (normalizing -0)."""
    if x == 0.0:
        x = 0.0
    return f"{x:.12g}"


def round12(x: float) -> float:
    """Nearest double to the 12-significant-digit decimal rendering of x."""
    return float(fmt(x))


def _csv(header: str, rows) -> str:
    lines = [header]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _csv_mixed(header: str, rows) -> str:
    # like _csv but passes str cells through untouched
    lines = [header]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else fmt(cell) for cell in row))
    return "\n".join(lines) + "\n"


def _model_params(section: schemas.ModelSection) -> ModelParams:
    return ModelParams(section.alpha, section.b, section.n_max, section.n0)


def _integrator_config(run: schemas.RunSection) -> IntegratorConfig:
    return IntegratorConfig(
        step=run.step, rel_tol=run.rel_tol, abs_tol=run.abs_tol, max_steps=run.max_steps
    )


def _require(section, name: str):
    if section is None:
        raise InvalidInputError(f"scenario section {name!r} is required for this operation")
    return section


def simulate(scenario: schemas.Scenario) -> schemas.SimulateResponse:
    """Integrate the scenario and summarize its long-run behavior."""
    params = _model_params(scenario.model)
    run = scenario.run
    cfg = _integrator_config(run)
    method = integrate_adaptive if run.adaptive else integrate
    traj = method(params, run.t_end, cfg)
    rates = rhs(params, traj.values)
    csv_text = _csv("t,N,dN_dt", zip(traj.times, traj.values, rates))
    reg = classify_regime(params, run.tol_crit)
    summary = schemas.SimulateSummary(
        regime=reg.kind.value,
        limit=round12(reg.limit),
        lambda_=round12(reg.lam),
        settling_time_95=round12(settling_time(params, 0.95, run.tol_crit)),
    )
    return schemas.SimulateResponse(summary=summary, trajectory_csv=csv_text)


def analyze(scenario: schemas.Scenario) -> schemas.AnalyzeResponse:
    """Regime map over (alpha, b) and count table across protection levels."""
    section = _require(scenario.analyze, "analyze")
    params = _model_params(scenario.model)
    tol_crit = scenario.run.tol_crit

    grid = regime_map(section.alpha_grid, section.b_grid, params.n_max, tol_crit)
    map_rows = []
    for a, row in zip(section.alpha_grid, grid):
        for b, reg in zip(section.b_grid, row):
            map_rows.append((a, b, reg.kind.value, reg.limit, reg.lam))
    map_csv = _csv_mixed("alpha,b,regime,limit,lambda", map_rows)

    table = compare_levels(params, section.b_values, section.t_grid)
    cmp_rows = []
    for b, row in zip(section.b_values, table):
        for t, n in zip(section.t_grid, row):
            cmp_rows.append((b, t, n))
    cmp_csv = _csv("b,t,N", cmp_rows)
    return schemas.AnalyzeResponse(regime_map_csv=map_csv, compare_levels_csv=cmp_csv)


def run_fit(request: schemas.FitRequest) -> schemas.FitResponse:
    """Calibrate model parameters from inline observations."""
    section = _require(request.scenario.fit, "fit")
    times = [p.t for p in request.observations]
    values = [p.n for p in request.observations]
    observed = Trajectory(np.array(times), np.array(values), {"op": "observed"})
    bounds = section.bounds.as_dict() if section.bounds is not None else None
    result = fit(
        observed,
        bounds=bounds,
        starts=section.starts,
        seed=section.seed,
        fit_n0=section.fit_n0,
    )
    return schemas.FitResponse(
        params=schemas.FitParams(
            alpha=round12(result.params.alpha),
            b=round12(result.params.b),
            n_max=round12(result.params.n_max),
            n0=round12(result.params.n0),
        ),
        rss=round12(result.rss),
        n_evals=result.n_evals,
        converged=result.converged,
        low_confidence=result.low_confidence,
        degenerate=result.degenerate,
        bounds={k: (round12(v[0]), round12(v[1])) for k, v in result.bounds.items()},
    )


def optimize(scenario: schemas.Scenario) -> schemas.OptimizeResponse:
    """Optimize a piecewise-constant protection schedule."""
    section = _require(scenario.policy, "policy")
    params = _model_params(scenario.model)
    spec = CostSpec(section.c_protect, section.c_infringe, section.horizon)
    best = optimize_schedule(
        params,
        spec,
        segments=section.segments,
        b_range=section.b_range,
        seed=section.seed,
    )
    return schemas.OptimizeResponse(
        breakpoints=[round12(t) for t in best.schedule.breakpoints],
        levels=[round12(x) for x in best.schedule.levels],
        cost=round12(best.cost),
    )


def sweep(scenario: schemas.Scenario) -> schemas.SweepResponse:
    """Cross parameter grids into one regime/limit summary row per cell."""
    section = _require(scenario.sweep, "sweep")
    model = scenario.model
    tol_crit = scenario.run.tol_crit
    n_max_grid = section.n_max_grid if section.n_max_grid else [model.n_max]
    rows = []
    for a in section.alpha_grid:
        for b in section.b_grid:
            for nm in n_max_grid:
                params = ModelParams(a, b, nm, model.n0)
                reg = classify_regime(params, tol_crit)
                t95 = settling_time(params, 0.95, tol_crit)
                rows.append((a, b, nm, reg.kind.value, reg.limit, reg.lam, t95))
    csv_text = _csv_mixed("alpha,b,n_max,regime,limit,lambda,settling_time_95", rows)
    return schemas.SweepResponse(sweep_csv=csv_text)


def stochastic(scenario: schemas.Scenario) -> schemas.StochasticResponse:
    """Ensemble mean and standard error of the birth-death counterpart."""
    section = _require(scenario.stochastic, "stochastic")
    params = _model_params(scenario.model)
    if section.t_grid is not None:
        t_grid = np.asarray(section.t_grid, dtype=float)
    else:
        t_grid = np.linspace(0.0, scenario.run.t_end, DEFAULT_STOCHASTIC_POINTS)
    summary = simulate_stochastic(params, t_grid, section.runs, section.seed)
    csv_text = _csv("t,mean_N,stderr_N", zip(summary.times, summary.mean, summary.stderr))
    return schemas.StochasticResponse(trajectory_csv=csv_text)
