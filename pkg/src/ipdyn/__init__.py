"""Infringement-dynamics toolkit.

Simulation, analysis, calibration and protection-policy optimization for
the saturating removal model dN/dt = (1 - N/n_max)(alpha - b*N), exposed
as a library, a FastAPI service (``ipdyn.service``) and a CLI (``ipdyn``).
"""

from .analysis import (
    Sensitivity,
    StochasticSummary,
    compare_levels,
    regime_map,
    sensitivity,
    simulate_stochastic,
)
from .calibrate import FitResult, default_bounds, fit, rss, synth
from .errors import InvalidInputError, IpdynError, NumericalFailureError
from .integrate import (
    IntegratorConfig,
    PassageResult,
    first_passage,
    integrate,
    integrate_adaptive,
    step_rk4,
)
from .model import (
    TOL_CRIT,
    Equilibrium,
    ModelParams,
    Regime,
    RegimeKind,
    Trajectory,
    classify_regime,
    closed_form,
    equilibria,
    rhs,
    settling_time,
)
from .policy import (
    CostSpec,
    PolicySchedule,
    ScheduleOptimum,
    StaticOptimum,
    cost,
    optimize_schedule,
    optimize_static,
    segment_starts,
)

__version__ = "0.1.0"

__all__ = [
    "CostSpec",
    "Equilibrium",
    "FitResult",
    "IntegratorConfig",
    "InvalidInputError",
    "IpdynError",
    "ModelParams",
    "NumericalFailureError",
    "PassageResult",
    "PolicySchedule",
    "Regime",
    "RegimeKind",
    "ScheduleOptimum",
    "Sensitivity",
    "StaticOptimum",
    "StochasticSummary",
    "TOL_CRIT",
    "Trajectory",
    "classify_regime",
    "closed_form",
    "compare_levels",
    "cost",
    "default_bounds",
    "equilibria",
    "first_passage",
    "fit",
    "integrate",
    "integrate_adaptive",
    "optimize_schedule",
    "optimize_static",
    "regime_map",
    "rhs",
    "rss",
    "segment_starts",
    "sensitivity",
    "settling_time",
    "simulate_stochastic",
    "step_rk4",
    "synth",
    "__version__",
]
