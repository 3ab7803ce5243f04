"""Comparative statics, sensitivities, regime maps, and a stochastic oracle.

The stochastic simulator is an exact continuous-time birth-death process
with birth rate alpha*(1 - N/n_max) and death rate b*N*(1 - N/n_max); this
is the unique nonnegative-rate splitting of the deterministic right-hand
side, so the ensemble mean converges to the ODE solution and the simulator
serves as an independent check on everything built from the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError
from .model import (
    TOL_CRIT,
    ModelParams,
    Regime,
    classify_regime,
    closed_form,
)


def compare_levels(base: ModelParams, b_values, t_grid) -> np.ndarray:
    """Closed-form counts N(t; b) for each protection level in ``b_values``.

    Returns a matrix with one row per level (in input order) and one column
    per time in ``t_grid``.
    """
    b_values = list(b_values)
    t_arr = np.asarray(t_grid, dtype=float)
    if len(b_values) == 0:
        raise InvalidInputError("b_values must be nonempty")
    if t_arr.ndim != 1 or t_arr.size == 0:
        raise InvalidInputError("t_grid must be a nonempty sequence")
    if t_arr.size > 1 and not np.all(np.diff(t_arr) > 0.0):
        raise InvalidInputError("t_grid must be strictly increasing")
    rows = [closed_form(replace(base, b=float(bv)), t_arr) for bv in b_values]
    return np.vstack(rows)


@dataclass(frozen=True)
class Sensitivity:
    """Finite-difference derivative of N(t) with respect to one parameter."""

    value: float
    target: str
    eps: float
    bump: float
    branch_crossing: bool = False
    one_sided: bool = False


def sensitivity(
    params: ModelParams, t: float, target: str, eps: float = 1e-6
) -> Sensitivity:
    """Central finite difference of closed_form(t) in ``target``.

    ``eps`` is a relative bump (absolute when the parameter is zero). A bump
    that would change the regime kind, or leave the valid parameter domain,
    degrades to a one-sided difference; regime changes are additionally
    flagged as branch crossings.
    """
    if target not in ("alpha", "b", "n_max"):
        raise InvalidInputError(f"target must be one of alpha/b/n_max, got {target!r}")
    if not 1e-8 <= eps <= 1e-2:
        raise InvalidInputError(f"eps must be in [1e-8, 1e-2], got {eps}")
    if not (math.isfinite(t) and t >= 0.0):
        raise InvalidInputError(f"t must be finite and >= 0, got {t}")
    theta = getattr(params, target)
    bump = abs(theta) * eps if theta != 0.0 else eps
    kind0 = classify_regime(params).kind

    def probe(x):
        try:
            p = replace(params, **{target: x})
        except InvalidInputError:
            return None, None
        return closed_form(p, t), classify_regime(p).kind

    up, kind_up = probe(theta + bump)
    dn, kind_dn = probe(theta - bump)
    crossed = (kind_up is not None and kind_up != kind0) or (
        kind_dn is not None and kind_dn != kind0
    )
    ok_up = up is not None and kind_up == kind0
    ok_dn = dn is not None and kind_dn == kind0
    if ok_up and ok_dn:
        return Sensitivity((up - dn) / (2.0 * bump), target, eps, bump)
    center = closed_form(params, t)
    if ok_up or (not ok_dn and up is not None):
        value = (up - center) / bump
    elif dn is not None:
        value = (center - dn) / bump
    else:
        raise InvalidInputError(
            f"sensitivity: cannot bump {target} by {bump:g} in either direction"
        )
    return Sensitivity(value, target, eps, bump, branch_crossing=crossed, one_sided=True)


def regime_map(alpha_grid, b_grid, n_max: float, tol_crit: float = TOL_CRIT) -> list[list[Regime]]:
    """Regime classification on the alpha x b grid (rows alpha, columns b)."""
    alphas = [float(a) for a in alpha_grid]
    bs = [float(b) for b in b_grid]
    if not alphas or not bs:
        raise InvalidInputError("alpha_grid and b_grid must be nonempty")
    return [
        [classify_regime(ModelParams(a, b, n_max, 0.0), tol_crit) for b in bs]
        for a in alphas
    ]


@dataclass(frozen=True)
class StochasticSummary:
    """Ensemble mean and standard error of the birth-death process."""

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    runs: int
    seed: int


def simulate_stochastic(
    params: ModelParams, t_grid, runs: int, seed: int
) -> StochasticSummary:
    """Exact Gillespie simulation of the birth-death counterpart.

    Counts are integers, so n_max and n0 must be integral. Each run draws
    from a generator seeded by (seed, run index), making results independent
    of execution order and reproducible.
    """
    t_arr = np.asarray(t_grid, dtype=float)
    if t_arr.ndim != 1 or t_arr.size == 0:
        raise InvalidInputError("t_grid must be a nonempty sequence")
    if np.any(t_arr < 0.0) or not np.all(np.isfinite(t_arr)):
        raise InvalidInputError("t_grid times must be finite and >= 0")
    if t_arr.size > 1 and not np.all(np.diff(t_arr) > 0.0):
        raise InvalidInputError("t_grid must be strictly increasing")
    if runs < 1:
        raise InvalidInputError(f"runs must be >= 1, got {runs}")
    if seed < 0:
        raise InvalidInputError(f"seed must be >= 0, got {seed}")
    if not float(params.n_max).is_integer():
        raise InvalidInputError(f"n_max must be integral for the stochastic oracle, got {params.n_max}")
    if not float(params.n0).is_integer():
        raise InvalidInputError(f"n0 must be integral for the stochastic oracle, got {params.n0}")

    alpha, b, nm = params.alpha, params.b, params.n_max
    n_points = t_arr.size
    t_list = t_arr.tolist()
    samples = np.empty((runs, n_points))
    for run in range(runs):
        rng = np.random.default_rng((seed, run))
        t = 0.0
        n = params.n0
        gi = 0
        while gi < n_points:
            headroom = 1.0 - n / nm
            birth = alpha * headroom
            death = b * n * headroom
            assert birth >= 0.0 and death >= 0.0, "negative event rate inside [0, n_max]"
            total = birth + death
            if total <= 0.0:
                samples[run, gi:] = n
                break
            t_next = t + rng.exponential(1.0 / total)
            while gi < n_points and t_list[gi] < t_next:
                samples[run, gi] = n
                gi += 1
            if gi >= n_points:
                break
            if rng.random() * total < birth:
                n += 1.0
            else:
                n -= 1.0
            t = t_next

    mean = samples.mean(axis=0)
    if runs > 1:
        stderr = samples.std(axis=0, ddof=1) / math.sqrt(runs)
    else:
        stderr = np.zeros(n_points)
    return StochasticSummary(t_arr.copy(), mean, stderr, runs, int(seed))
