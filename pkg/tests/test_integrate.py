import math

import numpy as np
import pytest

from ipdyn import (
    IntegratorConfig,
    InvalidInputError,
    ModelParams,
    NumericalFailureError,
    Trajectory,
    classify_regime,
    closed_form,
    first_passage,
    integrate,
    integrate_adaptive,
    step_rk4,
)

CONTROLLED = ModelParams(10.0, 0.5, 100.0, 0.0)
SATURATION = ModelParams(10.0, 0.05, 100.0, 0.0)
CRITICAL = ModelParams(5.0, 0.05, 100.0, 0.0)


# ----------------------------------------------------------- IntegratorConfig


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(step=0.0),
        dict(step=-1.0),
        dict(rel_tol=0.0),
        dict(abs_tol=-1e-9),
        dict(max_steps=0),
    ],
)
def test_config_rejects_invalid(kwargs):
    with pytest.raises(InvalidInputError):
        IntegratorConfig(**kwargs)


# ------------------------------------------------------------------- step_rk4


def test_step_preserves_state_with_zero_rhs():
    assert step_rk4(ModelParams(0.0, 0.0, 100.0, 5.0), 5.0, 1.0) == 5.0


def test_step_preserves_interior_fixed_point_exactly():
    # every RK4 stage evaluates rhs = 0 at n = alpha/b
    assert step_rk4(CONTROLLED, 20.0, 0.1) == 20.0


def test_step_matches_closed_form_over_small_step():
    out = step_rk4(CONTROLLED, 0.0, 0.01)
    assert out == pytest.approx(closed_form(CONTROLLED, 0.01), abs=1e-10)


def test_step_rejects_bad_inputs():
    with pytest.raises(InvalidInputError):
        step_rk4(CONTROLLED, 1.0, 0.0)
    with pytest.raises(InvalidInputError):
        step_rk4(CONTROLLED, math.nan, 0.1)


def test_step_reports_large_overshoot_as_failure():
    with pytest.raises(NumericalFailureError):
        step_rk4(CONTROLLED, 0.0, 100.0)


# ------------------------------------------------------------------ integrate


def test_integrate_matches_closed_form_controlled():
    tr = integrate(CONTROLLED, 10.0, IntegratorConfig(step=1e-3))
    assert tr.final == pytest.approx(closed_form(CONTROLLED, 10.0), rel=1e-9)
    assert tr.final == pytest.approx(19.706, abs=5e-4)


def test_integrate_matches_hand_solution_saturation():
    expected = 1000.0 * (math.exp(0.5) - 1.0) / (10.0 * math.exp(0.5) - 5.0)
    tr = integrate(SATURATION, 10.0, IntegratorConfig(step=1e-3))
    assert tr.final == pytest.approx(expected, rel=1e-9)
    assert tr.final == pytest.approx(56.47, abs=5e-3)


def test_integrate_constant_at_fixed_point():
    p = ModelParams(10.0, 0.5, 100.0, 100.0)
    tr = integrate(p, 5.0, IntegratorConfig(step=0.1))
    assert (tr.values == 100.0).all()


def test_integrate_endpoints_and_grid():
    tr = integrate(CONTROLLED, 1.0, IntegratorConfig(step=0.1))
    assert tr.times[0] == 0.0
    assert tr.times[-1] == 1.0
    assert len(tr) == 11
    assert (np.diff(tr.times) > 0.0).all()


def test_integrate_partial_step_at_end():
    tr = integrate(CONTROLLED, 0.25, IntegratorConfig(step=0.1))
    assert tr.times[-1] == 0.25
    assert len(tr) == 4  # 0, 0.1, 0.2, 0.25


def test_integrate_budget_exceeded_attaches_partial():
    with pytest.raises(NumericalFailureError) as err:
        integrate(CONTROLLED, 10.0, IntegratorConfig(step=1e-3, max_steps=50))
    partial = err.value.partial
    assert isinstance(partial, Trajectory)
    assert len(partial) == 51
    assert partial.meta["truncated"] is True


def test_integrate_rejects_bad_horizon():
    with pytest.raises(InvalidInputError):
        integrate(CONTROLLED, 0.0)
    with pytest.raises(InvalidInputError):
        integrate(CONTROLLED, -2.0)


def test_integrate_sample_accuracy_against_closed_form():
    # per-sample oracle equivalence at h = 1e-3/|lambda|
    for p in (CONTROLLED, SATURATION):
        lam = classify_regime(p).lam
        h = 1e-3 / abs(lam)
        t_end = min(100.0, 20.0 / abs(lam))
        tr = integrate(p, t_end, IntegratorConfig(step=h))
        cf = closed_form(p, tr.times)
        rel = np.abs(tr.values - cf) / np.maximum(np.abs(cf), 1e-12 * p.n_max)
        assert rel.max() <= 1e-6


def test_integrate_bounded_and_monotone():
    tr = integrate(CONTROLLED, 30.0, IntegratorConfig(step=0.01))
    assert (tr.values >= 0.0).all()
    assert (tr.values <= 100.0 + 1e-9 * 100.0).all()
    assert (np.diff(tr.values) >= -1e-12).all()


def test_integrate_fourth_order_convergence():
    for p in (CONTROLLED, SATURATION):
        lam = abs(classify_regime(p).lam)
        h = 0.05 / lam
        t_end = 3.0 / lam
        errs = []
        for hh in (h, h / 2.0):
            tr = integrate(p, t_end, IntegratorConfig(step=hh))
            errs.append(abs(tr.final - closed_form(p, t_end)))
        assert 12.0 <= errs[0] / errs[1] <= 20.0


# --------------------------------------------------------- integrate_adaptive


def test_adaptive_reaches_closed_form_at_long_horizon():
    tr = integrate_adaptive(CONTROLLED, 50.0, IntegratorConfig(step=0.1, rel_tol=1e-8, abs_tol=1e-12))
    assert abs(tr.final - closed_form(CONTROLLED, 50.0)) <= 1e-6
    assert tr.times[-1] == 50.0


def test_adaptive_tracks_solution_along_the_path():
    tr = integrate_adaptive(CONTROLLED, 50.0, IntegratorConfig(step=0.1, rel_tol=1e-8, abs_tol=1e-12))
    dev = np.abs(tr.values - closed_form(CONTROLLED, tr.times))
    assert dev.max() <= 1e-5


def test_adaptive_decreasing_toward_zero():
    p = ModelParams(0.0, 1.0, 100.0, 50.0)
    tr = integrate_adaptive(p, 10.0, IntegratorConfig(step=0.1))
    assert (np.diff(tr.values) <= 1e-12).all()
    assert tr.final < 0.01


def test_adaptive_degenerate_case():
    tr = integrate_adaptive(CRITICAL, 20.0, IntegratorConfig(step=0.1))
    assert tr.final == pytest.approx(50.0, rel=1e-6)


def test_adaptive_uses_fewer_steps_than_fixed():
    fixed = integrate(CONTROLLED, 50.0, IntegratorConfig(step=1e-3))
    adaptive = integrate_adaptive(CONTROLLED, 50.0, IntegratorConfig(step=1e-3, rel_tol=1e-8))
    assert len(adaptive) < len(fixed) / 10


def test_adaptive_step_underflow_fails():
    # any reachable step is below 1e-14 of this horizon
    cfg = IntegratorConfig(step=0.1)
    with pytest.raises(NumericalFailureError, match="underflow"):
        integrate_adaptive(CONTROLLED, 1e16, cfg)


def test_adaptive_budget_exceeded():
    with pytest.raises(NumericalFailureError, match="budget"):
        integrate_adaptive(CONTROLLED, 50.0, IntegratorConfig(step=1e-6, rel_tol=1e-13, abs_tol=1e-13, max_steps=20))


# -------------------------------------------------------------- first_passage


def test_first_passage_hand_value():
    # solve 900*e^{-0.4 t} = 500 by hand: t = ln(1.8)/0.4
    expected = math.log(1.8) / 0.4
    res = first_passage(CONTROLLED, 10.0, IntegratorConfig(step=1e-3), t_max=10.0)
    assert res.reached
    assert res.time == pytest.approx(expected, abs=1e-6)
    assert res.time == pytest.approx(1.470, abs=1e-3)


def test_first_passage_level_above_limit():
    res = first_passage(CONTROLLED, 25.0, IntegratorConfig(step=0.01), t_max=10.0)
    assert not res.reached
    assert res.reason == "exceeds limit 20"


def test_first_passage_at_start_is_zero():
    res = first_passage(CONTROLLED, 0.0, IntegratorConfig(step=0.01), t_max=10.0)
    assert res.reached and res.time == 0.0


def test_first_passage_horizon_too_short():
    res = first_passage(CONTROLLED, 19.0, IntegratorConfig(step=0.01), t_max=0.5)
    assert not res.reached
    assert "t_max" in res.reason


def test_first_passage_decreasing_cases():
    p = ModelParams(10.0, 0.5, 100.0, 50.0)  # falls from 50 toward 20
    res = first_passage(p, 30.0, IntegratorConfig(step=0.01), t_max=20.0)
    assert res.reached and res.time > 0.0
    assert closed_form(p, res.time) == pytest.approx(30.0, abs=1e-6)
    below = first_passage(p, 10.0, IntegratorConfig(step=0.01), t_max=20.0)
    assert not below.reached and below.reason == "below limit 20"
    above = first_passage(p, 60.0, IntegratorConfig(step=0.01), t_max=20.0)
    assert not above.reached and above.reason == "exceeds initial value 50"


def test_first_passage_rejects_bad_inputs():
    with pytest.raises(InvalidInputError):
        first_passage(CONTROLLED, -1.0)
    with pytest.raises(InvalidInputError):
        first_passage(CONTROLLED, 5.0, t_max=0.0)


def test_first_passage_nondecreasing_in_protection():
    bs = np.linspace(0.1, 0.9, 5)
    level = 8.0  # below every limit on the grid
    times = []
    for b in bs:
        res = first_passage(ModelParams(10.0, b, 100.0, 0.0), level, IntegratorConfig(step=0.01), t_max=50.0)
        assert res.reached
        times.append(res.time)
    assert (np.diff(times) >= -1e-12).all()
