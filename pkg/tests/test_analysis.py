import numpy as np
import pytest

from ipdyn import (
    InvalidInputError,
    ModelParams,
    RegimeKind,
    closed_form,
    compare_levels,
    regime_map,
    sensitivity,
    simulate_stochastic,
)

BASE = ModelParams(10.0, 0.5, 100.0, 0.0)


# -------------------------------------------------------------- compare_levels


def test_compare_levels_stronger_protection_lower_counts():
    table = compare_levels(BASE, [0.05, 0.5], [10.0])
    assert table.shape == (2, 1)
    assert table[0, 0] == pytest.approx(56.47, abs=5e-3)
    assert table[1, 0] == pytest.approx(19.706, abs=5e-4)
    assert table[1, 0] < table[0, 0]


def test_compare_levels_duplicate_rows_identical():
    table = compare_levels(BASE, [0.3, 0.3], np.linspace(0.0, 10.0, 7))
    assert (table[0] == table[1]).all()


def test_compare_levels_time_zero_column_is_n0():
    base = ModelParams(10.0, 0.5, 100.0, 12.5)
    table = compare_levels(base, [0.1, 0.5, 1.0], [0.0, 1.0])
    assert (table[:, 0] == 12.5).all()


def test_compare_levels_validation():
    with pytest.raises(InvalidInputError):
        compare_levels(BASE, [], [1.0])
    with pytest.raises(InvalidInputError):
        compare_levels(BASE, [0.1], [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        compare_levels(BASE, [-0.1], [1.0])


def test_compare_levels_pointwise_comparative_statics():
    bs = [0.05, 0.1, 0.2, 0.4, 0.8]
    table = compare_levels(BASE, bs, np.linspace(0.0, 20.0, 41))
    assert (np.diff(table, axis=0) <= 1e-12).all()
    # strict beyond t = 0
    assert (np.diff(table[:, 1:], axis=0) < 0.0).all()


# ----------------------------------------------------------------- sensitivity


def test_sensitivity_long_run_matches_limit_derivative():
    # d(alpha/b)/db = -alpha/b^2 = -40 at the controlled limit
    res = sensitivity(BASE, 50.0, "b", eps=1e-5)
    assert res.value == pytest.approx(-40.0, rel=1e-3)
    assert not res.one_sided and not res.branch_crossing


def test_sensitivity_zero_at_time_zero():
    res = sensitivity(BASE, 0.0, "alpha")
    assert res.value == 0.0


def test_sensitivity_negative_during_transient():
    res = sensitivity(BASE, 1.0, "b")
    assert res.value < 0.0


def test_sensitivity_richardson_consistency():
    eps = 1e-4
    v1 = sensitivity(BASE, 3.0, "b", eps=eps).value
    v2 = sensitivity(BASE, 3.0, "b", eps=eps / 2.0).value
    assert v1 == pytest.approx(v2, rel=0.1)


def test_sensitivity_branch_crossing_flagged():
    near_critical = ModelParams(10.0, 0.1001, 100.0, 0.0)  # b*n_max barely above alpha
    res = sensitivity(near_critical, 5.0, "b", eps=1e-2)
    assert res.branch_crossing
    assert res.one_sided


def test_sensitivity_zero_parameter_uses_absolute_bump():
    p = ModelParams(10.0, 0.0, 100.0, 0.0)
    res = sensitivity(p, 5.0, "b", eps=1e-6)
    assert res.one_sided  # b - eps would be negative
    assert res.bump == pytest.approx(1e-6)
    assert res.value < 0.0


def test_sensitivity_validation():
    with pytest.raises(InvalidInputError):
        sensitivity(BASE, 1.0, "gamma")
    with pytest.raises(InvalidInputError):
        sensitivity(BASE, 1.0, "b", eps=1e-9)
    with pytest.raises(InvalidInputError):
        sensitivity(BASE, -1.0, "b")


# ------------------------------------------------------------------ regime_map


def test_regime_map_example_cells():
    grid = regime_map([5.0, 10.0], [0.05, 0.5], 100.0)
    assert grid[1][0].kind is RegimeKind.SATURATION  # alpha=10, b=0.05
    assert grid[1][1].kind is RegimeKind.CONTROLLED  # alpha=10, b=0.5
    assert grid[0][0].kind is RegimeKind.CRITICAL  # alpha=5, b=0.05 exactly
    assert grid[1][1].limit == 20.0


def test_regime_map_single_transition_along_rows():
    alphas = np.linspace(1.0, 20.0, 6)
    bs = np.linspace(0.001, 1.0, 25)
    grid = regime_map(alphas, bs, 100.0)
    rank = {RegimeKind.SATURATION: 0, RegimeKind.CRITICAL: 1, RegimeKind.CONTROLLED: 2}
    for row in grid:
        codes = [rank[reg.kind] for reg in row]
        assert codes == sorted(codes)
        assert codes[0] == 0 and codes[-1] == 2


def test_regime_map_validation():
    with pytest.raises(InvalidInputError):
        regime_map([], [0.1], 100.0)


# --------------------------------------------------------- simulate_stochastic


def test_stochastic_no_events_stays_zero():
    summary = simulate_stochastic(ModelParams(0.0, 0.0, 100.0, 0.0), [0.0, 1.0, 5.0], runs=20, seed=1)
    assert (summary.mean == 0.0).all()
    assert (summary.stderr == 0.0).all()


def test_stochastic_absorbed_at_cap():
    summary = simulate_stochastic(ModelParams(10.0, 0.5, 100.0, 100.0), [1.0, 2.0], runs=20, seed=1)
    assert (summary.mean == 100.0).all()


def test_stochastic_deterministic_given_seed():
    p = ModelParams(10.0, 0.5, 100.0, 0.0)
    a = simulate_stochastic(p, [1.0, 5.0], runs=50, seed=42)
    b = simulate_stochastic(p, [1.0, 5.0], runs=50, seed=42)
    assert (a.mean == b.mean).all() and (a.stderr == b.stderr).all()


def test_stochastic_seed_changes_draws():
    p = ModelParams(10.0, 0.5, 100.0, 0.0)
    a = simulate_stochastic(p, [1.0, 5.0], runs=50, seed=1)
    b = simulate_stochastic(p, [1.0, 5.0], runs=50, seed=2)
    assert (a.mean != b.mean).any()


def test_stochastic_mean_tracks_ode():
    p = ModelParams(10.0, 0.5, 100.0, 0.0)
    summary = simulate_stochastic(p, [5.0], runs=2000, seed=7)
    ode = closed_form(p, 5.0)
    assert summary.mean[0] == pytest.approx(ode, rel=0.05)
    assert summary.stderr[0] > 0.0


def test_stochastic_mean_error_shrinks_with_runs():
    # quadrupling the ensemble should roughly halve the mean's error, up to
    # statistical noise (and the O(1/n_max) mean-field bias floor)
    p = ModelParams(10.0, 0.5, 100.0, 0.0)
    ode = closed_form(p, 5.0)
    small = simulate_stochastic(p, [5.0], runs=60, seed=13)
    big = simulate_stochastic(p, [5.0], runs=240, seed=13)
    err_small = abs(small.mean[0] - ode)
    err_big = abs(big.mean[0] - ode)
    noise = 2.0 * (small.stderr[0] + big.stderr[0])
    assert err_big <= 0.5 * err_small + noise


def test_stochastic_single_run_zero_stderr():
    p = ModelParams(10.0, 0.5, 100.0, 0.0)
    summary = simulate_stochastic(p, [1.0], runs=1, seed=3)
    assert summary.stderr[0] == 0.0


def test_stochastic_validation():
    p = ModelParams(10.0, 0.5, 100.0, 0.0)
    with pytest.raises(InvalidInputError):
        simulate_stochastic(ModelParams(10.0, 0.5, 100.5, 0.0), [1.0], runs=5, seed=0)
    with pytest.raises(InvalidInputError):
        simulate_stochastic(ModelParams(10.0, 0.5, 100.0, 0.5), [1.0], runs=5, seed=0)
    with pytest.raises(InvalidInputError):
        simulate_stochastic(p, [1.0], runs=0, seed=0)
    with pytest.raises(InvalidInputError):
        simulate_stochastic(p, [1.0, 0.5], runs=5, seed=0)
    with pytest.raises(InvalidInputError):
        simulate_stochastic(p, [], runs=5, seed=0)
