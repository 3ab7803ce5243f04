"""Numerical solution of the infringement ODE.

Fixed-step classical RK4 is the reference method; a step-doubling adaptive
variant is provided for long horizons. The equation is scalar, smooth and
cheap, so nothing fancier is warranted. Dense output is the accepted-step
sequence, and first-passage locations are refined by bisection with
re-integration over the bracketing step rather than interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailureError
from .model import ModelParams, Trajectory, classify_regime

#: Relative overshoot (in units of n_max) silently clamped back into
#: [0, n_max]; anything larger is reported as a numerical failure.
OVERSHOOT_TOL = 1e-9

#: Absolute time tolerance for first-passage bisection.
TIME_TOL = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size and error-control settings.

    ``step`` is the fixed step of ``integrate`` and the initial step of
    ``integrate_adaptive``; ``rel_tol``/``abs_tol`` bound the per-step local
    error estimate in adaptive mode; ``max_steps`` caps the work budget.
    """

    step: float = 1e-3
    rel_tol: float = 1e-8
    abs_tol: float = 1e-9
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0.0):
            raise InvalidInputError(f"step must be > 0, got {self.step}")
        if not (math.isfinite(self.rel_tol) and self.rel_tol > 0.0):
            raise InvalidInputError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not (math.isfinite(self.abs_tol) and self.abs_tol > 0.0):
            raise InvalidInputError(f"abs_tol must be > 0, got {self.abs_tol}")
        if self.max_steps < 1:
            raise InvalidInputError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass(frozen=True)
class PassageResult:
    """Outcome of a first-passage search: a hit time or a reason it missed."""

    reached: bool
    time: float | None = None
    reason: str | None = None


def _rhs_fn(params: ModelParams):
    a, b, nm = params.alpha, params.b, params.n_max
    return lambda n: (1.0 - n / nm) * (a - b * n)


def _rk4_raw(f, n: float, h: float) -> float:
    k1 = f(n)
    k2 = f(n + 0.5 * h * k1)
    k3 = f(n + 0.5 * h * k2)
    k4 = f(n + h * k3)
    return n + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _clamp(value: float, n_max: float, context: str, partial=None) -> float:
    slack = OVERSHOOT_TOL * n_max
    if not math.isfinite(value):
        raise NumericalFailureError(f"{context}: non-finite update {value!r}", partial=partial)
    if value < -slack or value > n_max + slack:
        raise NumericalFailureError(
            f"{context}: overshoot {value!r} outside [0, {n_max}] beyond tolerance {slack:g}",
            partial=partial,
        )
    return min(max(value, 0.0), n_max)


def step_rk4(params: ModelParams, n: float, h: float) -> float:
    """One classical RK4 update from count ``n`` over step ``h``."""
    if not (math.isfinite(h) and h > 0.0):
        raise InvalidInputError(f"h must be > 0, got {h}")
    if not math.isfinite(n):
        raise InvalidInputError(f"n must be finite, got {n!r}")
    out = _rk4_raw(_rhs_fn(params), float(n), float(h))
    ctx = f"step_rk4(alpha={params.alpha:g}, b={params.b:g}, n_max={params.n_max:g}, n={n:g}, h={h:g})"
    return _clamp(out, params.n_max, ctx)


def _params_str(params: ModelParams) -> str:
    return (
        f"alpha={params.alpha:g}, b={params.b:g}, "
        f"n_max={params.n_max:g}, n0={params.n0:g}"
    )


def integrate(params: ModelParams, t_end: float, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Fixed-step RK4 from 0 to ``t_end`` inclusive, sampled at every step."""
    if not (math.isfinite(t_end) and t_end > 0.0):
        raise InvalidInputError(f"t_end must be > 0, got {t_end}")
    h = cfg.step
    n_full = int(math.floor(t_end / h + 1e-12))
    residual = t_end - n_full * h
    has_residual = residual > 1e-12 * max(h, t_end)
    f = _rhs_fn(params)
    nm = params.n_max
    meta = {"op": "integrate", **_meta_params(params), "step": h, "t_end": t_end}

    times = [0.0]
    values = [params.n0]
    n = params.n0
    ctx = f"integrate({_params_str(params)}, t_end={t_end:g}, step={h:g})"

    def budget_error():
        partial = Trajectory(np.array(times), np.array(values), {**meta, "truncated": True})
        return NumericalFailureError(
            f"{ctx}: step budget {cfg.max_steps} exceeded", partial=partial
        )

    for i in range(n_full):
        if i >= cfg.max_steps:
            raise budget_error()
        try:
            n = _clamp(_rk4_raw(f, n, h), nm, ctx)
        except NumericalFailureError as err:
            err.partial = Trajectory(np.array(times), np.array(values), {**meta, "truncated": True})
            raise
        times.append((i + 1) * h)
        values.append(n)
    if has_residual:
        if n_full >= cfg.max_steps:
            raise budget_error()
        try:
            n = _clamp(_rk4_raw(f, n, residual), nm, ctx)
        except NumericalFailureError as err:
            err.partial = Trajectory(np.array(times), np.array(values), {**meta, "truncated": True})
            raise
        times.append(t_end)
        values.append(n)
    else:
        times[-1] = t_end  # i*h can land a few ulp off the requested endpoint
    return Trajectory(np.array(times), np.array(values), meta)


def _meta_params(params: ModelParams) -> dict:
    return {"alpha": params.alpha, "b": params.b, "n_max": params.n_max, "n0": params.n0}


def integrate_adaptive(
    params: ModelParams, t_end: float, cfg: IntegratorConfig = IntegratorConfig()
) -> Trajectory:
    """Step-doubling RK4 with per-step error control.

    Each trial compares one full step against two half steps; the step is
    accepted when |err| <= rel_tol*|N| + abs_tol, halved on rejection, and
    grown by at most 2x on acceptance.
    """
    if not (math.isfinite(t_end) and t_end > 0.0):
        raise InvalidInputError(f"t_end must be > 0, got {t_end}")
    f = _rhs_fn(params)
    nm = params.n_max
    meta = {"op": "integrate_adaptive", **_meta_params(params), "t_end": t_end}
    ctx = f"integrate_adaptive({_params_str(params)}, t_end={t_end:g})"

    times = [0.0]
    values = [params.n0]
    t = 0.0
    n = params.n0
    h = min(cfg.step, t_end)
    attempts = 0
    while t < t_end:
        remaining = t_end - t
        last = h >= remaining
        hh = remaining if last else h
        if hh < 1e-14 * t_end:
            partial = Trajectory(np.array(times), np.array(values), {**meta, "truncated": True})
            raise NumericalFailureError(f"{ctx}: step underflow at t={t:g}", partial=partial)
        if attempts >= cfg.max_steps:
            partial = Trajectory(np.array(times), np.array(values), {**meta, "truncated": True})
            raise NumericalFailureError(
                f"{ctx}: step budget {cfg.max_steps} exceeded at t={t:g}", partial=partial
            )
        attempts += 1
        y1 = _rk4_raw(f, n, hh)
        ym = _rk4_raw(f, n, 0.5 * hh)
        y2 = _rk4_raw(f, ym, 0.5 * hh)
        if not (math.isfinite(y1) and math.isfinite(y2)):
            h = 0.5 * hh
            continue
        err = abs(y2 - y1) / 15.0
        tol = cfg.rel_tol * abs(y2) + cfg.abs_tol
        if err > tol:
            h = 0.5 * hh
            continue
        try:
            n = _clamp(y2, nm, ctx)
        except NumericalFailureError:
            h = 0.5 * hh
            continue
        t = t_end if last else t + hh
        times.append(t)
        values.append(n)
        grow = 2.0 if err == 0.0 else min(2.0, 0.9 * (tol / err) ** 0.2)
        h = hh * grow
    return Trajectory(np.array(times), np.array(values), meta)


def first_passage(
    params: ModelParams,
    level: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    t_max: float = 100.0,
) -> PassageResult:
    """Smallest t <= t_max with N(t) = level, or why there is none.

    Scans the fixed-step dense output for a bracketing step, then bisects,
    re-integrating from the bracket start with a single RK4 sub-step per
    probe. Unreachable levels and too-short horizons are distinguished in
    the returned reason.
    """
    level = float(level)
    if not math.isfinite(level) or level < 0.0:
        raise InvalidInputError(f"level must be finite and >= 0, got {level}")
    if not (math.isfinite(t_max) and t_max > 0.0):
        raise InvalidInputError(f"t_max must be > 0, got {t_max}")
    n0 = params.n0
    if level == n0:
        return PassageResult(True, 0.0)
    reg = classify_regime(params)
    increasing = reg.limit > n0
    lo, hi = (n0, reg.limit) if increasing else (reg.limit, n0)
    if level > hi:
        what = "limit" if increasing else "initial value"
        return PassageResult(False, reason=f"exceeds {what} {hi:g}")
    if level < lo:
        what = "initial value" if increasing else "limit"
        return PassageResult(False, reason=f"below {what} {lo:g}")

    traj = integrate(params, t_max, cfg)
    values = traj.values
    hit = values >= level if increasing else values <= level
    if not hit.any():
        return PassageResult(False, reason=f"not reached within t_max {t_max:g}")
    i = int(np.argmax(hit))
    if values[i] == level:
        return PassageResult(True, float(traj.times[i]))
    # Bracket between samples i-1 and i (i >= 1 since values[0] = n0 misses).
    t_lo = float(traj.times[i - 1])
    t_hi = float(traj.times[i])
    anchor_t = t_lo
    anchor_v = float(values[i - 1])
    f = _rhs_fn(params)

    def n_at(tau: float) -> float:
        # one RK4 sub-step from the fixed bracket anchor
        return _rk4_raw(f, anchor_v, tau - anchor_t)

    while t_hi - t_lo > TIME_TOL:
        mid = 0.5 * (t_lo + t_hi)
        before = (n_at(mid) < level) if increasing else (n_at(mid) > level)
        if before:
            t_lo = mid
        else:
            t_hi = mid
    return PassageResult(True, 0.5 * (t_lo + t_hi))
