"""Core infringement-dynamics model.

The state N(t) counts active infringements in a market that saturates at
n_max. New infringements appear at intrinsic rate alpha, protection of
intensity b removes them in proportion to their count, and both effects
are damped by the remaining market headroom:

    dN/dt = (1 - N/n_max) * (alpha - b*N)

The long-run behavior splits into three regimes on the sign of
lambda = (alpha - b*n_max) / n_max:

* Saturation (lambda > 0, weak protection): N -> n_max.
* Controlled (lambda < 0, strong protection): N -> alpha/b < n_max.
* Critical (alpha = b*n_max): the two fixed points coincide and N -> n_max
  algebraically (~1/t) instead of exponentially.

``closed_form`` evaluates the exact solution of the ODE obtained by
separation of variables and partial fractions; the non-degenerate branch is

    N(t) = (R0*E*n_max - alpha) / (R0*E - b),
    R0 = (alpha - b*n0) / (n_max - n0),  E = exp(lambda*t)

and the degenerate (critical) branch is

    N(t) = n_max - (n_max - n0) / (1 + b*(n_max - n0)*t/n_max).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidInputError, NumericalFailureError

#: Default relative tolerance deciding whether alpha and b*n_max coincide.
TOL_CRIT = 1e-9

#: Absolute time tolerance for bisection-based inversions.
TIME_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """One model instance.

    alpha: infringement inflow rate (count per unit time), >= 0.
    b: protection intensity (per unit time), >= 0.
    n_max: market saturation count, > 0.
    n0: initial infringement count, in [0, n_max]; defaults to a clean
        market at launch.
    """

    alpha: float
    b: float
    n_max: float
    n0: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "b", "n_max", "n0"):
            raw = getattr(self, name)
            try:
                val = float(raw)
            except (TypeError, ValueError):
                raise InvalidInputError(f"{name} must be a real number, got {raw!r}") from None
            if not math.isfinite(val):
                raise InvalidInputError(f"{name} must be finite, got {val!r}")
            object.__setattr__(self, name, val)
        if self.alpha < 0.0:
            raise InvalidInputError(f"alpha must be >= 0, got {self.alpha}")
        if self.b < 0.0:
            raise InvalidInputError(f"b must be >= 0, got {self.b}")
        if self.n_max <= 0.0:
            raise InvalidInputError(f"n_max must be > 0, got {self.n_max}")
        if not 0.0 <= self.n0 <= self.n_max:
            raise InvalidInputError(
                f"n0 must be in [0, n_max] = [0, {self.n_max}], got {self.n0}"
            )


class RegimeKind(str, Enum):
    SATURATION = "Saturation"
    CONTROLLED = "Controlled"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class Regime:
    """Long-run classification of a model instance.

    ``lam`` is the convergence exponent (alpha - b*n_max)/n_max; its sign
    matches the kind (positive in Saturation, negative in Controlled,
    zero-ish in Critical). ``stationary`` marks trajectories that start on
    an exact fixed point and therefore never move; for those the reported
    limit is n0 itself.
    """

    kind: RegimeKind
    limit: float
    lam: float
    stationary: bool = False


@dataclass(frozen=True)
class Equilibrium:
    """A fixed point of the dynamics with its one-dimensional stability."""

    value: float
    stability: str  # "stable" | "unstable" | "semi-stable"
    in_domain: bool = True


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered samples (t, N), from integration, synthesis or observation.

    Times must be nonnegative and strictly increasing; values nonnegative and
    finite. Observed/synthetic series may carry noise, so no upper bound is
    enforced here; integrator outputs stay within [0, n_max] by construction.
    """

    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or values.ndim != 1:
            raise InvalidInputError("times and values must be one-dimensional")
        if times.size == 0:
            raise InvalidInputError("trajectory must be nonempty")
        if times.size != values.size:
            raise InvalidInputError(
                f"times and values must have equal length, got {times.size} != {values.size}"
            )
        if not np.all(np.isfinite(times)):
            raise InvalidInputError("times must be finite")
        if times[0] < 0.0:
            raise InvalidInputError("times must be >= 0")
        if times.size > 1 and not np.all(np.diff(times) > 0.0):
            raise InvalidInputError("times must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("values must be finite")
        if np.any(values < 0.0):
            raise InvalidInputError("values must be >= 0")

    def __len__(self):
        return int(self.times.size)

    @property
    def final(self) -> float:
        return float(self.values[-1])


def rhs(params: ModelParams, n):
    """Rate of change dN/dt at count ``n``: (1 - n/n_max) * (alpha - b*n).

    Accepts a scalar or array ``n``; no clamping is applied, the algebraic
    form is evaluated as written.
    """
    arr = np.asarray(n, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("n must be finite")
    out = (1.0 - arr / params.n_max) * (params.alpha - params.b * arr)
    return float(out) if arr.ndim == 0 else out


def _is_critical(params: ModelParams, tol_crit: float) -> bool:
    cap = params.b * params.n_max
    return abs(cap - params.alpha) <= tol_crit * max(params.alpha, cap)


def classify_regime(params: ModelParams, tol_crit: float = TOL_CRIT) -> Regime:
    """Classify long-run behavior and report the limit and exponent."""
    if not 0.0 < tol_crit <= 0.1:
        raise InvalidInputError(f"tol_crit must be in (0, 0.1], got {tol_crit}")
    cap = params.b * params.n_max
    lam = (params.alpha - cap) / params.n_max
    if _is_critical(params, tol_crit):
        kind, limit = RegimeKind.CRITICAL, params.n_max
    elif cap < params.alpha:
        kind, limit = RegimeKind.SATURATION, params.n_max
    else:
        kind, limit = RegimeKind.CONTROLLED, params.alpha / params.b
    stationary = rhs(params, params.n0) == 0.0
    if stationary:
        limit = params.n0
    return Regime(kind=kind, limit=limit, lam=lam, stationary=stationary)


def equilibria(params: ModelParams, tol_crit: float = TOL_CRIT) -> list[Equilibrium]:
    """Fixed points of the dynamics with stability labels.

    For b > 0 the candidates are n_max and alpha/b; in the Saturation regime
    alpha/b exceeds n_max and is reported with ``in_domain=False``. When the
    two coincide (Critical) the single point is semi-stable: attracting from
    below, repelling above. For b = 0 only n_max remains (alpha = b = 0 makes
    every point fixed; n_max is then reported as the degenerate marker).
    """
    a, b, nm = params.alpha, params.b, params.n_max
    if b == 0.0:
        return [Equilibrium(nm, "stable" if a > 0.0 else "semi-stable")]
    interior = a / b
    if _is_critical(params, tol_crit):
        return [Equilibrium(nm, "semi-stable")]
    if interior < nm:
        return [Equilibrium(interior, "stable"), Equilibrium(nm, "unstable")]
    return [Equilibrium(nm, "stable"), Equilibrium(interior, "unstable", in_domain=False)]


def _count_fn(params: ModelParams, tol_crit: float = TOL_CRIT):
    """Fast scalar t -> N(t) closure for hot loops (quadrature, bisection).

    Skips per-call validation and the exact-t=0 override of ``closed_form``;
    callers must pass finite t >= 0.
    """
    a, b, nm, n0 = params.alpha, params.b, params.n_max, params.n0
    if n0 == nm:
        return lambda t: nm
    if _is_critical(params, tol_crit):
        u0 = nm - n0
        c = b * u0 / nm
        return lambda t: nm - u0 / (1.0 + c * t)
    lam = (a - b * nm) / nm
    p = a - b * n0
    q = nm - n0
    nmp = nm * p
    aq = a * q
    bq = b * q
    if lam < 0.0:

        def falling(t):
            e = math.exp(lam * t)
            return (e * nmp - aq) / (e * p - bq)

        return falling

    def rising(t):
        f = math.exp(-lam * t)
        return (nmp - f * aq) / (p - f * bq)

    return rising


def closed_form(params: ModelParams, t, tol_crit: float = TOL_CRIT):
    """Exact solution N(t) of the ODE; scalar or array ``t``, all >= 0.

    Non-degenerate and degenerate branches as in the module docstring;
    N(0) == n0 exactly in all branches, and n0 == n_max yields the constant
    n_max. The rising branch is evaluated with exp(-lambda*t) so large
    horizons cannot overflow.
    """
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise InvalidInputError("t must be finite")
    if np.any(t_arr < 0.0):
        raise InvalidInputError("t must be >= 0")
    a, b, nm, n0 = params.alpha, params.b, params.n_max, params.n0
    scalar = t_arr.ndim == 0
    tt = np.atleast_1d(t_arr)
    if n0 == nm:
        out = np.full(tt.shape, nm)
    elif _is_critical(params, tol_crit):
        u0 = nm - n0
        out = nm - u0 / (1.0 + (b * u0 / nm) * tt)
        out = np.where(tt == 0.0, n0, out)
    else:
        lam = (a - b * nm) / nm
        p = a - b * n0
        q = nm - n0
        if lam < 0.0:
            e = np.exp(lam * tt)
            out = (e * (nm * p) - a * q) / (e * p - b * q)
        else:
            f = np.exp(-lam * tt)
            out = ((nm * p) - f * (a * q)) / (p - f * (b * q))
        out = np.where(tt == 0.0, n0, out)
    return float(out[0]) if scalar else out


def _invert_bisect(params: ModelParams, target: float, tol_crit: float) -> float:
    """Smallest t with N(t) = target by bracket doubling plus bisection.

    Requires an increasing trajectory with n0 < target < limit.
    """
    fn = _count_fn(params, tol_crit)
    hi = 1.0
    while fn(hi) < target:
        hi *= 2.0
        if hi > 1e18:
            raise NumericalFailureError(
                f"settling_time: bisection bracket exceeded 1e18 time units "
                f"(alpha={params.alpha:g}, b={params.b:g}, n_max={params.n_max:g}, "
                f"n0={params.n0:g}, target={target:g})"
            )
    lo = 0.0
    while hi - lo > TIME_TOL:
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def settling_time(params: ModelParams, fraction: float, tol_crit: float = TOL_CRIT) -> float:
    """First time the trajectory reaches ``fraction`` of its long-run limit.

    Returns 0 when the start already meets the target. Inversion is analytic
    on both branches, with a bisection fallback when rounding pushes the
    analytic value off target by more than 1e-6 * limit.
    """
    try:
        frac = float(fraction)
    except (TypeError, ValueError):
        raise InvalidInputError(f"fraction must be a real number, got {fraction!r}") from None
    if not 0.0 < frac < 1.0:
        raise InvalidInputError(f"fraction must be in (0, 1), got {frac}")
    reg = classify_regime(params, tol_crit)
    target = frac * reg.limit
    if params.n0 >= target:
        return 0.0
    # From here the trajectory rises strictly toward the limit: n0 < target < limit.
    a, b, nm, n0 = params.alpha, params.b, params.n_max, params.n0
    if reg.kind is RegimeKind.CRITICAL:
        u_t = nm - target
        u0 = nm - n0
        t = (nm / b) * (1.0 / u_t - 1.0 / u0)
    else:
        r_t = (a - b * target) / (nm - target)
        r_0 = (a - b * n0) / (nm - n0)
        ratio = r_t / r_0
        t = math.log(ratio) / reg.lam if ratio > 0.0 else math.nan
    if not math.isfinite(t) or t < 0.0 or abs(closed_form(params, max(t, 0.0), tol_crit) - target) > 1e-6 * reg.limit:
        t = _invert_bisect(params, target, tol_crit)
    return t
