"""Post-processing over recorded trajectories: rate fits, bound checks,
cycle detection, discrete-vs-flow comparison, and diagnostics.

Everything here is pure and operates on immutable trajectory records, so
analyses of different experiments can run independently.

Conventions fixed by this module:

* Rate fits use the trailing window (default the last half) of the gap
  sequence, excluding values at or below 1e-14 where rounding noise
  dominates.  The early window is skipped deliberately: momentum methods
  oscillate before settling into their asymptotic contraction.
* Strongly convex pass thresholds use the half-strength constant
  1 - 1/(2 sqrt(kappa)).  The known rates are stated as orders, so the
  factor 1/2 absorbs the constants.
* spectral_gap(obj, p) = alpha / (beta * mu): transverse contraction over
  the slowest tangential rate beta*mu of the reduced gradient flow.  With
  alpha = mu and beta = 1/L this equals L (and kappa once mu = 1).  Values
  far above 1 indicate the regime where the manifold dynamics stay slow
  relative to the collapse onto it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .exceptions import InsufficientDataError, InvalidSpecError, \
    TrajectoryMismatchError, UndefinedConditionNumberError
from .flows import FlowTrajectory
from .geometry import ManifoldParams
from .objectives import Objective
from .optimizers import MONOTONE_EPS, Trajectory

#: gaps at or below this are rounding noise and excluded from rate fits
GAP_FLOOR = 1e-14


@dataclass(frozen=True)
class RateReport:
    """Least-squares contraction estimate over the trailing fit window.

    theoretical and verdict are filled by the bound checkers; a bare
    fit_rate leaves them None.  Serializes with these exact field names.
    """

    fitted_contraction: float
    r_squared: float
    theoretical: Optional[float]
    verdict: Optional[str]              # "pass" / "fail" / None
    window: Tuple[int, int]

    def to_json(self) -> dict:
        return {
            "fitted_contraction": self.fitted_contraction,
            "r_squared": self.r_squared,
            "theoretical": self.theoretical,
            "verdict": self.verdict,
            "window": [int(self.window[0]), int(self.window[1])],
        }


@dataclass(frozen=True)
class CycleReport:
    """Outcome of recurrence detection on a non-descent trajectory."""

    converged: bool
    recurrence_period: Optional[int]
    min_recurrence_distance: float
    gap_floor: float

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "recurrence_period": self.recurrence_period,
            "min_recurrence_distance": self.min_recurrence_distance,
            "gap_floor": self.gap_floor,
        }


def fit_rate(gaps, window_fraction: float = 0.5) -> RateReport:
    """Fit f_gap ~ C r^k over the trailing window; returns r = exp(slope).

    Needs at least 20 gaps overall and 10 usable points inside the window
    (finite, above the 1e-14 floor).  Slopes >= 0 (non-contracting input)
    report a contraction of exactly 1.0.
    """
    gaps = np.asarray(gaps, dtype=float)
    if gaps.ndim != 1 or len(gaps) < 20:
        raise InvalidSpecError("rate fit needs at least 20 gap values")
    if not 0.0 < window_fraction <= 1.0:
        raise InvalidSpecError("window_fraction must lie in (0, 1]")
    n = len(gaps)
    ks = np.arange(n)
    start = int(np.floor(n * (1.0 - window_fraction)))
    usable = (ks >= start) & np.isfinite(gaps) & (gaps > GAP_FLOOR)
    if int(usable.sum()) < 10:
        raise InsufficientDataError(
            f"only {int(usable.sum())} usable gaps in the fit window "
            f"(need 10); the run may have hit the 1e-14 floor")
    kk = ks[usable].astype(float)
    ll = np.log(gaps[usable])
    slope, intercept = np.polyfit(kk, ll, 1)
    pred = slope * kk + intercept
    sst = float(np.sum((ll - ll.mean()) ** 2))
    if np.all(ll == ll[0]) or sst == 0.0:
        # constant input: the fit is exact and sst is pure rounding noise
        r2 = 1.0
    else:
        r2 = 1.0 - float(np.sum((ll - pred) ** 2)) / sst
    fitted = min(float(np.exp(slope)), 1.0)
    return RateReport(
        fitted_contraction=fitted,
        r_squared=min(max(r2, 0.0), 1.0),
        theoretical=None,
        verdict=None,
        window=(int(kk[0]), int(kk[-1])),
    )


def check_sc_rate(traj: Trajectory, kappa: float,
                  window_fraction: float = 0.5) -> RateReport:
    """Fit the trajectory's contraction and compare against 1 - 1/(2 sqrt(kappa))."""
    if traj.f_gaps is None:
        raise InvalidSpecError("rate check needs f_gaps (known fmin)")
    if not kappa >= 1.0:
        raise InvalidSpecError("kappa must be >= 1")
    base = fit_rate(traj.f_gaps, window_fraction)
    theoretical = 1.0 - 1.0 / (2.0 * np.sqrt(kappa))
    verdict = "pass" if base.fitted_contraction <= theoretical else "fail"
    return RateReport(
        fitted_contraction=base.fitted_contraction,
        r_squared=base.r_squared,
        theoretical=float(theoretical),
        verdict=verdict,
        window=base.window,
    )


def check_convex_bound(traj: Trajectory, obj: Objective, x0, xstar,
                       factor: float = 1.01) -> bool:
    """True iff f(x_k) - f(x*) <= factor * 2L ||x0 - x*||^2 / (k+1)^2 for all k >= 1.

    xstar is the cached high-accuracy minimizer for the instance; the check
    is relative to it, not to any analytic optimum.  factor defaults to the
    1% tolerance; pass 0.25 to use the quarter-strength envelope as a
    negative control.
    """
    x0 = np.asarray(x0, dtype=float)
    xstar = np.asarray(xstar, dtype=float)
    r2 = float(np.sum((x0 - xstar) ** 2))
    fstar = float(obj.value(xstar))
    n = len(traj.f_vals)
    if n < 2:
        return True
    ks = np.arange(1, n)
    bounds = factor * 2.0 * obj.lip * r2 / (ks + 1.0) ** 2
    gaps = traj.f_vals[1:] - fstar
    return bool(np.all(gaps <= bounds))


def detect_cycle(traj: Trajectory, transient_fraction: float = 0.5,
                 tol: float = 1e-6) -> CycleReport:
    """Classify a run as converged or cycling.

    Converged iff the trailing f_gap is <= tol.  Otherwise searches the
    post-transient tail for the minimal period p such that
    ||x_{k+p} - x_k|| <= tol (1 + ||x_k||) for every k in the tail.  The
    search only runs when the tail gaps stay above tol, so converged runs
    can never be labelled with a spurious period.
    """
    if len(traj) < 100:
        raise InvalidSpecError("cycle detection needs >= 100 states")
    if not 0.0 <= transient_fraction < 1.0:
        raise InvalidSpecError("transient_fraction must lie in [0, 1)")
    if traj.f_gaps is None:
        raise InvalidSpecError("cycle detection needs f_gaps (known fmin)")
    n = len(traj)
    start = int(n * transient_fraction)
    tail_gaps = traj.f_gaps[start:]
    gap_floor = float(np.min(tail_gaps))
    if traj.f_gaps[-1] <= tol:
        return CycleReport(converged=True, recurrence_period=None,
                           min_recurrence_distance=0.0, gap_floor=gap_floor)
    if gap_floor <= tol:
        # dips to the optimum inside the tail: no honest recurrence claim
        return CycleReport(converged=False, recurrence_period=None,
                           min_recurrence_distance=0.0, gap_floor=gap_floor)
    tail = traj.xs[start:]
    m = len(tail)
    best = np.inf
    for p in range(1, m // 2 + 1):
        d = np.linalg.norm(tail[p:] - tail[:-p], axis=1)
        scale = 1.0 + np.linalg.norm(tail[:-p], axis=1)
        worst = float(np.max(d / scale))
        if worst <= tol:
            return CycleReport(converged=False, recurrence_period=p,
                               min_recurrence_distance=worst,
                               gap_floor=gap_floor)
        best = min(best, worst)
    return CycleReport(converged=False, recurrence_period=None,
                       min_recurrence_distance=best, gap_floor=gap_floor)


TimeMap = Union[float, Callable[[int], float]]


def deviation_profile(traj, flow, time_map: TimeMap):
    """Per-iterate deviation curve: (t_k, ||x_k - x_flow(t_k)||) arrays.

    time_map is either a callable k -> t or a plain step Delta (then
    t_k = k * Delta).  The natural pairings are Delta = sqrt(1/L) for
    NagSC against HighResSC and Delta = 1 for GD against GradientFlow.
    Arguments may be given in either order.  Trajectories of different
    objectives, or discrete horizons beyond the sampled flow range, raise
    TrajectoryMismatchError.  Flow samples are linearly interpolated.
    """
    if isinstance(traj, FlowTrajectory) and isinstance(flow, Trajectory):
        traj, flow = flow, traj
    if not isinstance(traj, Trajectory) or not isinstance(flow, FlowTrajectory):
        raise InvalidSpecError(
            "comparison needs one discrete Trajectory and one FlowTrajectory")
    if traj.obj_fingerprint != flow.obj_fingerprint:
        raise TrajectoryMismatchError(
            "trajectories were recorded on different objectives")
    n = len(traj)
    if callable(time_map):
        ts = np.array([float(time_map(k)) for k in range(n)])
    else:
        delta = float(time_map)
        if delta <= 0.0:
            raise InvalidSpecError("time step must be positive")
        ts = delta * np.arange(n)
    t_flow = flow.t
    span = max(1.0, float(t_flow[-1]))
    if ts[-1] > t_flow[-1] + 1e-9 * span or ts[0] < t_flow[0] - 1e-9 * span:
        raise TrajectoryMismatchError(
            f"discrete horizon t={ts[-1]:.6g} outside the sampled flow "
            f"range [{t_flow[0]:.6g}, {t_flow[-1]:.6g}]")
    xs = traj.xs
    interp = np.column_stack([
        np.interp(ts, t_flow, flow.x1[:, j]) for j in range(flow.x1.shape[1])
    ])
    return ts, np.linalg.norm(xs - interp, axis=1)


def compare_discrete_flow(traj, flow, time_map: TimeMap) -> float:
    """max_k ||x_k - x_flow(t_k)||; see deviation_profile for conventions."""
    _, devs = deviation_profile(traj, flow, time_map)
    return float(np.max(devs))


def spectral_gap(obj: Objective, p: ManifoldParams) -> float:
    """alpha / (beta * mu): transverse rate over the slowest tangential rate."""
    if obj.mu <= 0.0:
        raise UndefinedConditionNumberError(
            "spectral gap needs mu > 0 (slowest tangential rate beta*mu)")
    return float(p.alpha / (p.beta * obj.mu))


def monotonicity_report(traj: Trajectory) -> int:
    """Count of steps where f_gap increases beyond the 1e-14 tolerance."""
    if traj.f_gaps is None:
        raise InvalidSpecError("monotonicity report needs f_gaps")
    g = traj.f_gaps
    return int(np.sum(g[1:] > g[:-1] + MONOTONE_EPS))
