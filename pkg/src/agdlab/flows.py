"""Continuous-time counterparts of the discrete methods.

Seven right-hand sides share one fixed-step classical Runge-Kutta (RK4)
integrator.  With x = (x1, x2), all second-order variants have dx1 = x2 and

  GradientFlow        dx1 = -rate * grad f(x1)              (first order; x2 carried)
  ControlledNaim      dx2 = -beta hess f x2 - alpha (x2 + beta grad f)
  PerturbedNaim       dx2 = -beta hess f x2 - alpha [(x2 + beta grad f)
                                                     + (x2 + (1/alpha) grad f)]
  HighResSC           dx2 = -(1/sqrt L) hess f x2 - 2 sqrt(mu) x2
                            - (1 + sqrt(mu/L)) grad f
  HighResConvex       dx2 = -(3/t) x2 - (1/sqrt L) hess f x2
                            - (1 + 3/(2 sqrt L)) grad f          (t >= t0 > 0)
  HeavyBallFlow       HighResSC with the Hessian-damping term deleted
  TripleMomentumFlow  dx2 = -(1/L + gamma) hess f x2 - mu x2 - (1 + mu/L) grad f

ControlledNaim is the closed loop of geometry.control_law, so the manifold
residual M = x2 + beta grad f obeys Mdot = -alpha M exactly along it.
PerturbedNaim adds the decaying perturbation term, giving the exact identity
Mdot = -alpha (M + M_p) with M_p = x2 + (1/alpha) grad f.

Integration is deterministic fixed-step RK4 (adaptive stepping would
confound rate fitting).  The default step is 0.01/sqrt(lip); steps beyond
the documented stability guard h <= 2/sqrt(lip) are allowed but typically
diverge, which surfaces as a DivergenceError carrying the step index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DivergenceError, InvalidSpecError, TimeDomainError
from .geometry import ManifoldParams, PhaseState, control_law, residual_m0, \
    residual_mp, storage
from .objectives import Objective

VARIANTS = ("GradientFlow", "ControlledNaim", "PerturbedNaim", "HighResSC",
            "HighResConvex", "HeavyBallFlow", "TripleMomentumFlow")


@dataclass(frozen=True)
class FlowSpec:
    """A flow variant plus its rate parameters.

    Unset parameters resolve against the objective at integration time:
    rate and beta default to 1/lip, gamma and t0 to 1/sqrt(lip), alpha
    to 1.  Only the parameters a variant actually uses matter.
    """

    variant: str
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    rate: Optional[float] = None
    t0: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidSpecError(f"unknown flow variant {self.variant!r}")
        for name in ("alpha", "beta", "gamma", "rate", "t0"):
            v = getattr(self, name)
            if v is not None and not (v > 0.0):
                raise InvalidSpecError(f"flow parameter {name} must be positive")

    def resolve(self, obj: Objective) -> "FlowSpec":
        """Fill unset parameters with their objective-derived defaults."""
        sqrt_lip = float(np.sqrt(obj.lip))
        return FlowSpec(
            variant=self.variant,
            alpha=1.0 if self.alpha is None else self.alpha,
            beta=(1.0 / obj.lip) if self.beta is None else self.beta,
            gamma=(1.0 / sqrt_lip) if self.gamma is None else self.gamma,
            rate=(1.0 / obj.lip) if self.rate is None else self.rate,
            t0=(1.0 / sqrt_lip) if self.t0 is None else self.t0,
        )


@dataclass
class FlowTrajectory:
    """Sampled flow with per-sample diagnostics, one row per time step."""

    spec: FlowSpec
    step: float
    obj_fingerprint: tuple
    t: np.ndarray
    x1: np.ndarray                  # (samples, dim)
    x2: np.ndarray
    f_gap: np.ndarray               # NaN when fmin unknown
    grad_norm: np.ndarray
    m0_residual_norm: np.ndarray
    mp_residual_norm: np.ndarray
    storage: np.ndarray

    def __len__(self) -> int:
        return self.t.size

    def state(self, i: int) -> PhaseState:
        return PhaseState(x1=self.x1[i], x2=self.x2[i], t=float(self.t[i]))


def default_step(obj: Objective) -> float:
    return 0.01 / float(np.sqrt(obj.lip))


def rhs(spec: FlowSpec, s: PhaseState, obj: Objective):
    """Phase-space velocity (dx1, dx2) of the given variant at state s."""
    p = spec.resolve(obj)
    g = obj.grad(s.x1)
    if p.variant == "GradientFlow":
        return -p.rate * g, np.zeros_like(s.x2)

    if p.variant == "ControlledNaim":
        dx2 = control_law(s, obj, ManifoldParams(alpha=p.alpha, beta=p.beta))
        return s.x2.copy(), dx2

    if p.variant == "PerturbedNaim":
        m = s.x2 + p.beta * g
        m_p = s.x2 + (1.0 / p.alpha) * g
        dx2 = -p.beta * obj.hvp(s.x1, s.x2) - p.alpha * (m + m_p)
        return s.x2.copy(), dx2

    if p.variant == "HighResSC":
        inv_sqrt_lip = 1.0 / np.sqrt(obj.lip)
        dx2 = (-inv_sqrt_lip * obj.hvp(s.x1, s.x2)
               - 2.0 * np.sqrt(obj.mu) * s.x2
               - (1.0 + np.sqrt(obj.mu / obj.lip)) * g)
        return s.x2.copy(), dx2

    if p.variant == "HighResConvex":
        if s.t < p.t0 - 1e-12:
            raise TimeDomainError(
                f"HighResConvex evaluated at t={s.t} before t0={p.t0}")
        inv_sqrt_lip = 1.0 / np.sqrt(obj.lip)
        dx2 = (-(3.0 / s.t) * s.x2
               - inv_sqrt_lip * obj.hvp(s.x1, s.x2)
               - (1.0 + 1.5 * inv_sqrt_lip) * g)
        return s.x2.copy(), dx2

    if p.variant == "HeavyBallFlow":
        dx2 = (-2.0 * np.sqrt(obj.mu) * s.x2
               - (1.0 + np.sqrt(obj.mu / obj.lip)) * g)
        return s.x2.copy(), dx2

    if p.variant == "TripleMomentumFlow":
        dx2 = (-(1.0 / obj.lip + p.gamma) * obj.hvp(s.x1, s.x2)
               - obj.mu * s.x2
               - (1.0 + obj.mu / obj.lip) * g)
        return s.x2.copy(), dx2

    raise InvalidSpecError(f"unknown flow variant {p.variant!r}")   # unreachable


def _diagnostics(s: PhaseState, obj: Objective, params: ManifoldParams):
    g = obj.grad(s.x1)
    m0 = s.x2 + params.beta * g
    mp = params.alpha * s.x2 + g
    f_gap = obj.value(s.x1) - obj.fmin if obj.fmin is not None else np.nan
    return (float(f_gap), float(np.linalg.norm(g)),
            float(np.linalg.norm(m0)), float(np.linalg.norm(mp)), storage(m0))


def integrate(spec: FlowSpec, obj: Objective, initial: PhaseState, h: float,
              steps: int, params: ManifoldParams) -> FlowTrajectory:
    """Classical RK4 integration with per-sample manifold diagnostics.

    params sets the alpha/beta used for the recorded m0/mp residuals and
    storage columns (pass the dynamics' own alpha/beta for the Naim
    variants).  Raises DivergenceError with the offending step index if the
    state leaves the finite range; the documented stability guard is
    h <= 2/sqrt(lip).
    """
    if not (h > 0.0):
        raise InvalidSpecError("step h must be positive")
    if steps < 1:
        raise InvalidSpecError("need at least one integration step")
    resolved = spec.resolve(obj)
    if resolved.variant == "HighResConvex" and initial.t < resolved.t0 - 1e-12:
        raise TimeDomainError(
            f"initial time {initial.t} before t0={resolved.t0}")

    n = obj.dim
    count = steps + 1
    t_arr = np.empty(count)
    x1_arr = np.empty((count, n))
    x2_arr = np.empty((count, n))
    diag = np.empty((count, 5))

    x1 = np.asarray(initial.x1, dtype=float).copy()
    x2 = np.asarray(initial.x2, dtype=float).copy()
    t0 = float(initial.t)

    def record(i, t, x1v, x2v):
        t_arr[i] = t
        x1_arr[i] = x1v
        x2_arr[i] = x2v
        diag[i] = _diagnostics(PhaseState(x1v, x2v, t), obj, params)

    record(0, t0, x1, x2)
    # overflow en route to a DivergenceError is expected; the isfinite
    # check is the reporting mechanism
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            t = t0 + i * h
            k1 = rhs(resolved, PhaseState(x1, x2, t), obj)
            k2 = rhs(resolved, PhaseState(x1 + 0.5 * h * k1[0],
                                          x2 + 0.5 * h * k1[1],
                                          t + 0.5 * h), obj)
            k3 = rhs(resolved, PhaseState(x1 + 0.5 * h * k2[0],
                                          x2 + 0.5 * h * k2[1],
                                          t + 0.5 * h), obj)
            k4 = rhs(resolved, PhaseState(x1 + h * k3[0],
                                          x2 + h * k3[1], t + h), obj)
            x1 = x1 + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            x2 = x2 + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
                raise DivergenceError(i + 1)
            record(i + 1, t0 + (i + 1) * h, x1, x2)

    return FlowTrajectory(
        spec=resolved, step=float(h), obj_fingerprint=obj.fingerprint(),
        t=t_arr, x1=x1_arr, x2=x2_arr,
        f_gap=diag[:, 0], grad_norm=diag[:, 1],
        m0_residual_norm=diag[:, 2], mp_residual_norm=diag[:, 3],
        storage=diag[:, 4],
    )


def integrate_euler(spec: FlowSpec, obj: Objective, x0: np.ndarray, h: float,
                    steps: int) -> FlowTrajectory:
    """Forward-Euler sampling of GradientFlow.

    With rate 1/L and h = 1 the samples coincide with the gradient-descent
    iterates update-for-update: both compute x + (-(rate * g)), so the
    floating-point results are identical, not merely close.
    """
    if spec.variant != "GradientFlow":
        raise InvalidSpecError("integrate_euler supports only GradientFlow")
    if not (h > 0.0):
        raise InvalidSpecError("step h must be positive")
    if steps < 1:
        raise InvalidSpecError("need at least one integration step")
    resolved = spec.resolve(obj)
    params = ManifoldParams(alpha=resolved.alpha, beta=resolved.beta)

    n = obj.dim
    count = steps + 1
    t_arr = np.empty(count)
    x1_arr = np.empty((count, n))
    diag = np.empty((count, 5))
    zeros = np.zeros(n)

    x = np.asarray(x0, dtype=float).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(count):
            t_arr[i] = i * h
            x1_arr[i] = x
            diag[i] = _diagnostics(PhaseState(x, zeros, i * h), obj, params)
            if i < steps:
                x = x + h * (-(resolved.rate * obj.grad(x)))
                if not np.all(np.isfinite(x)):
                    raise DivergenceError(i + 1)

    return FlowTrajectory(
        spec=resolved, step=float(h), obj_fingerprint=obj.fingerprint(),
        t=t_arr, x1=x1_arr, x2=np.zeros((count, n)),
        f_gap=diag[:, 0], grad_norm=diag[:, 1],
        m0_residual_norm=diag[:, 2], mp_residual_norm=diag[:, 3],
        storage=diag[:, 4],
    )
