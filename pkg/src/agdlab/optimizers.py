"""Discrete first-order methods: GD, two Nesterov schemes, heavy ball, and
triple momentum.

Each method is a pure step function IterState -> IterState plus a shared
runner.  Conventions, fixed across the library:

* the gradient step is 1/L unless overridden,
* the Nesterov strongly convex extrapolation is
  y_{k+1} = x_{k+1} + beta (x_{k+1} - x_k), beta = (sqrt L - sqrt mu)/(sqrt L + sqrt mu),
  with the plus sign (the minus variant is available behind momentum_sign=-1
  as a negative control; it destroys the accelerated rate),
* the convex schedule uses beta_k = k/(k+3) and evaluates the gradient at
  the extrapolated point y_k,
* two-step methods start with x_prev = x0 (zero initial momentum).

Default heavy-ball parameters are the classical aggressive tuning
alpha = 4/(sqrt L + sqrt mu)^2, beta = ((sqrt L - sqrt mu)/(sqrt L + sqrt mu))^2;
on the shipped 1-D counterexample these cycle instead of converging, which
is the point of shipping them.  Triple momentum defaults to the
rho = 1 - 1/sqrt(kappa) schedule (alpha = (1+rho)/L, beta = rho^2/(2-rho),
nu = rho^2/((1+rho)(2-rho))), validated against its advertised contraction
by the rate tests rather than taken on faith.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .exceptions import DivergenceError, InvalidSpecError, \
    MethodInapplicableError
from .objectives import Objective

Vector = np.ndarray

DISCRETE_VARIANTS = ("GD", "NagSC", "NagC", "HeavyBall", "TripleMomentum")

#: descent tolerance: a step counts as a monotonicity violation when
#: f(x_{k+1}) > f(x_k) + MONOTONE_EPS
MONOTONE_EPS = 1e-14


@dataclass(frozen=True)
class MethodSpec:
    """A method variant plus optional parameter overrides.

    step defaults to 1/L. alpha/beta/nu override the method's momentum
    schedule where applicable (beta for NagSC and HeavyBall; alpha, beta, nu
    for TripleMomentum; alpha doubles as the heavy-ball gradient step).
    momentum_sign = -1 flips the NagSC extrapolation sign (negative control).
    """

    variant: str
    step: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    nu: Optional[float] = None
    momentum_sign: int = 1

    def __post_init__(self):
        if self.variant not in DISCRETE_VARIANTS:
            raise InvalidSpecError(f"unknown method variant {self.variant!r}")
        if self.step is not None and not (self.step > 0.0):
            raise InvalidSpecError("step must be positive")
        if self.momentum_sign not in (1, -1):
            raise InvalidSpecError("momentum_sign must be +1 or -1")


@dataclass(frozen=True)
class IterState:
    """Iteration state shared by all methods.

    x is the main iterate, y the extrapolated (outer) point for the
    look-ahead methods, x_prev the previous iterate for two-step momentum.
    theta tracks the convex schedule as theta_k = 3/(k+3) (so the momentum
    coefficient k/(k+3) equals 1 - theta_k); it stays 1 for the others.
    """

    k: int
    x: Vector
    y: Vector
    x_prev: Vector
    theta: float = 1.0


def initial_state(x0: Vector) -> IterState:
    x0 = np.asarray(x0, dtype=float).copy()
    return IterState(k=0, x=x0, y=x0.copy(), x_prev=x0.copy(), theta=1.0)


@dataclass
class Trajectory:
    """Recorded run of a discrete method."""

    method: str
    obj_fingerprint: tuple
    states: List[IterState]
    f_vals: np.ndarray
    grad_norms: np.ndarray
    f_gaps: Optional[np.ndarray]        # None when fmin is unknown
    monotone_violations: int

    def __len__(self) -> int:
        return len(self.states)

    @property
    def xs(self) -> np.ndarray:
        return np.array([s.x for s in self.states])


# ---------------------------------------------------------------------------
# parameter schedules


def nag_sc_momentum(obj: Objective) -> float:
    if obj.mu <= 0.0:
        raise MethodInapplicableError(
            "NagSC momentum requires strong convexity (mu > 0)")
    sl, sm = np.sqrt(obj.lip), np.sqrt(obj.mu)
    return float((sl - sm) / (sl + sm))


def polyak_parameters(obj: Objective) -> tuple[float, float]:
    """Classical heavy-ball tuning (alpha, beta) from mu and L."""
    if obj.mu <= 0.0:
        raise MethodInapplicableError("Polyak tuning requires mu > 0")
    sl, sm = np.sqrt(obj.lip), np.sqrt(obj.mu)
    return float(4.0 / (sl + sm) ** 2), float(((sl - sm) / (sl + sm)) ** 2)


def triple_momentum_parameters(obj: Objective) -> tuple[float, float, float]:
    """Default (alpha, beta, nu) for triple momentum: the rho schedule."""
    if obj.mu <= 0.0:
        raise MethodInapplicableError("triple momentum requires mu > 0")
    rho = 1.0 - 1.0 / np.sqrt(obj.lip / obj.mu)
    alpha = (1.0 + rho) / obj.lip
    beta = rho**2 / (2.0 - rho)
    nu = rho**2 / ((1.0 + rho) * (2.0 - rho))
    return float(alpha), float(beta), float(nu)


# ---------------------------------------------------------------------------
# step functions (pure)


def gd_step(s: IterState, obj: Objective, step: float) -> IterState:
    if not (step > 0.0):
        raise InvalidSpecError("step must be positive")
    x_new = s.x - step * obj.grad(s.x)
    return IterState(k=s.k + 1, x=x_new, y=x_new.copy(), x_prev=s.x)


def nag_sc_step(s: IterState, obj: Objective, beta: Optional[float] = None,
                momentum_sign: int = 1) -> IterState:
    """One look-ahead step: gradient at y, then momentum extrapolation."""
    if obj.mu <= 0.0:
        raise MethodInapplicableError("NagSC requires mu > 0")
    b = nag_sc_momentum(obj) if beta is None else float(beta)
    x_new = s.y - obj.grad(s.y) / obj.lip
    y_new = x_new + momentum_sign * b * (x_new - s.x)
    return IterState(k=s.k + 1, x=x_new, y=y_new, x_prev=s.x)


def nag_c_step(s: IterState, obj: Objective, k: int) -> IterState:
    """Convex-schedule step with momentum k/(k+3); k = 0 is a pure GD step."""
    if k < 0:
        raise InvalidSpecError("iteration index must be >= 0")
    x_new = s.y - obj.grad(s.y) / obj.lip
    coef = k / (k + 3.0)
    y_new = x_new + coef * (x_new - s.x)
    return IterState(k=s.k + 1, x=x_new, y=y_new, x_prev=s.x,
                     theta=3.0 / (k + 4.0))


def heavy_ball_step(s: IterState, obj: Objective, alpha: float,
                    beta: float) -> IterState:
    if not (alpha > 0.0):
        raise InvalidSpecError("heavy-ball alpha must be positive")
    if not (0.0 <= beta < 1.0):
        raise InvalidSpecError("heavy-ball beta must lie in [0, 1)")
    x_new = s.x + beta * (s.x - s.x_prev) - alpha * obj.grad(s.x)
    return IterState(k=s.k + 1, x=x_new, y=x_new.copy(), x_prev=s.x)


def tm_step(s: IterState, obj: Objective, alpha: float, beta: float,
            nu: float) -> IterState:
    """Triple momentum: two-step momentum with gradient at the shifted point."""
    if obj.mu <= 0.0:
        raise MethodInapplicableError("triple momentum requires mu > 0")
    x_new = s.x + beta * (s.x - s.x_prev) - alpha * obj.grad(s.y)
    y_new = x_new + nu * (x_new - s.x)
    return IterState(k=s.k + 1, x=x_new, y=y_new, x_prev=s.x)


# ---------------------------------------------------------------------------
# runner


def _stepper(method: MethodSpec, obj: Objective):
    v = method.variant
    if v == "GD":
        step = method.step if method.step is not None else 1.0 / obj.lip
        return lambda s: gd_step(s, obj, step)
    if v == "NagSC":
        return lambda s: nag_sc_step(s, obj, beta=method.beta,
                                     momentum_sign=method.momentum_sign)
    if v == "NagC":
        return lambda s: nag_c_step(s, obj, s.k)
    if v == "HeavyBall":
        if method.alpha is None or method.beta is None:
            alpha, beta = polyak_parameters(obj)
        else:
            alpha, beta = method.alpha, method.beta
        return lambda s: heavy_ball_step(s, obj, alpha, beta)
    if v == "TripleMomentum":
        defaults = triple_momentum_parameters(obj)
        alpha = method.alpha if method.alpha is not None else defaults[0]
        beta = method.beta if method.beta is not None else defaults[1]
        nu = method.nu if method.nu is not None else defaults[2]
        return lambda s: tm_step(s, obj, alpha, beta, nu)
    raise InvalidSpecError(f"unknown method variant {v!r}")    # unreachable


def run(method: MethodSpec, obj: Objective, x0: Vector, max_iters: int,
        grad_tol: float = 0.0) -> Trajectory:
    """Iterate until the gradient norm falls to grad_tol or the budget ends.

    Records every iterate (including x0), function values, gradient norms
    and the running count of descent violations.  Raises DivergenceError
    with the step index if an iterate leaves the finite range.
    """
    if max_iters < 1:
        raise InvalidSpecError("max_iters must be >= 1")
    step_fn = _stepper(method, obj)
    s = initial_state(x0)
    states = [s]
    f_vals = [obj.value(s.x)]
    grad_norms = [float(np.linalg.norm(obj.grad(s.x)))]
    violations = 0

    # blow-ups are reported through DivergenceError, so the intermediate
    # overflow on the way there is expected and not worth a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iters):
            if grad_norms[-1] <= grad_tol:
                break
            s = step_fn(s)
            if not np.all(np.isfinite(s.x)):
                raise DivergenceError(s.k)
            states.append(s)
            f_vals.append(obj.value(s.x))
            grad_norms.append(float(np.linalg.norm(obj.grad(s.x))))
            if f_vals[-1] > f_vals[-2] + MONOTONE_EPS:
                violations += 1

    f_vals = np.array(f_vals)
    f_gaps = f_vals - obj.fmin if obj.fmin is not None else None
    return Trajectory(
        method=method.variant,
        obj_fingerprint=obj.fingerprint(),
        states=states,
        f_vals=f_vals,
        grad_norms=np.array(grad_norms),
        f_gaps=f_gaps,
        monotone_violations=violations,
    )
