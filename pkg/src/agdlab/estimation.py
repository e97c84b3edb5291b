"""Estimate-sequence certificates for the strongly convex Nesterov method.

The running lower model is the quadratic envelope

    phi_k(x) = phi_star_k + (mu/2) ||x - v_k||^2,

built from first-order information at the query points y_k with the fixed
mixing weight alpha = sqrt(mu/L).  Two facts make it a certificate:

* phi_star_k >= f(x_k) along the coupled iteration, and
* phi_k(x) <= (1 - lambda_k) f(x) + lambda_k phi_0(x) with
  lambda_k = (1 - alpha)^k,

so f(x_k) - f* <= lambda_k (phi_0(x*) - f*).  Both are checked numerically
by verify_lower_bound / verify_envelope rather than assumed.

The update below is the closed form of "mix the current envelope with the
tangent plane at y with weight alpha, then recomplete the square":

    v+        = (1-a) v + a y - (a/mu) g
    phi_star+ = (1-a) phi_star + a f(y) - a^2/(2 mu) ||g||^2
                + a (1-a) [ mu/2 ||y - v||^2 + g . (v - y) ]

coupled_nag_run drives the envelope alongside the method itself through

    y_k = (a v_k + x_k) / (1 + a),    v_{k+1} = x_k + (x_{k+1} - x_k)/a,

and checks at every step that the envelope's own v matches the coupling
formula and that eliminating v reproduces the NagSC iterates exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np

from .exceptions import InternalConsistencyError, InvalidSpecError, \
    MethodInapplicableError
from .objectives import Objective
from .optimizers import MONOTONE_EPS, IterState, Trajectory, nag_sc_step

Vector = np.ndarray


@dataclass(frozen=True)
class EstimationState:
    """Envelope parameters after k updates."""

    k: int
    phi_star: float
    v: Vector
    lam: float          # lambda_k = (1 - alpha)^k


def mixing_weight(obj: Objective) -> float:
    if obj.mu <= 0.0:
        raise MethodInapplicableError(
            "estimate sequences here require mu > 0")
    a = float(np.sqrt(obj.mu / obj.lip))
    if not 0.0 < a <= 1.0:
        raise InvalidSpecError(f"mixing weight {a} outside (0, 1]")
    return a


def init(obj: Objective, x0: Vector) -> EstimationState:
    """phi_0(x) = f(x0) + mu/2 ||x - x0||^2."""
    mixing_weight(obj)      # validates applicability up front
    x0 = np.asarray(x0, dtype=float)
    return EstimationState(k=0, phi_star=float(obj.value(x0)),
                           v=x0.copy(), lam=1.0)


def evaluate_phi(s: EstimationState, x: Vector, obj: Objective) -> float:
    d = np.asarray(x, dtype=float) - s.v
    return s.phi_star + 0.5 * obj.mu * float(d @ d)


def update(s: EstimationState, obj: Objective, y: Vector) -> EstimationState:
    a = mixing_weight(obj)
    mu = obj.mu
    y = np.asarray(y, dtype=float)
    g = obj.grad(y)
    dv = y - s.v
    v_new = (1.0 - a) * s.v + a * y - (a / mu) * g
    phi_new = ((1.0 - a) * s.phi_star
               + a * obj.value(y)
               - 0.5 * a**2 / mu * float(g @ g)
               + a * (1.0 - a) * (0.5 * mu * float(dv @ dv)
                                  + float(g @ (s.v - y))))
    return EstimationState(k=s.k + 1, phi_star=phi_new, v=v_new,
                           lam=(1.0 - a) * s.lam)


def verify_lower_bound(s: EstimationState, obj: Objective, x: Vector,
                       tol: float = 1e-9) -> bool:
    """phi_star_k >= f(x_k), the anchor of the convergence certificate."""
    return s.phi_star >= obj.value(x) - tol * (1.0 + abs(s.phi_star))


def verify_envelope(s: EstimationState, obj: Objective, x0: Vector,
                    samples: Iterable[Vector], tol: float = 1e-9) -> bool:
    """Check phi_k <= (1 - lambda_k) f + lambda_k phi_0 at the samples.

    x0 identifies phi_0 (the envelope anchored at the start point).
    """
    x0 = np.asarray(x0, dtype=float)
    for x in samples:
        x = np.asarray(x, dtype=float)
        d0 = x - x0
        phi0 = obj.value(x0) + 0.5 * obj.mu * float(d0 @ d0)
        rhs = (1.0 - s.lam) * obj.value(x) + s.lam * phi0
        if evaluate_phi(s, x, obj) > rhs + tol * (1.0 + abs(rhs)):
            return False
    return True


def coupled_nag_run(obj: Objective, x0: Vector,
                    iters: int) -> Tuple[Trajectory, List[EstimationState]]:
    """Run NagSC and its envelope in lockstep.

    Per step: y_k = (a v_k + x_k)/(1 + a), a gradient step from y_k, then
    the envelope update at y_k.  Raises InternalConsistencyError if the
    envelope's v drifts from the coupling formula
    v_{k+1} = x_k + (x_{k+1} - x_k)/a by more than 1e-9 (relative), or if
    the x iterates do not reproduce the standalone NagSC recursion to 1e-12.
    """
    if iters < 1:
        raise InvalidSpecError("iters must be >= 1")
    a = mixing_weight(obj)
    x = np.asarray(x0, dtype=float).copy()
    est = init(obj, x)
    history = [est]

    # lockstep shadow copy of the plain method, for the elimination check
    shadow = IterState(k=0, x=x.copy(), y=x.copy(), x_prev=x.copy())

    states = [IterState(k=0, x=x.copy(), y=x.copy(), x_prev=x.copy())]
    f_vals = [obj.value(x)]
    grad_norms = [float(np.linalg.norm(obj.grad(x)))]
    violations = 0

    for k in range(iters):
        y = (a * est.v + x) / (1.0 + a)
        x_new = y - obj.grad(y) / obj.lip
        est = update(est, obj, y)
        history.append(est)

        v_expected = x + (x_new - x) / a
        drift = np.max(np.abs(est.v - v_expected))
        if drift > 1e-9 * (1.0 + float(np.max(np.abs(v_expected)))):
            raise InternalConsistencyError(
                f"envelope v drifted from the coupling formula at step "
                f"{k + 1}: max deviation {drift:.3e}")

        shadow = nag_sc_step(shadow, obj)
        dev = np.max(np.abs(shadow.x - x_new))
        if dev > 1e-12:
            raise InternalConsistencyError(
                f"coupled iterates left the NagSC recursion at step "
                f"{k + 1}: max deviation {dev:.3e}")

        states.append(IterState(k=k + 1, x=x_new.copy(), y=y.copy(),
                                x_prev=x.copy()))
        f_vals.append(obj.value(x_new))
        grad_norms.append(float(np.linalg.norm(obj.grad(x_new))))
        if f_vals[-1] > f_vals[-2] + MONOTONE_EPS:
            violations += 1
        x = x_new

    f_vals = np.array(f_vals)
    f_gaps = f_vals - obj.fmin if obj.fmin is not None else None
    traj = Trajectory(
        method="NagSC",
        obj_fingerprint=obj.fingerprint(),
        states=states,
        f_vals=f_vals,
        grad_norms=np.array(grad_norms),
        f_gaps=f_gaps,
        monotone_violations=violations,
    )
    return traj, history
