"""Invariant-manifold geometry for second-order optimization dynamics.

The phase space is (x1, x2) with x1 the position and x2 the velocity.  The
slow manifold is the graph

    M0 = { (x1, x2) : x2 + beta * grad f(x1) = 0 },      beta = 1/L,

and the decaying perturbation set is M_p = { alpha * x2 + grad f(x1) = eta }.
The connection operator omega = beta * hess f(x1) splits phase-space tangent
vectors into a horizontal part along M0 and a vertical fiber part, and the
(degenerate) bilinear form

    <(a1, a2), (b1, b2)>_R = (omega a1 + a2)^T (omega b1 + b2)

makes that split orthogonal: horizontal vectors span its kernel.  The form
is rank-deficient by construction and no operation here ever inverts it.

All operations are pure functions of their inputs.  The connection acts only
through Hessian-vector products, so everything scales past dense-Hessian toy
sizes.  The transverse rate alpha is exposed directly; an analysis that
derives it from a storage-function decay rate alpha_hat should pass
alpha = alpha_hat / 2 here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .exceptions import InvalidSpecError
from .objectives import Objective

Vector = np.ndarray


@dataclass(frozen=True)
class PhaseState:
    """A phase-space point (x1, x2) at time t."""

    x1: Vector
    x2: Vector
    t: float = 0.0

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=float)
        x2 = np.asarray(self.x2, dtype=float)
        if x1.shape != x2.shape or x1.ndim != 1:
            raise InvalidSpecError("x1 and x2 must be 1-D arrays of equal length")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class ManifoldParams:
    """Transverse contraction rate alpha and tangential rate beta (= 1/L)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise InvalidSpecError("alpha and beta must be positive")


@dataclass(frozen=True)
class TangentSplit:
    """Horizontal/vertical decomposition of a phase-space tangent vector."""

    horizontal: Tuple[Vector, Vector]
    vertical: Tuple[Vector, Vector]


def residual_m0(s: PhaseState, obj: Objective, p: ManifoldParams) -> Vector:
    """M = x2 + beta * grad f(x1); zero exactly on the slow manifold."""
    return s.x2 + p.beta * obj.grad(s.x1)


def residual_mp(s: PhaseState, obj: Objective, p: ManifoldParams) -> Vector:
    """alpha * x2 + grad f(x1); its norm labels the perturbation level set."""
    return p.alpha * s.x2 + obj.grad(s.x1)


def connection(obj: Objective, x1: Vector,
               p: ManifoldParams) -> Callable[[Vector], Vector]:
    """The connection operator omega: v -> beta * hess f(x1) v."""
    x1 = np.asarray(x1, dtype=float)

    def omega(v: Vector) -> Vector:
        return p.beta * obj.hvp(x1, v)

    return omega


def metric_r(omega: Callable[[Vector], Vector]):
    """The degenerate bilinear form induced by the normal bundle of M0.

    Returns r(a1, a2, b1, b2) = (omega a1 + a2) . (omega b1 + b2), the block
    form [[omega^2, omega], [omega, I]].  Horizontal vectors lie in its
    kernel, so the form has no inverse; none is ever taken.
    """

    def r_form(a1: Vector, a2: Vector, b1: Vector, b2: Vector) -> float:
        return float((omega(a1) + a2) @ (omega(b1) + b2))

    return r_form


def split_tangent(xdot1: Vector, xdot2: Vector,
                  omega: Callable[[Vector], Vector]) -> TangentSplit:
    """Split (xdot1, xdot2) into horizontal + vertical parts.

    horizontal = (xdot1, -omega xdot1) follows the manifold graph;
    vertical = (0, xdot2 + omega xdot1) is the fiber correction.  Their sum
    reconstructs the input exactly.
    """
    xdot1 = np.asarray(xdot1, dtype=float)
    xdot2 = np.asarray(xdot2, dtype=float)
    if xdot1.shape != xdot2.shape:
        raise InvalidSpecError("tangent components must have equal shape")
    w = omega(xdot1)
    horizontal = (xdot1, -w)
    vertical = (np.zeros_like(xdot1), xdot2 + w)
    return TangentSplit(horizontal=horizontal, vertical=vertical)


def control_law(s: PhaseState, obj: Objective, p: ManifoldParams) -> Vector:
    """Feedback that contracts the manifold residual at rate alpha.

    u = -beta hess f(x1) x2 - alpha (x2 + beta grad f(x1)).  Along the
    closed loop xdot2 = u the residual obeys Mdot = -alpha M exactly,
    since Mdot = xdot2 + beta hess f(x1) x1dot with x1dot = x2.
    """
    return (-p.beta * obj.hvp(s.x1, s.x2)
            - p.alpha * residual_m0(s, obj, p))


def storage(residual: Vector) -> float:
    """S = 0.5 ||M||^2, the Lyapunov certificate for residual contraction."""
    residual = np.asarray(residual, dtype=float)
    return float(0.5 * residual @ residual)
