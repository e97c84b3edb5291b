"""Test functions with analytic value/gradient/Hessian-vector oracles.

Three families cover everything the rest of the library needs:

* seeded rotated quadratics — exact ground truth for rates and geometry,
* a smooth log-sum-exp family — the mu = 0 convex case,
* a 1-D function with continuous piecewise-linear gradient — the classical
  instance on which heavy-ball momentum with aggressive parameters cycles
  instead of converging.

Objectives are immutable after construction and all oracles are pure, so
they are safe to evaluate concurrently.  Dense quadratic matrices are stored
only up to n = 512 by design; beyond toy sizes everything runs through
Hessian-vector products.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import InvalidSpecError, UndefinedConditionNumberError
from .rng import Lcg64

Vector = np.ndarray

_MAX_DENSE_DIM = 512


@dataclass(frozen=True)
class Objective:
    """A smooth function with oracles and curvature constants.

    mu is the strong-convexity modulus (0 for merely convex functions), lip
    the gradient Lipschitz constant.  minimizer/fmin are present only when
    known exactly or frozen from a documented offline computation.
    """

    name: str
    dim: int
    mu: float
    lip: float
    value: Callable[[Vector], float]
    grad: Callable[[Vector], Vector]
    hvp: Callable[[Vector, Vector], Vector]
    minimizer: Optional[Vector] = None
    fmin: Optional[float] = None

    def __post_init__(self):
        if not (self.lip > 0.0):
            raise InvalidSpecError("lip must be positive")
        if not (0.0 <= self.mu <= self.lip):
            raise InvalidSpecError("need 0 <= mu <= lip")
        if self.dim < 1:
            raise InvalidSpecError("dim must be a positive integer")

    def fingerprint(self) -> tuple:
        """Cheap identity used to refuse cross-objective comparisons."""
        return (self.name, self.dim, float(self.mu), float(self.lip))

    def f_gap(self, x: Vector) -> float:
        if self.fmin is None:
            raise InvalidSpecError(f"objective {self.name!r} has no known fmin")
        return float(self.value(x) - self.fmin)


@dataclass(frozen=True)
class QuadraticSpec:
    """f(x) = 0.5 (x-offset)^T A (x-offset), A = Q diag(eigenvalues) Q^T.

    Q is the seeded random orthogonal matrix of :func:`rotation_matrix`;
    the eigenvector for eigenvalues[i] is its column i.
    """

    eigenvalues: tuple
    rotation_seed: int
    offset: tuple

    def __init__(self, eigenvalues: Sequence[float], rotation_seed: int,
                 offset: Sequence[float] | None = None):
        object.__setattr__(self, "eigenvalues", tuple(float(e) for e in eigenvalues))
        object.__setattr__(self, "rotation_seed", int(rotation_seed))
        if offset is None:
            offset = (0.0,) * len(self.eigenvalues)
        offset = tuple(float(o) for o in offset)
        if len(offset) != len(self.eigenvalues):
            raise InvalidSpecError("offset dimension does not match eigenvalues")
        object.__setattr__(self, "offset", offset)


@dataclass(frozen=True)
class PiecewiseGradient1DSpec:
    """1-D objective whose gradient is continuous piecewise linear.

    slopes[j] is the gradient slope on segment j; segment boundaries are the
    breakpoints.  Intercepts are derived from continuity with the leftmost
    segment anchored through the origin, so the minimizer is x* = 0.
    """

    breakpoints: tuple
    slopes: tuple

    def __init__(self, breakpoints: Sequence[float], slopes: Sequence[float]):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in breakpoints))
        object.__setattr__(self, "slopes", tuple(float(s) for s in slopes))


def rotation_matrix(dim: int, seed: int) -> np.ndarray:
    """The seeded orthogonal matrix used by make_quadratic (column eigenvectors)."""
    return Lcg64(seed).orthogonal(dim)


def make_quadratic(spec: QuadraticSpec) -> Objective:
    evals = np.array(spec.eigenvalues, dtype=float)
    if evals.size == 0:
        raise InvalidSpecError("need at least one eigenvalue")
    if np.any(evals <= 0.0):
        raise InvalidSpecError("all eigenvalues must be positive")
    n = evals.size
    if n > _MAX_DENSE_DIM:
        raise InvalidSpecError(f"dense quadratics support dim <= {_MAX_DENSE_DIM}")
    offset = np.array(spec.offset, dtype=float)
    if offset.shape != (n,):
        raise InvalidSpecError("offset dimension must match eigenvalue count")

    q = rotation_matrix(n, spec.rotation_seed)
    a = q @ np.diag(evals) @ q.T
    a = 0.5 * (a + a.T)

    def value(x: Vector) -> float:
        d = np.asarray(x, dtype=float) - offset
        return float(0.5 * d @ (a @ d))

    def grad(x: Vector) -> Vector:
        return a @ (np.asarray(x, dtype=float) - offset)

    def hvp(x: Vector, v: Vector) -> Vector:
        return a @ np.asarray(v, dtype=float)

    return Objective(
        name=f"quadratic[n={n},seed={spec.rotation_seed}]",
        dim=n,
        mu=float(evals.min()),
        lip=float(evals.max()),
        value=value,
        grad=grad,
        hvp=hvp,
        minimizer=offset.copy(),
        fmin=0.0,
    )


def quadratic_matrix(spec: QuadraticSpec) -> np.ndarray:
    """Rebuild the dense matrix of a quadratic spec (for tests and analysis)."""
    evals = np.array(spec.eigenvalues, dtype=float)
    q = rotation_matrix(evals.size, spec.rotation_seed)
    a = q @ np.diag(evals) @ q.T
    return 0.5 * (a + a.T)


def make_log_sum_exp(rows: np.ndarray, shifts: np.ndarray,
                     smoothing: float) -> Objective:
    """f(x) = smoothing * log sum_i exp((a_i^T x + b_i) / smoothing).

    mu = 0; lip is the documented upper bound (max row norm)^2 / smoothing.
    The minimizer is left absent; locate it on demand with
    :func:`locate_minimizer` when a gap reference is needed.
    """
    rows = np.array(rows, dtype=float)
    shifts = np.array(shifts, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise InvalidSpecError("rows must be an m x n matrix with m >= 2")
    if shifts.shape != (rows.shape[0],):
        raise InvalidSpecError("shifts length must equal the number of rows")
    if not (smoothing > 0.0):
        raise InvalidSpecError("smoothing must be positive")
    m, n = rows.shape
    s = float(smoothing)
    lip = float(np.max(np.sum(rows * rows, axis=1)) / s)

    def _softmax(x: Vector) -> np.ndarray:
        z = (rows @ np.asarray(x, dtype=float) + shifts) / s
        z -= z.max()
        p = np.exp(z)
        return p / p.sum()

    def value(x: Vector) -> float:
        z = (rows @ np.asarray(x, dtype=float) + shifts) / s
        zm = z.max()
        return float(s * (zm + np.log(np.sum(np.exp(z - zm)))))

    def grad(x: Vector) -> Vector:
        return rows.T @ _softmax(x)

    def hvp(x: Vector, v: Vector) -> Vector:
        p = _softmax(x)
        av = rows @ np.asarray(v, dtype=float)
        return (rows.T @ (p * av) - (rows.T @ p) * (p @ av)) / s

    return Objective(
        name=f"log_sum_exp[m={m},n={n}]",
        dim=n,
        mu=0.0,
        lip=lip,
        value=value,
        grad=grad,
        hvp=hvp,
    )


def make_piecewise_gradient_1d(spec: PiecewiseGradient1DSpec,
                               name: str = "piecewise_1d") -> Objective:
    """Build the 1-D objective from breakpoints and per-segment gradient slopes.

    The gradient is the continuous piecewise-linear function with
    g(x) = slopes[0] * x on the leftmost segment, continued across each
    breakpoint; f is its exact piecewise integral with f(0) = 0.  The
    Hessian(-vector) oracle returns the slope of the segment to the LEFT of
    a breakpoint (second derivative is discontinuous there; flows are not
    meant to run on these objectives, the convention only pins a value).
    """
    bps = np.array(spec.breakpoints, dtype=float)
    slopes = np.array(spec.slopes, dtype=float)
    if slopes.size != bps.size + 1:
        raise InvalidSpecError("need exactly one more slope than breakpoints")
    if np.any(slopes <= 0.0):
        raise InvalidSpecError("all gradient slopes must be positive")
    if bps.size and (np.any(np.diff(bps) <= 0.0) or bps[0] <= 0.0):
        raise InvalidSpecError("breakpoints must be strictly increasing and > 0")

    # gradient on segment j: g(x) = g(b_j) + slopes[j] * (x - b_j), with
    # g values chained from g(x) = slopes[0] * x on the left segment.
    g_at_bp = np.zeros(bps.size + 1)        # g value at the left edge of segment j
    edges = np.concatenate([[0.0], bps])    # left edge of each segment (segment 0: x<=b_1)
    for j in range(1, bps.size + 1):
        g_at_bp[j] = g_at_bp[j - 1] + slopes[j - 1] * (edges[j] - edges[j - 1])
    # f value at each edge by exact integration of the quadratic pieces
    f_at_bp = np.zeros(bps.size + 1)
    for j in range(1, bps.size + 1):
        d = edges[j] - edges[j - 1]
        f_at_bp[j] = f_at_bp[j - 1] + g_at_bp[j - 1] * d + 0.5 * slopes[j - 1] * d * d

    def _segment(x: float) -> int:
        # index of the segment containing x; breakpoints belong to the LEFT
        # segment, matching the Hessian convention
        return int(np.searchsorted(bps, x, side="left"))

    def value(x: Vector) -> float:
        t = float(np.asarray(x).reshape(()))
        j = _segment(t)
        d = t - edges[j]
        return float(f_at_bp[j] + g_at_bp[j] * d + 0.5 * slopes[j] * d * d)

    def grad(x: Vector) -> Vector:
        t = float(np.asarray(x).reshape(()))
        j = _segment(t)
        return np.array([g_at_bp[j] + slopes[j] * (t - edges[j])])

    def hvp(x: Vector, v: Vector) -> Vector:
        t = float(np.asarray(x).reshape(()))
        j = _segment(t)
        return slopes[j] * np.asarray(v, dtype=float)

    return Objective(
        name=name,
        dim=1,
        mu=float(slopes.min()),
        lip=float(slopes.max()),
        value=value,
        grad=grad,
        hvp=hvp,
        minimizer=np.zeros(1),
        fmin=0.0,
    )


#: breakpoints of the shipped 1-D counterexample (used by continuity checks)
COUNTEREXAMPLE_BREAKPOINTS = (1.0, 2.0)


def make_counterexample_1d() -> Objective:
    """The 1-D function on which Polyak-tuned heavy ball cycles.

    Gradient slopes (25, 1, 25) on segments split at x = 1 and x = 2, so
    mu = 1, lip = 25, kappa = 25, minimizer x* = 0.  Explicitly:
    g(x) = 25x for x < 1, x + 24 for 1 <= x < 2, and 25x - 24 for x >= 2.
    """
    return make_piecewise_gradient_1d(
        PiecewiseGradient1DSpec(breakpoints=COUNTEREXAMPLE_BREAKPOINTS,
                                slopes=(25.0, 1.0, 25.0)),
        name="counterexample_1d",
    )


# ---------------------------------------------------------------------------
# canonical instances


def canonical_quadratic(kappa: float, dim: int = 8,
                        rotation_seed: int | None = None) -> Objective:
    """Rotated quadratic with mu = 1, lip = kappa, log-spaced spectrum.

    The default rotation seed is 900 + kappa so each condition number gets a
    fixed, reproducible rotation.
    """
    if kappa < 1.0:
        raise InvalidSpecError("kappa must be >= 1")
    if rotation_seed is None:
        rotation_seed = 900 + int(round(kappa))
    evals = np.logspace(0.0, np.log10(kappa), dim) if kappa > 1.0 \
        else np.ones(dim)
    spec = QuadraticSpec(eigenvalues=evals, rotation_seed=rotation_seed,
                         offset=np.zeros(dim))
    obj = make_quadratic(spec)
    return dataclasses.replace(obj, name=f"quadratic[kappa={kappa:g},n={dim}]")


# Frozen reference minimizer of canonical_log_sum_exp, computed once offline
# by 1e6 gradient-descent iterations at step 1/lip from the origin (the
# gradient norm at this point is below 1e-15; it also agrees to 4e-15 with
# the closed-form pair-balance solution available for this construction).
_LSE_X_STAR = (
    -0.15312766910881123,
    -0.20933626865737737,
    -0.23941838238685942,
    -0.1290866860615481,
    -0.28683709192577755,
    -0.0690950364135827,
)
_LSE_F_STAR = 2.609086707139357


def canonical_log_sum_exp(with_minimizer: bool = True) -> Objective:
    """The shipped convex test instance (n = 6, m = 12, smoothing 1).

    Rows come in plus/minus pairs built from a seeded orthogonal matrix with
    per-pair scales, which keeps the origin well inside the hull of the rows
    and the minimizer O(1).  Draw order (seed 2024): orthogonal matrix, then
    6 uniform scale draws, then 12 shift normals — this order is frozen.
    """
    rng = Lcg64(2024)
    n = 6
    q = rng.orthogonal(n)
    scales = np.array([0.8 + 0.8 * rng.uniform() for _ in range(n)])
    half = (q * scales).T               # row i = scales[i] * q[:, i]
    rows = np.vstack([half, -half])
    shifts = rng.normals(2 * n) * 0.25
    obj = make_log_sum_exp(rows, shifts, smoothing=1.0)
    obj = dataclasses.replace(obj, name="log_sum_exp[canonical]")
    if with_minimizer:
        obj = dataclasses.replace(
            obj, minimizer=np.array(_LSE_X_STAR), fmin=_LSE_F_STAR)
    return obj


def ill_scaled_quadratic() -> Objective:
    """Convex instance with a nearly flat direction (eigenvalues 1e-4 .. 1).

    Negative control for sub-quadratic rate envelopes: plain gradient descent
    stalls on the flat mode, so any c/k^2 envelope is eventually violated.
    """
    spec = QuadraticSpec(eigenvalues=(1e-4, 1e-2, 1e-1, 1.0),
                         rotation_seed=11, offset=np.zeros(4))
    obj = make_quadratic(spec)
    return dataclasses.replace(obj, name="quadratic[ill-scaled]")


def catalog() -> dict[str, Objective]:
    """Every shipped instance, for hygiene sweeps."""
    out = {}
    for kappa in (10, 25, 100, 400, 500):
        out[f"quadratic_kappa{kappa}"] = canonical_quadratic(float(kappa))
    out["log_sum_exp"] = canonical_log_sum_exp()
    out["counterexample_1d"] = make_counterexample_1d()
    out["ill_scaled_quadratic"] = ill_scaled_quadratic()
    return out


# ---------------------------------------------------------------------------
# verification helpers


def condition_number(obj: Objective) -> float:
    if obj.mu <= 0.0:
        raise UndefinedConditionNumberError(
            f"condition number undefined for {obj.name!r}: mu = 0")
    return obj.lip / obj.mu


def check_gradient(obj: Objective, x: Vector, h: float) -> float:
    """Max relative deviation of analytic oracles from central differences.

    Checks every gradient coordinate against (f(x + h e_i) - f(x - h e_i)) /
    2h, and the Hessian-vector product along the fixed probe direction
    v = 1/sqrt(n) against differenced gradients.  Deviations are normalized
    by 1 + |analytic value|.
    """
    if not (h > 0.0):
        raise InvalidSpecError("finite-difference step must be positive")
    x = np.asarray(x, dtype=float)
    g = obj.grad(x)
    worst = 0.0
    for i in range(obj.dim):
        e = np.zeros(obj.dim)
        e[i] = h
        num = (obj.value(x + e) - obj.value(x - e)) / (2.0 * h)
        worst = max(worst, abs(num - g[i]) / (1.0 + abs(g[i])))
    v = np.full(obj.dim, 1.0 / np.sqrt(obj.dim))
    hv = obj.hvp(x, v)
    num = (obj.grad(x + h * v) - obj.grad(x - h * v)) / (2.0 * h)
    dev = np.max(np.abs(num - hv) / (1.0 + np.abs(hv)))
    return float(max(worst, dev))


def check_piecewise_continuity(obj: Objective, breakpoints: Sequence[float],
                               delta: float = 1e-7) -> float:
    """Worst gradient jump across the given breakpoints.

    Extrapolates the gradient linearly to each breakpoint from both sides
    (using the Hessian oracle for the local slope) and returns the largest
    absolute mismatch.  Exact piecewise-linear gradients give 0 up to
    rounding; a corrupted instance shows a jump of order the slope change.
    """
    worst = 0.0
    one = np.ones(1)
    for b in breakpoints:
        xl = np.array([b - delta])
        xr = np.array([b + delta])
        left = obj.grad(xl)[0] + delta * obj.hvp(xl, one)[0]
        right = obj.grad(xr)[0] - delta * obj.hvp(xr, one)[0]
        worst = max(worst, abs(left - right))
    return worst


def locate_minimizer(obj: Objective, iters: int = 200_000) -> Objective:
    """Attach a numerically located minimizer to a convex objective.

    Runs gradient descent at step 1/lip from the origin for the given budget
    and freezes the result as minimizer/fmin.  Intended for objectives
    (log-sum-exp family) whose minimizer has no closed form.
    """
    x = np.zeros(obj.dim)
    step = 1.0 / obj.lip
    for _ in range(iters):
        x = x - step * obj.grad(x)
    return dataclasses.replace(obj, minimizer=x, fmin=float(obj.value(x)))
