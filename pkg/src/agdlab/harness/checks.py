"""Self-contained invariant suite behind `agdlab check`.

Each check returns (name, passed, detail); run_all executes the whole
battery.  The suite exists so a fresh build can be validated in seconds
without the test harness: gradient oracles against finite differences,
the splitting identities, GD against its Euler twin, the estimate-sequence
certificate, the accelerated rate, the heavy-ball cycle, integrator order,
manifold contraction, and run determinism.

Two deliberate sabotage hooks exist for exercising the failure paths:
momentum_sign=-1 flips the NagSC extrapolation (the rate check must then
fail) and counterexample_slopes builds a gradient with stale segment
anchors (the continuity check must catch the jumps).
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from ..analysis import detect_cycle, fit_rate
from ..estimation import coupled_nag_run, verify_envelope, verify_lower_bound
from ..exceptions import AgdlabError
from ..flows import FlowSpec, default_step, integrate, integrate_euler
from ..geometry import (ManifoldParams, PhaseState, connection, metric_r,
                        residual_m0, split_tangent)
from ..objectives import (COUNTEREXAMPLE_BREAKPOINTS, Objective,
                          QuadraticSpec, canonical_quadratic, catalog,
                          check_gradient, check_piecewise_continuity,
                          make_counterexample_1d, make_quadratic,
                          quadratic_matrix)
from ..optimizers import MethodSpec, run
from ..rng import Lcg64
from .config import parse_config
from .runner import run_experiment


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def corrupted_counterexample(slopes: Sequence[float]) -> Objective:
    """Counterexample variant with segment anchors from the shipped slopes.

    Overriding the slopes without re-anchoring makes the gradient jump at
    the breakpoints (unless the shipped slopes are passed back in), which
    is exactly the corruption the continuity check must detect.
    """
    slopes = np.array(slopes, dtype=float)
    std = np.array([25.0, 1.0, 25.0])
    if slopes.shape != std.shape or np.any(slopes <= 0.0):
        raise AgdlabError("need three positive slopes")
    bps = np.array(COUNTEREXAMPLE_BREAKPOINTS)
    edges = np.concatenate([[0.0], bps])
    g_at = np.zeros(3)
    f_at = np.zeros(3)
    for j in range(1, 3):
        d = edges[j] - edges[j - 1]
        g_at[j] = g_at[j - 1] + std[j - 1] * d       # stale anchors
        f_at[j] = f_at[j - 1] + g_at[j - 1] * d + 0.5 * slopes[j - 1] * d * d

    def seg(t: float) -> int:
        return int(np.searchsorted(bps, t, side="left"))

    def value(x):
        t = float(np.asarray(x).reshape(()))
        j = seg(t)
        d = t - edges[j]
        return float(f_at[j] + g_at[j] * d + 0.5 * slopes[j] * d * d)

    def grad(x):
        t = float(np.asarray(x).reshape(()))
        j = seg(t)
        return np.array([g_at[j] + slopes[j] * (t - edges[j])])

    def hvp(x, v):
        t = float(np.asarray(x).reshape(()))
        return slopes[seg(t)] * np.asarray(v, dtype=float)

    return Objective(name="counterexample_1d_corrupted", dim=1,
                     mu=float(slopes.min()), lip=float(slopes.max()),
                     value=value, grad=grad, hvp=hvp,
                     minimizer=np.zeros(1), fmin=0.0)


def check_oracle_hygiene() -> CheckResult:
    """Analytic gradients and HVPs against central differences, whole catalog."""
    worst = 0.0
    worst_name = ""
    for name, obj in catalog().items():
        rng = Lcg64(100 + obj.dim)
        for _ in range(3):
            x = rng.on_sphere(obj.dim, 1.5)
            dev = check_gradient(obj, x, h=1e-6)
            if dev > worst:
                worst, worst_name = dev, name
    return CheckResult("oracle_hygiene", worst <= 1e-5,
                       f"worst relative deviation {worst:.3e} ({worst_name})")


def check_counterexample_continuity(
        obj: Optional[Objective] = None) -> CheckResult:
    target = obj if obj is not None else make_counterexample_1d()
    jump = check_piecewise_continuity(target, COUNTEREXAMPLE_BREAKPOINTS)
    return CheckResult("counterexample_continuity", jump <= 1e-9,
                       f"worst gradient jump {jump:.3e}")


def check_geometry_split(samples: int = 300) -> CheckResult:
    obj = canonical_quadratic(100.0)
    p = ManifoldParams(alpha=1.0, beta=1.0 / obj.lip)
    rng = Lcg64(42)
    worst_rec = worst_orth = worst_ann = 0.0
    for _ in range(samples):
        x1 = rng.on_sphere(obj.dim, 2.0)
        d1 = rng.normals(obj.dim)
        d2 = rng.normals(obj.dim)
        omega = connection(obj, x1, p)
        split = split_tangent(d1, d2, omega)
        h1, h2 = split.horizontal
        v1, v2 = split.vertical
        worst_rec = max(worst_rec,
                        float(np.max(np.abs(h1 + v1 - d1))),
                        float(np.max(np.abs(h2 + v2 - d2))))
        form = metric_r(omega)
        worst_orth = max(worst_orth, abs(form(h1, h2, v1, v2)))
        worst_ann = max(worst_ann, float(np.max(np.abs(omega(h1) + h2))))
    ok = worst_rec <= 1e-12 and worst_orth <= 1e-10 and worst_ann <= 1e-10
    return CheckResult(
        "geometry_split", ok,
        f"reconstruction {worst_rec:.2e}, orthogonality {worst_orth:.2e}, "
        f"annihilation {worst_ann:.2e}")


def check_gd_euler() -> CheckResult:
    obj = canonical_quadratic(10.0)
    x0 = Lcg64(5).on_sphere(obj.dim, 2.0)
    traj = run(MethodSpec("GD"), obj, x0, max_iters=100)
    flow = integrate_euler(FlowSpec("GradientFlow", rate=1.0 / obj.lip),
                           obj, x0, h=1.0, steps=100)
    dev = float(np.max(np.abs(traj.xs - flow.x1)))
    return CheckResult("gd_euler_identity", dev <= 1e-13,
                       f"max deviation {dev:.3e}")


def check_estimation_certificate() -> CheckResult:
    obj = canonical_quadratic(100.0)
    x0 = Lcg64(9).on_sphere(obj.dim, 3.0)
    traj, hist = coupled_nag_run(obj, x0, iters=100)
    a = np.sqrt(obj.mu / obj.lip)
    lam_dev = max(abs(s.lam - (1.0 - a) ** s.k) for s in hist)
    lower_ok = all(
        verify_lower_bound(s, obj, traj.states[s.k].x) for s in hist)
    rng = Lcg64(10)
    samples = [rng.on_sphere(obj.dim, 4.0) for _ in range(20)]
    env_ok = verify_envelope(hist[-1], obj, x0, samples)
    ok = lam_dev <= 1e-12 and lower_ok and env_ok
    return CheckResult(
        "estimation_certificate", ok,
        f"lambda deviation {lam_dev:.2e}, lower bound "
        f"{'holds' if lower_ok else 'FAILS'}, envelope "
        f"{'holds' if env_ok else 'FAILS'}")


def check_nag_sc_rate(momentum_sign: int = 1) -> CheckResult:
    obj = canonical_quadratic(100.0)
    # start along the slowest eigendirection so the trailing fit window is
    # squarely in the asymptotic regime
    q = np.linalg.eigh(_matrix(obj))[1][:, 0]
    x0 = obj.minimizer + 3.0 * q
    try:
        traj = run(MethodSpec("NagSC", momentum_sign=momentum_sign), obj, x0,
                   max_iters=300)
        rep = fit_rate(traj.f_gaps)
        fitted = rep.fitted_contraction
        detail = f"fitted contraction {fitted:.4f} (threshold 0.95)"
        return CheckResult("nag_sc_rate", fitted <= 0.95, detail)
    except AgdlabError as e:
        return CheckResult("nag_sc_rate", False, f"run failed: {e}")


def _matrix(obj: Objective) -> np.ndarray:
    cols = [obj.hvp(np.zeros(obj.dim), e) for e in np.eye(obj.dim)]
    return np.column_stack(cols)


def check_heavy_ball_cycle() -> CheckResult:
    obj = make_counterexample_1d()
    # starts just inside the middle segment; the attractor is the period-3
    # orbit (0.6465, -1.8024, 2.1159) rather than the minimizer
    x0 = np.array([1.001])
    hb = run(MethodSpec("HeavyBall"), obj, x0, max_iters=1500)
    rep = detect_cycle(hb)
    nag = run(MethodSpec("NagSC"), obj, x0, max_iters=1500, grad_tol=0.0)
    nag_gap = float(np.min(nag.f_gaps))
    ok = (not rep.converged and rep.recurrence_period is not None
          and rep.gap_floor > 1e-2 and nag_gap <= 1e-9)
    return CheckResult(
        "heavy_ball_cycle", ok,
        f"period {rep.recurrence_period}, gap floor {rep.gap_floor:.3f}, "
        f"NagSC best gap {nag_gap:.1e}")


def check_rk4_order() -> CheckResult:
    """Endpoint error must shrink ~16x when the step halves (4th order)."""
    spec = QuadraticSpec(eigenvalues=(1.0, 2.0, 5.0, 10.0), rotation_seed=3)
    obj = make_quadratic(spec)
    a = quadratic_matrix(spec)
    x0 = Lcg64(6).on_sphere(obj.dim, 2.0)
    w, q = np.linalg.eigh(a)
    exact = q @ (np.exp(-w * 1.0) * (q.T @ (x0 - obj.minimizer))) \
        + obj.minimizer
    fspec = FlowSpec("GradientFlow", rate=1.0)
    params = ManifoldParams(alpha=1.0, beta=1.0 / obj.lip)
    errs = []
    for steps in (80, 160):
        ft = integrate(fspec, obj, PhaseState(x0, np.zeros_like(x0), 0.0),
                       h=1.0 / steps, steps=steps, params=params)
        errs.append(float(np.linalg.norm(ft.x1[-1] - exact)))
    factor = errs[0] / errs[1]
    return CheckResult("rk4_order", 12.0 <= factor <= 20.0,
                       f"error reduction factor {factor:.2f} on halving")


def check_manifold_contraction() -> CheckResult:
    """log ||M|| must decay with slope -alpha under the control law."""
    obj = canonical_quadratic(10.0)
    spec = FlowSpec("ControlledNaim")     # alpha = 1
    resolved = spec.resolve(obj)
    params = ManifoldParams(alpha=resolved.alpha, beta=resolved.beta)
    rng = Lcg64(12)
    initial = PhaseState(rng.on_sphere(obj.dim, 2.0),
                         rng.on_sphere(obj.dim, 2.0), 0.0)
    h = 5.0 * default_step(obj)
    ft = integrate(spec, obj, initial, h=h, steps=int(20.0 / h), params=params)
    mask = ft.m0_residual_norm > 1e-13
    slope = np.polyfit(ft.t[mask], np.log(ft.m0_residual_norm[mask]), 1)[0]
    rel = abs(slope + resolved.alpha) / resolved.alpha
    return CheckResult("manifold_contraction", rel <= 0.01,
                       f"fitted slope {slope:.6f} vs -alpha = "
                       f"{-resolved.alpha} ({100 * rel:.3f}% off)")


_DETERMINISM_CONFIG = """\
{
  "version": 1,
  "seed": 77,
  "objective": {"kind": "canonical_quadratic", "kappa": 25.0},
  "x0": {"kind": "sphere", "radius": 2.0},
  "methods": [{"kind": "GD"}, {"kind": "NagSC"}, {"kind": "GradientFlow"}],
  "budgets": {"max_iters": 60, "flow_steps": 200}
}
"""


def check_determinism() -> CheckResult:
    cfg = parse_config(_DETERMINISM_CONFIG)
    with tempfile.TemporaryDirectory() as tmp:
        d1, d2 = Path(tmp) / "a", Path(tmp) / "b"
        run_experiment(cfg, out_dir=d1)
        run_experiment(cfg, out_dir=d2)
        for f1 in sorted(d1.glob("*.csv")):
            f2 = d2 / f1.name
            if f1.read_bytes() != f2.read_bytes():
                return CheckResult("determinism", False,
                                   f"{f1.name} differs between runs")
        s1 = (d1 / "summary.json").read_bytes()
        s2 = (d2 / "summary.json").read_bytes()
        if s1 != s2:
            return CheckResult("determinism", False, "summary.json differs")
    return CheckResult("determinism", True,
                       "repeated runs are byte-identical")


def run_all(momentum_sign: int = 1,
            counterexample: Optional[Objective] = None) -> List[CheckResult]:
    return [
        check_oracle_hygiene(),
        check_counterexample_continuity(counterexample),
        check_geometry_split(),
        check_gd_euler(),
        check_estimation_certificate(),
        check_nag_sc_rate(momentum_sign),
        check_heavy_ball_cycle(),
        check_rk4_order(),
        check_manifold_contraction(),
        check_determinism(),
    ]
