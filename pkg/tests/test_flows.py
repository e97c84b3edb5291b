"""Right-hand sides, the RK4 integrator, and the Euler/GD identity.

Closed-form solutions pin the easy cases; HighResSC and HighResConvex are
cross-checked against an adaptive high-accuracy reference integration so
the fixed-step results are validated by an independent scheme.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from agdlab.exceptions import (
    DivergenceError, InvalidSpecError, TimeDomainError)
from agdlab.flows import (
    VARIANTS, FlowSpec, default_step, integrate, integrate_euler, rhs)
from agdlab.geometry import ManifoldParams, PhaseState, residual_m0
from agdlab.objectives import (
    Objective, QuadraticSpec, canonical_quadratic, make_quadratic)
from agdlab.optimizers import MethodSpec, run
from agdlab.rng import Lcg64


def scalar_quadratic(lam: float) -> Objective:
    return Objective(
        name=f"half_{lam:g}_x2", dim=1, mu=lam, lip=lam,
        value=lambda x: 0.5 * lam * float(x[0]) ** 2,
        grad=lambda x: lam * np.asarray(x, dtype=float),
        hvp=lambda x, v: lam * np.asarray(v, dtype=float),
        minimizer=np.zeros(1), fmin=0.0,
    )


# --- specs ---------------------------------------------------------------------

def test_flow_spec_validation():
    with pytest.raises(InvalidSpecError):
        FlowSpec("NoSuchFlow")
    with pytest.raises(InvalidSpecError):
        FlowSpec("GradientFlow", rate=-1.0)
    with pytest.raises(InvalidSpecError):
        FlowSpec("HighResConvex", t0=0.0)


def test_resolve_fills_defaults():
    obj = canonical_quadratic(100.0)
    res = FlowSpec("ControlledNaim").resolve(obj)
    assert res.alpha == 1.0
    assert res.beta == 1.0 / obj.lip
    assert res.rate == 1.0 / obj.lip
    assert res.gamma == 1.0 / np.sqrt(obj.lip)
    assert res.t0 == 1.0 / np.sqrt(obj.lip)
    # explicit values survive resolution
    res2 = FlowSpec("ControlledNaim", alpha=2.5).resolve(obj)
    assert res2.alpha == 2.5


def test_default_step():
    obj = canonical_quadratic(100.0)
    assert default_step(obj) == 0.01 / np.sqrt(obj.lip)


# --- right-hand sides -------------------------------------------------------------

def test_rhs_zero_at_equilibrium():
    obj = scalar_quadratic(2.0)
    eq = PhaseState(np.zeros(1), np.zeros(1), t=1.0)
    for variant in VARIANTS:
        d1, d2 = rhs(FlowSpec(variant), eq, obj)
        assert np.max(np.abs(d1)) == 0.0 and np.max(np.abs(d2)) == 0.0


def test_rhs_gradient_flow_hand_value():
    lam = 4.0
    obj = scalar_quadratic(lam)
    d1, d2 = rhs(FlowSpec("GradientFlow"), PhaseState(np.array([1.0]), np.zeros(1)), obj)
    assert d1[0] == -(1.0 / lam) * lam      # rate defaults to 1/L
    assert d2[0] == 0.0
    d1b, _ = rhs(FlowSpec("GradientFlow", rate=0.5),
                 PhaseState(np.array([1.0]), np.zeros(1)), obj)
    assert d1b[0] == -0.5 * lam


def test_rhs_high_res_sc_hand_value():
    obj = scalar_quadratic(1.0)     # mu = L = 1
    d1, d2 = rhs(FlowSpec("HighResSC"), PhaseState(np.array([1.0]), np.zeros(1)), obj)
    assert d1[0] == 0.0
    assert d2[0] == -2.0            # Hessian and friction terms vanish at x2 = 0


def test_rhs_controlled_naim_matches_control_law():
    from agdlab.geometry import control_law
    obj = canonical_quadratic(25.0, dim=4)
    spec = FlowSpec("ControlledNaim", alpha=1.7).resolve(obj)
    rng = Lcg64(3)
    s = PhaseState(rng.on_sphere(4, 1.0), rng.on_sphere(4, 1.0))
    d1, d2 = rhs(spec, s, obj)
    assert np.array_equal(d1, s.x2)
    u = control_law(s, obj, ManifoldParams(spec.alpha, spec.beta))
    assert np.max(np.abs(d2 - u)) == 0.0


def test_rhs_perturbed_naim_identity():
    # Mdot = -alpha (M + M_p) exactly, with M_p = x2 + (1/alpha) grad f
    obj = canonical_quadratic(25.0, dim=5)
    spec = FlowSpec("PerturbedNaim", alpha=1.5).resolve(obj)
    rng = Lcg64(44)
    for _ in range(6):
        s = PhaseState(rng.on_sphere(5, 2.0), rng.on_sphere(5, 1.5))
        d1, d2 = rhs(spec, s, obj)
        mdot = d2 + spec.beta * obj.hvp(s.x1, d1)
        g = obj.grad(s.x1)
        m = s.x2 + spec.beta * g
        mp = s.x2 + (1.0 / spec.alpha) * g
        assert np.max(np.abs(mdot + spec.alpha * (m + mp))) <= 1e-12


def test_rhs_heavy_ball_flow_drops_hessian_damping():
    obj = canonical_quadratic(25.0, dim=3)
    rng = Lcg64(5)
    s = PhaseState(rng.on_sphere(3, 1.0), rng.on_sphere(3, 1.0))
    _, d2_hb = rhs(FlowSpec("HeavyBallFlow"), s, obj)
    _, d2_sc = rhs(FlowSpec("HighResSC"), s, obj)
    diff = d2_sc - d2_hb
    want = -(1.0 / np.sqrt(obj.lip)) * obj.hvp(s.x1, s.x2)
    assert np.max(np.abs(diff - want)) <= 1e-12


def test_rhs_triple_momentum_flow_formula():
    obj = canonical_quadratic(25.0, dim=3)
    spec = FlowSpec("TripleMomentumFlow").resolve(obj)
    rng = Lcg64(6)
    s = PhaseState(rng.on_sphere(3, 1.0), rng.on_sphere(3, 1.0))
    _, d2 = rhs(spec, s, obj)
    want = (-(1.0 / obj.lip + spec.gamma) * obj.hvp(s.x1, s.x2)
            - obj.mu * s.x2 - (1.0 + obj.mu / obj.lip) * obj.grad(s.x1))
    assert np.max(np.abs(d2 - want)) == 0.0


def test_high_res_convex_time_domain():
    obj = canonical_quadratic(4.0, dim=2)
    spec = FlowSpec("HighResConvex").resolve(obj)
    before_t0 = PhaseState(np.ones(2), np.zeros(2), t=0.0)
    with pytest.raises(TimeDomainError):
        rhs(spec, before_t0, obj)
    with pytest.raises(TimeDomainError):
        integrate(spec, obj, before_t0, h=0.01, steps=10,
                  params=ManifoldParams(1.0, 1.0 / obj.lip))


# --- integration ------------------------------------------------------------------

def test_gradient_flow_matches_exponential():
    # x(t) = e^{-t} for beta = 1/lambda; RK4 at h = 1e-3 is far inside 1e-8
    lam = 4.0
    obj = scalar_quadratic(lam)
    traj = integrate(FlowSpec("GradientFlow"), obj,
                     PhaseState(np.array([1.0]), np.zeros(1)),
                     h=1e-3, steps=5000, params=ManifoldParams(1.0, 1.0 / lam))
    assert np.max(np.abs(traj.x1[:, 0] - np.exp(-traj.t))) <= 1e-8


def test_integrate_validation():
    obj = scalar_quadratic(1.0)
    p = ManifoldParams(1.0, 1.0)
    s = PhaseState(np.ones(1), np.zeros(1))
    with pytest.raises(InvalidSpecError):
        integrate(FlowSpec("GradientFlow"), obj, s, h=0.0, steps=10, params=p)
    with pytest.raises(InvalidSpecError):
        integrate(FlowSpec("GradientFlow"), obj, s, h=0.1, steps=0, params=p)


def test_controlled_naim_residual_is_exact_exponential():
    # Mdot = -alpha M makes ||M|| decay as e^{-alpha t} up to integrator error
    obj = canonical_quadratic(10.0, dim=6)
    spec = FlowSpec("ControlledNaim").resolve(obj)
    p = ManifoldParams(spec.alpha, spec.beta)
    rng = Lcg64(12)
    x1 = rng.on_sphere(6, 2.0)
    x2 = rng.on_sphere(6, 1.0)
    traj = integrate(spec, obj, PhaseState(x1, x2), h=0.01, steps=1500, params=p)
    model = traj.m0_residual_norm[0] * np.exp(-spec.alpha * traj.t)
    assert np.max(np.abs(traj.m0_residual_norm / model - 1.0)) <= 1e-6


def test_high_res_sc_against_adaptive_reference():
    obj = canonical_quadratic(25.0, dim=4)
    spec = FlowSpec("HighResSC").resolve(obj)
    x0 = Lcg64(3).on_sphere(4, 1.5)
    v0 = -np.sqrt(1.0 / obj.lip) * obj.grad(x0)

    def f(t, z):
        d1, d2 = rhs(spec, PhaseState(z[:4], z[4:], t), obj)
        return np.concatenate([d1, d2])

    sol = solve_ivp(f, (0.0, 3.0), np.concatenate([x0, v0]),
                    rtol=1e-12, atol=1e-13, dense_output=True)
    traj = integrate(spec, obj, PhaseState(x0, v0), h=0.002, steps=1500,
                     params=ManifoldParams(1.0, 1.0 / obj.lip))
    ref = sol.sol(traj.t).T
    assert np.max(np.abs(np.hstack([traj.x1, traj.x2]) - ref)) <= 1e-8


def test_high_res_convex_against_adaptive_reference():
    obj = canonical_quadratic(25.0, dim=4)
    spec = FlowSpec("HighResConvex").resolve(obj)
    x0 = Lcg64(3).on_sphere(4, 1.5)
    v0 = -np.sqrt(1.0 / obj.lip) * obj.grad(x0)
    t0 = spec.t0

    def f(t, z):
        d1, d2 = rhs(spec, PhaseState(z[:4], z[4:], t), obj)
        return np.concatenate([d1, d2])

    sol = solve_ivp(f, (t0, t0 + 3.0), np.concatenate([x0, v0]),
                    rtol=1e-12, atol=1e-13, dense_output=True)
    traj = integrate(spec, obj, PhaseState(x0, v0, t=t0), h=0.002, steps=1500,
                     params=ManifoldParams(1.0, 1.0 / obj.lip))
    ref = sol.sol(traj.t).T
    # time-dependent friction: the integrator must feed RK4 stages the
    # correct intermediate times or this comparison falls apart
    assert np.max(np.abs(np.hstack([traj.x1, traj.x2]) - ref)) <= 5e-8


def test_rk4_is_fourth_order():
    # halving h shrinks the endpoint error by ~16; the window [12, 20]
    # tolerates the constant drifting with the remaining h^5 terms
    obj = make_quadratic(QuadraticSpec([1.0, 2.0, 5.0, 10.0], rotation_seed=3))
    spec = FlowSpec("HighResSC").resolve(obj)
    x0 = Lcg64(3).on_sphere(4, 1.0)
    s0 = PhaseState(x0, np.zeros(4))
    p = ManifoldParams(1.0, 1.0 / obj.lip)
    T = 2.0

    def endpoint(steps):
        tr = integrate(spec, obj, s0, h=T / steps, steps=steps, params=p)
        return np.concatenate([tr.x1[-1], tr.x2[-1]])

    def f(t, z):
        d1, d2 = rhs(spec, PhaseState(z[:4], z[4:], t), obj)
        return np.concatenate([d1, d2])

    ref = solve_ivp(f, (0.0, T), np.concatenate([x0, np.zeros(4)]),
                    rtol=1e-13, atol=1e-14).y[:, -1]
    e_coarse = np.linalg.norm(endpoint(80) - ref)
    e_fine = np.linalg.norm(endpoint(160) - ref)
    assert 12.0 <= e_coarse / e_fine <= 20.0


def test_divergence_reports_step_index():
    obj = canonical_quadratic(100.0)
    spec = FlowSpec("HighResSC").resolve(obj)
    s0 = PhaseState(Lcg64(1).on_sphere(8, 1.0), np.zeros(8))
    with pytest.raises(DivergenceError) as exc:
        integrate(spec, obj, s0, h=10.0, steps=50,
                  params=ManifoldParams(1.0, 1.0 / obj.lip))
    assert 1 <= exc.value.step <= 50


def test_trajectory_diagnostics_columns():
    obj = canonical_quadratic(10.0, dim=4)
    spec = FlowSpec("ControlledNaim").resolve(obj)
    p = ManifoldParams(spec.alpha, spec.beta)
    rng = Lcg64(19)
    s0 = PhaseState(rng.on_sphere(4, 1.0), rng.on_sphere(4, 0.5))
    traj = integrate(spec, obj, s0, h=0.02, steps=50, params=p)
    assert len(traj) == 51
    assert traj.t[0] == 0.0 and abs(traj.t[-1] - 1.0) <= 1e-12
    # recomputed diagnostics agree with the recorded columns
    i = 17
    s = traj.state(i)
    m = residual_m0(s, obj, p)
    assert abs(traj.m0_residual_norm[i] - np.linalg.norm(m)) <= 1e-13
    assert abs(traj.storage[i] - 0.5 * float(m @ m)) <= 1e-13
    assert abs(traj.f_gap[i] - (obj.value(s.x1) - obj.fmin)) <= 1e-13
    assert abs(traj.grad_norm[i] - np.linalg.norm(obj.grad(s.x1))) <= 1e-13


def test_f_gap_nan_when_fmin_unknown():
    from agdlab.objectives import canonical_log_sum_exp
    obj = canonical_log_sum_exp(with_minimizer=False)
    spec = FlowSpec("GradientFlow").resolve(obj)
    traj = integrate(spec, obj, PhaseState(np.ones(6), np.zeros(6)),
                     h=0.05, steps=10, params=ManifoldParams(1.0, 1.0 / obj.lip))
    assert np.all(np.isnan(traj.f_gap))
    assert np.all(np.isfinite(traj.grad_norm))


# --- forward Euler / GD identity ----------------------------------------------------

def test_euler_only_supports_gradient_flow():
    obj = scalar_quadratic(1.0)
    with pytest.raises(InvalidSpecError):
        integrate_euler(FlowSpec("HighResSC"), obj, np.ones(1), h=1.0, steps=5)


def test_euler_identity_with_gd():
    # rate 1/L and h = 1: the two recursions are the same float expression
    obj = canonical_quadratic(10.0)
    x0 = Lcg64(5).on_sphere(8, 2.0)
    traj_gd = run(MethodSpec("GD"), obj, x0, max_iters=50)
    traj_euler = integrate_euler(FlowSpec("GradientFlow"), obj, x0, h=1.0, steps=50)
    assert np.array_equal(traj_gd.xs, traj_euler.x1)


def test_euler_fixed_point_and_one_step_kill():
    obj = scalar_quadratic(1.0)
    # from the minimizer: constant
    t0 = integrate_euler(FlowSpec("GradientFlow"), obj, np.zeros(1), h=1.0, steps=3)
    assert np.array_equal(t0.x1, np.zeros((4, 1)))
    # L = 1, x0 = 1: samples 1, 0, 0, ...
    t1 = integrate_euler(FlowSpec("GradientFlow"), obj, np.ones(1), h=1.0, steps=3)
    assert list(t1.x1[:, 0]) == [1.0, 0.0, 0.0, 0.0]
