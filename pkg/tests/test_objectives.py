"""Oracle correctness for the shipped objective families.

Hand-derived values are asserted exactly where the arithmetic is exact;
finite-difference cross-checks use the same tolerances the hygiene sweep
enforces (1e-5 on the max relative deviation).
"""

import numpy as np
import pytest

from agdlab.exceptions import InvalidSpecError, UndefinedConditionNumberError
from agdlab.objectives import (
    COUNTEREXAMPLE_BREAKPOINTS,
    PiecewiseGradient1DSpec,
    QuadraticSpec,
    canonical_log_sum_exp,
    canonical_quadratic,
    catalog,
    check_gradient,
    check_piecewise_continuity,
    condition_number,
    ill_scaled_quadratic,
    locate_minimizer,
    make_counterexample_1d,
    make_log_sum_exp,
    make_piecewise_gradient_1d,
    make_quadratic,
    quadratic_matrix,
    rotation_matrix,
)
from agdlab.rng import Lcg64


# --- quadratics -------------------------------------------------------------

def test_quadratic_extremes_are_mu_and_lip():
    obj = make_quadratic(QuadraticSpec([1.0, 100.0], rotation_seed=4))
    assert obj.mu == 1.0 and obj.lip == 100.0
    assert condition_number(obj) == 100.0


def test_quadratic_gradient_zero_at_offset():
    off = [0.3, -1.2, 2.0]
    obj = make_quadratic(QuadraticSpec([1.0, 2.0, 5.0], rotation_seed=6, offset=off))
    assert np.max(np.abs(obj.grad(np.array(off)))) == 0.0
    assert obj.value(np.array(off)) == obj.fmin == 0.0
    assert np.array_equal(obj.minimizer, np.array(off))


def test_quadratic_scalar_hand_values():
    # f = 0.5 * 4 * x^2 at x = 2: a 1-D rotation is +-1, so the matrix is
    # exactly [[4]] regardless of seed.
    obj = make_quadratic(QuadraticSpec([4.0], rotation_seed=0))
    x = np.array([2.0])
    assert obj.value(x) == 8.0
    assert obj.grad(x)[0] == 8.0
    assert np.array_equal(obj.hvp(x, np.array([3.0])), np.array([12.0]))


def test_quadratic_matches_dense_matrix():
    spec = QuadraticSpec(np.logspace(0, 2, 5), rotation_seed=17)
    obj = make_quadratic(spec)
    a = quadratic_matrix(spec)
    rng = Lcg64(31)
    for _ in range(5):
        x = rng.normals(5)
        v = rng.normals(5)
        assert abs(obj.value(x) - 0.5 * x @ a @ x) <= 1e-12 * (1 + abs(obj.value(x)))
        assert np.max(np.abs(obj.grad(x) - a @ x)) <= 1e-12 * (1 + np.max(np.abs(a @ x)))
        assert np.max(np.abs(obj.hvp(x, v) - a @ v)) <= 1e-12 * (1 + np.max(np.abs(a @ v)))


def test_quadratic_eigenvector_columns():
    spec = QuadraticSpec([1.0, 3.0, 9.0], rotation_seed=2)
    a = quadratic_matrix(spec)
    q = rotation_matrix(3, 2)
    for i, lam in enumerate(spec.eigenvalues):
        assert np.max(np.abs(a @ q[:, i] - lam * q[:, i])) <= 1e-10


def test_quadratic_validation():
    with pytest.raises(InvalidSpecError):
        make_quadratic(QuadraticSpec([], rotation_seed=1))
    with pytest.raises(InvalidSpecError):
        make_quadratic(QuadraticSpec([1.0, -2.0], rotation_seed=1))
    with pytest.raises(InvalidSpecError):
        QuadraticSpec([1.0, 2.0], rotation_seed=1, offset=[0.0])


def test_canonical_quadratic_shape():
    obj = canonical_quadratic(100.0)
    assert obj.dim == 8 and obj.mu == 1.0
    assert abs(obj.lip - 100.0) <= 1e-12 * 100.0
    with pytest.raises(InvalidSpecError):
        canonical_quadratic(0.5)


# --- log-sum-exp -------------------------------------------------------------

def test_lse_symmetric_pair_hand_values():
    rows = np.array([[1.0], [-1.0]])
    obj = make_log_sum_exp(rows, np.zeros(2), smoothing=1.0)
    z = np.zeros(1)
    assert abs(obj.value(z) - np.log(2.0)) <= 1e-15
    assert abs(obj.grad(z)[0]) == 0.0
    x = np.array([1.0])
    assert abs(obj.value(x) - np.log(np.e + 1.0 / np.e)) <= 1e-15
    assert obj.mu == 0.0


def test_lse_lip_is_max_row_norm_sq_over_smoothing():
    rows = np.array([[3.0, 4.0], [1.0, 0.0], [-3.0, -4.0]])
    obj = make_log_sum_exp(rows, np.zeros(3), smoothing=0.5)
    assert obj.lip == 25.0 / 0.5


def test_lse_overflow_safe():
    rows = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    obj = make_log_sum_exp(rows, np.zeros(3), smoothing=1.0)
    x = np.array([1e4, -1e4])
    assert np.isfinite(obj.value(x))
    assert np.all(np.isfinite(obj.grad(x)))


def test_lse_oracles_against_differences():
    obj = canonical_log_sum_exp()
    rng = Lcg64(77)
    for _ in range(3):
        x = rng.on_sphere(6, 1.5)
        assert check_gradient(obj, x, 1e-6) <= 1e-5


def test_lse_hvp_matches_differenced_gradient():
    obj = canonical_log_sum_exp()
    rng = Lcg64(78)
    x = rng.on_sphere(6, 1.0)
    v = rng.on_sphere(6, 1.0)
    h = 1e-6
    num = (obj.grad(x + h * v) - obj.grad(x - h * v)) / (2 * h)
    assert np.max(np.abs(num - obj.hvp(x, v))) <= 1e-5


def test_lse_frozen_minimizer_is_stationary():
    obj = canonical_log_sum_exp()
    g = obj.grad(obj.minimizer)
    assert np.max(np.abs(g)) <= 1e-12
    assert abs(obj.value(obj.minimizer) - obj.fmin) == 0.0


def test_lse_frozen_minimizer_matches_fresh_descent():
    # locate_minimizer rebuilds the frozen reference point from scratch
    obj = canonical_log_sum_exp(with_minimizer=False)
    assert obj.minimizer is None and obj.fmin is None
    relocated = locate_minimizer(obj, iters=200_000)
    ref = canonical_log_sum_exp()
    assert np.max(np.abs(relocated.minimizer - ref.minimizer)) <= 1e-12
    assert abs(relocated.fmin - ref.fmin) <= 1e-14


def test_lse_validation():
    with pytest.raises(InvalidSpecError):
        make_log_sum_exp(np.ones((1, 2)), np.zeros(1), 1.0)     # m < 2
    with pytest.raises(InvalidSpecError):
        make_log_sum_exp(np.ones((3, 2)), np.zeros(2), 1.0)     # shift length
    with pytest.raises(InvalidSpecError):
        make_log_sum_exp(np.ones((3, 2)), np.zeros(3), 0.0)     # smoothing


def test_condition_number_undefined_for_mu_zero():
    with pytest.raises(UndefinedConditionNumberError):
        condition_number(canonical_log_sum_exp())


# --- piecewise 1-D -----------------------------------------------------------

def test_counterexample_hand_values():
    obj = make_counterexample_1d()
    assert obj.mu == 1.0 and obj.lip == 25.0
    assert obj.grad(np.array([0.0]))[0] == 0.0
    # g(x) = 25x, x+24, 25x-24 on the three segments
    assert obj.grad(np.array([3.0]))[0] == 51.0
    assert obj.grad(np.array([1.5]))[0] == 25.5
    # f by exact integration: f(1)=12.5, f(2)=12.5+25+0.5=38, f(3)=38+26+12.5=76.5
    assert obj.value(np.array([2.0])) == 38.0
    assert obj.value(np.array([3.0])) == 76.5


def test_counterexample_gradient_continuous_at_breakpoints():
    obj = make_counterexample_1d()
    # both one-sided formulas at x=1 give 25; extrapolation check gives ~0 jump
    assert obj.grad(np.array([1.0]))[0] == 25.0
    assert check_piecewise_continuity(obj, COUNTEREXAMPLE_BREAKPOINTS) <= 1e-9
    for b in COUNTEREXAMPLE_BREAKPOINTS:
        below = obj.grad(np.array([b - 1e-9]))[0]
        above = obj.grad(np.array([b + 1e-9]))[0]
        assert abs(below - above) <= 1e-6


def test_counterexample_interior_gradient_check():
    obj = make_counterexample_1d()
    assert check_gradient(obj, np.array([0.5]), 1e-8) <= 1e-5


def test_piecewise_negative_axis_and_minimizer():
    obj = make_counterexample_1d()
    assert obj.value(np.array([-2.0])) == 50.0      # 0.5 * 25 * 4
    assert obj.grad(np.array([-2.0]))[0] == -50.0
    assert obj.fmin == 0.0 and obj.minimizer[0] == 0.0


def test_piecewise_validation():
    with pytest.raises(InvalidSpecError):
        make_piecewise_gradient_1d(PiecewiseGradient1DSpec([1.0], [25.0]))
    with pytest.raises(InvalidSpecError):
        make_piecewise_gradient_1d(PiecewiseGradient1DSpec([1.0], [25.0, -1.0]))
    with pytest.raises(InvalidSpecError):
        make_piecewise_gradient_1d(PiecewiseGradient1DSpec([2.0, 1.0], [1.0, 2.0, 3.0]))
    with pytest.raises(InvalidSpecError):
        make_piecewise_gradient_1d(PiecewiseGradient1DSpec([-1.0, 2.0], [1.0, 2.0, 3.0]))


# --- hygiene across the catalog ----------------------------------------------

def test_catalog_members():
    cat = catalog()
    for key in ("quadratic_kappa100", "log_sum_exp", "counterexample_1d",
                "ill_scaled_quadratic"):
        assert key in cat


def test_gradient_check_rejects_bad_step():
    with pytest.raises(InvalidSpecError):
        check_gradient(canonical_quadratic(10.0), np.zeros(8), 0.0)


def test_gradient_check_quadratic_tight():
    # central differences are exact on quadratics up to rounding
    obj = canonical_quadratic(25.0)
    x = Lcg64(13).on_sphere(8, 2.0)
    assert check_gradient(obj, x, 1e-6) <= 1e-6


def test_fingerprint_distinguishes_instances():
    a = canonical_quadratic(10.0)
    b = canonical_quadratic(25.0)
    assert a.fingerprint() != b.fingerprint()
    assert a.fingerprint() == canonical_quadratic(10.0).fingerprint()


def test_f_gap_requires_fmin():
    obj = canonical_log_sum_exp(with_minimizer=False)
    with pytest.raises(InvalidSpecError):
        obj.f_gap(np.zeros(6))


def test_ill_scaled_is_convex_with_flat_mode():
    obj = ill_scaled_quadratic()
    assert obj.mu == 1e-4 and obj.lip == 1.0
