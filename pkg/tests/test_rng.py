"""Frozen-value and property tests for the deterministic generator.

The reference numbers below were produced once from the generator definition
(MMIX multiplier LCG, seed xor 0x9E3779B97F4A7C15, top-53-bit uniforms,
Box-Muller normals) and are part of the reproducibility contract: any change
to the draw order or the arithmetic must show up here.
"""

import numpy as np
import pytest

from agdlab.rng import Lcg64


# --- frozen references, seed 1 ---------------------------------------------

def test_u64_first_draw_seed1():
    assert Lcg64(1).u64() == 15319268960792296659


def test_uniform_sequence_seed1():
    r = Lcg64(1)
    got = [r.uniform() for _ in range(3)]
    want = [0.8304592344090381, 0.2583139341082118, 0.6591820017156436]
    assert got == want          # bitwise, not approximate


def test_normal_sequence_seed1():
    r = Lcg64(1)
    got = [r.normal() for _ in range(3)]
    want = [-0.03182725788579446, 0.6087198855983847, 0.024906086959118477]
    assert got == want


def test_orthogonal_frozen_entry():
    q = Lcg64(7).orthogonal(5)
    assert q[0, 0] == -0.9088890741689767


# --- properties -------------------------------------------------------------

def test_same_seed_same_stream():
    a, b = Lcg64(123), Lcg64(123)
    assert [a.u64() for _ in range(10)] == [b.u64() for _ in range(10)]
    assert a.normal() == b.normal()


def test_different_seeds_differ():
    assert Lcg64(0).u64() != Lcg64(1).u64()


def test_uniform_range():
    r = Lcg64(9)
    us = [r.uniform() for _ in range(1000)]
    assert all(0.0 <= u < 1.0 for u in us)


def test_normals_match_scalar_draws():
    # normals(n) must be exactly n scalar draws in order (draw-order contract)
    a, b = Lcg64(5), Lcg64(5)
    assert np.array_equal(a.normals(6), np.array([b.normal() for _ in range(6)]))


def test_normal_pair_caching():
    # Box-Muller consumes a uniform pair per two normals; odd counts leave a
    # cached spare and the state advances only on fresh pairs.
    a = Lcg64(11)
    state_before = a.state
    a.normal()
    assert a._spare_normal is not None
    state_after_pair = a.state
    a.normal()
    assert a._spare_normal is None
    assert a.state == state_after_pair != state_before


def test_on_sphere_radius():
    r = Lcg64(3)
    for radius in (0.5, 1.0, 7.25):
        v = r.on_sphere(6, radius)
        assert v.shape == (6,)
        assert abs(np.linalg.norm(v) - radius) <= 1e-12 * (1.0 + radius)


@pytest.mark.parametrize("n", [2, 5, 8])
def test_orthogonal_is_orthogonal(n):
    q = Lcg64(7).orthogonal(n)
    assert np.max(np.abs(q.T @ q - np.eye(n))) <= 1e-14
    assert np.max(np.abs(q @ q.T - np.eye(n))) <= 1e-14


def test_orthogonal_deterministic():
    assert np.array_equal(Lcg64(42).orthogonal(4), Lcg64(42).orthogonal(4))
