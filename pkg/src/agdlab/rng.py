"""Deterministic random numbers for every artifact in the library.

All seeded randomness (rotation matrices, start points, sample clouds) goes
through one documented generator so that runs reproduce bit-for-bit on any
platform and are reimplementable in other languages from this file alone.

Generator definition
--------------------
64-bit linear congruential generator with the MMIX multiplier:

    state_{k+1} = (6364136223846793005 * state_k + 1442695040888963407) mod 2^64

The initial state is ``seed XOR 0x9E3779B97F4A7C15`` (the xor decorrelates
small seeds from each other and keeps seed 0 usable).  Uniforms take the top
53 bits; normals use the Box-Muller transform on uniform pairs; orthogonal
matrices come from modified Gram-Schmidt applied to a square matrix of
normals.  The draw order of every helper below is part of the contract:
changing it silently changes every seeded instance.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_MULT = 6364136223846793005
_INC = 1442695040888963407
_SEED_XOR = 0x9E3779B97F4A7C15
_TWO53 = 2.0**-53


class Lcg64:
    """Seeded deterministic generator. Not thread-safe; use one per consumer."""

    def __init__(self, seed: int):
        self.state = (int(seed) ^ _SEED_XOR) & _MASK
        self._spare_normal: float | None = None

    def u64(self) -> int:
        self.state = (_MULT * self.state + _INC) & _MASK
        return self.state

    def uniform(self) -> float:
        """One double in [0, 1), top 53 bits of the state."""
        return (self.u64() >> 11) * _TWO53

    def normal(self) -> float:
        """One standard normal via Box-Muller (pairs cached internally)."""
        if self._spare_normal is not None:
            z, self._spare_normal = self._spare_normal, None
            return z
        # u1 in (0, 1] so the log never sees zero
        u1 = ((self.u64() >> 11) + 1) * _TWO53
        u2 = (self.u64() >> 11) * _TWO53
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(n)])

    def on_sphere(self, dim: int, radius: float) -> np.ndarray:
        """Point drawn uniformly on the sphere of the given radius."""
        v = self.normals(dim)
        nv = np.linalg.norm(v)
        while nv < 1e-12:          # astronomically unlikely; keeps the contract total
            v = self.normals(dim)
            nv = np.linalg.norm(v)
        return (radius / nv) * v

    def orthogonal(self, n: int) -> np.ndarray:
        """Random orthogonal matrix: modified Gram-Schmidt on an n x n normal draw.

        Columns are orthonormal to machine precision.  The Gaussian matrix is
        drawn column count fastest (row-major reshape of n*n normals).
        """
        g = self.normals(n * n).reshape(n, n)
        q = np.zeros((n, n))
        for j in range(n):
            v = g[:, j].copy()
            for i in range(j):
                v -= (q[:, i] @ v) * q[:, i]
            nv = np.linalg.norm(v)
            if nv < 1e-10:
                # a numerically dependent column; replace it with a fresh draw
                v = self.normals(n)
                for i in range(j):
                    v -= (q[:, i] @ v) * q[:, i]
                nv = np.linalg.norm(v)
            q[:, j] = v / nv
        return q
