"""Shared helpers: random kernels and slow reference implementations used as
oracles for the fast paths."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from cwchaos.space import Kernel, SpaceSpec, symmetrize


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_kernel(rng, space: SpaceSpec, p: int, q: int, symmetric: bool = True) -> Kernel:
    shape = (space.n,) * (p + q)
    arr = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kern = Kernel(space, p, q, arr)
    return symmetrize(kern) if symmetric else kern


def random_space(rng, n: int, weighted: bool = False) -> SpaceSpec:
    if weighted:
        return SpaceSpec(n, weights=0.5 + rng.random(n))
    return SpaceSpec.orthonormal(n)


def contract_reference(f: Kernel, g: Kernel, i: int, j: int) -> Kernel:
    """Contraction by explicit index loops; the oracle for the tensordot path.

    Pairs the last i holomorphic slots of f with the last i antiholomorphic
    slots of g and the last j antiholomorphic slots of f with the last j
    holomorphic slots of g, one weight per contracted pair, no conjugation.
    """
    n = f.space.n
    w = f.space.weights
    a, b = f.p, f.q
    c, d = g.p, g.q
    P, Q = a + c - i - j, b + d - i - j
    out = np.zeros((n,) * (P + Q), dtype=complex)
    for free in itertools.product(range(n), repeat=P + Q):
        th_f = free[: a - i]
        th_g = free[a - i: P]
        ts_f = free[P: P + (b - j)]
        ts_g = free[P + (b - j):]
        total = 0.0 + 0.0j
        for u in itertools.product(range(n), repeat=i):
            for v in itertools.product(range(n), repeat=j):
                f_val = f.coeffs[th_f + u + ts_f + v]
                g_val = g.coeffs[th_g + v + ts_g + u]
                weight = 1.0
                for idx in u + v:
                    weight *= w[idx]
                total += f_val * g_val * weight
        out[free] = total
    return Kernel(f.space, P, Q, out)
