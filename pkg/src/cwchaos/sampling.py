"""Monte Carlo sampling of chaos variables and empirical distance estimators.

A chaos variable with symmetric kernels over an orthonormalized basis is
sampled exactly in distribution through products of Hermite-Laguerre-Ito
polynomials of i.i.d. circular standard complex Gaussians: an elementary
basis tensor with per-index multiplicities (a_k, b_k) maps to

    prod_k 2^{-(a_k + b_k)/2} H_{a_k, b_k}(sqrt(2) Z_k).

Non-unit Gram weights are absorbed by rescaling coefficients to the
orthonormalized basis e_k / sqrt(w_k) before sampling.

Random streams are counter-based (Philox) and split per fixed-size sample
block, so batches are bit-reproducible for a given (seed, N, generator
version) independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import factorial, pi, sqrt

import numpy as np

from .chaos import ChaosVariable
from .space import Kernel

__all__ = [
    "GENERATOR_VERSION",
    "SampleBatch",
    "GaussianTarget",
    "hermite_hl",
    "sample_chaos",
    "sample_gaussian",
    "wasserstein_1d",
    "sliced_wasserstein_2d",
    "exact_wasserstein_2d",
    "save_batch",
]

GENERATOR_VERSION = "cwchaos-hermite-1"

_BLOCK = 1 << 16


@dataclass(frozen=True)
class SampleBatch:
    """N complex samples plus the seed and generator description that made them."""

    values: np.ndarray
    seed: int
    meta: str

    def __post_init__(self):
        if self.values.size < 1:
            raise ValueError("a batch needs at least one sample")


@dataclass(frozen=True)
class GaussianTarget:
    """Reference complex Gaussian law: circular(sigma_sq) or the general
    bivariate law of (Re, Im) with covariance [[s+a, b], [b, s-a]] / 2."""

    kind: str
    sigma_sq: float
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("circular", "bivariate"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        eigs = np.linalg.eigvalsh(self.covariance())
        if eigs[0] < -1e-12 * max(abs(eigs[-1]), 1.0):
            raise ValueError("covariance is not positive semidefinite")

    @classmethod
    def circular(cls, sigma_sq: float) -> "GaussianTarget":
        return cls(kind="circular", sigma_sq=sigma_sq)

    @classmethod
    def bivariate(cls, a: float, b: float, sigma_sq: float) -> "GaussianTarget":
        return cls(kind="bivariate", sigma_sq=sigma_sq, a=a, b=b)

    def covariance(self) -> np.ndarray:
        a, b = (0.0, 0.0) if self.kind == "circular" else (self.a, self.b)
        s = self.sigma_sq
        return 0.5 * np.array([[s + a, b], [b, s - a]])


# -- Hermite-Laguerre-Ito polynomials ---------------------------------------------


def hermite_hl(p: int, q: int, z):
    """Hermite-Laguerre-Ito polynomial H_{p,q}(z), scalar or elementwise on arrays.

    Defined by the generating function
    exp(lam conj(z) + conj(lam) z - 2 |lam|^2) = sum conj(lam)^p lam^q H_{p,q}(z) / (p! q!),
    which pins the recurrences

        H_{p+1,q}(z) = z H_{p,q}(z) - 2 q H_{p,q-1}(z),
        H_{p,q+1}(z) = conj(z) H_{p,q}(z) - 2 p H_{p-1,q}(z),

    with H_{0,0} = 1, H_{1,0}(z) = z, H_{0,1}(z) = conj(z).
    """
    if p < 0 or q < 0:
        raise ValueError("orders must be nonnegative")
    z = np.asarray(z, dtype=complex)
    return _hermite_table(p, q, z)[p][q]


def _hermite_table(pmax: int, qmax: int, z: np.ndarray):
    """Full table H[a][b] for a <= pmax, b <= qmax via the two recurrences."""
    zbar = np.conj(z)
    table = [[None] * (qmax + 1) for _ in range(pmax + 1)]
    table[0][0] = np.ones_like(z)
    for a in range(pmax):
        table[a + 1][0] = z * table[a][0]  # the -2q term vanishes at q = 0
    for b in range(qmax):
        for a in range(pmax + 1):
            step = zbar * table[a][b]
            if a >= 1:
                step = step - 2 * a * table[a - 1][b]
            table[a][b + 1] = step
    return table


# -- chaos sampler -------------------------------------------------------------------


def _orthonormal_coeffs(kern: Kernel) -> np.ndarray:
    """Coefficients in the orthonormalized basis e_k / sqrt(w_k)."""
    out = kern.coeffs
    root_w = np.sqrt(kern.space.weights)
    for ax in range(kern.degree):
        shape = [1] * out.ndim
        shape[ax] = len(root_w)
        out = out * root_w.reshape(shape)
    return out


def _block_rng(seed: int, block_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block_index,))
    return np.random.Generator(np.random.Philox(ss))


def _profiles(coeffs: np.ndarray, p: int, q: int, n: int):
    """Distinct sorted multi-index profiles with their coefficient and the count
    of raw index arrangements sharing them (symmetric kernels only)."""
    out = []
    for holo in combinations_with_replacement(range(n), p):
        for anti in combinations_with_replacement(range(n), q):
            c = coeffs[holo + anti]
            if c == 0:
                continue
            counts: dict[int, list[int]] = {}
            for k in holo:
                counts.setdefault(k, [0, 0])[0] += 1
            for k in anti:
                counts.setdefault(k, [0, 0])[1] += 1
            mult = factorial(p) * factorial(q)
            for a_k, b_k in counts.values():
                mult //= factorial(a_k) * factorial(b_k)
            # distinct orderings: p! q! / prod a_k! b_k! -- computed exactly above
            out.append((c, mult, tuple(sorted((k, a, b) for k, (a, b) in counts.items()))))
    return out


def sample_chaos(F: ChaosVariable, N: int, seed: int) -> SampleBatch:
    """Exact-in-distribution samples of F through the Fourier-Hermite expansion.

    E and E|.|^2 of the batch converge to expectation(F) and the isometry
    variance at the usual N^(-1/2) Monte Carlo rate.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    n = F.space.n
    prepared = []
    for (p, q), kern in F.terms.items():
        coeffs = _orthonormal_coeffs(kern)
        prepared.append((p, q, _profiles(coeffs, p, q, n)))

    values = np.empty(N, dtype=complex)
    n_blocks = (N + _BLOCK - 1) // _BLOCK
    for ib in range(n_blocks):
        lo, hi = ib * _BLOCK, min((ib + 1) * _BLOCK, N)
        nb = hi - lo
        rng = _block_rng(seed, ib)
        Z = (rng.standard_normal((n, nb)) + 1j * rng.standard_normal((n, nb))) / sqrt(2.0)
        root2_z = sqrt(2.0) * Z
        memo: dict[tuple[int, int, int], np.ndarray] = {}

        def hl(a: int, b: int, k: int) -> np.ndarray:
            key = (a, b, k)
            if key not in memo:
                memo[key] = hermite_hl(a, b, root2_z[k])
            return memo[key]

        block = np.full(nb, F.constant, dtype=complex)
        for p, q, profiles in prepared:
            for coef, mult, counts in profiles:
                term = np.full(nb, coef * mult, dtype=complex)
                for k, a, b in counts:
                    term *= 2.0 ** (-(a + b) / 2.0) * hl(a, b, k)
                block += term
        values[lo:hi] = block
    meta = f"sample_chaos seed={seed} N={N} version={GENERATOR_VERSION}"
    return SampleBatch(values=values, seed=seed, meta=meta)


def sample_gaussian(target: GaussianTarget, N: int, seed: int) -> SampleBatch:
    """Exact bivariate-normal reference samples via eigenfactorization of the
    2x2 covariance (rank-deficient targets degrade gracefully)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    C = target.covariance()
    eigval, eigvec = np.linalg.eigh(C)
    L = eigvec @ np.diag(np.sqrt(np.clip(eigval, 0.0, None)))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))
    g = rng.standard_normal((2, N))
    xy = L @ g
    meta = f"sample_gaussian {target.kind} seed={seed} N={N} version={GENERATOR_VERSION}"
    return SampleBatch(values=xy[0] + 1j * xy[1], seed=seed, meta=meta)


# -- empirical Wasserstein distances ---------------------------------------------------


def wasserstein_1d(x: np.ndarray, y: np.ndarray) -> float:
    """Exact W1 between two equal-size empirical measures on the line:
    mean absolute difference of order statistics."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("wasserstein_1d needs two equal-length 1-d batches")
    return float(np.mean(np.abs(np.sort(x) - np.sort(y))))


def sliced_wasserstein_2d(x: np.ndarray, y: np.ndarray, K: int = 64, seed: int = 0) -> float:
    """Average of 1-d W1 distances of the projections onto K random directions.

    A cheap lower-bound-flavored proxy for the planar Wasserstein distance;
    deterministic given the seed.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("sliced_wasserstein_2d needs two equal-length 1-d batches")
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))
    thetas = rng.uniform(0.0, pi, size=K)
    total = 0.0
    for theta in thetas:
        rot = np.exp(-1j * theta)
        total += wasserstein_1d((x * rot).real, (y * rot).real)
    return total / K


def exact_wasserstein_2d(x: np.ndarray, y: np.ndarray, max_n: int = 2000) -> float:
    """Exact planar W1 between equal-size empirical measures by optimal
    assignment; quadratic memory, so capped at ``max_n`` points."""
    from scipy.optimize import linear_sum_assignment

    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("exact_wasserstein_2d needs two equal-length 1-d batches")
    if x.size > max_n:
        raise ValueError(f"exact assignment limited to {max_n} points; use the sliced estimator")
    cost = np.abs(x[:, None] - y[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def save_batch(batch: SampleBatch, path) -> None:
    """CSV dump with columns re, im; the header comment carries seed and version."""
    with open(path, "w") as fh:
        fh.write(f"# {batch.meta}\n")
        fh.write("re,im\n")
        for v in batch.values:
            fh.write(f"{float(v.real)!r},{float(v.imag)!r}\n")
