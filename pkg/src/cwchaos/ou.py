"""Complex Ornstein-Uhlenbeck application: dZ = -gamma Z dt + d(zeta).

The least-squares bias statistic of the drift parameter has numerator
F_T = I_{1,1} of a strictly triangular exponential kernel on [0, T]^2; this
module discretizes that kernel and its Hermitian companion on quadrature
grids, evaluates the closed-form moments, sweeps the fourth-moment and
third-moment quantities across horizons to exhibit their decay rates, samples
the statistic exactly in distribution, and checks the pathwise decomposition
of the time-averaged squared modulus per path.

On the standard-Brownian branch (H = 1/2) the sweep uses O(m) prefix-sum
evaluations that exploit the exponential Toeplitz structure, so horizons with
tens of thousands of nodes stay cheap; a dense-kernel cross-check at small m
lives in the test suite.  The fractional branch (1/2 < H < 3/4) replaces the
diagonal Gram by the full two-time Gram matrix with cell-exact integration of
the |u - v|^{2H-2} singularity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import exp, sqrt

import numpy as np
from scipy.signal import lfilter

from .sampling import GENERATOR_VERSION, SampleBatch, _block_rng
from .space import Kernel, SpaceError, SpaceSpec

__all__ = [
    "OUParams",
    "GridSpec",
    "numerator_kernel",
    "occupation_kernel",
    "abs_sq_mean_closed",
    "normalization_factor",
    "TriangularQuantities",
    "triangular_quantities",
    "RateRow",
    "RateTable",
    "rate_sweep",
    "fbm_gram",
    "fbm_inner",
    "sample_numerator",
    "simulate_path",
    "DenominatorReport",
    "verify_denominator_identity",
]


@dataclass(frozen=True)
class OUParams:
    """Drift gamma = lam - i omega with lam > 0, horizon T, Hurst index H.

    H = 1/2 is the standard-Brownian branch; H in (1/2, 3/4) switches the
    underlying Hilbert space to the fractional one.
    """

    lam: float
    omega: float = 0.0
    T: float = 1.0
    H: float = 0.5

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if not (0.5 <= self.H < 0.75):
            raise ValueError("H must lie in [0.5, 0.75)")

    @property
    def gamma(self) -> complex:
        return self.lam - 1j * self.omega

    @property
    def alpha_h(self) -> float:
        return self.H * (2.0 * self.H - 1.0)


@dataclass(frozen=True)
class GridSpec:
    """Quadrature layout on [0, T]: m nodes, midpoint or composite 2-point
    Gauss-Legendre panels."""

    m: int
    rule: str = "midpoint"

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if self.rule not in ("midpoint", "gauss-legendre-composite"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.rule == "gauss-legendre-composite" and self.m % 2:
            raise ValueError("composite Gauss-Legendre needs an even node count")

    def nodes_weights(self, T: float) -> tuple[np.ndarray, np.ndarray]:
        if self.rule == "midpoint":
            h = T / self.m
            t = (np.arange(self.m) + 0.5) * h
            w = np.full(self.m, h)
            return t, w
        panels = self.m // 2
        h = T / panels
        centers = (np.arange(panels) + 0.5) * h
        off = h / (2.0 * sqrt(3.0))
        t = np.empty(self.m)
        t[0::2] = centers - off
        t[1::2] = centers + off
        w = np.full(self.m, h / 2.0)
        return t, w

    def space(self, T: float) -> SpaceSpec:
        t, w = self.nodes_weights(T)
        return SpaceSpec(n=self.m, weights=w, grid=t)


# -- kernels -----------------------------------------------------------------------


def numerator_kernel(params: OUParams, grid: GridSpec) -> Kernel:
    """Discretized kernel of the numerator statistic: (1/sqrt(T)) exp(-conj(gamma)(t-s))
    on the strict triangle s < t, zero elsewhere (diagonal excluded).

    The strict triangle makes the pseudo-moment E[F_T^2] vanish exactly on the
    grid, not just up to quadrature error.
    """
    space = grid.space(params.T)
    t = space.grid
    diff = t[:, None] - t[None, :]
    mask = diff > 0
    vals = np.exp(-np.conj(params.gamma) * np.where(mask, diff, 0.0)) / sqrt(params.T)
    return Kernel(space, 1, 1, np.where(mask, vals, 0.0), symmetric=True)


def occupation_kernel(params: OUParams, grid: GridSpec) -> Kernel:
    """Hermitian kernel of the centered time-average of |Z|^2 over [0, T]:
    exponential decay on both triangles minus a rank-one boundary correction.
    Diagonal value 1 - exp(-2 lam (T - t))."""
    space = grid.space(params.T)
    t = space.grid
    g = params.gamma
    gb = np.conj(g)
    T = params.T
    diff = t[:, None] - t[None, :]
    lo = diff >= 0
    lower = np.where(lo, np.exp(-gb * np.where(lo, diff, 0.0)), 0.0)
    upper = np.where(~lo, np.exp(g * np.where(~lo, diff, 0.0)), 0.0)
    boundary = np.exp(-g * (T - t))[:, None] * np.exp(-gb * (T - t))[None, :]
    return Kernel(space, 1, 1, lower + upper - boundary, symmetric=True)


def abs_sq_mean_closed(params: OUParams) -> float:
    """Closed form of E|F_T|^2 = 1/(2 lam) + exp(-2 lam T)/(4 lam^2 T) - 1/(4 lam^2 T)."""
    lam, T = params.lam, params.T
    return 1.0 / (2 * lam) + exp(-2 * lam * T) / (4 * lam**2 * T) - 1.0 / (4 * lam**2 * T)


def normalization_factor(params: OUParams) -> float:
    """Multiplier nu with E|nu F_T|^2 = 1/(2 lam) exactly under the closed form:
    nu = (1 + exp(-2 lam T)/(2 lam T) - 1/(2 lam T))^(-1/2).

    Raises for horizons so short that the parenthesized factor is nonpositive
    (numerically: lam T below about 0.398)."""
    lam, T = params.lam, params.T
    factor = 1.0 + exp(-2 * lam * T) / (2 * lam * T) - 1.0 / (2 * lam * T)
    if factor <= 0.0:
        raise ValueError(f"variance factor {factor:.3e} <= 0: horizon too short (lam T = {lam * T:.3f})")
    return factor ** -0.5


# -- O(m) structured quantities on the midpoint grid --------------------------------


@dataclass(frozen=True)
class TriangularQuantities:
    """Moment and contraction quantities of the normalized numerator kernel.

    ``fmt_10_sq``/``fmt_01_sq`` are the squared contraction norms whose sum is
    the fourth-moment gap's leading group; ``gap_v1``/``gap_v2`` are the two
    closed expansions of the gap and agree to roundoff.
    """

    T: float
    m: int
    var: float
    pseudo: float
    gap_v1: float
    gap_v2: float
    e3_abs: float
    e3_mixed_abs: float
    fmt_10_sq: float
    fmt_01_sq: float

    @property
    def gap(self) -> float:
        return self.gap_v1


def triangular_quantities(params: OUParams, m: int, normalized: bool = True) -> TriangularQuantities:
    """Prefix-sum evaluation of the sweep quantities on the m-point midpoint grid.

    Every contraction of the triangular exponential kernel factorizes through
    one-sided geometric sums, so no m x m array is ever formed.
    """
    if params.H != 0.5:
        raise ValueError("structured quantities are for the H = 1/2 branch")
    lam, T = params.lam, params.T
    dt = T / m
    c = 1.0 / sqrt(T)
    x = exp(-2.0 * lam * dt)

    d = np.arange(1, m, dtype=float)
    xd = x ** d
    # sums over index offsets: A_k = sum_d (m - d) (d - 1)^k x^d
    a0 = float(np.sum((m - d) * xd))
    a1 = float(np.sum((m - d) * (d - 1) * xd))
    a2 = float(np.sum((m - d) * (d - 1) ** 2 * xd))

    var = c**2 * dt**2 * a0
    kwk_sq = c**4 * dt**4 * a2
    e21 = 2.0 * c**3 * dt**3 * a1

    idx = np.arange(m, dtype=float)
    ratio = x / (1.0 - x)
    L = ratio * (1.0 - x**idx)                # sum_{u < w} x^(w-u)
    R = ratio * (1.0 - x ** (m - 1 - idx))    # sum_{u > v} x^(u-v)
    P = ratio * (L - idx * x**idx)            # sum_{s < t} x^(t-s) L[s]

    m1_sq = c**4 * dt**4 * float(np.sum(R**2 * (1.0 + 2.0 * L)))
    m2_sq = c**4 * dt**4 * float(np.sum(L**2 * (1.0 + 2.0 * R)))
    m1m2 = c**4 * dt**4 * float(np.sum(R * L + 2.0 * R * P))

    gap_v1 = m1_sq + m2_sq + 4.0 * kwk_sq
    gap_v2 = m1_sq + m2_sq + 2.0 * m1m2 + 2.0 * kwk_sq

    nu = normalization_factor(params) if normalized else 1.0
    return TriangularQuantities(
        T=T,
        m=m,
        var=nu**2 * var,
        pseudo=0.0,
        gap_v1=nu**4 * gap_v1,
        gap_v2=nu**4 * gap_v2,
        e3_abs=0.0,
        e3_mixed_abs=nu**3 * abs(e21),
        fmt_10_sq=nu**4 * m1_sq,
        fmt_01_sq=nu**4 * m2_sq,
    )


# -- rate sweep ----------------------------------------------------------------------


@dataclass(frozen=True)
class RateRow:
    T: float
    m: int
    var: float
    gap: float
    e3_mixed: float
    e3: float
    fmt_10_sq: float
    fmt_01_sq: float
    be_upper_circular: float


@dataclass(frozen=True)
class RateTable:
    rows: list[RateRow]
    slope_gap: float
    slope_e3_mixed: float | None

    def to_csv(self) -> str:
        lines = ["T,m,var,gap,e3_mixed,e3,fmt_10_sq,fmt_01_sq,be_upper_circular"]
        for r in self.rows:
            lines.append(
                f"{r.T!r},{r.m},{r.var!r},{r.gap!r},{r.e3_mixed!r},{r.e3!r},"
                f"{r.fmt_10_sq!r},{r.fmt_01_sq!r},{r.be_upper_circular!r}"
            )
        lines.append(f"# slope_gap={self.slope_gap!r}")
        if self.slope_e3_mixed is not None:
            lines.append(f"# slope_e3_mixed={self.slope_e3_mixed!r}")
        return "\n".join(lines) + "\n"


def _loglog_slope(xs, ys) -> float:
    xs = np.log(np.asarray(xs, dtype=float))
    ys = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def rate_sweep(base: OUParams, T_list, dt: float) -> RateTable:
    """Sweep the normalized numerator quantities across increasing horizons at
    fixed grid spacing, with log-log regression slopes in the footer.

    H = 1/2 reproduces decay exponents -1 (gap) and -1/2 (mixed third moment);
    the fractional branch reports the gap of the variance-normalized statistic,
    whose upper-bound exponent is 2(4H - 3) for H in (5/8, 3/4).
    """
    T_list = list(T_list)
    if any(t2 <= t1 for t1, t2 in zip(T_list, T_list[1:])):
        raise ValueError("T_list must be strictly increasing")
    rows = []
    for T in T_list:
        m = int(round(T / dt))
        if m < 2:
            raise ValueError(f"grid spacing {dt} leaves fewer than 2 nodes at T = {T}")
        params = replace(base, T=T)
        if base.H == 0.5:
            tq = triangular_quantities(params, m)
            quantity = tq.gap_v1 + tq.pseudo**2
            be_circ = 8.0 / sqrt(tq.var) * sqrt(2.0) * sqrt(max(quantity, 0.0))
            rows.append(RateRow(T=T, m=m, var=tq.var, gap=tq.gap_v1,
                                e3_mixed=tq.e3_mixed_abs, e3=tq.e3_abs,
                                fmt_10_sq=tq.fmt_10_sq, fmt_01_sq=tq.fmt_01_sq,
                                be_upper_circular=be_circ))
        else:
            fq = _fractional_quantities(params, GridSpec(m=m))
            rows.append(RateRow(T=T, m=m, var=fq["var"], gap=fq["gap"],
                                e3_mixed=fq["e3_mixed"], e3=fq["e3"],
                                fmt_10_sq=fq["fmt_10_sq"], fmt_01_sq=fq["fmt_01_sq"],
                                be_upper_circular=fq["be_circ"]))
    slope_gap = _loglog_slope([r.T for r in rows], [r.gap for r in rows])
    slope_mixed = None
    if all(r.e3_mixed > 0 for r in rows):
        slope_mixed = _loglog_slope([r.T for r in rows], [r.e3_mixed for r in rows])
    return RateTable(rows=rows, slope_gap=slope_gap, slope_e3_mixed=slope_mixed)


# -- fractional branch ----------------------------------------------------------------


def fbm_gram(params: OUParams, grid: GridSpec) -> np.ndarray:
    """Full two-time Gram matrix of the fractional inner product on the grid cells.

    Entry (a, b) integrates alpha_H |u - v|^(2H-2) exactly over cell_a x cell_b
    (the singularity is integrable; pointwise evaluation would be wrong), so a
    piecewise-constant kernel gets its exact fractional pairing.  H = 1/2
    returns the diagonal quadrature Gram.
    """
    if grid.rule != "midpoint":
        raise ValueError("the fractional Gram needs the midpoint rule's cells")
    t, w = grid.nodes_weights(params.T)
    if params.H == 0.5:
        return np.diag(w)
    H = params.H
    left = t - w / 2.0
    right = t + w / 2.0

    def primitive(xs: np.ndarray) -> np.ndarray:
        return np.abs(xs) ** (2 * H) / ((2 * H - 1) * (2 * H))

    gram = (primitive(right[:, None] - left[None, :])
            + primitive(left[:, None] - right[None, :])
            - primitive(right[:, None] - right[None, :])
            - primitive(left[:, None] - left[None, :]))
    return params.alpha_h * gram


def fbm_inner(f: Kernel, g: Kernel, params: OUParams) -> complex:
    """Fractional inner product <f, g>_H with the Gram applied slotwise.

    Kernels must share a midpoint-style space (grid and weights define the
    cells).  H = 1/2 reduces to the ordinary weighted inner product.
    """
    f._check_peer(g)
    if f.space.grid is None:
        raise SpaceError("fbm_inner needs a gridded space")
    grid = GridSpec(m=f.space.n)
    pars = replace(params, T=float(f.space.grid[-1] + f.space.weights[-1] / 2.0))
    gram = fbm_gram(pars, grid)
    out = f.coeffs
    for ax in range(f.degree):
        out = np.tensordot(gram, out, axes=(1, ax))
        out = np.moveaxis(out, 0, ax)
    return complex(np.sum(out * np.conj(g.coeffs)))


def _trace_prod(M: np.ndarray, N_t: np.ndarray) -> complex:
    """Tr(M N) given N transposed, without forming the product."""
    return complex(np.sum(M * N_t))


def _fractional_quantities(params: OUParams, grid: GridSpec) -> dict:
    """Gap and third-moment quantities of the variance-normalized numerator
    statistic under the fractional Gram, via dense matrix products.

    Uses Tr(M N) = sum(M * N') to avoid forming trace products, and reuses
    G K / K G; about eleven m x m multiplications in total.
    """
    space = grid.space(params.T)
    t = space.grid
    diff = t[:, None] - t[None, :]
    mask = diff > 0
    K = np.where(mask, np.exp(-np.conj(params.gamma) * np.where(mask, diff, 0.0)), 0.0)
    K = K / sqrt(params.T)
    G = fbm_gram(params, grid)

    GK = G @ K
    KG = K @ G

    def gram_norm_sq(A: np.ndarray) -> float:
        # ||A||^2 = Tr(G A G A^H) = Tr((G A)(G A^H)); (G A^H)' = conj(A G)
        return float(_trace_prod(G @ A, np.conj(A @ G)).real)

    var = float(_trace_prod(GK, np.conj(KG)).real)        # Tr(G K G K^H)
    pseudo = _trace_prod(GK, GK.T)                        # Tr(G K G K)
    M1 = np.conj(GK).T @ K                                # K^H G K
    m1_sq = gram_norm_sq(M1)
    del M1
    M2 = KG @ np.conj(K).T                                # K G K^H
    m2_sq = gram_norm_sq(M2)
    del M2
    C = K @ GK                                            # K G K
    GC = G @ C
    c_sq = float(_trace_prod(GC, np.conj(C @ G)).real)
    e21 = 2.0 * _trace_prod(GC, np.conj(KG))              # 2 Tr(G C G K^H)
    e3 = 2.0 * _trace_prod(GC, GK.T)                      # 2 Tr(G C G K)
    del C, GC

    gap_raw = m1_sq + m2_sq + 4.0 * c_sq
    # normalize to unit variance: gap is quartic, third moments cubic
    gap = gap_raw / var**2
    e3_mixed = abs(e21) / var**1.5
    e3_abs = abs(e3) / var**1.5
    quantity = gap + (abs(pseudo) / var) ** 2
    be_circ = 8.0 * sqrt(2.0) * sqrt(max(quantity, 0.0))
    return {
        "var": var,
        "pseudo": pseudo,
        "gap": gap,
        "e3_mixed": e3_mixed,
        "e3": e3_abs,
        "be_circ": be_circ,
        "fmt_10_sq": m1_sq / var**2,
        "fmt_01_sq": m2_sq / var**2,
    }


# -- exact-in-law sampling of the numerator statistic -----------------------------------


def sample_numerator(params: OUParams, grid: GridSpec, N: int, seed: int,
                     normalized: bool = True) -> SampleBatch:
    """Monte Carlo batch of the (normalized) numerator statistic.

    Uses the quadratic-form representation sum_{j<i} k(t_i - t_j) Z_i conj(Z_j)
    with one first-order recursion along the grid per sample block, so cost is
    O(m N) rather than O(m^2 N).
    """
    if params.H != 0.5:
        raise ValueError("sampling is implemented for the H = 1/2 branch")
    if N < 1:
        raise ValueError("N must be >= 1")
    if grid.rule != "midpoint":
        raise ValueError("the fast sampler assumes the midpoint grid")
    m = grid.m
    T = params.T
    dt = T / m
    decay = np.exp(-np.conj(params.gamma) * dt)
    scale = dt / sqrt(T) * (normalization_factor(params) if normalized else 1.0)

    block = max(1024, min(1 << 16, (8 << 20) // m))
    values = np.empty(N, dtype=complex)
    n_blocks = (N + block - 1) // block
    for ib in range(n_blocks):
        lo, hi = ib * block, min((ib + 1) * block, N)
        nb = hi - lo
        rng = _block_rng(seed, ib)
        Z = (rng.standard_normal((m, nb)) + 1j * rng.standard_normal((m, nb))) / sqrt(2.0)
        u = lfilter([0.0, decay], [1.0, -decay], np.conj(Z), axis=0)
        values[lo:hi] = scale * np.sum(Z * u, axis=0)
    meta = (f"sample_numerator lam={params.lam!r} omega={params.omega!r} T={T!r} m={m} "
            f"seed={seed} N={N} block={block} version={GENERATOR_VERSION}")
    return SampleBatch(values=values, seed=seed, meta=meta)


# -- path simulation and the denominator identity ---------------------------------------


def simulate_path(params: OUParams, grid: GridSpec, seed: int, n_paths: int = 1):
    """Exact-in-distribution path on the uniform step grid k T/m, k = 0..m,
    via the autoregressive recursion Z_{k+1} = e^(-gamma dt) Z_k + eps_k with
    independent circular Gaussian innovations of the exact conditional variance.

    Returns (Z, eps) with shapes (m+1,[ n_paths]) and (m,[ n_paths]).
    """
    if params.H != 0.5:
        raise ValueError("path simulation is implemented for the H = 1/2 branch")
    m = grid.m
    dt = params.T / m
    a = np.exp(-params.gamma * dt)
    sd = sqrt((1.0 - exp(-2.0 * params.lam * dt)) / (2.0 * params.lam))
    rng = _block_rng(seed, 0)
    eps = sd * (rng.standard_normal((m, n_paths)) + 1j * rng.standard_normal((m, n_paths))) / sqrt(2.0)
    Z = np.zeros((m + 1, n_paths), dtype=complex)
    # Z_{k+1} = a Z_k + eps_k
    Z[1:] = lfilter([1.0], [1.0, -a], eps, axis=0)
    if n_paths == 1:
        return Z[:, 0], eps[:, 0]
    return Z, eps


@dataclass(frozen=True)
class DenominatorReport:
    """Per-path comparison of the time-averaged |Z|^2 against its chaos
    decomposition (numerator statistic, terminal correction, mean part),
    both sides built from the same Gaussian increments."""

    T: float
    m: int
    n_paths: int
    mean_abs_residual: float
    max_abs_residual: float
    max_rel_residual: float
    lhs_mean: float
    rhs_mean: float
    mean_closed: float
    diff_se: float

    def to_json(self) -> dict:
        return {
            "T": self.T, "m": self.m, "n_paths": self.n_paths,
            "mean_abs_residual": self.mean_abs_residual,
            "max_abs_residual": self.max_abs_residual,
            "max_rel_residual": self.max_rel_residual,
            "lhs_mean": self.lhs_mean, "rhs_mean": self.rhs_mean,
            "mean_closed": self.mean_closed, "diff_se": self.diff_se,
        }


def verify_denominator_identity(params: OUParams, grid: GridSpec, seed: int,
                                n_paths: int = 100) -> DenominatorReport:
    """Evaluate both sides of

        (1/T) int |Z_t|^2 dt = (1/(2 lam)) [ (F_T + conj(F_T)) / sqrt(T)
                               - (|Z_T|^2 - E|Z_T|^2) / T ] + (1/T) int E|Z_t|^2 dt

    on a common set of raw increments: the path by the discrete convolution
    recursion, F_T by the strict off-diagonal double Wiener sum (diagonal
    terms are Ito-correction artifacts the continuous integral excludes).
    The residual shrinks as the grid refines.
    """
    if params.H != 0.5:
        raise ValueError("the identity check is implemented for the H = 1/2 branch")
    m = grid.m
    T = params.T
    lam = params.lam
    dt = T / m
    rng = _block_rng(seed, 0)
    dz = sqrt(dt) * (rng.standard_normal((m, n_paths))
                     + 1j * rng.standard_normal((m, n_paths))) / sqrt(2.0)

    a = np.exp(-params.gamma * dt)
    # Z at left endpoints t_k = k dt: Z_k = sum_{j<k} e^(-gamma (t_k - t_j)) dz_j,
    # so the recursion Z_k = a (Z_{k-1} + dz_{k-1}) gives rows Z_0 .. Z_{m-1};
    # the terminal value Z_m is appended explicitly.
    Zk = lfilter([0.0, a], [1.0, -a], dz, axis=0)
    Z_last = a * (Zk[-1] + dz[-1])
    Z_path = np.vstack([Zk, Z_last[None, :]])

    ab = np.exp(-np.conj(params.gamma) * dt)
    u = lfilter([0.0, ab], [1.0, -ab], np.conj(dz), axis=0)
    F = np.sum(dz * u, axis=0) / sqrt(T)

    lhs = dt / T * np.sum(np.abs(Z_path[:-1]) ** 2, axis=0)

    var_T = (1.0 - exp(-2 * lam * T)) / (2 * lam)
    mean_part = 1.0 / (2 * lam) - (1.0 - exp(-2 * lam * T)) / (4 * lam**2 * T)
    rhs = (1.0 / (2 * lam)) * (2.0 * F.real / sqrt(T)
                               - (np.abs(Z_path[-1]) ** 2 - var_T) / T) + mean_part

    resid = lhs - rhs
    scale = np.maximum(np.abs(lhs), 1e-12)
    return DenominatorReport(
        T=T,
        m=m,
        n_paths=n_paths,
        mean_abs_residual=float(np.mean(np.abs(resid))),
        max_abs_residual=float(np.max(np.abs(resid))),
        max_rel_residual=float(np.max(np.abs(resid) / scale)),
        lhs_mean=float(np.mean(lhs)),
        rhs_mean=float(np.mean(rhs)),
        mean_closed=mean_part,
        diff_se=float(np.std(resid, ddof=1) / sqrt(n_paths)) if n_paths > 1 else 0.0,
    )
