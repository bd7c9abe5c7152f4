"""Chaos variables and vectors: product formula, expectations, moment identities.

A :class:`ChaosVariable` holds a finite two-index chaos decomposition -- a map
from block orders ``(p, q)`` with ``p + q >= 1`` to symmetric kernels, plus a
constant term equal to the mean.  Products of chaos variables expand through
the contraction sum

    I_{a,b}(f) I_{c,d}(g) = sum_{i,j} C(a,i) C(d,i) C(b,j) C(c,j) i! j!
                            I_{a+c-i-j, b+d-i-j}(f (x)_{i,j} g),

and second moments come from the isometry
``E[I_{a,b}(f) conj(I_{c,d}(g))] = 1{a=c} 1{b=d} a! b! <f, g>``.

The fourth-moment gap ``E|F|^4 - 2 (E|F|^2)^2 - |E F^2|^2`` is available through
three independent routes (the product-formula moment engine and two closed
contraction-sum expansions) that must agree to float accuracy; the pair of
closed routes is the quantity driving every normal-approximation bound in
:mod:`cwchaos.bounds`.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .space import (
    Kernel,
    SpaceError,
    SpaceSpec,
    contract,
    inner_product,
    kernel_from_json,
    kernel_to_json,
    norm,
    norm_sq,
    reverse_conjugate,
    sym_contract,
    symmetrize,
)

__all__ = [
    "DEGREE_CAP",
    "DegreeCapError",
    "ChaosVariable",
    "ChaosVector",
    "MomentReport",
    "conjugate",
    "multiply",
    "expectation",
    "pairing_expectation",
    "product_expectation",
    "power",
    "moment",
    "third_moments_closed",
    "fourth_gap",
    "cov_abs_sq",
    "moment_report",
    "chaos_to_json",
    "chaos_from_json",
]

#: Default cap on the total block order p + q of any product term.
DEGREE_CAP = 8

#: Product terms with norm below PRUNE_TOL * (operand scale) are dropped;
#: pass prune=False to multiply() where exactness of zeros matters.
PRUNE_TOL = 1e-14


class DegreeCapError(ValueError):
    """Raised when a product would exceed the configured block-order cap."""


class ChaosVariable:
    """Finite chaos decomposition: constant + sum of I_{p,q}(f_{p,q})."""

    __slots__ = ("space", "terms", "constant")

    def __init__(self, space: SpaceSpec, terms: dict | None = None, constant: complex = 0.0):
        terms = dict(terms or {})
        for (p, q), kern in terms.items():
            if p + q < 1:
                raise SpaceError("terms must have p + q >= 1; use the constant slot")
            if (kern.p, kern.q) != (p, q):
                raise SpaceError(f"kernel blocks {(kern.p, kern.q)} do not match key {(p, q)}")
            if not kern.space.same_as(space):
                raise SpaceError("all kernels must share the variable's space")
            if not kern.symmetric:
                raise SpaceError("stored kernels must be symmetric; symmetrize first")
        self.space = space
        self.terms = terms
        self.constant = complex(constant)

    @classmethod
    def from_kernel(cls, f: Kernel, constant: complex = 0.0) -> "ChaosVariable":
        f = symmetrize(f)
        if f.degree == 0:
            return cls(f.space, {}, constant + complex(f.coeffs))
        return cls(f.space, {(f.p, f.q): f}, constant)

    @classmethod
    def constant_variable(cls, space: SpaceSpec, value: complex) -> "ChaosVariable":
        return cls(space, {}, value)

    @property
    def degree(self) -> int:
        return max((p + q for (p, q) in self.terms), default=0)

    def scale(self) -> float:
        """Coarse magnitude estimate used for pruning thresholds."""
        mags = [abs(self.constant)] + [norm(k) for k in self.terms.values()]
        return max(mags)

    def __add__(self, other: "ChaosVariable") -> "ChaosVariable":
        if not self.space.same_as(other.space):
            raise SpaceError("chaos variables live on different spaces")
        terms = dict(self.terms)
        for key, kern in other.terms.items():
            terms[key] = terms[key] + kern if key in terms else kern
        return ChaosVariable(self.space, terms, self.constant + other.constant)

    def __mul__(self, scalar: complex) -> "ChaosVariable":
        terms = {key: kern * scalar for key, kern in self.terms.items()}
        return ChaosVariable(self.space, terms, self.constant * scalar)

    __rmul__ = __mul__

    def __repr__(self) -> str:  # pragma: no cover
        orders = sorted(self.terms)
        return f"ChaosVariable(orders={orders}, constant={self.constant:.6g})"


class ChaosVector:
    """Ordered tuple of chaos variables over one shared space."""

    __slots__ = ("components",)

    def __init__(self, components):
        components = list(components)
        if not components:
            raise SpaceError("a chaos vector needs at least one component")
        space = components[0].space
        for comp in components[1:]:
            if not comp.space.same_as(space):
                raise SpaceError("all components must share one space")
        self.components = components

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def space(self) -> SpaceSpec:
        return self.components[0].space


# -- product formula and expectations -----------------------------------------


def conjugate(F: ChaosVariable) -> ChaosVariable:
    """Complex conjugate: each (p, q)-term maps to the (q, p)-term with the
    reverse complex conjugate kernel; involution."""
    terms = {}
    for (p, q), kern in F.terms.items():
        terms[(q, p)] = symmetrize(reverse_conjugate(kern))
    return ChaosVariable(F.space, terms, np.conj(F.constant))


def _term_items(F: ChaosVariable):
    items = [((p, q), kern) for (p, q), kern in F.terms.items()]
    if F.constant != 0.0:
        items.append(((0, 0), Kernel.scalar(F.space, F.constant)))
    return items


def multiply(F: ChaosVariable, G: ChaosVariable, degree_cap: int = DEGREE_CAP,
             prune: bool = True) -> ChaosVariable:
    """Pointwise product as a chaos variable, via the contraction expansion.

    Raises :class:`DegreeCapError` if any output term would have block order
    above ``degree_cap``.  With ``prune`` on, terms whose kernel norm is below
    ``PRUNE_TOL`` times the product of the operands' scales are dropped.
    """
    if not F.space.same_as(G.space):
        raise SpaceError("chaos variables live on different spaces")
    acc: dict[tuple[int, int], Kernel] = {}
    const = 0.0 + 0.0j
    for (a, b), f in _term_items(F):
        for (c, d), g in _term_items(G):
            if a + b + c + d > degree_cap:
                raise DegreeCapError(
                    f"product term of order {a + b + c + d} exceeds cap {degree_cap}"
                )
            for i in range(min(a, d) + 1):
                for j in range(min(b, c) + 1):
                    coef = (comb(a, i) * comb(d, i) * comb(b, j) * comb(c, j)
                            * factorial(i) * factorial(j))
                    kern = sym_contract(f, g, i, j) * coef
                    key = (a + c - i - j, b + d - i - j)
                    if key == (0, 0):
                        const += complex(kern.coeffs)
                    else:
                        acc[key] = acc[key] + kern if key in acc else kern
    if prune:
        cutoff = PRUNE_TOL * F.scale() * G.scale()
        acc = {key: kern for key, kern in acc.items() if norm(kern) > cutoff}
    return ChaosVariable(F.space, acc, const)


def expectation(F: ChaosVariable) -> complex:
    """E[F]: the constant term of the decomposition."""
    return F.constant


def pairing_expectation(F: ChaosVariable, G: ChaosVariable) -> complex:
    """E[F conj(G)] by the isometry: matching (p, q)-terms pair with weight p! q!."""
    if not F.space.same_as(G.space):
        raise SpaceError("chaos variables live on different spaces")
    total = F.constant * np.conj(G.constant)
    for (p, q), f in F.terms.items():
        g = G.terms.get((p, q))
        if g is not None:
            total += factorial(p) * factorial(q) * inner_product(f, g)
    return complex(total)


def product_expectation(F: ChaosVariable, G: ChaosVariable) -> complex:
    """E[F G], evaluated as E[F conj(conj(G))] through the isometry."""
    return pairing_expectation(F, conjugate(G))


def power(F: ChaosVariable, k: int, degree_cap: int = DEGREE_CAP) -> ChaosVariable:
    if k < 0:
        raise ValueError("nonnegative powers only")
    out = ChaosVariable.constant_variable(F.space, 1.0)
    for _ in range(k):
        out = multiply(out, F, degree_cap=degree_cap)
    return out


def moment(F: ChaosVariable, k: int, l: int, degree_cap: int = DEGREE_CAP) -> complex:
    """E[F^k conj(F)^l], exact up to float roundoff.

    The two powers are expanded separately and paired through the isometry, so
    the intermediate block order is max(k, l) times the degree of F.
    """
    if k < 0 or l < 0:
        raise ValueError("moment orders must be nonnegative")
    return pairing_expectation(power(F, k, degree_cap), power(F, l, degree_cap))


# -- closed-form moment identities ---------------------------------------------


def third_moments_closed(f: Kernel) -> tuple[complex, complex]:
    """(E[F^3], E[F^2 conj(F)]) for F = I_{p,q}(f), via the closed contraction sums.

    Both vanish identically unless p = q.
    """
    f = symmetrize(f)
    p, q = f.p, f.q
    if p != q:
        return 0.0 + 0.0j, 0.0 + 0.0j
    h = reverse_conjugate(f)
    s3 = 0.0 + 0.0j
    s21 = 0.0 + 0.0j
    for i in range(p + 1):
        coef = factorial(i) * factorial(p - i) * factorial(p) ** 2 * comb(p, i) ** 4
        g = sym_contract(f, f, i, p - i)
        s3 += coef * inner_product(g, h)
        s21 += coef * inner_product(g, f)
    return complex(s3), complex(s21)


def _phi_group(f: Kernel, r: int) -> Kernel | None:
    """phi_r = sum_{i+j=r} C(p,i) C(q,i) C(q,j) C(p,j) i! j! f (x~)_{i,j} f."""
    p, q = f.p, f.q
    m = min(p, q)
    out = None
    for i in range(min(r, m) + 1):
        j = r - i
        if j < 0 or j > m:
            continue
        coef = comb(p, i) * comb(q, i) * comb(q, j) * comb(p, j) * factorial(i) * factorial(j)
        kern = sym_contract(f, f, i, j) * coef
        out = kern if out is None else out + kern
    return out


def _psi_group(f: Kernel, h: Kernel, r: int) -> Kernel | None:
    """psi_r = sum_{i+j=r} C(p,i)^2 C(q,j)^2 i! j! f (x~)_{i,j} h."""
    p, q = f.p, f.q
    out = None
    for i in range(min(r, p) + 1):
        j = r - i
        if j < 0 or j > q:
            continue
        coef = comb(p, i) ** 2 * comb(q, j) ** 2 * factorial(i) * factorial(j)
        kern = sym_contract(f, h, i, j) * coef
        out = kern if out is None else out + kern
    return out


def fourth_gap(f: Kernel, route: str = "v1", degree_cap: int = DEGREE_CAP) -> float:
    """Fourth-moment gap E|F|^4 - 2 (E|F|^2)^2 - |E F^2|^2 of F = I_{p,q}(f).

    Routes:

    * ``"moments"`` -- product-formula moment engine (needs 2 (p+q) <= degree_cap);
    * ``"v1"`` -- contraction sum over f (x)_{i,j} h plus the phi_r groups;
    * ``"v2"`` -- contraction sum over f (x)_{i,j} f plus the psi_r groups.

    All routes agree to float accuracy; v1 and v2 are manifestly nonnegative
    term sums for a pure chaos variable of fixed order.
    """
    f = symmetrize(f)
    p, q = f.p, f.q
    l = p + q
    if l < 1:
        raise SpaceError("fourth_gap needs p + q >= 1")
    if route == "moments":
        F = ChaosVariable.from_kernel(f)
        F2 = multiply(F, F, degree_cap=degree_cap, prune=False)
        e4 = pairing_expectation(F2, F2).real
        s2 = factorial(p) * factorial(q) * norm_sq(f)
        ef2 = F2.constant
        return e4 - 2.0 * s2 ** 2 - abs(ef2) ** 2
    h = reverse_conjugate(f)
    m = min(p, q)
    if route == "v1":
        total = 0.0
        for i in range(p + 1):
            for j in range(q + 1):
                if 0 < i + j < l:
                    coef = comb(p, i) ** 2 * comb(q, j) ** 2 * (factorial(p) * factorial(q)) ** 2
                    total += coef * norm_sq(contract(f, h, i, j))
        lp = 2 * m
        for r in range(1, lp):
            phi = _phi_group(f, r)
            total += factorial(2 * p - r) * factorial(2 * q - r) * norm_sq(phi)
        if p != q and m >= 1:
            phi_b = _phi_group(f, lp)
            total += factorial(2 * p - lp) * factorial(2 * q - lp) * norm_sq(phi_b)
        return total
    if route == "v2":
        total = 0.0
        lp = 2 * m
        for i in range(m + 1):
            for j in range(m + 1):
                if 0 < i + j < lp:
                    coef = (comb(p, i) * comb(q, i) * comb(q, j) * comb(p, j)
                            * (factorial(p) * factorial(q)) ** 2)
                    total += coef * norm_sq(contract(f, f, i, j))
        for r in range(1, l):
            psi = _psi_group(f, h, r)
            total += factorial(l - r) ** 2 * norm_sq(psi)
        if p != q and m >= 1:
            coef = comb(p, m) ** 2 * comb(q, m) ** 2 * (factorial(p) * factorial(q)) ** 2
            total += coef * norm_sq(contract(f, f, m, m))
        return total
    raise ValueError(f"unknown route {route!r}")


def cov_abs_sq(f1: Kernel, f2: Kernel) -> float:
    """Cov(|F_1|^2, |F_2|^2) for F_k = I_{p_k,q_k}(f_k), via the exact four-group
    contraction expansion of Cov - |E F_1 conj(F_2)|^2 - |E F_1 F_2|^2."""
    f1 = symmetrize(f1)
    f2 = symmetrize(f2)
    if not f1.space.same_as(f2.space):
        raise SpaceError("kernels live on different spaces")
    p1, q1, p2, q2 = f1.p, f1.q, f2.p, f2.q
    h2 = reverse_conjugate(f2)
    fac = factorial(p1) * factorial(q1) * factorial(p2) * factorial(q2)
    l = min(p1, p2) + min(q1, q2)
    lp = min(p1, q2) + min(q1, p2)

    total = 0.0
    for k in range(min(p1, p2) + 1):
        for kp in range(min(q1, q2) + 1):
            if 0 < k + kp < l:
                coef = comb(p1, k) * comb(q1, kp) * comb(q2, kp) * comb(p2, k) * fac
                total += coef * norm_sq(contract(f1, h2, k, kp))
    if (p1, q1) != (p2, q2) and l >= 1:
        k, kp = min(p1, p2), min(q1, q2)
        coef = comb(p1, k) * comb(q1, kp) * comb(q2, kp) * comb(p2, k) * fac
        total += coef * norm_sq(contract(f1, h2, k, kp))

    def phi(r: int) -> Kernel | None:
        out = None
        for i in range(min(r, min(p1, q2)) + 1):
            j = r - i
            if j < 0 or j > min(q1, p2):
                continue
            coef = (comb(p1, i) * comb(q1, j) * comb(q2, i) * comb(p2, j)
                    * factorial(i) * factorial(j))
            kern = sym_contract(f1, f2, i, j) * coef
            out = kern if out is None else out + kern
        return out

    for r in range(1, lp):
        total += factorial(p1 + p2 - r) * factorial(q1 + q2 - r) * norm_sq(phi(r))
    if (p1, q1) != (q2, p2) and lp >= 1:
        total += factorial(p1 + p2 - lp) * factorial(q1 + q2 - lp) * norm_sq(phi(lp))

    cross = 0.0
    if (p1, q1) == (p2, q2):
        cross += abs(factorial(p1) * factorial(q1) * inner_product(f1, f2)) ** 2
    if (p1, q1) == (q2, p2):
        cross += abs(factorial(p1) * factorial(q1) * inner_product(f1, h2)) ** 2
    return total + cross


# -- consolidated report --------------------------------------------------------


@dataclass(frozen=True)
class MomentReport:
    """Exact second/third/fourth moment summary of a single-order chaos variable."""

    var_abs: float
    pseudo: complex
    third: complex
    third_mixed: complex
    gap: float
    gap_v1: float
    gap_v2: float

    def route_spread(self) -> float:
        """Largest disagreement among the three gap routes, relative to the
        natural fourth-order scale max(|gap|, var_abs^2)."""
        gaps = (self.gap, self.gap_v1, self.gap_v2)
        scale = max(max(abs(g) for g in gaps), self.var_abs ** 2)
        if scale == 0.0:
            return 0.0
        return (max(gaps) - min(gaps)) / scale

    def to_json(self) -> dict:
        return {
            "var_abs": self.var_abs,
            "pseudo_re": self.pseudo.real,
            "pseudo_im": self.pseudo.imag,
            "third_re": self.third.real,
            "third_im": self.third.imag,
            "third_mixed_re": self.third_mixed.real,
            "third_mixed_im": self.third_mixed.imag,
            "gap_moments": self.gap,
            "gap_v1": self.gap_v1,
            "gap_v2": self.gap_v2,
            "route_spread": self.route_spread(),
        }


def moment_report(f: Kernel, degree_cap: int = DEGREE_CAP) -> MomentReport:
    """Second moments, closed-form third moments, and the gap by all three routes."""
    f = symmetrize(f)
    p, q = f.p, f.q
    var_abs = factorial(p) * factorial(q) * norm_sq(f)
    pseudo = 0.0 + 0.0j
    if p == q:
        pseudo = factorial(p) * factorial(q) * inner_product(f, reverse_conjugate(f))
    third, third_mixed = third_moments_closed(f)
    return MomentReport(
        var_abs=var_abs,
        pseudo=complex(pseudo),
        third=third,
        third_mixed=third_mixed,
        gap=fourth_gap(f, "moments", degree_cap=degree_cap),
        gap_v1=fourth_gap(f, "v1"),
        gap_v2=fourth_gap(f, "v2"),
    )


# -- persistence -----------------------------------------------------------------


def chaos_to_json(F: ChaosVariable) -> dict:
    return {
        "constant_re": F.constant.real,
        "constant_im": F.constant.imag,
        "terms": [
            {"p": p, "q": q, "kernel": kernel_to_json(kern)}
            for (p, q), kern in sorted(F.terms.items())
        ],
    }


def chaos_from_json(doc: dict) -> ChaosVariable:
    try:
        constant = complex(float(doc["constant_re"]), float(doc["constant_im"]))
        raw_terms = doc["terms"]
    except (KeyError, TypeError) as exc:
        raise SpaceError(f"malformed chaos document: {exc}") from exc
    terms = {}
    space = None
    for entry in raw_terms:
        kern = symmetrize(kernel_from_json(entry["kernel"]))
        key = (int(entry["p"]), int(entry["q"]))
        if key != (kern.p, kern.q):
            raise SpaceError(f"term {key} does not match its kernel blocks")
        terms[key] = kern
        space = kern.space
    if space is None:
        raise SpaceError("chaos document needs at least one term")
    return ChaosVariable(space, terms, constant)
