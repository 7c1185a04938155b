"""Group-chart star products.

Exact numeric h-star of two symbols, its homogeneous bidifferential
expansion, and the Baker-Campbell-Hausdorff series both are built on.
The normalization is fixed so that operator composition is exact:
quantizing ``a`` and ``b`` with the inner cutoff and multiplying equals
quantizing ``a ⋆_h b`` with the outer cutoff of a compatible pair.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache, reduce
from typing import NamedTuple

import numpy as np
import sympy as sp
from numpy.polynomial.hermite import hermgauss
from scipy.linalg import expm, logm

from .liecore import ChartExceededWarning, Cutoff, LieAlgebra
from .symbols import (
    Symbol,
    derivative,
    fourier_inverse,
    grid_sampled,
    multiply,
    polynomial_symbol,
    xi_symbols,
)

__all__ = [
    "QuadratureWarning",
    "CutoffPair",
    "standard_cutoffs",
    "cutoff_compatibility_margin",
    "group_star",
    "matrix_log_star",
    "BchSeries",
    "build_bch_series",
    "bch_remainder",
    "StarTerm",
    "StarCoefficients",
    "star_coefficients",
    "star_j",
    "star_numeric",
    "pushforward_table",
    "residual_grid",
    "ExpansionRow",
    "ExpansionTable",
    "expansion_residual",
    "expansion_study",
]

MAX_BCH_ORDER = 8
MAX_GRADE = 4


class QuadratureWarning(UserWarning):
    """Successive quadrature refinements disagree beyond tolerance."""


# ---------------------------------------------------------------------------
# cutoff pairs


class CutoffPair(NamedTuple):
    chi: Cutoff
    chi_prime: Cutoff


def standard_cutoffs(algebra: LieAlgebra) -> CutoffPair:
    """Compatible pair (chi, chi') for a catalog algebra.

    Compatibility means chi' is identically 1 on every product x*y with
    x, y in the support of chi, so the composition identity carries no
    cutoff error.  Radii are set from the chart product bound: |x*y| is
    at most 2r for the compact rotation charts and 2r + r^2/2 for the
    two-step nilpotent chart, with r the outer radius of chi.
    """
    name = algebra.name
    if name == "su2":
        return CutoffPair(Cutoff(0.70 * np.pi, 0.90 * np.pi), Cutoff(1.82 * np.pi, 1.96 * np.pi))
    if name == "so3":
        return CutoffPair(Cutoff(0.35 * np.pi, 0.45 * np.pi), Cutoff(0.91 * np.pi, 0.98 * np.pi))
    if name == "heisenberg":
        r = 0.90 * np.pi
        bound = 2 * r + 0.5 * r * r
        return CutoffPair(Cutoff(0.70 * np.pi, r), Cutoff(bound * 1.04, bound * 1.18))
    if name.startswith("abelian"):
        return CutoffPair(Cutoff(0.70 * np.pi, 0.90 * np.pi), Cutoff(1.82 * np.pi, 1.96 * np.pi))
    raise KeyError(f"no standard cutoff pair for {name}")


def cutoff_compatibility_margin(algebra: LieAlgebra, pair: CutoffPair, samples=4096, seed=0) -> float:
    """min over sampled supp(chi)^2 of (inner radius of chi') - |x*y|.

    Positive margin certifies chi'(x*y) = 1 wherever chi(x)chi(y) != 0.
    Sampling is uniform over the product of outer-radius balls.
    """
    rng = np.random.default_rng(seed)
    n = algebra.dim
    r1 = pair.chi.outer_radius

    def ball(count):
        u = rng.normal(size=(count, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return u * r1 * rng.random((count, 1)) ** (1.0 / n)

    z = group_star(algebra, ball(samples), ball(samples))
    return float(pair.chi_prime.inner_radius - np.max(np.linalg.norm(z, axis=-1)))


# ---------------------------------------------------------------------------
# closed-form chart products


def _quat_exp(x):
    t = np.linalg.norm(x, axis=-1, keepdims=True)
    w = np.cos(0.5 * t)
    small = t < 1e-8
    s = np.where(small, 0.5 - t * t / 48.0, np.sin(0.5 * t) / np.where(small, 1.0, t))
    return w, x * s


def _quat_mul(w1, v1, w2, v2):
    w = w1 * w2 - np.sum(v1 * v2, axis=-1, keepdims=True)
    v = w1 * v2 + w2 * v1 + np.cross(v1, v2)
    return w, v


def _quat_log(w, v):
    vn = np.linalg.norm(v, axis=-1, keepdims=True)
    t = 2.0 * np.arctan2(vn, w)
    small = vn < 1e-12
    # near the identity t/|v| -> 2/w; the antipode w -> -1 is kept outside
    # every caller's cutoff support
    scale = np.where(small, 2.0 / np.maximum(w, 1e-12), t / np.where(small, 1.0, vn))
    return v * scale


def group_star(algebra: LieAlgebra, x, y):
    """x * y = log(exp(x) exp(y)) in chart coordinates.

    Vectorized over leading axes; closed forms for the catalog charts
    (quaternions for the rotation algebras, the terminating series for
    the two-step nilpotent one).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    name = algebra.name
    if name.startswith("abelian"):
        return x + y
    if name == "heisenberg":
        z = x + y
        z[..., 2] += 0.5 * (x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0])
        return z
    if name in ("su2", "so3"):
        w1, v1 = _quat_exp(x)
        w2, v2 = _quat_exp(y)
        z = _quat_log(*_quat_mul(w1, v1, w2, v2))
        if name == "so3":
            t = np.linalg.norm(z, axis=-1, keepdims=True)
            # fold to the principal rotation angle <= pi
            z = np.where(t > np.pi, z * (t - 2 * np.pi) / np.where(t > 0, t, 1.0), z)
        return z
    raise NotImplementedError(f"no closed-form chart product for {name}")


def matrix_log_star(algebra: LieAlgebra, x, y):
    """Oracle route: principal matrix log of exp(x)exp(y), back in coordinates."""
    m = logm(expm(algebra.matrix(x)) @ expm(algebra.matrix(y)))
    flat = np.stack([b.ravel() for b in algebra.matrix_basis], axis=1)
    coords, *_ = np.linalg.lstsq(flat, m.ravel(), rcond=None)
    resid = np.max(np.abs(flat @ coords - m.ravel()))
    if resid > 1e-9:
        raise ArithmeticError(f"matrix log left the algebra (residual {resid:.2e})")
    return coords.real


# ---------------------------------------------------------------------------
# Baker-Campbell-Hausdorff series (Dynkin form)


@lru_cache(maxsize=None)
def _dynkin_words(order: int):
    """Right-nested bracket words of log(exp X exp Y) with exact coefficients.

    Letters are 0 for X, 1 for Y; words whose two innermost letters agree
    are identically zero and dropped.
    """
    acc: dict = {}

    def extend(blocks, total):
        for r in range(order - total + 1):
            for s in range(order - total - r + 1):
                if r == 0 and s == 0:
                    continue
                blocks.append((r, s))
                m = total + r + s
                n = len(blocks)
                denom = n * m
                for ri, si in blocks:
                    denom *= math.factorial(ri) * math.factorial(si)
                word = tuple(ell for ri, si in blocks for ell in (0,) * ri + (1,) * si)
                acc[word] = acc.get(word, Fraction(0)) + Fraction((-1) ** (n - 1), denom)
                if m < order:
                    extend(blocks, m)
                blocks.pop()

    extend([], 0)
    out = {w: c for w, c in acc.items() if c != 0 and (len(w) < 2 or w[-1] != w[-2])}
    assert out[(0,)] == 1 and out[(1,)] == 1
    return out


@dataclass(frozen=True)
class BchSeries:
    """Truncated series for the remainder {x,y} = x*y - x - y.

    ``terms`` maps a bidegree (p, q) to its bracket words: tuples
    (coefficient, word) with p letters x and q letters y.  The linear
    bidegrees are excluded, so evaluating the series at (x, 0) or (0, y)
    gives zero at every truncation order.
    """

    algebra: LieAlgebra
    max_order: int
    terms: dict

    def evaluate(self, x, y, order=None):
        order = self.max_order if order is None else order
        if order > self.max_order:
            raise ValueError(f"order {order} exceeds max_order {self.max_order}")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast_shapes(x.shape, y.shape))
        for (p, q), words in self.terms.items():
            if p + q <= order:
                out = out + self.term_value(p, q, x, y)
        return out

    def term_value(self, p, q, x, y):
        """The (p,q)-homogeneous part, vectorized over leading axes."""
        c = self.algebra.structure_constants
        letters = (np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        total = 0.0
        for coeff, word in self.terms[(p, q)]:
            cur = letters[word[-1]]
            for ell in reversed(word[:-1]):
                cur = np.einsum("...i,...j,ijk->...k", letters[ell], cur, c)
            total = total + float(coeff) * cur
        return total


def build_bch_series(algebra: LieAlgebra, max_order: int = MAX_BCH_ORDER) -> BchSeries:
    if max_order > MAX_BCH_ORDER:
        raise ValueError(f"order > {MAX_BCH_ORDER} not tabulated")
    table = _dynkin_words(max_order)
    terms: dict = {}
    for word, coeff in table.items():
        key = (word.count(0), word.count(1))
        if key in ((1, 0), (0, 1)):
            continue
        terms.setdefault(key, []).append((coeff, word))
    terms = {k: tuple(v) for k, v in terms.items()}
    assert all(p >= 1 and q >= 1 for p, q in terms)
    return BchSeries(algebra, max_order, terms)


def bch_remainder(algebra: LieAlgebra, x, y, order: int = MAX_BCH_ORDER):
    """Truncated series for {x,y} = x*y - x - y at the given order."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    reach = np.max(np.linalg.norm(x, axis=-1) + np.linalg.norm(y, axis=-1))
    if reach > algebra.injectivity_radius:
        warnings.warn(
            f"{algebra.name}: |x|+|y|={reach:.3g} may leave the chart",
            ChartExceededWarning,
            stacklevel=2,
        )
    return build_bch_series(algebra, order).evaluate(x, y)


# ---------------------------------------------------------------------------
# star coefficients: e^({x,y}.i zeta) = sum c_{a b g} x^a y^b zeta^g


def _rational_structure(algebra: LieAlgebra):
    """Structure constants as exact Fractions when they are (near-)rational."""
    c = algebra.structure_constants
    pairs: dict = {}
    exact = True
    for i in range(algebra.dim):
        for j in range(algebra.dim):
            row = []
            for k in range(algebra.dim):
                v = c[i, j, k]
                if v == 0.0:
                    continue
                q = Fraction(v).limit_denominator(10**6)
                if abs(float(q) - v) < 1e-9:
                    row.append((k, q))
                else:
                    exact = False
                    row.append((k, v))
            if row:
                pairs[(i, j)] = tuple(row)
    return pairs, exact


def _poly_bracket(P, Q, pairs, dim):
    out: dict = {}
    for (ea, fa), va in P.items():
        for (eb, fb), vb in Q.items():
            key = (tuple(p + q for p, q in zip(ea, eb)), tuple(p + q for p, q in zip(fa, fb)))
            acc = out.setdefault(key, [0] * dim)
            for i in range(dim):
                if not va[i]:
                    continue
                for j in range(dim):
                    if not vb[j]:
                        continue
                    cij = pairs.get((i, j))
                    if cij:
                        prod = va[i] * vb[j]
                        for k, q in cij:
                            acc[k] += q * prod
    return {k: v for k, v in out.items() if any(v)}


@dataclass(frozen=True)
class StarTerm:
    alpha: tuple
    beta: tuple
    gamma: tuple
    re: object
    im: object

    @property
    def coeff(self) -> complex:
        return complex(float(self.re), float(self.im))


@dataclass(frozen=True)
class StarCoefficients:
    """Coefficient tables of the homogeneous star operators through grade J."""

    algebra_name: str
    dim: int
    max_grade: int
    by_grade: dict
    exact: bool

    def grade(self, j: int):
        if j > self.max_grade:
            raise ValueError(f"grade {j} not tabulated (max {self.max_grade})")
        return self.by_grade.get(j, ())


def star_coefficients(algebra: LieAlgebra, J: int) -> StarCoefficients:
    """Taylor coefficients of exp({x,y}.i zeta) through total grade J.

    Grading j = |alpha| + |beta| - |gamma|.  Exact rational arithmetic
    whenever the structure constants are rational.
    """
    if J > MAX_GRADE:
        raise ValueError(f"J > {MAX_GRADE} grows combinatorially; not supported")
    dim = algebra.dim
    pairs, exact = _rational_structure(algebra)
    series = build_bch_series(algebra, min(J + 1, MAX_BCH_ORDER))

    zero = (0,) * dim
    unit = lambda k: tuple(Fraction(int(i == k)) for i in range(dim))
    xpoly = {((tuple(int(i == k) for i in range(dim))), zero): unit(k) for k in range(dim)}
    ypoly = {(zero, tuple(int(i == k) for i in range(dim))): unit(k) for k in range(dim)}
    letter_polys = (
        {k: list(v) for k, v in xpoly.items()},
        {k: list(v) for k, v in ypoly.items()},
    )

    remainder: dict = {}
    for (p, q), words in series.terms.items():
        if p + q - 1 > J:
            continue
        for coeff, word in words:
            cur = letter_polys[word[-1]]
            for ell in reversed(word[:-1]):
                cur = _poly_bracket(letter_polys[ell], cur, pairs, dim)
            for key, vec in cur.items():
                acc = remainder.setdefault(key, [0] * dim)
                for k in range(dim):
                    acc[k] += coeff * vec[k]

    # pairing factor i: each zeta power carries one remainder component
    linear: dict = {}
    for (ea, fa), vec in remainder.items():
        g = sum(ea) + sum(fa) - 1
        if g > J:
            continue
        for k in range(dim):
            if vec[k]:
                gk = tuple(int(i == k) for i in range(dim))
                linear[(ea, fa, gk)] = (0, vec[k])

    def cmul(u, v):
        return (u[0] * v[0] - u[1] * v[1], u[0] * v[1] + u[1] * v[0])

    total = {((zero, zero, zero)): (Fraction(1), Fraction(0))}
    power = dict(total)
    for m in range(1, J + 1):
        nxt: dict = {}
        for (ea, fa, ga), cu in power.items():
            for (eb, fb, gb), cv in linear.items():
                key = (
                    tuple(p + q for p, q in zip(ea, eb)),
                    tuple(p + q for p, q in zip(fa, fb)),
                    tuple(p + q for p, q in zip(ga, gb)),
                )
                if sum(key[0]) + sum(key[1]) - sum(key[2]) > J:
                    continue
                c = cmul(cu, cv)
                if key in nxt:
                    old = nxt[key]
                    nxt[key] = (old[0] + c[0], old[1] + c[1])
                else:
                    nxt[key] = c
        power = nxt
        inv = Fraction(1, math.factorial(m))
        for key, c in power.items():
            add = (c[0] * inv, c[1] * inv)
            if key in total:
                old = total[key]
                total[key] = (old[0] + add[0], old[1] + add[1])
            else:
                total[key] = add

    by_grade: dict = {}
    for (ea, fa, ga), (re, im) in sorted(total.items()):
        if not re and not im:
            continue
        j = sum(ea) + sum(fa) - sum(ga)
        assert 0 <= j <= J
        assert sum(ga) <= min(sum(ea), sum(fa))
        assert max(sum(ea), sum(fa)) <= j
        by_grade.setdefault(j, []).append(StarTerm(ea, fa, ga, re, im))
    by_grade = {j: tuple(v) for j, v in by_grade.items()}
    assert by_grade[0] == (StarTerm(zero, zero, zero, Fraction(1), Fraction(0)),)
    return StarCoefficients(algebra.name, dim, J, by_grade, exact)


def _coeff_expr(term: StarTerm):
    def part(v):
        return sp.Rational(v) if isinstance(v, Fraction) else sp.Float(v, 17)

    return part(term.re) + sp.I * part(term.im)


def star_j(a: Symbol, b: Symbol, j: int, coefficients: StarCoefficients) -> Symbol:
    """Homogeneous grade-j star: sum c_{a b g} zeta^g D^alpha a D^beta b, D = -i d."""
    if a.dim != b.dim or a.dim != coefficients.dim:
        raise ValueError("dimension mismatch")
    base = multiply(a, b)
    xs = xi_symbols(a.dim)

    def chain(sym, alpha):
        cur = sym
        for axis, count in enumerate(alpha):
            for _ in range(count):
                cur = derivative(cur, axis)
        return cur

    poly_total = sp.Integer(0)
    for term in coefficients.grade(j):
        da = chain(a, term.alpha)
        db = chain(b, term.beta)
        mono = reduce(lambda acc, kg: acc * xs[kg[0]] ** kg[1], enumerate(term.gamma), sp.Integer(1))
        order = sum(term.alpha) + sum(term.beta)
        poly_total += _coeff_expr(term) * (-sp.I) ** order * mono * sp.sympify(da.poly) * sp.sympify(db.poly)
    poly_total = sp.expand(poly_total)
    if base.family == "polynomial":
        return polynomial_symbol(a.dim, poly_total)
    return replace(base, poly=poly_total)


# ---------------------------------------------------------------------------
# exact numeric star


def _tensor_points(axes_nodes):
    mesh = np.meshgrid(*axes_nodes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def hermite_rule(precision, center, n_axis: int):
    """Tensor Gauss-Hermite rule adapted to exp(-(x-c).P.(x-c)/2).

    Returns plain quadrature points and weights for integrating functions
    that contain that Gaussian factor explicitly (the weights carry the
    exp(+node^2) compensation, so nothing is divided out of the integrand).
    """
    precision = np.atleast_2d(np.asarray(precision, dtype=float))
    center = np.asarray(center, dtype=float)
    lam, Q = np.linalg.eigh(precision)
    nodes, wts = hermgauss(n_axis)
    scales = np.sqrt(2.0 / lam)
    pts_rot = _tensor_points([nodes * s for s in scales])
    w = _tensor_points([wts * np.exp(nodes**2) * s for s in scales]).prod(axis=-1)
    return center + pts_rot @ Q.T, w


def _gaussian_geometry(a: Symbol):
    """Center and precision of |a_vee| on the transform side."""
    A = np.asarray(a.quad_A, dtype=float)
    b = np.asarray(a.quad_b, dtype=complex)
    return b.imag, np.linalg.inv(A)


def fourier_extent(a: Symbol, k: float = 9.0) -> float:
    """Radius beyond which the inverse transform of a gaussian_poly is negligible."""
    if a.family != "gaussian_poly":
        raise TypeError("extent defined for gaussian_poly symbols")
    A = np.asarray(a.quad_A, dtype=float)
    b = np.asarray(a.quad_b, dtype=complex)
    spread = float(np.sqrt(np.max(np.linalg.eigvalsh(A))))
    expr = sp.sympify(a.poly)
    deg = int(sp.total_degree(expr, *xi_symbols(a.dim))) if expr.free_symbols else 0
    return float(np.linalg.norm(b.imag)) + (k + 0.8 * deg) * spread


def _xi_box(a: Symbol, k: float):
    """Per-axis box on the symbol side: center +- k standard deviations."""
    A = np.asarray(a.quad_A, dtype=float)
    b = np.asarray(a.quad_b, dtype=complex)
    cov = np.linalg.inv(A)
    center = cov @ b.real
    expr = sp.sympify(a.poly)
    deg = sp.total_degree(expr, *xi_symbols(a.dim)) if expr.free_symbols else 0
    std = np.sqrt(np.diag(cov))
    return center, (k + 0.6 * deg) * std


def residual_grid(a: Symbol, b: Symbol, npts: int = 11, floor: float = 1e-6, scan: int = 41):
    """Tensor evaluation grid covering the region where |a.b| >= floor of its max."""
    ab = multiply(a, b)
    center, half = _xi_box(ab, 7.0)
    axes = [np.linspace(center[i] - half[i], center[i] + half[i], scan) for i in range(ab.dim)]
    pts = _tensor_points(axes)
    vals = np.abs(ab(pts)).reshape([scan] * ab.dim)
    mask = vals >= floor * vals.max()
    out = []
    for i in range(ab.dim):
        proj = mask.any(axis=tuple(k for k in range(ab.dim) if k != i))
        lo, hi = axes[i][proj][0], axes[i][proj][-1]
        out.append(np.linspace(lo, hi, npts))
    return tuple(out)


def _jratio(algebra: LieAlgebra, xu, xv):
    """j(xu)/j(xv) for the closed-form charts, with xv inside the chi support."""
    name = algebra.name
    if name in ("su2", "so3"):
        f = lambda t: np.sinc(t / (2 * np.pi)) ** 2
        tu = np.linalg.norm(xu, axis=-1)
        tv = np.linalg.norm(xv, axis=-1)
        return f(tu) / np.maximum(f(tv), 1e-300)
    return 1.0


def _fast_vee(a: Symbol):
    """Direct evaluator of a_vee for pure Gaussians; general fallback otherwise."""
    if sp.sympify(a.poly) != sp.S.One:
        return fourier_inverse(a)
    A = np.asarray(a.quad_A, dtype=float)
    b = np.asarray(a.quad_b, dtype=complex)
    Ainv = np.linalg.inv(A)
    w = Ainv @ b
    const = complex(a.quad_c) + 0.5 * np.dot(b, w) - 0.5 * np.log(np.linalg.det(A))

    def vee(x):
        x = np.asarray(x, dtype=float)
        quad = np.einsum("...i,ij,...j->...", x, Ainv, x)
        return np.exp(const - 0.5 * quad - 1j * (x @ w))

    return vee


def pushforward_table(algebra, a, b, h, cutoffs, u_points, ns_axis=18, chunk=2048):
    """F(u) with (a_h ⋆ b_h)^vee(z) = h^(-n) F(z/h): the group-convolved density.

    For each u the inner integral runs over x = h s in the chi support,
    with y recovered from y = (-x)*(hu) and weighted by the exponential-
    chart Jacobian ratio.  Uniform in h because both Fourier profiles are
    evaluated at their natural scale; the x-rule is Gauss-Hermite placed
    on the Gaussian factor of a_vee.
    """
    n = algebra.dim
    chi = cutoffs.chi
    avee = _fast_vee(a)
    bvee = _fast_vee(b)
    center, prec = _gaussian_geometry(a)
    S, wS = hermite_rule(prec, center, ns_axis)
    As = chi(h * S) * avee(S) * wS / (2 * np.pi) ** (n / 2)

    u_points = np.asarray(u_points, dtype=float)
    out = np.empty(u_points.shape[0], dtype=complex)
    for start in range(0, u_points.shape[0], chunk):
        U = u_points[start : start + chunk]
        hv = group_star(algebra, -h * S[:, None, :], h * U[None, :, :])
        chi_v = chi(hv)
        jr = _jratio(algebra, h * U[None, :, :], hv)
        Bv = bvee(hv / h)
        out[start : start + chunk] = As @ (chi_v * jr * Bv)
    return out


def _u_geometry(a: Symbol, b: Symbol):
    """Placement Gaussian for F(u): convolution scale, slightly widened.

    Widening keeps the rule valid (the compensated weights make it a
    plain quadrature); the integrand decays faster than the placement.
    """
    ca, pa = _gaussian_geometry(a)
    cb, pb = _gaussian_geometry(b)
    cov = np.linalg.inv(pa) + np.linalg.inv(pb)
    return ca + cb, np.linalg.inv(cov) * 0.8


def product_u_rule(a: Symbol, b: Symbol, n_axis: int):
    """Gauss-Hermite rule adapted to the convolution-scale decay of F(u)."""
    center, prec = _u_geometry(a, b)
    return hermite_rule(prec, center, n_axis)


def _star_values(algebra, a, b, h, cutoffs, grid_axes, ns_axis, nu_axis):
    n = algebra.dim
    U, wU = product_u_rule(a, b, nu_axis)
    F = pushforward_table(algebra, a, b, h, cutoffs, U, ns_axis=ns_axis)
    F = (F * wU / (2 * np.pi) ** (n / 2)).reshape([nu_axis] * n)
    pts = _tensor_points(grid_axes)
    shape = tuple(len(ax) for ax in grid_axes)

    # exp(i u.zeta) factored along the rule's rotated tensor axes
    center, prec = _u_geometry(a, b)
    lam, Q = np.linalg.eigh(prec)
    nodes, _ = hermgauss(nu_axis)
    zrot = pts @ Q
    phases = []
    for axis in range(n):
        ph = np.exp(1j * np.outer(nodes * np.sqrt(2.0 / lam[axis]), zrot[:, axis]))
        if axis == 0:
            ph = ph * np.exp(1j * pts @ center)[None, :]
        phases.append(ph)
    src = "abcdef"[:n]
    spec = ",".join([src] + [si + "Z" for si in src]) + "->Z"
    return np.einsum(spec, F, *phases, optimize=True).reshape(shape)


def star_numeric(algebra, a: Symbol, b: Symbol, h: float, cutoffs=None, *, grid_axes=None,
                 ns_axis=18, nu_axis=36, refine=True, refine_tol=1e-4) -> Symbol:
    """The exact h-star of two gaussian_poly symbols, sampled on a tensor grid.

    Production route: the group pushforward of the product density
    followed by one oscillatory transform back to the symbol side; exact
    up to quadrature.  ``refine`` reruns at a coarser rule and warns with
    QuadratureWarning when the two disagree beyond refine_tol.
    """
    if a.family != "gaussian_poly" or b.family != "gaussian_poly":
        raise TypeError("star_numeric needs gaussian_poly symbols (closed-form Fourier)")
    if algebra.dim != a.dim or algebra.dim != b.dim:
        raise ValueError("dimension mismatch")
    cutoffs = standard_cutoffs(algebra) if cutoffs is None else cutoffs
    grid_axes = residual_grid(a, b) if grid_axes is None else tuple(np.asarray(ax, float) for ax in grid_axes)

    values = _star_values(algebra, a, b, h, cutoffs, grid_axes, ns_axis, nu_axis)
    if refine:
        coarse = _star_values(algebra, a, b, h, cutoffs, grid_axes, max(ns_axis - 4, 10), max(nu_axis - 6, 14))
        gap = float(np.max(np.abs(values - coarse)))
        if gap > refine_tol:
            warnings.warn(
                f"star quadrature not settled: refinement gap {gap:.2e}",
                QuadratureWarning,
                stacklevel=2,
            )
    return grid_sampled(grid_axes, values)


# ---------------------------------------------------------------------------
# expansion residuals


@dataclass(frozen=True)
class ExpansionRow:
    h: float
    residual: float
    fitted_order_so_far: float


@dataclass(frozen=True)
class ExpansionTable:
    rows: tuple
    fitted_order: float
    degenerate: bool
    quadrature_flags: tuple
    grid_axes: tuple

    def as_records(self):
        return [
            {"h": r.h, "residual": r.residual, "fitted_order_so_far": r.fitted_order_so_far}
            for r in self.rows
        ]


DEGENERATE_FLOOR = 1e-9


def _check_geometric(h_list):
    h = np.asarray(h_list, dtype=float)
    if h.size < 2 or np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise ValueError("h_list must be decreasing positive values")
    ratios = h[1:] / h[:-1]
    if np.max(np.abs(ratios - ratios[0])) > 1e-9:
        raise ValueError("h_list must be geometric")
    return h


def expansion_study(algebra, a, b, h_list, grades, cutoffs=None, *, ns_axis=18, nu_axis=36,
                    refine=True, grid_axes=None):
    """Expansion residual tables for several truncation grades at shared cost.

    The exact star values per h are computed once and compared against
    every partial sum sum_{j<J} h^j a ⋆ʲ b.
    """
    grades = tuple(int(J) for J in grades)
    if max(grades) > MAX_GRADE:
        raise ValueError(f"J > {MAX_GRADE} not supported")
    h = _check_geometric(h_list)
    cutoffs = standard_cutoffs(algebra) if cutoffs is None else cutoffs
    grid_axes = residual_grid(a, b) if grid_axes is None else tuple(np.asarray(ax, float) for ax in grid_axes)
    pts = _tensor_points(grid_axes)
    shape = tuple(len(ax) for ax in grid_axes)

    coeffs = star_coefficients(algebra, max(max(grades) - 1, 0))
    terms = [star_j(a, b, j, coeffs)(pts).reshape(shape) for j in range(max(grades))]

    flags = []
    exact = {}
    for hv in h:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", QuadratureWarning)
            sym = star_numeric(algebra, a, b, hv, cutoffs, grid_axes=grid_axes,
                               ns_axis=ns_axis, nu_axis=nu_axis, refine=refine)
        flags.extend(f"h={hv:g}: {w.message}" for w in caught if issubclass(w.category, QuadratureWarning))
        exact[hv] = sym.grid_values

    tables = {}
    for J in grades:
        residuals = []
        for hv in h:
            partial = sum((hv**j) * terms[j] for j in range(J))
            residuals.append(float(np.max(np.abs(exact[hv] - partial))))
        degenerate = max(residuals) < DEGENERATE_FLOOR
        rows = []
        for k, (hv, res) in enumerate(zip(h, residuals)):
            if degenerate or k == 0:
                slope = float("nan")
            else:
                slope = float(np.polyfit(np.log(h[: k + 1]), np.log(residuals[: k + 1]), 1)[0])
            rows.append(ExpansionRow(float(hv), res, slope))
        fitted = float("nan") if degenerate else rows[-1].fitted_order_so_far
        tables[J] = ExpansionTable(tuple(rows), fitted, degenerate, tuple(flags), grid_axes)
    return tables


def expansion_residual(algebra, a, b, h_list, J, cutoffs=None, **kwargs) -> ExpansionTable:
    """Sup-norm residual of the grade-J truncation against the exact star,
    with the least-squares order of decay in h."""
    return expansion_study(algebra, a, b, h_list, (J,), cutoffs, **kwargs)[J]
