"""Symbols on the dual of a Lie algebra.

The workhorse family is ``gaussian_poly``: P(xi) * exp(-xi.A.xi/2 + b.xi + c)
with A real positive definite and P polynomial (complex coefficients allowed,
so shifted and modulated Gaussians are all one family).  The family is closed
under derivatives, products, rescaling, rotation and conjugation, and its
Fourier transform is exact:

    a_vee(x) = P(i d/dx) [ det(A)^(-1/2) exp((b-ix).A^(-1).(b-ix)/2 + c) ]

in the self-dual normalization a_vee(x) = (2pi)^(-n/2) Int a(xi) e^(-i x.xi) dxi,
under which the standard Gaussian is its own transform.  All downstream 2*pi
factors (orbit masses, Kirillov constants) are forced by this choice.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import sympy as sp

__all__ = [
    "Symbol",
    "gaussian_poly",
    "gaussian",
    "polynomial_symbol",
    "grid_sampled",
    "fourier_inverse",
    "rescale",
    "conjugate",
    "derivative",
    "rotate",
    "multiply",
    "seminorm_estimate",
    "fourier_l1_norm",
    "localized_gaussian",
    "xi_symbols",
]


def xi_symbols(n: int):
    return sp.symbols(f"xi0:{n}", real=True)


def _poly_expr(poly, dim) -> sp.Expr:
    # coordinates must bind to the canonical (real-assumed) symbols; a
    # same-named symbol with other assumptions would silently land in the
    # coefficients of every Poly built against xi_symbols
    canon = {s.name: s for s in xi_symbols(dim)}
    if isinstance(poly, str):
        return sp.sympify(poly, locals=canon)
    expr = sp.sympify(poly)
    sub = {s: canon[s.name] for s in expr.free_symbols
           if s.name in canon and s is not canon[s.name]}
    return expr.subs(sub) if sub else expr


def _lambdify(args, expr):
    f = sp.lambdify(args, expr, modules="numpy")

    def call(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = f(*[pts[:, k] for k in range(len(args))])
        return np.broadcast_to(np.asarray(out, dtype=complex), (pts.shape[0],)).copy()

    return call


@dataclass(frozen=True)
class Symbol:
    """A symbol a(xi) on R^dim with optional exact structure.

    family 'gaussian_poly' carries (poly, quad_A, quad_b, quad_c); family
    'polynomial' carries only poly; 'grid_sampled' carries grid axes and
    values with a multilinear interpolant.  order_m and delta are the class
    tags (m, delta) used by the seminorm diagnostics.
    """

    dim: int
    family: str
    order_m: float = 0.0
    delta: float = 0.0
    poly: object = None
    quad_A: object = None
    quad_b: object = None
    quad_c: complex = 0.0
    grid_axes: tuple = None
    grid_values: object = None

    def __post_init__(self):
        if self.poly is not None:
            object.__setattr__(self, "poly", _poly_expr(self.poly, self.dim))
        if self.family == "gaussian_poly":
            A = np.asarray(self.quad_A, dtype=float)
            if A.shape != (self.dim, self.dim) or np.max(np.abs(A - A.T)) > 1e-12:
                raise ValueError("quad_A must be symmetric")
            if np.min(np.linalg.eigvalsh(A)) <= 0:
                raise ValueError("quad_A must be positive definite")
        if self.delta < 0 or self.delta >= 0.5:
            raise ValueError("delta must lie in [0, 1/2)")

    # -- evaluation ---------------------------------------------------------

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.family == "grid_sampled":
            return self._grid_eval(pts)
        return self._evaluator()(pts)

    def _cache(self) -> dict:
        try:
            return object.__getattribute__(self, "_memo")
        except AttributeError:
            object.__setattr__(self, "_memo", {})
            return object.__getattribute__(self, "_memo")

    def _evaluator(self):
        memo = self._cache()
        if "eval" not in memo:
            xs = xi_symbols(self.dim)
            memo["eval"] = _lambdify(xs, self._expr(xs))
        return memo["eval"]

    def _expr(self, xs):
        expr = sp.sympify(self.poly) if self.poly is not None else sp.Integer(1)
        if self.family == "gaussian_poly":
            A = np.asarray(self.quad_A)
            b = np.asarray(self.quad_b, dtype=complex)
            q = sp.Integer(0)
            for i in range(self.dim):
                for j in range(self.dim):
                    q += sp.Rational(-1, 2) * A[i, j] * xs[i] * xs[j]
                q += _c2s(b[i]) * xs[i]
            expr = expr * sp.exp(q + _c2s(self.quad_c))
        return expr

    def _grid_eval(self, pts):
        from scipy.interpolate import RegularGridInterpolator

        memo = self._cache()
        if "interp" not in memo:
            re = RegularGridInterpolator(self.grid_axes, self.grid_values.real, bounds_error=False, fill_value=0.0)
            im = RegularGridInterpolator(self.grid_axes, self.grid_values.imag, bounds_error=False, fill_value=0.0)
            memo["interp"] = (re, im)
        re, im = memo["interp"]
        return re(pts) + 1j * im(pts)

    # -- exact Fourier ------------------------------------------------------

    @property
    def fourier_closed_form(self):
        """Callable for a_vee(x); None unless the family supports it."""
        if self.family != "gaussian_poly":
            return None
        memo = self._cache()
        if "fourier" not in memo:
            memo["fourier"] = self._build_fourier()
        return memo["fourier"]

    def _build_fourier(self):
        n = self.dim
        xs = sp.symbols(f"x0:{n}", real=True)
        A = np.asarray(self.quad_A, dtype=float)
        Ainv = np.linalg.inv(A)
        b = np.asarray(self.quad_b, dtype=complex)
        w = [_c2s(b[i]) - sp.I * xs[i] for i in range(n)]
        quad = sp.Integer(0)
        for i in range(n):
            for j in range(n):
                quad += sp.Rational(1, 2) * Ainv[i, j] * w[i] * w[j]
        base = sp.det(sp.Matrix(A)) ** sp.Rational(-1, 2) * sp.exp(quad + _c2s(self.quad_c))
        p = sp.Poly(sp.sympify(self.poly) if self.poly is not None else sp.Integer(1), *xi_symbols(n))
        total = sp.Integer(0)
        for monom, coeff in p.terms():
            term = base
            for k, a_k in enumerate(monom):
                for _ in range(a_k):
                    term = sp.diff(term, xs[k])
            total += coeff * sp.I ** sum(monom) * term
        return _lambdify(xs, total)


def _c2s(z) -> sp.Expr:
    z = complex(z)
    return sp.Float(z.real) + sp.I * sp.Float(z.imag)


# ---------------------------------------------------------------------------
# constructors


def gaussian_poly(dim, poly=1, A=None, b=None, c=0.0, order_m=0.0, delta=0.0) -> Symbol:
    """General family member P(xi) exp(-xi.A.xi/2 + b.xi + c)."""
    A = np.eye(dim) if A is None else np.asarray(A, dtype=float)
    b = np.zeros(dim, dtype=complex) if b is None else np.asarray(b, dtype=complex)
    return Symbol(dim=dim, family="gaussian_poly", order_m=order_m, delta=delta,
                  poly=poly, quad_A=A, quad_b=b, quad_c=complex(c))


def gaussian(center, width=1.0, modulation=None, amplitude=1.0, dim=None, delta=0.0) -> Symbol:
    """Gaussian exp(-|xi - center|^2 / (2 width^2)) e^(i modulation . xi)."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    n = center.size if dim is None else dim
    A = np.eye(n) / width**2
    b = center / width**2 + (1j * np.asarray(modulation, dtype=float) if modulation is not None else 0.0)
    b = np.broadcast_to(np.asarray(b, dtype=complex), (n,))
    c = -np.dot(center, center) / (2 * width**2) + np.log(complex(amplitude))
    return gaussian_poly(n, 1, A, b, c, delta=delta)


def polynomial_symbol(dim, poly, order_m=None) -> Symbol:
    """Polynomial symbol; no integrable Fourier transform (handled exactly downstream)."""
    expr = _poly_expr(poly, dim)
    if order_m is None:
        order_m = sp.total_degree(expr, *xi_symbols(dim)) if expr.free_symbols else 0
    return Symbol(dim=dim, family="polynomial", order_m=float(order_m), poly=expr)


def grid_sampled(axes, values, order_m=0.0) -> Symbol:
    """Symbol given by values on a tensor grid, multilinear in between."""
    values = np.asarray(values, dtype=complex)
    axes = tuple(np.asarray(ax, dtype=float) for ax in axes)
    if values.shape != tuple(len(ax) for ax in axes):
        raise ValueError("grid shape mismatch")
    return Symbol(dim=len(axes), family="grid_sampled", order_m=order_m,
                  grid_axes=axes, grid_values=values)


def localized_gaussian(omega, h, delta, dim=None) -> Symbol:
    """Member of the localized family: Gaussian at omega, width h^delta <omega>/4.

    The 1/4 keeps several standard deviations inside the localization ball of
    radius h^delta <omega>/2 used by the uniform-L1 estimates.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    bracket = np.sqrt(1.0 + np.dot(omega, omega))
    return gaussian(omega, width=0.25 * h**delta * bracket, delta=delta)


# ---------------------------------------------------------------------------
# operations


def fourier_inverse(a: Symbol):
    """Return a callable for a_vee(x) = (2pi)^(-n/2) Int a(xi) e^(-ix.xi) dxi.

    Closed form for gaussian_poly; tensor-grid discrete transform for
    grid_sampled; polynomial symbols are distributional and refused.
    """
    if a.family == "gaussian_poly":
        return a.fourier_closed_form
    if a.family == "polynomial":
        raise TypeError("polynomial symbols have distributional transforms; quantize them exactly")
    axes = a.grid_axes
    values = a.grid_values
    n = a.dim
    steps = [ax[1] - ax[0] for ax in axes]

    def vee(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros(pts.shape[0], dtype=complex)
        mesh = np.meshgrid(*axes, indexing="ij")
        flat = np.stack([m.ravel() for m in mesh], axis=1)
        vals = values.ravel()
        vol = np.prod(steps) / (2 * np.pi) ** (n / 2)
        for i, x in enumerate(pts):
            out[i] = vol * np.sum(vals * np.exp(-1j * flat @ x))
        return out

    return vee


def rescale(a: Symbol, h: float) -> Symbol:
    """a_h(xi) = a(h xi)."""
    if h <= 0:
        raise ValueError("h must be positive")
    if h == 1.0:
        return a
    if a.family == "grid_sampled":
        return grid_sampled(tuple(ax / h for ax in a.grid_axes), a.grid_values, a.order_m)
    xs = xi_symbols(a.dim)
    new_poly = sp.expand(sp.sympify(a.poly).subs({x: h * x for x in xs}, simultaneous=True))
    if a.family == "polynomial":
        return replace(a, poly=new_poly)
    return replace(a, poly=new_poly,
                   quad_A=h**2 * np.asarray(a.quad_A),
                   quad_b=h * np.asarray(a.quad_b, dtype=complex))


def conjugate(a: Symbol) -> Symbol:
    """Pointwise complex conjugate, staying in the family."""
    if a.family == "grid_sampled":
        return grid_sampled(a.grid_axes, np.conj(a.grid_values), a.order_m)
    new_poly = sp.conjugate(sp.sympify(a.poly))
    new_poly = sp.expand(new_poly.subs({sp.conjugate(x): x for x in xi_symbols(a.dim)}, simultaneous=True))
    if a.family == "polynomial":
        return replace(a, poly=new_poly)
    return replace(a, poly=new_poly,
                   quad_b=np.conj(np.asarray(a.quad_b, dtype=complex)),
                   quad_c=np.conj(complex(a.quad_c)))


def derivative(a: Symbol, index: int) -> Symbol:
    """Plain partial derivative d/d xi_index, exact within the family."""
    xs = xi_symbols(a.dim)
    p = sp.sympify(a.poly)
    if a.family == "polynomial":
        return replace(a, poly=sp.diff(p, xs[index]), order_m=a.order_m - 1)
    if a.family != "gaussian_poly":
        raise TypeError("no exact derivative for grid_sampled symbols")
    A = np.asarray(a.quad_A)
    b = np.asarray(a.quad_b, dtype=complex)
    dq = _c2s(b[index]) - sum(A[index, j] * xs[j] for j in range(a.dim))
    return replace(a, poly=sp.expand(sp.diff(p, xs[index]) + p * dq))


def rotate(a: Symbol, R) -> Symbol:
    """(R . a)(xi) = a(R^T xi) for orthogonal R (the coadjoint rotation)."""
    R = np.asarray(R, dtype=float)
    if a.family == "grid_sampled":
        raise TypeError("rotate needs an exact family")
    xs = sp.Matrix(xi_symbols(a.dim))
    sub = sp.Matrix(R.T) * xs
    new_poly = sp.expand(sp.sympify(a.poly).subs(
        {xs[i]: sub[i] for i in range(a.dim)}, simultaneous=True))
    if a.family == "polynomial":
        return replace(a, poly=new_poly)
    return replace(a, poly=new_poly,
                   quad_A=R @ np.asarray(a.quad_A) @ R.T,
                   quad_b=R @ np.asarray(a.quad_b, dtype=complex))


def multiply(a: Symbol, b: Symbol) -> Symbol:
    """Pointwise product within the exact families."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    pa, pb = sp.sympify(a.poly), sp.sympify(b.poly)
    if a.family == "polynomial" and b.family == "polynomial":
        return polynomial_symbol(a.dim, sp.expand(pa * pb))
    if "grid_sampled" in (a.family, b.family):
        raise TypeError("no exact product with grid_sampled symbols")
    ga = a if a.family == "gaussian_poly" else None
    if ga is None:
        a, b = b, a
        pa, pb = pb, pa
    if b.family == "gaussian_poly":
        return gaussian_poly(a.dim, sp.expand(pa * pb),
                             np.asarray(a.quad_A) + np.asarray(b.quad_A),
                             np.asarray(a.quad_b, dtype=complex) + np.asarray(b.quad_b, dtype=complex),
                             complex(a.quad_c) + complex(b.quad_c),
                             order_m=a.order_m + b.order_m)
    return replace(a, poly=sp.expand(pa * pb), order_m=a.order_m + b.order_m)


def seminorm_estimate(a: Symbol, alpha, grid, m=None) -> float:
    """sup over the grid of |d^alpha a(xi)| <xi>^(|alpha| - m).

    Exact derivatives for the closed-form families, central differences of
    step 1e-4 <xi> per axis otherwise.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("empty grid")
    alpha = tuple(int(k) for k in alpha)
    if sum(alpha) > 4:
        raise ValueError("|alpha| <= 4 supported")
    m = a.order_m if m is None else m
    if a.family in ("gaussian_poly", "polynomial"):
        da = a
        for idx, k in enumerate(alpha):
            for _ in range(k):
                da = derivative(da, idx)
        vals = np.abs(da(grid))
    else:
        vals = np.abs(_finite_difference(a, grid, alpha))
    weight = (1.0 + np.sum(grid**2, axis=1)) ** ((sum(alpha) - m) / 2.0)
    return float(np.max(vals * weight))


def _finite_difference(a: Symbol, pts, alpha):
    order = [idx for idx, k in enumerate(alpha) for _ in range(k)]

    def rec(points, remaining):
        if not remaining:
            return a(points)
        idx, rest = remaining[0], remaining[1:]
        hstep = 1e-4 * np.sqrt(1.0 + np.sum(points**2, axis=1))
        up = points.copy()
        up[:, idx] += hstep
        dn = points.copy()
        dn[:, idx] -= hstep
        return (rec(up, rest) - rec(dn, rest)) / (2 * hstep)

    return rec(pts, order)


def fourier_l1_norm(a: Symbol, extent=12.0, npts=61) -> float:
    """Numerical L1 norm of a_vee against the normalized measure.

    Invariant under rescaling a -> a_h, so it measures the localized family's
    uniform constant directly.
    """
    vee = fourier_inverse(a)
    axes = [np.linspace(-extent, extent, npts)] * a.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    step = axes[0][1] - axes[0][0]
    vol = step**a.dim / (2 * np.pi) ** (a.dim / 2)
    return float(np.sum(np.abs(vee(flat))) * vol)
