"""Quantization: symbols to operators on finite representations.

The operator map integrates the symbol's Fourier transform against the
one-parameter groups pi(exp(hx)) under a smooth cutoff.  The identities
exercised here (adjoint, composition, polynomial, trace) are exact in the
continuum, so every residual reported measures quadrature alone.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import sympy as sp
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from .liecore import Cutoff, FiniteRep, evaluate_symmetrized
from .orbits import OrbitChart, orbit_integral
from .starprod import (
    CutoffPair,
    QuadratureWarning,
    fourier_extent,
    group_star,
    hermite_rule,
    product_u_rule,
    pushforward_table,
    standard_cutoffs,
)
from .symbols import Symbol, _poly_expr, fourier_inverse, gaussian, rotate, xi_symbols

__all__ = [
    "QuantizationContext",
    "group_matrices",
    "opp",
    "polynomial_opp",
    "compose_residual",
    "kirillov_residual",
    "equivariance_residual",
    "weight_element",
    "microlocal_support",
    "adjoint_matrix",
]

_ROTATION = ("su2", "so3")


def _rotation_frame(rep: FiniteRep):
    """Weight phases and the polar-axis eigenframe for a rotation algebra rep.

    Requires pi(X3) diagonal (the weight basis); returns (w3, lam2, V2) with
    pi(X3) = diag(i w3) and pi(X2) = V2 diag(i lam2) V2'.
    """
    g3 = rep.generators[2]
    if np.max(np.abs(g3 - np.diag(np.diag(g3)))) > 1e-12:
        raise ValueError("weight basis required: pi(X3) must be diagonal")
    w3 = np.diag(g3).imag
    h2 = rep.generators[1] / 1j
    if np.max(np.abs(h2 - h2.conj().T)) > 1e-10:
        raise ValueError("pi(X2) is not skew-Hermitian")
    lam2, v2 = np.linalg.eigh(h2)
    return w3, lam2, v2


def group_matrices(rep: FiniteRep, y, chunk: int = 8192) -> np.ndarray:
    """pi(exp(y_k)) for a batch of algebra points, shape (N, d, d).

    Rotation algebras in a weight basis use the polar factorization
    pi(exp(t n)) = G T(t) G' with G built from two fixed eigenframes;
    everything else falls back to a matrix-exponential loop.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    d = rep.dim_rep
    if rep.algebra.name in _ROTATION and rep.weight_values is not None:
        w3, lam2, v2 = _rotation_frame(rep)
        t = np.linalg.norm(y, axis=-1)
        safe = np.maximum(t, 1e-300)
        theta = np.arccos(np.clip(y[:, 2] / safe, -1.0, 1.0))
        phi = np.arctan2(y[:, 1], y[:, 0])
        out = np.empty((len(y), d, d), dtype=complex)
        dl2 = lam2[:, None] - lam2[None, :]
        dw3 = w3[:, None] - w3[None, :]
        for lo in range(0, len(y), chunk):
            sl = slice(lo, lo + chunk)
            tph = np.exp(1j * t[sl, None] * w3[None, :])
            a = (v2.conj().T[None] * tph[:, None, :]) @ v2
            a *= np.exp(1j * theta[sl, None, None] * dl2[None])
            a = v2[None] @ a @ v2.conj().T[None]
            a *= np.exp(1j * phi[sl, None, None] * dw3[None])
            out[sl] = a
        return out
    if all(np.max(np.abs(g - np.diag(np.diag(g)))) < 1e-14 for g in rep.generators):
        diags = np.stack([np.diag(g) for g in rep.generators])  # (dim, d)
        ph = np.exp(y @ diags)
        out = np.zeros((len(y), d, d), dtype=complex)
        out[:, np.arange(d), np.arange(d)] = ph
        return out
    if len(y) > 20000:
        warnings.warn("matrix-exponential loop over a large node set", QuadratureWarning)
    return np.stack([expm(rep.pi(p)) for p in y])


def _polar_rule(radius: float, n_r: int, n_theta: int, n_phi: int):
    """Product rule on the ball: GL radial x GL polar x uniform azimuth.

    Node set is antipodally symmetric (even n_phi), which makes the
    operator map's adjoint identity exact at the quadrature level.
    """
    r, wr = leggauss(n_r)
    r = 0.5 * radius * (r + 1.0)
    wr = 0.5 * radius * wr * r**2
    u, wu = leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1 - u**2)
    nodes = np.stack(
        [
            np.einsum("r,t,p->rtp", r, st, np.cos(phi)).ravel(),
            np.einsum("r,t,p->rtp", r, st, np.sin(phi)).ravel(),
            np.einsum("r,t,p->rtp", r, u, np.ones(n_phi)).ravel(),
        ],
        axis=-1,
    )
    w = np.einsum("r,t,p->rtp", wr, wu, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
    return nodes, w / (2 * np.pi) ** 1.5


@dataclass(frozen=True)
class QuantizationContext:
    """Immutable environment for the operator map at a fixed scale.

    The secondary cutoff must be identically 1 on products of points in the
    primary support; that condition is sampled at construction, as is the
    agreement of the fast group-matrix path with the matrix exponential.
    """

    rep: FiniteRep
    h: float
    cutoff: Cutoff = None
    chi_prime: Cutoff = None
    n_radial: int = None
    n_polar: int = None
    n_azimuth: int = None

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        alg = self.rep.algebra
        pair = standard_cutoffs(alg)
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", pair.chi)
        if self.chi_prime is None:
            object.__setattr__(self, "chi_prime", pair.chi_prime)
        rng = np.random.default_rng(11)
        x = rng.normal(size=(256, alg.dim))
        x *= (self.cutoff.outer_radius * rng.random((256, 1)) ** (1 / alg.dim)
              / np.linalg.norm(x, axis=1, keepdims=True))
        y = rng.permutation(x)
        dev = np.max(np.abs(self.chi_prime(group_star(alg, x, y)) - 1.0))
        if dev > 1e-14:
            raise ValueError(f"secondary cutoff not 1 on products of the support ({dev:.2e})")
        if alg.name in _ROTATION and self.rep.weight_values is not None:
            probe = rng.normal(size=(3, 3)) * 0.6
            fast = group_matrices(self.rep, probe)
            slow = np.stack([expm(self.rep.pi(p)) for p in probe])
            if np.max(np.abs(fast - slow)) > 1e-11:
                raise ArithmeticError("polar factorization disagrees with expm")
        wmax = self._weight_scale()
        if self.n_radial is None:
            object.__setattr__(self, "n_radial", max(32, int(1.4 * wmax * self.h * 9.0) + 12))
        if self.n_polar is None:
            object.__setattr__(self, "n_polar", max(24, int(2 * wmax) + 10))
        if self.n_azimuth is None:
            n = max(32, int(4 * wmax) + 12)
            object.__setattr__(self, "n_azimuth", n + n % 2)

    def _weight_scale(self) -> float:
        if self.rep.weight_values is not None:
            return max(abs(w) for w in self.rep.weight_values)
        return float(max(np.linalg.norm(g, 2) for g in self.rep.generators))

    def quadrature(self, radius: float = None):
        """Nodes and weights (for the normalized measure) over the cutoff
        support in the algebra, optionally truncated to a smaller radius."""
        alg = self.rep.algebra
        full = self.cutoff.outer_radius / self.h
        radius = full if radius is None else min(radius, full)
        if alg.dim == 3 and alg.name in _ROTATION:
            return _polar_rule(radius, self.n_radial, self.n_polar, self.n_azimuth)
        raise ValueError("fixed quadrature only for the rank-one rotation algebras")


def opp(ctx: QuantizationContext, a: Symbol) -> np.ndarray:
    """The operator of a symbol: int chi(hx) avee(x) pi(exp(hx)) dlambda(x).

    Polynomial symbols take the exact route (symmetrized words), never a
    quadrature; everything else is integrated against the group.
    """
    if a.family == "polynomial":
        return polynomial_opp(ctx.rep, a.poly, ctx.h)
    alg = ctx.rep.algebra
    avee = fourier_inverse(a)
    if alg.name in _ROTATION:
        nodes, w = ctx.quadrature(fourier_extent(a))
    else:
        cov = np.real(a.quad_A)
        center = np.imag(a.quad_b)
        nodes, w = hermite_rule(np.linalg.inv(cov), center, max(ctx.n_radial or 20, 20))
        w = w / (2 * np.pi) ** (alg.dim / 2)
    c = np.asarray(w * ctx.cutoff(ctx.h * nodes) * avee(nodes), dtype=complex)
    d = ctx.rep.dim_rep
    out = np.zeros((d, d), dtype=complex)
    for lo in range(0, len(nodes), 8192):
        sl = slice(lo, lo + 8192)
        out += np.einsum("n,nab->ab", c[sl], group_matrices(ctx.rep, ctx.h * nodes[sl]))
    return out


def polynomial_opp(rep: FiniteRep, p, h: float = 1.0) -> np.ndarray:
    """Exact operator of a polynomial symbol: pi of the symmetrized word,
    with each coordinate factor contributing -i h pi(X_k)."""
    n = rep.algebra.dim
    xs = xi_symbols(n)
    if isinstance(p, Symbol):
        p = p.poly
    poly = sp.Poly(sp.expand(_poly_expr(p, n)), *xs)
    words = {}
    for monom, coeff in poly.terms():
        word = tuple(k for k, e in enumerate(monom) for _ in range(e))
        words[word] = words.get(word, 0.0) + complex(coeff) * (-1j * h) ** len(word)
    return evaluate_symmetrized(rep, words)


def compose_residual(ctx: QuantizationContext, a: Symbol, b: Symbol,
                     ns_axis: int = 18, nu_axis: int = 36) -> float:
    """Operator-norm gap between Op(a)Op(b) and the quantized star product.

    The two sides are discretized with independently placed rules, so the
    value is a two-path quadrature check of an exact identity.
    """
    alg = ctx.rep.algebra
    lhs = opp(ctx, a) @ opp(ctx, b)
    pair = CutoffPair(ctx.cutoff, ctx.chi_prime)
    u_nodes, wu = product_u_rule(a, b, nu_axis)
    f = pushforward_table(alg, a, b, ctx.h, pair, u_nodes, ns_axis=ns_axis)
    c = wu * ctx.chi_prime(ctx.h * u_nodes) * f / (2 * np.pi) ** (alg.dim / 2)
    d = ctx.rep.dim_rep
    rhs = np.zeros((d, d), dtype=complex)
    for lo in range(0, len(u_nodes), 8192):
        sl = slice(lo, lo + 8192)
        rhs += np.einsum("n,nab->ab", c[sl], group_matrices(ctx.rep, ctx.h * u_nodes[sl]))
    return float(np.linalg.norm(lhs - rhs, 2))


def kirillov_residual(ctx: QuantizationContext, a: Symbol, chart: OrbitChart,
                      via: str = "auto"):
    """(lhs, rhs, gap) for the trace formula: h^d tr Op_h(a) against the
    integral of a over the rescaled orbit carried by ``chart``.

    ``via='character'`` sums weight phases instead of assembling matrices;
    the two routes agree to rounding and the character one scales to large
    representations.
    """
    d = chart.half_dim
    if via == "auto":
        via = "character" if ctx.rep.dim_rep > 64 else "matrix"
    if via == "matrix":
        tr = complex(np.trace(opp(ctx, a)))
    else:
        if ctx.rep.weight_values is None:
            raise ValueError("character route needs a weight basis")
        nodes, w = ctx.quadrature(fourier_extent(a))
        c = w * ctx.cutoff(ctx.h * nodes) * fourier_inverse(a)(nodes)
        t = ctx.h * np.linalg.norm(nodes, axis=-1)
        wv = np.asarray(ctx.rep.weight_values)
        tr = 0.0 + 0.0j
        # node x weight phase table chunked: the full outer product is
        # ~len(nodes) * dim_rep complexes and does not fit at large j
        for lo in range(0, len(t), 65536):
            sl = slice(lo, lo + 65536)
            char = np.exp(1j * np.outer(t[sl], wv)).sum(axis=1)
            tr += complex(np.sum(c[sl] * char))
    lhs = ctx.h**d * tr
    rhs = complex(orbit_integral(chart, a))
    return lhs, rhs, abs(lhs - rhs)


def adjoint_matrix(algebra, x) -> np.ndarray:
    """Ad(exp x) in coordinates, via the matrix embedding and trace pairing."""
    g = algebra.group_exp(x)
    ginv = np.linalg.inv(g)
    gram = algebra.invariant_form()
    cols = []
    for i in range(algebra.dim):
        conj = g @ algebra.matrix_basis[i] @ ginv
        trs = np.array([np.trace(conj @ algebra.matrix_basis[k]).real for k in range(algebra.dim)])
        cols.append(np.linalg.solve(gram, trs))
    return np.stack(cols, axis=-1)


def equivariance_residual(ctx: QuantizationContext, x_g, a: Symbol) -> float:
    """Norm gap between pi(g) Op(a) pi(g)^-1 and Op of the rotated symbol,
    g = exp(x_g).  Exact for radial cutoffs; residual is quadrature only."""
    alg = ctx.rep.algebra
    ad = adjoint_matrix(alg, x_g)
    if np.max(np.abs(ad.T @ ad - np.eye(alg.dim))) > 1e-10:
        raise ValueError("adjoint action not orthogonal; cutoff would not be preserved")
    pig = expm(ctx.rep.pi(x_g))
    lhs = pig @ opp(ctx, a) @ pig.conj().T
    return float(np.linalg.norm(lhs - opp(ctx, rotate(a, ad)), 2))


def weight_element(ctx: QuantizationContext, a: Symbol, weight) -> complex:
    """Diagonal matrix element <Op_h(a) e_n, e_n> at a simple weight.

    Azimuthal conjugation drops out on the diagonal, and the weight row of
    the polar factorization depends on the node only through its polar
    angle, so the product rule collapses to an (r, theta) table; the cost is
    dominated by evaluating the symbol transform on the grid.
    """
    if ctx.rep.weight_values is None:
        raise ValueError("needs a weight basis")
    ws = np.asarray(ctx.rep.weight_values)
    hits = np.where(np.abs(ws - weight) < 1e-9)[0]
    if len(hits) == 0:
        return 0.0 + 0.0j
    if len(hits) != 1:
        raise ValueError(f"weight {weight} not simple in this representation")
    n_idx = int(hits[0])
    w3, lam2, v2 = _rotation_frame(ctx.rep)
    nodes, wq = ctx.quadrature(fourier_extent(a))
    c = np.asarray(wq * ctx.cutoff(ctx.h * nodes) * fourier_inverse(a)(nodes), dtype=complex)
    s = c.reshape(ctx.n_radial, ctx.n_polar, ctx.n_azimuth).sum(axis=2)
    grid = nodes.reshape(ctx.n_radial, ctx.n_polar, ctx.n_azimuth, 3)
    r_vals = np.linalg.norm(grid[:, 0, 0, :], axis=-1)
    theta = np.arccos(np.clip(grid[0, :, 0, 2] / r_vals[0], -1.0, 1.0))
    rows = (v2[n_idx][None, :] * np.exp(1j * theta[:, None] * lam2[None, :])) @ v2.conj().T
    phase = np.exp(1j * ctx.h * np.outer(r_vals, w3))
    diag = phase @ (np.abs(rows) ** 2).T
    return complex(np.sum(s * diag))


def microlocal_support(ctx: QuantizationContext, weight, centers, width: float = 0.3) -> np.ndarray:
    """Diagonal matrix elements <Op_h(a_w) e_n, e_n> over bump centers."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    return np.array([
        np.real(weight_element(ctx, gaussian(omega, width), weight)) for omega in centers
    ])
