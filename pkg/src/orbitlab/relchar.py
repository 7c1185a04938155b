"""Relative characters for compact branchings and their leading-order
asymptotics against rescaled fiber integrals.

For a compact subgroup the character form is an exact finite computation,
tr(P_n T) against the torus weight projectors, so the Plancherel identity
holds to roundoff and the asymptotic statements are tested with no hidden
analytic error on the character side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ggp import GGPPair, ggp_catalog, orbital_integral
from .liecore import FiniteRep
from .quantize import QuantizationContext, opp, weight_element

__all__ = [
    "CompactBranching",
    "compact_branching",
    "hermitian_form",
    "plancherel_check",
    "relchar_residual",
    "relchar_multi_residual",
    "order_fit",
]


@dataclass(frozen=True)
class CompactBranching:
    """A compact branching: rotation pair, a finite representation with its
    torus weight basis, and a Haar mass fixing all normalizations at once.

    Unit Haar mass pairs with counting measure on the character set, which
    makes the Plancherel identity exact.
    """

    pair: GGPPair
    rep: FiniteRep
    haar_mass: float = 1.0

    def __post_init__(self):
        if self.pair.case != "orthogonal":
            raise ValueError("compact branching requires an orthogonal pair")
        if self.rep.weight_values is None:
            raise ValueError("representation must carry a weight basis")
        if self.haar_mass <= 0:
            raise ValueError("haar_mass must be positive")
        total = sum(self.rep.weight_projector(n) for n in self.characters)
        if np.max(np.abs(total - np.eye(self.rep.dim_rep))) > 1e-12:
            raise ValueError("weight projectors do not resolve the identity")

    @property
    def characters(self) -> tuple:
        return tuple(sorted(set(float(w) for w in self.rep.weight_values)))

    def projector(self, n) -> np.ndarray:
        return self.rep.weight_projector(n)


def compact_branching(rep: FiniteRep, haar_mass: float = 1.0) -> CompactBranching:
    return CompactBranching(ggp_catalog("so3_so2"), rep, haar_mass)


def hermitian_form(branching: CompactBranching, T, n) -> complex:
    """The character-n form of an operator: haar_mass times the circle
    average of tr(pi(theta) T) against e^(-i n theta), which collapses to
    haar_mass * tr(P_n T)."""
    T = np.asarray(T, dtype=complex)
    if abs(n) > max(abs(w) for w in branching.characters):
        return 0.0 + 0.0j
    return branching.haar_mass * complex(np.trace(branching.projector(n) @ T))


def plancherel_check(branching: CompactBranching, T) -> float:
    """|tr T - sum over characters of the hermitian forms|, with the dual
    counting measure matched to the Haar mass."""
    T = np.asarray(T, dtype=complex)
    total = sum(hermitian_form(branching, T, n) for n in branching.characters)
    return float(abs(complex(np.trace(T)) - total / branching.haar_mass))


def _spin_of(rep: FiniteRep) -> float:
    return 0.5 * (rep.dim_rep - 1)


def _pole_clearance(a, radius: float, threshold: float = 0.05):
    """Refuse symbols whose mass reaches the unstable polar points of the
    rescaled sphere."""
    u, phi = np.linspace(-1.0, 1.0, 25), np.linspace(0.0, 2 * np.pi, 25)
    uu, pp = np.meshgrid(u, phi, indexing="ij")
    st = np.sqrt(1 - uu**2)
    pts = radius * np.stack([st * np.cos(pp), st * np.sin(pp), uu], axis=-1).reshape(-1, 3)
    amax = float(np.max(np.abs(np.asarray(a(pts)))))
    poles = np.array([[0.0, 0.0, radius], [0.0, 0.0, -radius]])
    pole = float(np.max(np.abs(np.asarray(a(poles)))))
    if amax > 0 and pole > threshold * amax:
        raise ValueError(
            f"symbol support touches the unstable polar locus (ratio {pole / amax:.2e})"
        )


def relchar_residual(branching: CompactBranching, a, h: float, n,
                     radius: float = None, n_fiber: int = 96,
                     ctx: QuantizationContext = None):
    """(lhs, rhs, |lhs - rhs|) for the character asymptotic: the character-n
    form of Op_h(a) against the unit-mass circle integral at height h n on
    the rescaled sphere.

    An out-of-range character index gives exact zero on the left and an
    empty fiber (zero by convention) on the right.
    """
    j = _spin_of(branching.rep)
    radius = h * (j + 0.5) if radius is None else float(radius)
    _pole_clearance(a, radius)
    ctx = QuantizationContext(branching.rep, h) if ctx is None else ctx
    lhs = branching.haar_mass * weight_element(ctx, a, n)
    z = h * float(n)
    if abs(z) >= radius:
        rhs = 0.0 + 0.0j
    else:
        rhs = branching.haar_mass * complex(
            orbital_integral(branching.pair, radius, z, a, n_nodes=n_fiber)
        )
    return lhs, rhs, float(abs(lhs - rhs))


def relchar_multi_residual(branching: CompactBranching, symbols, h: float, n,
                           radius: float = None, n_fiber: int = 96,
                           ctx: QuantizationContext = None) -> float:
    """Gap between the character form of a product of operators and the
    fiber integral of the pointwise product of symbols."""
    j = _spin_of(branching.rep)
    radius = h * (j + 0.5) if radius is None else float(radius)
    for a in symbols:
        _pole_clearance(a, radius)
    ctx = QuantizationContext(branching.rep, h) if ctx is None else ctx
    T = np.eye(branching.rep.dim_rep, dtype=complex)
    for a in symbols:
        T = T @ opp(ctx, a)
    lhs = hermitian_form(branching, T, n)
    z = h * float(n)
    if abs(z) >= radius:
        rhs = 0.0 + 0.0j
    else:
        def product(pts):
            vals = np.ones(len(np.atleast_2d(pts)), dtype=complex)
            for a in symbols:
                vals = vals * np.asarray(a(pts), dtype=complex)
            return vals

        rhs = branching.haar_mass * complex(
            orbital_integral(branching.pair, radius, z, product, n_nodes=n_fiber)
        )
    return float(abs(lhs - rhs))


def order_fit(h_values, residuals) -> float:
    """Least-squares slope of log residual against log h."""
    h_values = np.asarray(h_values, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    mask = residuals > 0
    return float(np.polyfit(np.log(h_values[mask]), np.log(residuals[mask]), 1)[0])
