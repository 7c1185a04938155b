"""Coadjoint orbits: charts, symplectic measure, invariants, rescaling limits.

Orbit measures are normalized so that a d-dimensional compact orbit carries
(1/d!) (sigma/2pi)^d; for the rotation algebras this makes the mass of the
sphere of radius r equal to 2r, the Archimedes property.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .liecore import LieAlgebra
from .starprod import QuadratureWarning

__all__ = [
    "OrbitChart",
    "sphere_chart",
    "character_orbit",
    "highest_weight_orbit",
    "symplectic_form_at",
    "coadjoint_stabilizer_map",
    "orbit_integral",
    "homogeneity_residual",
    "infinitesimal_character",
    "pfaffian",
    "equal_volume_strips",
    "strip_masses",
    "NilconeStep",
    "nilcone_rescaling",
    "regular_test",
]


def symplectic_form_at(algebra: LieAlgebra, xi, x, y) -> float:
    """The orbit two-form on coadjoint tangents: sigma(ad_x xi, ad_y xi) = xi([x,y])."""
    return float(np.dot(np.asarray(xi, dtype=float), algebra.bracket(x, y)))


def coadjoint_stabilizer_map(algebra: LieAlgebra, xi) -> np.ndarray:
    """Matrix of x -> ad_x^* xi in coordinates; kernel is the stabilizer."""
    xi = np.asarray(xi, dtype=float)
    # (ad_x^* xi)_j = sum_{i,k} c[i,j,k] x_i xi_k
    return np.einsum("ijk,k->ji", algebra.structure_constants, xi)


@dataclass(frozen=True)
class OrbitChart:
    """A quadrature chart on a single coadjoint orbit.

    ``nodes`` are points of the orbit in dual coordinates and ``weights``
    integrate the normalized symplectic measure.  ``refined`` rebuilds the
    chart at a finer resolution (for convergence flags); ``scaled`` builds
    the chart of the dilated orbit t.O with its own measure.
    """

    algebra: LieAlgebra
    label: str
    basepoint: np.ndarray
    half_dim: int
    nodes: np.ndarray
    weights: np.ndarray
    refined: object = field(repr=False, default=None)
    scaled: object = field(repr=False, default=None)
    axis_cdf: object = field(repr=False, default=None)
    axis_range: tuple = None
    band: object = field(repr=False, default=None)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def invariant_spread(self) -> float:
        """sup over nodes of |invariants(node) - invariants(basepoint)|."""
        ref = infinitesimal_character(self.algebra, self.basepoint)
        vals = np.stack([infinitesimal_character(self.algebra, p) for p in self.nodes])
        return float(np.max(np.abs(vals - ref)))


def _sphere_density_check(algebra, radius, samples=5):
    """Archimedes density against the sigma-form determinant.

    In the (z, phi) chart the claimed measure is dz dphi / 2pi; the exact
    density is |sigma(t_z, t_phi)| / 2pi with tangents realized as
    coadjoint directions.  Returns the worst |sigma| deviation from 1.
    """
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(samples):
        z = radius * (2 * rng.random() - 1) * 0.95
        phi = 2 * np.pi * rng.random()
        rho = np.sqrt(radius**2 - z**2)
        xi = np.array([rho * np.cos(phi), rho * np.sin(phi), z])
        t_z = np.array([-z * np.cos(phi) / rho, -z * np.sin(phi) / rho, 1.0])
        t_phi = np.array([-rho * np.sin(phi), rho * np.cos(phi), 0.0])
        m = coadjoint_stabilizer_map(algebra, xi)
        x_z, *_ = np.linalg.lstsq(m, t_z, rcond=None)
        x_phi, *_ = np.linalg.lstsq(m, t_phi, rcond=None)
        if max(np.max(np.abs(m @ x_z - t_z)), np.max(np.abs(m @ x_phi - t_phi))) > 1e-9:
            raise ArithmeticError("tangent not realized by coadjoint directions")
        worst = max(worst, abs(abs(symplectic_form_at(algebra, xi, x_z, x_phi)) - 1.0))
    return worst


def sphere_chart(algebra: LieAlgebra, radius: float, n_z: int = 64, n_phi: int = 64,
                 check: bool = True) -> OrbitChart:
    """Two-sphere orbit of the rotation algebras, radius r, mass 2r.

    Product rule: Gauss-Legendre in the axis coordinate, uniform in the
    angle (exact for trigonometric polynomials).  The z-density is the
    constant 1/2pi; construction verifies this against the symplectic
    form instead of assuming it.
    """
    if algebra.dim != 3 or algebra.name not in ("su2", "so3"):
        raise ValueError("sphere charts exist for the rank-one rotation algebras")
    if radius <= 0:
        raise ValueError("radius must be positive")
    def band_nodes(z1, z2, nz, nphi):
        zs, wz = leggauss(nz)
        zs = 0.5 * (z2 + z1) + 0.5 * (z2 - z1) * zs
        wz = 0.5 * (z2 - z1) * wz
        phis = 2 * np.pi * np.arange(nphi) / nphi
        rho = np.sqrt(np.maximum(radius**2 - zs**2, 0.0))
        nodes = np.stack(
            [
                np.outer(rho, np.cos(phis)).ravel(),
                np.outer(rho, np.sin(phis)).ravel(),
                np.outer(zs, np.ones(nphi)).ravel(),
            ],
            axis=-1,
        )
        return nodes, np.outer(wz, np.ones(nphi) / nphi).ravel()

    nodes, weights = band_nodes(-radius, radius, n_z, n_phi)
    if check:
        dev = _sphere_density_check(algebra, radius)
        if dev > 1e-8:
            raise ArithmeticError(f"symplectic density off Archimedes value by {dev:.2e}")
    chart = OrbitChart(
        algebra=algebra,
        label=f"sphere(r={radius:g})",
        basepoint=np.array([0.0, 0.0, radius]),
        half_dim=1,
        nodes=nodes,
        weights=weights,
        refined=lambda factor=1.4: sphere_chart(
            algebra, radius, int(np.ceil(n_z * factor)), int(np.ceil(n_phi * factor)), check=False
        ),
        scaled=lambda t: sphere_chart(algebra, t * radius, n_z + 5, n_phi + 4, check=False),
        # z-density is the constant 1, verified above against sigma
        axis_cdf=lambda z: np.clip(z + radius, 0.0, 2 * radius),
        axis_range=(-radius, radius),
        band=band_nodes,
    )
    return chart


def character_orbit(algebra: LieAlgebra, j, **kw) -> OrbitChart:
    """Sphere of radius j + 1/2: the orbit whose transform reproduces the
    normalized character exactly, with mass equal to the dimension 2j + 1."""
    return sphere_chart(algebra, float(j) + 0.5, **kw)


def highest_weight_orbit(algebra: LieAlgebra, j, **kw) -> OrbitChart:
    """Sphere of radius j: the orbit through the highest weight itself."""
    return sphere_chart(algebra, float(j), **kw)


def orbit_integral(chart: OrbitChart, a, refine: bool = True, refine_tol: float = 1e-9) -> complex:
    """Integral of a symbol (or any vectorized callable) over the orbit."""
    val = complex(np.sum(chart.weights * a(chart.nodes)))
    if refine and chart.refined is not None:
        fine = chart.refined()
        val_fine = complex(np.sum(fine.weights * a(fine.nodes)))
        if abs(val - val_fine) > max(refine_tol, 1e-12 * abs(val_fine)):
            warnings.warn(
                f"orbit integral not settled: refinement moved it by {abs(val - val_fine):.2e}",
                QuadratureWarning,
                stacklevel=2,
            )
        return val_fine
    return val


def homogeneity_residual(chart: OrbitChart, a, t: float) -> float:
    """|int_O a domega - t^(-d) int_(tO) a(xi/t) domega| by independent rules."""
    if t <= 0:
        raise ValueError("t must be positive")
    if chart.scaled is None:
        raise ValueError("chart has no dilation rule")
    lhs = orbit_integral(chart, a, refine=False)
    big = chart.scaled(t)
    rhs = t ** (-chart.half_dim) * orbit_integral(big, lambda p: a(p / t), refine=False)
    return abs(lhs - rhs)


def pfaffian(m) -> float:
    """Pfaffian of a real antisymmetric matrix by cofactor recursion."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n % 2:
        return 0.0
    if n == 0:
        return 1.0
    if n == 2:
        return float(m[0, 1])
    total = 0.0
    rest = list(range(1, n))
    for idx, k in enumerate(rest):
        sub = [i for i in rest if i != k]
        minor = m[np.ix_(sub, sub)]
        total += (-1) ** idx * m[0, k] * pfaffian(minor)
    return float(total)


def infinitesimal_character(algebra: LieAlgebra, xi) -> np.ndarray:
    """Invariant coordinates of a dual point: characteristic-polynomial
    coefficients of the paired matrix over i, plus the Pfaffian for the
    even orthogonal algebras.

    The pairing uses the trace form of the catalog embedding, so the
    normalization is the catalog's own.
    """
    xi = np.asarray(xi, dtype=float)
    gram = algebra.invariant_form()
    if abs(np.linalg.det(gram)) < 1e-12:
        raise ValueError(f"{algebra.name}: trace form degenerate; no matrix pairing")
    coords = np.linalg.solve(gram, xi)
    m = sum(coords[k] * algebra.matrix_basis[k] for k in range(algebra.dim))
    coeffs = np.poly(m / 1j)[1:]
    out = list(np.real_if_close(coeffs, tol=1e6).astype(float))
    if algebra.name.startswith("so") and algebra.matrix_basis[0].shape[0] % 2 == 0:
        out.append(pfaffian(m.real))
    return np.asarray(out)


def equal_volume_strips(chart: OrbitChart, mass_per_strip: float = 1.0) -> np.ndarray:
    """Axis levels cutting the orbit into strips of equal symplectic mass.

    Inverts the cumulative axis-coordinate mass at integer multiples of
    ``mass_per_strip``; returns the interior boundary levels.
    """
    targets_of = lambda total: np.arange(1, int(np.floor(total / mass_per_strip - 1e-9)) + 1)
    if chart.axis_cdf is not None:
        z0, z1 = chart.axis_range
        total = float(chart.axis_cdf(z1))
        return np.array(
            [brentq(lambda z: chart.axis_cdf(z) - k * mass_per_strip, z0, z1)
             for k in targets_of(total)]
        )
    order = np.argsort(chart.nodes[:, -1], kind="stable")
    zs = chart.nodes[order, -1]
    cum = np.cumsum(chart.weights[order])
    return np.interp(targets_of(cum[-1]) * mass_per_strip, cum, zs)


def strip_masses(chart: OrbitChart, boundaries, n_z: int = 24, n_phi: int = 16) -> np.ndarray:
    """Symplectic mass of each band between consecutive strip boundaries.

    Integrated with a fresh per-band rule, independent of the inversion
    that produced the boundaries.
    """
    if chart.band is None or chart.axis_range is None:
        raise ValueError("chart does not expose band rules")
    edges = [chart.axis_range[0], *np.asarray(boundaries, dtype=float), chart.axis_range[1]]
    out = []
    for z1, z2 in zip(edges[:-1], edges[1:]):
        _, w = chart.band(z1, z2, n_z, n_phi)
        out.append(float(np.sum(w)))
    return np.asarray(out)


# ---------------------------------------------------------------------------
# nilcone rescaling (split rank-one demo)


@dataclass(frozen=True)
class NilconeStep:
    h: float
    points: np.ndarray
    hausdorff: float


def nilcone_rescaling(h_list, window=(2.0, 2.5), invariant: float = 1.0,
                      n_theta: int = 96, n_z: int = 257) -> list:
    """Dilates the one-sheeted hyperboloid orbit family onto the null cone.

    For each h the cloud samples h.O (invariant h^2 c) clipped to the
    window {|z| <= window[0], rho <= window[1]} and records the one-sided
    Hausdorff distance to the cone rho = |z|, which is |rho - |z||/sqrt(2)
    by the rotational symmetry.
    """
    zmax, rhomax = window
    c = float(invariant)
    if c <= 0:
        raise ValueError("the one-sheeted family has positive invariant")
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    out = []
    for h in h_list:
        z = np.linspace(-zmax, zmax, n_z)
        rho = np.sqrt(h * h * c + z * z)
        keep = rho <= rhomax
        z, rho = z[keep], rho[keep]
        pts = np.stack(
            [
                np.outer(rho, np.cos(theta)).ravel(),
                np.outer(rho, np.sin(theta)).ravel(),
                np.outer(z, np.ones(n_theta)).ravel(),
            ],
            axis=-1,
        )
        dist = np.abs(rho - np.abs(z)) / np.sqrt(2.0)
        out.append(NilconeStep(float(h), pts, float(np.max(dist))))
    return out


# ---------------------------------------------------------------------------
# regularity of restricted elements


def _eigen_clusters(m, tol):
    vals = np.linalg.eigvals(m)
    clusters = []
    for v in vals:
        for cl in clusters:
            if abs(v - cl[0]) <= tol:
                cl.append(v)
                break
        else:
            clusters.append([v])
    return [(np.mean(cl), len(cl)) for cl in clusters]


def regular_test(pair, x) -> bool:
    """Whether x restricts to a regular element for the pair's geometry.

    General linear type: every geometric eigenspace on the plus space is
    one-dimensional.  Orthogonal/unitary type: nonzero-eigenvalue
    eigenspaces (automatically isotropic) are one-dimensional and the
    kernel is at most two-dimensional.
    """
    m = np.asarray(pair.plus_matrix(x), dtype=complex)
    scale = max(1.0, float(np.max(np.abs(m))))
    tol = 1e-8 * scale
    clusters = _eigen_clusters(m, tol)
    centers = [c for c, _ in clusters]
    if len(centers) > 1:
        gaps = [abs(a - b) for i, a in enumerate(centers) for b in centers[i + 1 :]]
        if min(gaps) < 10 * tol:
            warnings.warn("eigenvalue clusters nearly merge; regularity is ill-conditioned",
                          RuntimeWarning, stacklevel=2)
    dim = m.shape[0]
    for center, _ in clusters:
        null_dim = int(np.sum(np.linalg.svd(m - center * np.eye(dim), compute_uv=False) < tol * 10))
        if pair.kind == "general_linear":
            if null_dim > 1:
                return False
        else:
            if abs(center) <= tol and null_dim > 2:
                return False
            if abs(center) > tol and null_dim > 1:
                return False
    return True
