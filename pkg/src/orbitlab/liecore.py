"""Lie algebras, matrix representations, and the exponential-chart toolkit.

Every algebra in the catalog carries a declared orthonormal basis: coordinates
on the algebra and on its dual are taken in that basis, and all norms, radii
and measures downstream refer to it.  The literal trace form of the matrix
embedding is kept separately (``invariant_form``) since it is degenerate for
the Heisenberg algebra and merely proportional to the metric elsewhere.

The dual pairing between x in the algebra and xi in the dual is imaginary:
``e(x, xi) = exp(i <x, xi>)`` with the real inner product of coordinate
vectors.  Storage stays real; the imaginary unit appears only inside
exponentials.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

__all__ = [
    "LieAlgebra",
    "FiniteRep",
    "Cutoff",
    "ChartExceededWarning",
    "su2",
    "so3",
    "so_n",
    "u_n",
    "heisenberg",
    "sl2r",
    "abelian",
    "algebra_catalog",
    "rep_catalog",
    "bracket",
    "group_exp",
    "coadjoint",
    "jacobian_j",
    "delta_operator",
    "symmetrize",
    "evaluate_word",
    "spin_matrices",
]

STRUCT_TOL = 1e-12


class ChartExceededWarning(UserWarning):
    """Raised (as a warning) when a point leaves the exponential chart."""


def _jacobi_residual(c: np.ndarray) -> float:
    # [[Xi,Xj],Xk] + cyclic = 0 in structure-constant form
    r = np.einsum("ijm,mkl->ijkl", c, c)
    total = r + np.einsum("jkm,mil->ijkl", c, c) + np.einsum("kim,mjl->ijkl", c, c)
    return float(np.max(np.abs(total))) if total.size else 0.0


@dataclass(frozen=True)
class LieAlgebra:
    """A finite-dimensional real Lie algebra with a fixed orthonormal basis.

    Parameters
    ----------
    name : str
        Catalog identifier.
    basis_labels : tuple of str
        Names of the basis vectors, in coordinate order.
    structure_constants : ndarray, shape (dim, dim, dim)
        c[i, j, k] with [X_i, X_j] = sum_k c[i, j, k] X_k.
    matrix_basis : tuple of ndarray
        A faithful matrix embedding of the basis.
    injectivity_radius : float
        Radius (in the declared norm) inside which the exponential map of the
        associated group is injective; ``inf`` when exp is a diffeomorphism.
    """

    name: str
    basis_labels: tuple
    structure_constants: np.ndarray
    matrix_basis: tuple
    injectivity_radius: float

    def __post_init__(self):
        c = self.structure_constants
        if np.max(np.abs(c + np.transpose(c, (1, 0, 2)))) > STRUCT_TOL:
            raise ValueError(f"{self.name}: structure constants not antisymmetric")
        if _jacobi_residual(c) > STRUCT_TOL:
            raise ValueError(f"{self.name}: Jacobi identity fails")
        for i in range(self.dim):
            for j in range(self.dim):
                comm = self.matrix_basis[i] @ self.matrix_basis[j] - self.matrix_basis[j] @ self.matrix_basis[i]
                target = sum(c[i, j, k] * self.matrix_basis[k] for k in range(self.dim))
                if np.max(np.abs(comm - target)) > STRUCT_TOL:
                    raise ValueError(f"{self.name}: matrix basis does not realize the brackets")

    @property
    def dim(self) -> int:
        return len(self.basis_labels)

    def bracket(self, x, y):
        """[x, y] in coordinates."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dim,) or y.shape != (self.dim,):
            raise ValueError("dimension mismatch")
        return np.einsum("i,j,ijk->k", x, y, self.structure_constants)

    def ad(self, x) -> np.ndarray:
        """Matrix of ad_x = [x, .] acting on coordinates."""
        x = np.asarray(x, dtype=float)
        # (ad_x y)_k = sum_ij x_i y_j c[i,j,k]
        return np.einsum("i,ijk->kj", x, self.structure_constants)

    def matrix(self, x) -> np.ndarray:
        """Embed the coordinate vector x as a matrix."""
        x = np.asarray(x)
        return sum(x[i] * self.matrix_basis[i] for i in range(self.dim))

    def invariant_form(self) -> np.ndarray:
        """Gram matrix tr(X_i X_j) of the embedding (possibly degenerate)."""
        d = self.dim
        g = np.empty((d, d))
        for i in range(d):
            for j in range(d):
                g[i, j] = np.trace(self.matrix_basis[i] @ self.matrix_basis[j]).real
        return g

    @property
    def metric(self) -> np.ndarray:
        """Declared inner product on coordinates (orthonormal basis)."""
        return np.eye(self.dim)

    def group_exp(self, x) -> np.ndarray:
        """exp of the embedded matrix; warns when |x| exceeds the chart."""
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x) > self.injectivity_radius:
            warnings.warn(
                f"{self.name}: |x|={np.linalg.norm(x):.3g} exceeds the injectivity radius",
                ChartExceededWarning,
                stacklevel=2,
            )
        return expm(self.matrix(x))

    def coadjoint(self, g, xi):
        """The dual action: (g . xi)(x) = xi(Ad(g^-1) x), in coordinates.

        ``g`` is a group element in the embedding.  Uses the trace pairing of
        the embedding to pull the conjugation back to coordinates.
        """
        xi = np.asarray(xi, dtype=float)
        ginv = np.linalg.inv(g)
        # Ad(g^{-1}) X_i expanded in the basis, via the dual-basis trace pairing
        gram = self.invariant_form()
        if abs(np.linalg.det(gram)) < 1e-12:
            raise ValueError(f"{self.name}: trace form degenerate; coadjoint undefined this way")
        gram_inv = np.linalg.inv(gram)
        d = self.dim
        admat = np.empty((d, d))
        for i in range(d):
            conj = ginv @ self.matrix_basis[i] @ g
            trs = np.array([np.trace(conj @ self.matrix_basis[k]).real for k in range(d)])
            admat[:, i] = gram_inv @ trs
        return admat.T @ xi

    def jacobian_j(self, x) -> float:
        """j(x) = det((1 - exp(-ad_x))/ad_x), extended by 1 at zero."""
        lam = np.linalg.eigvals(self.ad(x))
        if np.any((np.abs(lam.real) < 1e-9) & (np.abs(np.abs(lam.imag) - 2 * np.pi) < 1e-9)):
            warnings.warn(f"{self.name}: ad eigenvalue at 2*pi*i, chart boundary", ChartExceededWarning, stacklevel=2)
        vals = np.where(np.abs(lam) < 1e-12, 1.0, -np.expm1(-lam) / np.where(np.abs(lam) < 1e-12, 1.0, lam))
        return float(np.prod(vals).real)


# ---------------------------------------------------------------------------
# catalog algebras


def _eps_structure() -> np.ndarray:
    c = np.zeros((3, 3, 3))
    for i, j, k in itertools.permutations(range(3)):
        sign = 1.0 if (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] else -1.0
        c[i, j, k] = sign
    return c


@lru_cache(maxsize=None)
def su2() -> LieAlgebra:
    """su(2) with [X1, X2] = X3 cyclic; X_i = -(i/2) sigma_i."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    basis = tuple(-0.5j * s for s in (sx, sy, sz))
    return LieAlgebra("su2", ("X1", "X2", "X3"), _eps_structure(), basis, 2 * np.pi)


@lru_cache(maxsize=None)
def so3() -> LieAlgebra:
    """so(3) with the rotation generators L_i, same epsilon brackets as su(2)."""
    L1 = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
    L2 = np.array([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], dtype=float)
    L3 = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], dtype=float)
    return LieAlgebra("so3", ("L1", "L2", "L3"), _eps_structure(), (L1, L2, L3), np.pi)


@lru_cache(maxsize=None)
def so_n(n: int) -> LieAlgebra:
    """so(n) with basis L_{kl} = E_kl - E_lk, k < l."""
    if n < 2:
        raise ValueError("so(n) needs n >= 2")
    pairs = [(k, l) for k in range(n) for l in range(k + 1, n)]
    mats = []
    for k, l in pairs:
        m = np.zeros((n, n))
        m[k, l], m[l, k] = 1.0, -1.0
        mats.append(m)
    d = len(pairs)
    c = np.zeros((d, d, d))
    gram = np.array([[np.trace(a @ b) for b in mats] for a in mats])
    gram_inv = np.linalg.inv(gram)
    for i in range(d):
        for j in range(d):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            c[i, j, :] = gram_inv @ np.array([np.trace(comm @ m) for m in mats])
    labels = tuple(f"L{k+1}{l+1}" for k, l in pairs)
    return LieAlgebra(f"so{n}", labels, c, tuple(mats), np.pi)


@lru_cache(maxsize=None)
def u_n(n: int) -> LieAlgebra:
    """u(n): skew-Hermitian matrices, orthonormal under Re tr(X Y-dagger)."""
    mats = []
    labels = []
    for k in range(n):
        m = np.zeros((n, n), dtype=complex)
        m[k, k] = 1j
        mats.append(m)
        labels.append(f"D{k+1}")
    r = 1 / np.sqrt(2)
    for k in range(n):
        for l in range(k + 1, n):
            a = np.zeros((n, n), dtype=complex)
            a[k, l], a[l, k] = r, -r
            mats.append(a)
            labels.append(f"A{k+1}{l+1}")
            s = np.zeros((n, n), dtype=complex)
            s[k, l] = s[l, k] = 1j * r
            mats.append(s)
            labels.append(f"S{k+1}{l+1}")
    d = len(mats)
    gram = np.array([[np.trace(a @ b.conj().T).real for b in mats] for a in mats])
    gram_inv = np.linalg.inv(gram)
    c = np.zeros((d, d, d))
    for i in range(d):
        for j in range(d):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            c[i, j, :] = gram_inv @ np.array([np.trace(comm @ m.conj().T).real for m in mats])
    return LieAlgebra(f"u{n}", tuple(labels), c, tuple(mats), np.pi)


@lru_cache(maxsize=None)
def heisenberg() -> LieAlgebra:
    """Three-dimensional Heisenberg algebra, [X, Y] = Z central."""
    X = np.zeros((3, 3))
    X[0, 1] = 1.0
    Y = np.zeros((3, 3))
    Y[1, 2] = 1.0
    Z = np.zeros((3, 3))
    Z[0, 2] = 1.0
    c = np.zeros((3, 3, 3))
    c[0, 1, 2], c[1, 0, 2] = 1.0, -1.0
    return LieAlgebra("heisenberg", ("X", "Y", "Z"), c, (X, Y, Z), np.inf)


@lru_cache(maxsize=None)
def sl2r() -> LieAlgebra:
    """sl(2, R) in a basis whose invariant is x1^2 + x2^2 - x3^2.

    X3 spans the compact (rotation) direction; orbits of the coadjoint action
    are level sets of the invariant: one-sheeted hyperboloids (> 0), the
    nilpotent cone (= 0), and two-sheeted hyperboloid sheets (< 0).
    """
    X1 = 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]])
    X2 = 0.5 * np.array([[1.0, 0.0], [0.0, -1.0]])
    X3 = 0.5 * np.array([[0.0, 1.0], [-1.0, 0.0]])
    c = np.zeros((3, 3, 3))
    c[0, 1, 2], c[1, 0, 2] = -1.0, 1.0
    c[1, 2, 0], c[2, 1, 0] = 1.0, -1.0
    c[2, 0, 1], c[0, 2, 1] = 1.0, -1.0
    return LieAlgebra("sl2r", ("X1", "X2", "X3"), c, (X1, X2, X3), 2 * np.pi)


@lru_cache(maxsize=None)
def abelian(n: int = 2) -> LieAlgebra:
    """R^n with zero bracket (torus characters toy case)."""
    mats = []
    for k in range(n):
        m = np.zeros((n, n))
        m[k, k] = 1.0
        mats.append(m)
    c = np.zeros((n, n, n))
    return LieAlgebra(f"abelian{n}", tuple(f"T{k+1}" for k in range(n)), c, tuple(mats), np.inf)


def algebra_catalog(name: str, **params) -> LieAlgebra:
    """Look up a catalog algebra by name."""
    table = {
        "su2": su2,
        "so3": so3,
        "so_n": so_n,
        "u_n": u_n,
        "heisenberg": heisenberg,
        "sl2r": sl2r,
        "abelian": abelian,
    }
    if name not in table:
        raise KeyError(f"unknown algebra {name!r}")
    return table[name](**params)


def _smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    lo = np.where(u > 0.0, u, 1.0)
    hi = np.where(u < 1.0, 1.0 - u, 1.0)
    f = np.where(u > 0.0, np.exp(-1.0 / lo), 0.0)
    g = np.where(u < 1.0, np.exp(-1.0 / hi), 0.0)
    return f / (f + g)


@dataclass(frozen=True)
class Cutoff:
    """Smooth, even, radial bump: identically 1 on |x| <= inner_radius and
    identically 0 on |x| >= outer_radius, joined by an exp(-1/u) smoothstep.
    """

    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if not 0.0 < self.inner_radius < self.outer_radius:
            raise ValueError("need 0 < inner_radius < outer_radius")

    def __call__(self, x):
        """Evaluate at points of shape (..., n) or at scalar radii."""
        x = np.asarray(x, dtype=float)
        r = np.abs(x) if x.ndim == 0 else np.linalg.norm(x, axis=-1)
        return self.profile(r)

    def profile(self, r):
        """Radial profile as a function of |x|."""
        r = np.asarray(r, dtype=float)
        u = (self.outer_radius - r) / (self.outer_radius - self.inner_radius)
        return _smoothstep(u)


# ---------------------------------------------------------------------------
# representations


def spin_matrices(j) -> tuple:
    """Standard spin-j matrices (J1, J2, J3) with [J1, J2] = i J3.

    J3 = diag(j, j-1, ..., -j); the ladder entries follow the usual
    sqrt(j(j+1) - m(m+1)) rule.
    """
    twoj = round(2 * j)
    if abs(2 * j - twoj) > 1e-12 or twoj < 0:
        raise ValueError("spin must be a nonnegative half-integer")
    dim = twoj + 1
    m = j - np.arange(dim)
    jp = np.zeros((dim, dim))
    for k in range(dim - 1):
        jp[k, k + 1] = np.sqrt(j * (j + 1) - m[k + 1] * (m[k + 1] + 1))
    jm = jp.T
    J1 = 0.5 * (jp + jm)
    J2 = -0.5j * (jp - jm)
    J3 = np.diag(m)
    return J1.astype(complex), J2.astype(complex), J3.astype(complex)


@dataclass(frozen=True)
class FiniteRep:
    """A finite-dimensional unitary representation given by its generators.

    ``generators[i]`` is the skew-Hermitian matrix pi(X_i).  When
    ``weight_values`` is set, the standard basis diagonalizes the designated
    torus generator with pi(X_torus) e_k = i * weight_values[k] * e_k.
    """

    algebra: LieAlgebra
    label: str
    generators: tuple
    weight_values: tuple = None
    torus_index: int = 2
    exact_commutators: bool = True

    def __post_init__(self):
        if self.exact_commutators:
            res = self.verification_residuals()
            worst = max(res.values())
            if worst > 1e-10:
                raise ValueError(f"{self.label}: generator invariants fail ({worst:.2e})")

    @property
    def dim_rep(self) -> int:
        return self.generators[0].shape[0]

    def verification_residuals(self) -> dict:
        """Skew-Hermiticity and commutator residuals of the generators."""
        skew = max(np.max(np.abs(g + g.conj().T)) for g in self.generators)
        c = self.algebra.structure_constants
        comm = 0.0
        for i in range(self.algebra.dim):
            for j in range(self.algebra.dim):
                lhs = self.generators[i] @ self.generators[j] - self.generators[j] @ self.generators[i]
                rhs = sum(c[i, j, k] * self.generators[k] for k in range(self.algebra.dim))
                comm = max(comm, np.max(np.abs(lhs - rhs)))
        return {"skew_hermitian": float(skew), "commutators": float(comm)}

    def pi(self, x) -> np.ndarray:
        """The algebra action pi(x) = sum x_i pi(X_i)."""
        x = np.asarray(x)
        return sum(x[i] * self.generators[i] for i in range(self.algebra.dim))

    def pi_exp(self, x) -> np.ndarray:
        """pi(exp x) as a unitary matrix."""
        return expm(self.pi(x))

    def weight_projector(self, n) -> np.ndarray:
        """Orthogonal projector onto the weight-n eigenspace of the torus."""
        if self.weight_values is None:
            raise ValueError("representation has no weight basis")
        mask = np.array([abs(w - n) < 1e-9 for w in self.weight_values], dtype=float)
        return np.diag(mask).astype(complex)


def _su2_spin_rep(j) -> FiniteRep:
    J1, J2, J3 = spin_matrices(j)
    gens = (1j * J1, -1j * J2, 1j * J3)
    weights = tuple(float(j - k) for k in range(round(2 * j) + 1))
    return FiniteRep(su2(), f"su2_spin({j})", gens, weights)


def _so3_l_rep(l: int) -> FiniteRep:
    if l != round(l):
        raise ValueError("so3_l takes integer l")
    if l == 1:
        gens = tuple(m.astype(complex) for m in so3().matrix_basis)
        # eigenbasis of L3: weights (1, 0, -1)
        v = np.array([[-1, 0, 1], [-1j, 0, -1j], [0, np.sqrt(2), 0]], dtype=complex) / np.sqrt(2)
        gens = tuple(v.conj().T @ g @ v for g in gens)
        return FiniteRep(so3(), "so3_l(1)", gens, (1.0, 0.0, -1.0))
    J1, J2, J3 = spin_matrices(l)
    gens = (1j * J1, -1j * J2, 1j * J3)
    weights = tuple(float(l - k) for k in range(2 * l + 1))
    return FiniteRep(so3(), f"so3_l({l})", gens, weights)


def _soN_std_rep(n: int) -> FiniteRep:
    alg = so_n(n)
    return FiniteRep(alg, f"soN_std({n})", tuple(m.astype(complex) for m in alg.matrix_basis))


def _uN_std_rep(n: int) -> FiniteRep:
    alg = u_n(n)
    return FiniteRep(alg, f"uN_std({n})", tuple(m.copy() for m in alg.matrix_basis))


def _heisenberg_schrodinger_rep(size: int) -> FiniteRep:
    """Truncated Schrodinger representation in the oscillator number basis.

    No finite matrices satisfy [Q, P] = i exactly (the center is traceless in
    finite dimensions); the truncation defect lives in the corner entry, so
    the commutator invariant is verified on the leading block only and the
    rep is flagged ``exact_commutators=False``.
    """
    if size < 2:
        raise ValueError("need size >= 2")
    a = np.diag(np.sqrt(np.arange(1, size)), 1).astype(complex)
    q = (a + a.conj().T) / np.sqrt(2)
    p = 1j * (a.conj().T - a) / np.sqrt(2)
    gens = (1j * p, 1j * q, 1j * np.eye(size, dtype=complex))
    return FiniteRep(heisenberg(), f"heisenberg_schrodinger_truncated({size})", gens, exact_commutators=False)


def rep_catalog(name: str, **params) -> FiniteRep:
    """Construct a catalog representation.

    Names: ``su2_spin(j)``, ``so3_l(l)``, ``soN_std(n)``, ``uN_std(n)``,
    ``heisenberg_schrodinger_truncated(size)``.
    """
    table = {
        "su2_spin": _su2_spin_rep,
        "so3_l": _so3_l_rep,
        "soN_std": _soN_std_rep,
        "uN_std": _uN_std_rep,
        "heisenberg_schrodinger_truncated": _heisenberg_schrodinger_rep,
    }
    if name not in table:
        raise KeyError(f"unknown representation {name!r}")
    return table[name](**params)


# ---------------------------------------------------------------------------
# free functions mirroring the method API


def bracket(algebra: LieAlgebra, x, y):
    return algebra.bracket(x, y)


def group_exp(algebra: LieAlgebra, x):
    return algebra.group_exp(x)


def coadjoint(algebra: LieAlgebra, g, xi):
    return algebra.coadjoint(g, xi)


def jacobian_j(algebra: LieAlgebra, x):
    return algebra.jacobian_j(x)


def delta_operator(rep: FiniteRep) -> np.ndarray:
    """1 - sum_i pi(X_i)^2; Hermitian, eigenvalues >= 1."""
    d = rep.dim_rep
    out = np.eye(d, dtype=complex)
    for g in rep.generators:
        out -= g @ g
    return out


def symmetrize(p: dict) -> list:
    """Symmetrize a noncommutative polynomial given as {word: coefficient}.

    A word is a tuple of generator indices; the result lists
    (coefficient, word) pairs realizing the average over permutations of each
    monomial.
    """
    out = {}
    for word, coeff in p.items():
        word = tuple(word)
        arrangements = list(itertools.permutations(word))
        for arr in arrangements:
            out[arr] = out.get(arr, 0.0) + coeff / len(arrangements)
    return [(c, w) for w, c in sorted(out.items()) if c != 0]


def evaluate_word(rep: FiniteRep, word) -> np.ndarray:
    """pi(X_{i1} ... X_{ik}) as a matrix product (empty word = identity)."""
    out = np.eye(rep.dim_rep, dtype=complex)
    for i in word:
        out = out @ rep.generators[i]
    return out


def evaluate_symmetrized(rep: FiniteRep, p: dict) -> np.ndarray:
    """pi(sym(p)) for a noncommutative polynomial {word: coefficient}."""
    out = np.zeros((rep.dim_rep, rep.dim_rep), dtype=complex)
    for coeff, word in symmetrize(p):
        out += coeff * evaluate_word(rep, word)
    return out
