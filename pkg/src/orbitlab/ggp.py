"""Branching pairs (G, H), spectral stability, fibers as H-torsors, and the
slice disintegration of orbit measures.

Three independent characterizations of stability are implemented: disjoint
eigenvalue multisets, absence of a one-parameter-subgroup witness, and
cyclicity of the distinguished vector.  The unitary case is modeled in split
form, where the group becomes a general linear group on the plus factor and
the minus factor carries the negated transpose.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np
import sympy as sp
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm
from scipy.optimize import least_squares

__all__ = [
    "GGPPair",
    "EigenMultiset",
    "StabilityReport",
    "HmWitness",
    "TorsorReport",
    "ggp_catalog",
    "linear_pair",
    "orthogonal_pair",
    "unitary_split_pair",
    "restrict_H",
    "ev",
    "is_stable",
    "is_stable_pair",
    "satake_view",
    "hm_witness",
    "cyclic_criterion",
    "fiber_basepoint",
    "torsor_check",
    "orbital_integral",
    "affine_measure",
    "disintegration_report",
    "disintegration_residual",
    "random_element",
    "plant_unstable",
    "stability_sweep",
]

REL_TOL = 1e-8
BORDER_BAND = 10.0


@dataclass(frozen=True)
class GGPPair:
    """A branching pair: the isometry (or general linear) algebra of V and
    the subalgebra fixing a distinguished anisotropic line.

    ``form`` is the Gram matrix on V (split Gram in the unitary case, a
    bookkeeping identity in the linear case).  ``proj_H`` projects onto V_H;
    ``h_indices`` are the coordinates spanning V_H.  ``plus_indices`` select
    the factor V+ on which eigenvalue multisets are read.
    """

    case: str
    n: int
    dim_V: int
    ring: str
    form: np.ndarray
    e: np.ndarray
    proj_H: np.ndarray
    h_indices: tuple
    plus_indices: tuple
    g_basis: tuple
    h_basis: tuple
    label: str

    def __post_init__(self):
        f = self.form
        ee = float(self.e @ f @ self.e)
        if abs(ee) < 1e-12:
            raise ValueError("distinguished vector is not anisotropic")
        E = self.proj_H
        if np.max(np.abs(E @ E - E)) > 1e-12 or np.max(np.abs(E @ self.e)) > 1e-12:
            raise ValueError("projector invariants fail")
        if np.max(np.abs(f @ E - E.T @ f)) > 1e-12:
            raise ValueError("projector not self-adjoint for the form")
        for m in self.h_basis:
            if np.max(np.abs(m @ E - E @ m)) > 1e-12 or np.max(np.abs(m @ self.e)) > 1e-12:
                raise ValueError("subalgebra basis must commute with E and kill e")
        if self.case in ("orthogonal", "unitary"):
            for m in self.g_basis:
                if np.max(np.abs(m.T @ f + f @ m)) > 1e-12:
                    raise ValueError("basis not skew-adjoint for the form")
        k1_rank = 2 if self.case == "unitary" else 1
        if round(float(np.trace(E))) != self.dim_V - k1_rank:
            raise ValueError("V_H does not split off the k1-span of e")

    # regularity interface, consumed by orbits.regular_test
    @property
    def kind(self) -> str:
        return "orthogonal" if self.case == "orthogonal" else "general_linear"

    def plus_matrix(self, x) -> np.ndarray:
        x = np.asarray(x)
        return x[np.ix_(self.plus_indices, self.plus_indices)]

    @property
    def h_view(self):
        """The same regularity interface for restricted elements on V_H."""
        plus_h = tuple(i for i, k in enumerate(self.h_indices) if k in self.plus_indices)
        return _SubView(self.kind, plus_h)

    def to_coords(self, x) -> np.ndarray:
        basis = np.stack([m.ravel() for m in self.g_basis], axis=1)
        c, *_ = np.linalg.lstsq(basis, np.asarray(x).ravel(), rcond=None)
        return c.real

    def from_coords(self, c) -> np.ndarray:
        return sum(ci * m for ci, m in zip(np.asarray(c), self.g_basis))


@dataclass(frozen=True)
class _SubView:
    kind: str
    plus: tuple

    def plus_matrix(self, x):
        x = np.asarray(x)
        return x[np.ix_(self.plus, self.plus)]


def _basis_gl(n):
    out = []
    for i in range(n):
        for j in range(n):
            m = np.zeros((n, n))
            m[i, j] = 1.0
            out.append(m)
    return tuple(out)


def _basis_so(n):
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n))
            m[i, j] = 1.0
            m[j, i] = -1.0
            out.append(m)
    return tuple(out)


def _embed(mats, idx, dim):
    idx = list(idx)
    out = []
    for m in mats:
        big = np.zeros((dim, dim))
        big[np.ix_(idx, idx)] = m
        out.append(big)
    return tuple(out)


def linear_pair(n: int) -> GGPPair:
    """gl(n) over gl(n-1): V = k^n, the subgroup fixes the last coordinate."""
    e = np.zeros(n)
    e[-1] = 1.0
    E = np.diag(np.r_[np.ones(n - 1), 0.0])
    return GGPPair(
        case="linear", n=n, dim_V=n, ring="real", form=np.eye(n), e=e, proj_H=E,
        h_indices=tuple(range(n - 1)), plus_indices=tuple(range(n)),
        g_basis=_basis_gl(n), h_basis=_embed(_basis_gl(n - 1), range(n - 1), n),
        label=f"gl({n})>gl({n - 1})",
    )


def orthogonal_pair(n: int) -> GGPPair:
    """so(n) over so(n-1) for the Euclidean form; e is the last basis vector."""
    e = np.zeros(n)
    e[-1] = 1.0
    E = np.diag(np.r_[np.ones(n - 1), 0.0])
    return GGPPair(
        case="orthogonal", n=n, dim_V=n, ring="real", form=np.eye(n), e=e, proj_H=E,
        h_indices=tuple(range(n - 1)), plus_indices=tuple(range(n)),
        g_basis=_basis_so(n), h_basis=_embed(_basis_so(n - 1), range(n - 1), n),
        label=f"so({n})>so({n - 1})",
    )


def unitary_split_pair(n: int) -> GGPPair:
    """u(n) over u(n-1) in split form: V = V+ + V-, elements diag(A, -A^T).

    These are skew-adjoint for the split Gram [[0, I], [I, 0]]; the k1-span
    of e is two-dimensional, so V_H drops both final coordinates.
    """
    d = 2 * n
    f = np.zeros((d, d))
    f[:n, n:] = np.eye(n)
    f[n:, :n] = np.eye(n)
    e = np.zeros(d)
    e[n - 1] = 1.0
    e[d - 1] = 1.0
    diag = np.ones(d)
    diag[n - 1] = 0.0
    diag[d - 1] = 0.0
    E = np.diag(diag)
    h_idx = tuple(i for i in range(d) if diag[i] == 1.0)

    def lift(mats, size):
        out = []
        for a in mats:
            big = np.zeros((d, d))
            big[:size, :size] = a
            big[n:n + size, n:n + size] = -a.T
            out.append(big)
        return tuple(out)

    return GGPPair(
        case="unitary", n=n, dim_V=d, ring="split", form=f, e=e, proj_H=E,
        h_indices=h_idx, plus_indices=tuple(range(n)),
        g_basis=lift(_basis_gl(n), n), h_basis=lift(_basis_gl(n - 1), n - 1),
        label=f"u({n})>u({n - 1}) split",
    )


def ggp_catalog(name: str) -> GGPPair:
    table = {
        "gl3_gl2": lambda: linear_pair(3),
        "so4_so3": lambda: orthogonal_pair(4),
        "so3_so2": lambda: orthogonal_pair(3),
        "u2_u1": lambda: unitary_split_pair(2),
    }
    if name not in table:
        raise KeyError(f"unknown pair {name!r}")
    return table[name]()


# ---------------------------------------------------------------------------
# restriction and eigenvalue multisets


def _check_skew(pair: GGPPair, x):
    if pair.case == "linear":
        return
    res = np.max(np.abs(x.T @ pair.form + pair.form @ x))
    if res > 1e-10 * max(1.0, float(np.max(np.abs(x)))):
        raise ValueError(f"element not skew-adjoint for the form ({res:.2e})")


def restrict_H(pair: GGPPair, x) -> np.ndarray:
    """E x E compressed to the V_H coordinates."""
    x = np.asarray(x, dtype=float)
    _check_skew(pair, x)
    y = pair.proj_H @ x @ pair.proj_H
    return y[np.ix_(pair.h_indices, pair.h_indices)]


@dataclass(frozen=True)
class EigenMultiset:
    """Eigenvalues with multiplicity on the plus space, one zero dropped in
    the odd orthogonal case."""

    entries: np.ndarray
    case: str

    def __len__(self):
        return len(self.entries)


def _sorted(vals):
    return np.asarray(sorted(vals, key=lambda z: (round(z.real, 10), round(z.imag, 10))))


def ev(pair: GGPPair, m, space: str = "g") -> EigenMultiset:
    """Eigenvalue multiset of an element (space='g') or of a restricted
    element on V_H (space='h')."""
    m = np.asarray(m, dtype=complex)
    if space == "g":
        plus = pair.plus_indices
        full_dim = pair.dim_V
    else:
        plus = tuple(i for i, k in enumerate(pair.h_indices) if k in pair.plus_indices)
        full_dim = len(pair.h_indices)
    if m.shape != (full_dim, full_dim):
        raise ValueError(f"expected a {full_dim}x{full_dim} matrix for space {space!r}")
    block = m[np.ix_(plus, plus)]
    vals = np.linalg.eigvals(block)
    if pair.case == "orthogonal" and block.shape[0] % 2 == 1:
        vals = np.delete(vals, int(np.argmin(np.abs(vals))))
    return EigenMultiset(_sorted(vals), pair.case)


def _entries(lam) -> np.ndarray:
    if isinstance(lam, EigenMultiset):
        return lam.entries
    return np.atleast_1d(np.asarray(lam, dtype=complex)).ravel()


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    matches: tuple
    min_gap: float
    scale: float
    borderline: bool

    def __bool__(self):
        return self.stable


def _intersect(lam, mu) -> StabilityReport:
    lam, mu = _entries(lam), _entries(mu)
    if len(lam) == 0 or len(mu) == 0:
        return StabilityReport(True, (), np.inf, 1.0, False)
    scale = max(1.0, float(np.max(np.abs(lam))), float(np.max(np.abs(mu))))
    gaps = np.abs(lam[:, None] - mu[None, :])
    min_gap = float(np.min(gaps))
    hits = tuple(
        (complex(lam[i]), complex(mu[j])) for i, j in zip(*np.where(gaps <= REL_TOL * scale))
    )
    borderline = REL_TOL * scale < min_gap <= BORDER_BAND * REL_TOL * scale
    if borderline:
        warnings.warn("eigenvalue gap inside the borderline band", RuntimeWarning, stacklevel=3)
    return StabilityReport(len(hits) == 0, hits, min_gap, scale, borderline)


def is_stable(pair: GGPPair, x, exact: bool = False) -> StabilityReport:
    """Disjointness of ev(x) and ev(x_H); the certificate lists collisions.

    ``exact=True`` (linear case, rational entries) decides through the gcd
    of the two characteristic polynomials instead of float eigenvalues.
    """
    x = np.asarray(x, dtype=float)
    if exact:
        if pair.case != "linear":
            raise ValueError("exact mode implemented for the linear case")
        xm = sp.Matrix([[sp.nsimplify(v, rational=True) for v in row] for row in x])
        xh = xm[: pair.n - 1, : pair.n - 1]
        t = sp.Symbol("t")
        g = sp.gcd(xm.charpoly(t).as_expr(), xh.charpoly(t).as_expr())
        stable = sp.degree(g, t) == 0
        return StabilityReport(bool(stable), (), np.inf if stable else 0.0, 1.0, False)
    return _intersect(ev(pair, x), ev(pair, restrict_H(pair, x), space="h"))


def is_stable_pair(lam, mu) -> StabilityReport:
    """Disjointness of two invariant multisets."""
    return _intersect(lam, mu)


def satake_view(lam, mu, unitary: bool = False):
    """All pairwise sums of ev(lam) with ev(-mu), doubled with both signs in
    the unitary case; the pair is stable exactly when 0 is absent."""
    lam, mu = _entries(lam), _entries(mu)
    sums = (lam[:, None] - mu[None, :]).ravel()
    if unitary:
        sums = np.concatenate([sums, -sums])
    scale = max(1.0, float(np.max(np.abs(sums))) if len(sums) else 1.0)
    verdict = bool(np.all(np.abs(sums) > REL_TOL * scale))
    return _sorted(sums), verdict


# ---------------------------------------------------------------------------
# one-parameter-subgroup witnesses


@dataclass(frozen=True)
class HmWitness:
    eigenvalue: complex
    vector: np.ndarray
    side: str
    filtration_residual: float
    weights: tuple


def _model(pair: GGPPair, x):
    """Complexified model space where the isotropy arguments run.

    The linear case doubles to V + V* with the split pairing, under which
    the general linear group becomes an isometry group; the other cases
    already carry a form.
    """
    x = np.asarray(x, dtype=complex)
    if pair.case == "linear":
        n = pair.n
        xm = np.block([[x, np.zeros((n, n))], [np.zeros((n, n)), -x.T]])
        f = np.zeros((2 * n, 2 * n))
        f[:n, n:] = np.eye(n)
        f[n:, :n] = np.eye(n)
        maskH = np.r_[np.arange(n - 1), np.arange(n, 2 * n - 1)]
        return xm, f, maskH, np.arange(n), np.arange(n, 2 * n)
    maskH = np.asarray(pair.h_indices)
    if pair.case == "unitary":
        n = pair.n
        return x, pair.form.astype(complex), maskH, np.arange(n), np.arange(n, 2 * n)
    allidx = np.arange(pair.dim_V)
    return x, pair.form.astype(complex), maskH, allidx, allidx


def _null_space(m, tol=1e-9):
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    u, s, vh = np.linalg.svd(m)
    top = max(1.0, s[0] if len(s) else 1.0)
    rank = int(np.sum(s > tol * top))
    return vh[rank:].conj().T


def _isotropic_in(basis, f):
    """An isotropic vector in the span of the given columns, or None."""
    if basis.shape[1] == 0:
        return None
    g = basis.T @ f @ basis
    if abs(g[0, 0]) < 1e-10:
        return basis[:, 0]
    if basis.shape[1] == 1:
        return None
    # v = b0 + t b1 solves g11 t^2 + 2 g01 t + g00 = 0
    if abs(g[1, 1]) < 1e-14:
        if abs(g[0, 1]) < 1e-14:
            return None
        roots = [-g[0, 0] / (2 * g[0, 1])]
    else:
        roots = np.roots([g[1, 1], 2 * g[0, 1], g[0, 0]])
    v = basis[:, 0] + roots[0] * basis[:, 1]
    return v / np.linalg.norm(v)


def _witness_on_side(xm, f, maskH, side_idx, c):
    """Isotropic eigenvector of xm with eigenvalue c supported on the
    intersection of V_H with the given side."""
    dim = xm.shape[0]
    eig_basis = _null_space(xm - c * np.eye(dim))
    if eig_basis.shape[1] == 0:
        return None
    allowed = np.intersect1d(maskH, side_idx)
    forbidden = np.setdiff1d(np.arange(dim), allowed)
    if len(forbidden):
        combo = _null_space(eig_basis[forbidden, :])
        cand = eig_basis @ combo
    else:
        cand = eig_basis
    if cand.shape[1] == 0:
        return None
    return _isotropic_in(cand, f)


def _filtration_residual(xm, f, maskH, v1):
    """Residual of x-triangularity in the grading k v1 + W + k v2.

    v2 is an isotropic partner in V_H with pairing 1; W is the bilinear
    orthocomplement of the hyperbolic plane.
    """
    dim = xm.shape[0]
    cands = np.eye(dim, dtype=complex)[:, maskH]
    pairings = v1 @ f @ cands
    k = int(np.argmax(np.abs(pairings)))
    v2 = cands[:, k] / complex(pairings[k])
    v2 = v2 - 0.5 * complex(v2 @ f @ v2) * v1
    w_basis = _null_space(np.stack([f @ v1, f @ v2]))
    s = np.concatenate([v1[:, None], w_basis, v2[:, None]], axis=1)
    m = np.linalg.solve(s, xm @ s)
    scale = max(1.0, float(np.max(np.abs(m))))
    res = max(float(np.max(np.abs(m[1:, 0]))), float(np.max(np.abs(m[-1, 1:-1]))))
    weights = (1,) + (0,) * w_basis.shape[1] + (-1,)
    return res / scale, weights


def hm_witness(pair: GGPPair, x):
    """A one-parameter-subgroup witness of instability, or None if stable.

    Returns the isotropic eigenvector (model coordinates), its side, and
    the verified filtration grading; raises if the element is unstable but
    no witness can be built, since the two notions are equivalent.
    """
    report = is_stable(pair, x)
    if report.stable:
        return None
    xm, f, maskH, plus, minus = _model(pair, x)
    for c, _ in report.matches:
        for side_idx, val, side in ((plus, c, "+"), (minus, -c, "-")):
            v = _witness_on_side(xm, f, maskH, side_idx, val)
            if v is None:
                continue
            res, weights = _filtration_residual(xm, f, maskH, v)
            if res < 1e-7:
                return HmWitness(complex(val), v, side, res, weights)
    raise ArithmeticError("unstable element without a witness: criteria disagree")


# ---------------------------------------------------------------------------
# cyclicity


def _krylov(mat, vec, dim):
    cols = [np.asarray(vec, dtype=float)]
    for _ in range(dim - 1):
        cols.append(mat @ cols[-1])
    return np.stack(cols, axis=1)


def cyclic_criterion(pair: GGPPair, x, tol: float = 1e-9) -> bool:
    """Whether the distinguished vector generates enough of V to force
    stability: full Krylov span on both factors (linear and split cases),
    or a nondegenerate span of codimension at most one (orthogonal)."""
    x = np.asarray(x, dtype=float)

    def rank_of(m):
        s = np.linalg.svd(m, compute_uv=False)
        top = max(1.0, s[0] if len(s) else 1.0)
        if len(s) and np.any((s > tol * top * 0.1) & (s < tol * top * 10)):
            warnings.warn("Krylov rank near threshold", RuntimeWarning, stacklevel=3)
        return int(np.sum(s > tol * top))

    if pair.case in ("linear", "unitary"):
        n = pair.n
        a = x[:n, :n] if pair.case == "unitary" else x
        e_plus = pair.e[:n] if pair.case == "unitary" else pair.e
        e_minus = pair.e[n:] if pair.case == "unitary" else pair.e
        full_plus = rank_of(_krylov(a, e_plus, n)) == n
        full_minus = rank_of(_krylov(-a.T, e_minus, n)) == n
        return full_plus and full_minus
    k = _krylov(x, pair.e, pair.dim_V)
    u, s, _ = np.linalg.svd(k)
    r = rank_of(k)
    if r < pair.dim_V - 1:
        return False
    span = u[:, :r]
    gram = span.T @ pair.form @ span
    return bool(np.min(np.abs(np.linalg.eigvalsh(gram))) > tol)


# ---------------------------------------------------------------------------
# invariant coordinates and fibers


def _so3_vector_matrix(w):
    """The rotation generator v -> w x v."""
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def _so3_coords(m):
    m = np.asarray(m)
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def _so3_slice_params(lam, mu):
    lam = _entries(lam)
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))
    if lam.size == 1:
        r = float(abs(lam[0]))
    else:
        r = float(np.max(np.abs(lam.imag)))
    if mu.size == 1 and abs(complex(mu[0]).imag) < 1e-14:
        z = float(complex(mu[0]).real)
    else:
        z = float(np.max(mu.imag))
    return r, z


def _pair_multisets(pair: GGPPair, lam, mu):
    """Multisets for a stability check, accepting the rotation pair's scalar
    invariant coordinates (radius, signed height)."""
    if pair.case == "orthogonal" and pair.dim_V == 3:
        r, z = _so3_slice_params(lam, mu)
        return np.array([1j * r, -1j * r]), np.array([1j * z, -1j * z])
    return _entries(lam), _entries(mu)


def _target_polys(pair: GGPPair, lam, mu):
    """Characteristic-polynomial targets on the plus blocks, zeros restored
    where the multiset convention dropped them."""
    lam_e, mu_e = _pair_multisets(pair, lam, mu)
    if pair.case == "unitary":
        dim_p, dim_q = pair.n, pair.n - 1
    elif pair.case == "linear":
        dim_p, dim_q = pair.n, pair.n - 1
    else:
        dim_p, dim_q = pair.dim_V, pair.dim_V - 1
    lam_full = np.r_[lam_e, np.zeros(dim_p - len(lam_e))]
    mu_full = np.r_[mu_e, np.zeros(dim_q - len(mu_e))]
    p = np.real_if_close(np.poly(lam_full), tol=1e6)
    q = np.real_if_close(np.poly(mu_full), tol=1e6)
    return p, q


def _invariant_polys(pair: GGPPair, x):
    x = np.asarray(x, dtype=float)
    xh = restrict_H(pair, x)
    if pair.case == "unitary":
        n = pair.n
        return np.poly(x[:n, :n]), np.poly(xh[: n - 1, : n - 1])
    return np.poly(x), np.poly(xh)


def _invariant_residual(pair, x, lam, mu) -> float:
    p, q = _target_polys(pair, lam, mu)
    got_p, got_q = _invariant_polys(pair, x)
    return float(max(np.max(np.abs(got_p - p)), np.max(np.abs(got_q - q))))


def _bordered_companion(pair: GGPPair, lam, mu):
    """Exact fiber point for the linear and split cases: x restricted to V_H
    is the companion matrix of mu, bordered so charpoly(x) matches lam."""
    lam_e, mu_e = _entries(lam), _entries(mu)
    n = pair.n
    m = n - 1
    p = np.poly(lam_e)
    q = np.poly(mu_e)
    d = complex(np.sum(lam_e) - np.sum(mu_e))
    c_poly = np.polysub(np.polymul(q, [1.0, -d]), p)
    c_poly = np.r_[np.zeros(max(0, (m + 1) - len(c_poly)), dtype=complex), c_poly]
    head = c_poly[: len(c_poly) - m]
    if len(head) and np.max(np.abs(head)) > 1e-9 * max(1.0, float(np.max(np.abs(p)))):
        return None
    cl = c_poly[-m:]
    a = np.zeros((n, n), dtype=complex)
    comp = np.zeros((m, m), dtype=complex)
    if m > 1:
        comp[np.arange(m - 1), np.arange(1, m)] = 1.0
    comp[m - 1, :] = -q[1:][::-1]
    a[:m, :m] = comp
    a[m - 1, n - 1] = 1.0
    a[n - 1, :m] = cl[::-1]
    a[n - 1, n - 1] = d
    if np.max(np.abs(a.imag)) > 1e-12 * max(1.0, float(np.max(np.abs(a.real)))):
        return None
    a = a.real
    return a if pair.case == "linear" else _split_lift(pair, a)


def _split_lift(pair, a):
    n = pair.n
    x = np.zeros((2 * n, 2 * n))
    x[:n, :n] = a
    x[n:, n:] = -a.T
    return x


def fiber_basepoint(pair: GGPPair, lam, mu, seed: int = 0):
    """A point x with invariants ([x], [x_H]) = (lam, mu), None when the
    real fiber is provably empty (closed-form case), or 'undetermined'.

    The rotation pair uses the sphere slice; linear and split cases use an
    exact bordered companion form; anything else falls back to least
    squares on the invariant residuals.
    """
    lam_e, mu_e = _pair_multisets(pair, lam, mu)
    if not is_stable_pair(lam_e, mu_e).stable:
        raise ValueError("fiber construction requires a stable pair of invariants")
    if pair.case == "orthogonal" and pair.dim_V == 3:
        r, z = _so3_slice_params(lam, mu)
        if abs(z) > r:
            return None
        return _so3_vector_matrix([np.sqrt(r * r - z * z), 0.0, z])
    if pair.case in ("linear", "unitary"):
        x = _bordered_companion(pair, lam_e, mu_e)
        if x is not None and _invariant_residual(pair, x, lam, mu) <= 1e-8:
            return x
        return "undetermined"
    return _fiber_solve(pair, lam, mu, seed)


def _fiber_solve(pair: GGPPair, lam, mu, seed, starts: int = 20):
    p, q = _target_polys(pair, lam, mu)

    def resid(c):
        x = pair.from_coords(c)
        got_p, got_q = _invariant_polys(pair, x)
        rp = got_p - p
        rq = got_q - q
        return np.concatenate([rp.real, rp.imag, rq.real, rq.imag])

    rng = np.random.default_rng(seed)
    dim = len(pair.g_basis)
    for _ in range(starts):
        sol = least_squares(resid, rng.normal(size=dim), method="lm", xtol=1e-15)
        if np.max(np.abs(resid(sol.x))) < 1e-9:
            return pair.from_coords(sol.x)
    return "undetermined"


def _h_exp(pair: GGPPair, c, flip: bool = False):
    h = expm(sum(ci * m for ci, m in zip(np.atleast_1d(c), pair.h_basis)))
    if flip:
        # representative of the second component of the subgroup
        j = np.eye(pair.dim_V)
        j[pair.h_indices[0], pair.h_indices[0]] = -1.0
        if pair.case == "unitary":
            k = pair.h_indices[len(pair.h_indices) // 2]
            j[k, k] = -1.0
        h = j @ h
    return h


def orbital_integral(pair: GGPPair, lam, mu, a, n_nodes: int = 64, basepoint=None):
    """Fiber integral of a symbol against unit-mass Haar on compact H, read
    in the pair's coordinate chart; zero by convention for unstable pairs."""
    lam_e, mu_e = _pair_multisets(pair, lam, mu)
    if not is_stable_pair(lam_e, mu_e).stable:
        return 0.0
    if pair.case != "orthogonal":
        raise NotImplementedError("Haar quadrature implemented for the compact case")
    x0 = fiber_basepoint(pair, lam, mu) if basepoint is None else basepoint
    if x0 is None:
        return 0.0
    if isinstance(x0, str):
        raise ArithmeticError("fiber basepoint undetermined")
    if pair.dim_V == 3:
        w = _so3_coords(x0)
        rho = float(np.hypot(w[0], w[1]))
        theta = 2 * np.pi * np.arange(n_nodes) / n_nodes
        pts = np.stack([rho * np.cos(theta), rho * np.sin(theta),
                        np.full(n_nodes, w[2])], axis=1)
        return complex(np.mean(np.asarray(a(pts), dtype=complex)))
    if pair.dim_V == 4:
        # Euler product rule for the so(3) subgroup, exact Haar weights
        n_ang = max(8, n_nodes // 8)
        al = 2 * np.pi * np.arange(n_ang) / n_ang
        cb, wb = leggauss(n_ang)
        total, wsum = 0.0 + 0.0j, 0.0
        for aa in al:
            ha = _h_exp(pair, [aa, 0.0, 0.0])
            for c_b, w_b in zip(cb, wb):
                hb = ha @ _h_exp(pair, [0.0, np.arccos(c_b), 0.0])
                for gg in al:
                    h = hb @ _h_exp(pair, [gg, 0.0, 0.0])
                    val = complex(np.asarray(a(pair.to_coords(h @ x0 @ h.T)[None, :]))[0])
                    total += w_b * val
                    wsum += w_b
        return complex(total / wsum)
    raise NotImplementedError("no Haar rule for this subgroup dimension")


@dataclass(frozen=True)
class TorsorReport:
    residuals: np.ndarray
    uniqueness_gaps: np.ndarray
    unmatched: int

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else np.inf

    @property
    def max_uniqueness_gap(self) -> float:
        return float(np.max(self.uniqueness_gaps)) if len(self.uniqueness_gaps) else np.inf


def torsor_check(pair: GGPPair, lam, mu, samples: int = 5, seed: int = 0,
                 starts: int = 8) -> TorsorReport:
    """Connect sampled fiber points by subgroup elements.

    Fiber points come from random H-translates of the basepoint plus an
    independent invariant re-solve; for each point a least-squares solve
    finds h with h p h^-1 = q, and multi-start agreement probes uniqueness
    of h.  Distinct transporters with small residual raise, since the
    action on a stable fiber is free.
    """
    x0 = fiber_basepoint(pair, lam, mu, seed=seed)
    if x0 is None or isinstance(x0, str):
        raise ValueError("no basepoint for the requested fiber")
    rng = np.random.default_rng(seed)
    dh = len(pair.h_basis)
    pts = []
    for _ in range(max(1, samples - 1)):
        h = _h_exp(pair, rng.normal(size=dh) * 0.8)
        pts.append(h @ x0 @ np.linalg.inv(h))
    if pair.case in ("linear", "unitary"):
        alt = _fiber_solve(pair, lam, mu, seed=seed + 1, starts=6)
        if not isinstance(alt, str):
            pts.append(alt)

    def solve_h(p, q):
        flips = (False, True) if pair.case in ("linear", "unitary") else (False,)
        sols = []
        for flip in flips:
            for _ in range(starts):
                def r(c, _f=flip):
                    h = _h_exp(pair, c, _f)
                    return (h @ p @ np.linalg.inv(h) - q).ravel()

                sol = least_squares(r, rng.normal(size=dh) * 0.9, method="lm",
                                    xtol=1e-15, max_nfev=500)
                res = float(np.max(np.abs(r(sol.x))))
                if res < 1e-8:
                    sols.append((_h_exp(pair, sol.x, flip), res))
        return sols

    residuals, gaps, unmatched = [], [], 0
    for q in pts:
        sols = solve_h(x0, q)
        if not sols:
            unmatched += 1
            continue
        residuals.append(min(s[1] for s in sols))
        hs = [s[0] for s in sols]
        gap = max(
            float(np.max(np.abs(h1 @ np.linalg.inv(h2) - np.eye(pair.dim_V))))
            for h1 in hs for h2 in hs
        )
        if gap > 1e-3:
            raise ArithmeticError("distinct transporters found on a stable fiber")
        gaps.append(gap)
    return TorsorReport(np.asarray(residuals), np.asarray(gaps), unmatched)


# ---------------------------------------------------------------------------
# affine measure and disintegration


def affine_measure(h_name: str, mu_interval=None, normalization: float = None):
    """Density of the affine measure on the dominant invariant coordinate:
    the product of coroot pairings with one 1/sqrt(2 pi) factor per
    coordinate.  Returns a callable carrying ``positive_roots``."""
    if h_name in ("so2", "abelian"):
        roots = 0

        def base(mu):
            mu = np.asarray(mu, dtype=float)
            return np.full(mu.shape, 1.0 / np.sqrt(2 * np.pi))
    elif h_name in ("so3", "su2"):
        roots = 1

        def base(mu):
            mu = np.asarray(mu, dtype=float)
            return np.abs(2.0 * mu) / np.sqrt(2 * np.pi) ** 3
    else:
        raise KeyError(f"no affine measure for {h_name!r}")
    scale = 1.0 if normalization is None else float(normalization)
    lo, hi = (-np.inf, np.inf) if mu_interval is None else mu_interval

    def density(mu):
        mu = np.asarray(mu, dtype=float)
        return scale * base(mu) * ((mu >= lo) & (mu <= hi))

    density.positive_roots = roots
    return density


def disintegration_report(pair: GGPPair, radius: float, symbols, n_mu: int = 48,
                          n_fiber: int = 96, chart=None):
    """Rows (symbol, lhs, rhs, ratio) for the slice identity on the sphere:
    the orbit integral against fiber-then-invariant iterated integration.

    The affine density carries an unknown global constant, so the ratio
    column is the object of interest; both sides run independent
    quadratures.
    """
    if not (pair.case == "orthogonal" and pair.dim_V == 3):
        raise NotImplementedError("slice identity instrumented for the rotation pair")
    from .liecore import su2
    from .orbits import orbit_integral as _oi, sphere_chart

    chart = sphere_chart(su2(), radius) if chart is None else chart
    zs, wz = leggauss(n_mu)
    zs = zs * radius
    wz = wz * radius
    dens = affine_measure("so2")
    lam = np.array([1j * radius, -1j * radius])
    rows = []
    for k, a in enumerate(symbols):
        lhs = complex(_oi(chart, a, refine=False))
        fib = np.array([
            orbital_integral(pair, lam, z, a, n_nodes=n_fiber) for z in zs
        ])
        rhs = complex(np.sum(wz * dens(zs) * fib))
        rows.append({"symbol": k, "lhs": lhs, "rhs": rhs,
                     "ratio": (lhs / rhs if rhs != 0 else np.nan)})
    return rows


def disintegration_residual(pair: GGPPair, chart, a, calibration: float = None,
                            n_mu: int = 48, n_fiber: int = 96) -> float:
    """|lhs - calibration * rhs| for one symbol; the calibration defaults to
    the constant-symbol ratio computed on refined quadratures."""
    radius = float(np.linalg.norm(chart.basepoint))

    def ones(pts):
        return np.ones(len(np.atleast_2d(pts)))

    if calibration is None:
        row = disintegration_report(pair, radius, [ones], n_mu=n_mu + 5,
                                    n_fiber=n_fiber + 7, chart=chart.refined())[0]
        calibration = float(np.real(row["ratio"]))
    row = disintegration_report(pair, radius, [a], n_mu=n_mu, n_fiber=n_fiber,
                                chart=chart)[0]
    return float(abs(row["lhs"] - calibration * row["rhs"]))


# ---------------------------------------------------------------------------
# sampling


def random_element(pair: GGPPair, rng) -> np.ndarray:
    if pair.case == "linear":
        return rng.normal(size=(pair.n, pair.n))
    if pair.case == "unitary":
        return _split_lift(pair, rng.normal(size=(pair.n, pair.n)))
    g = rng.normal(size=(pair.dim_V, pair.dim_V))
    return g - g.T


def plant_unstable(pair: GGPPair, rng) -> np.ndarray:
    """An element sharing an eigenvalue with its restriction, hidden by a
    random subgroup conjugation."""
    d = pair.dim_V
    if pair.case in ("linear", "unitary"):
        n = pair.n
        a = rng.normal(size=(n, n))
        a[:, 0] = 0.0
        a[0, 0] = rng.normal()
        if rng.random() < 0.5:
            a = a.T.copy()
        x = a if pair.case == "linear" else _split_lift(pair, a)
    else:
        x = np.zeros((d, d))
        s = rng.normal()
        x[0, 1] = -s
        x[1, 0] = s
        if d > 3:
            y = rng.normal(size=(d - 2, d - 2))
            x[2:, 2:] = y - y.T
    h = _h_exp(pair, rng.normal(size=len(pair.h_basis)) * 0.6)
    return h @ x @ np.linalg.inv(h)


def _element_hash(x) -> str:
    return hashlib.sha256(np.round(np.asarray(x), 10).tobytes()).hexdigest()[:12]


def stability_sweep(pair: GGPPair, n_samples: int, seed: int = 0,
                    unstable_fraction: float = 0.3):
    """Records comparing the three stability characterizations per sample."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n_samples):
        planted = bool(rng.random() < unstable_fraction)
        x = plant_unstable(pair, rng) if planted else random_element(pair, rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = is_stable(pair, x)
            witness_error = False
            try:
                wit = hm_witness(pair, x)
            except ArithmeticError:
                wit, witness_error = None, True
            cyc = cyclic_criterion(pair, x)
        out.append({
            "case": pair.label,
            "index": k,
            "planted": planted,
            "stable_ev": bool(rep.stable),
            "stable_witness": (wit is None) and not witness_error,
            "stable_cyclic": bool(cyc),
            "witness_error": witness_error,
            "borderline": bool(rep.borderline),
            "min_gap": rep.min_gap,
            "x_hash": _element_hash(x),
        })
    return out
