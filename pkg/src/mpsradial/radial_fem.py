"""Weighted 1D finite elements for the radial Bessel-type equation.

For each angular index ``j`` and spectral value ``lam`` the Galerkin system

    a_j(u, w) + (V_h u, w)_r = lam (u, w)_r   for every interior test hat w

is rectangular with one more unknown than equations, and its null space is
one-dimensional.  The normalised null vector is the radial basis function.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numba
from scipy.linalg import solve_banded

from .potential import RadialPotential, element_potential_terms

SERIES_SWITCH = 2.0  # p = a/h above which the 1/r integrals use the series form
SERIES_TERMS = 64


class DegenerateNullSpace(RuntimeError):
    """The FEM system does not have a numerically one-dimensional null space."""


class CoercivityError(ValueError):
    """Mesh too coarse for the potential's Lipschitz constant."""


@dataclass(frozen=True)
class Grid1D:
    R: float
    N: int

    def __post_init__(self):
        if self.R <= 0 or self.N < 2:
            raise ValueError(f"need R > 0 and N >= 2, got R={self.R}, N={self.N}")

    @property
    def h(self) -> float:
        return self.R / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.h


def inverse_r_moments(p):
    """``I_k(p) = int_0^1 u^k / (p + u) du`` for k = 0, 1, 2.

    Closed forms lose digits to cancellation when ``p`` is large, so the
    geometric series in ``1/p`` takes over above ``SERIES_SWITCH``.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    i0 = np.empty_like(p)
    i1 = np.empty_like(p)
    i2 = np.empty_like(p)
    near = p < SERIES_SWITCH
    pn = p[near]
    with np.errstate(divide="ignore", invalid="ignore"):
        i0[near] = np.log1p(1.0 / pn)
        i1[near] = np.where(pn == 0, 1.0, 1.0 - pn * i0[near])
    i2[near] = 0.5 - pn * i1[near]
    far = ~near
    if np.any(far):
        inv = 1.0 / p[far]
        n = np.arange(SERIES_TERMS)
        powers = (-inv[:, None]) ** n * inv[:, None]
        i0[far] = powers @ (1.0 / (n + 1.0))
        i1[far] = powers @ (1.0 / (n + 2.0))
        i2[far] = powers @ (1.0 / (n + 3.0))
    return i0, i1, i2


def _local(m, n):
    key = tuple(sorted((m, n)))
    if key not in {("left", "left"), ("left", "right"), ("right", "right")}:
        raise ValueError(f"local indices must be 'left' or 'right', got {m!r}, {n!r}")
    return key


def stiffness_element(j: int, a: float, b: float, m: str, n: str) -> float:
    """Exact ``int phi_m' phi_n' r dr + j^2 int phi_m phi_n / r dr`` over [a, b]."""
    if not b > a >= 0:
        raise ValueError(f"need b > a >= 0, got [{a}, {b}]")
    key = _local(m, n)
    h = b - a
    p = a / h
    grad = p + 0.5 if key[0] == key[1] else -(p + 0.5)
    if j == 0:
        return float(grad)
    if a == 0.0 and key != ("right", "right"):
        raise ValueError("the left hat does not vanish at r = 0; its 1/r integral diverges for j >= 1")
    i0, i1, i2 = (float(x[0]) for x in inverse_r_moments(p))
    inv_r = {("left", "left"): i0 - 2 * i1 + i2, ("left", "right"): i1 - i2,
             ("right", "right"): i2}[key]
    return float(grad + j * j * inv_r)


def mass_element(a: float, b: float, m: str, n: str) -> float:
    """Exact ``int phi_m phi_n r dr`` over [a, b]."""
    if not b > a >= 0:
        raise ValueError(f"need b > a >= 0, got [{a}, {b}]")
    key = _local(m, n)
    h = b - a
    return float({("left", "left"): h * (a / 3 + h / 12), ("left", "right"): h * (a / 6 + h / 12),
                  ("right", "right"): h * (a / 3 + h / 4)}[key])


@dataclass
class ElementTerms:
    """Global tridiagonal pieces on nodes 0..N, split by how they depend on j and lam.

    Each piece is ``(diag, off)`` with ``off[i]`` coupling nodes i and i+1.
    ``inv_r`` has ``diag[0] = inf`` (phi_0 is excluded whenever j >= 1).
    """

    grid: Grid1D
    grad: tuple
    inv_r: tuple
    mass: tuple
    pot: tuple


def _tridiag(ll, lr, rr):
    n = ll.size + 1
    diag = np.zeros(n)
    diag[:-1] += ll
    diag[1:] += rr
    return diag, lr.copy()


def element_terms(grid: Grid1D, V: RadialPotential) -> ElementTerms:
    nodes = grid.nodes
    h = grid.h
    p = nodes[:-1] / h
    grad = _tridiag(p + 0.5, -(p + 0.5), p + 0.5)
    i0, i1, i2 = inverse_r_moments(p)
    with np.errstate(invalid="ignore"):
        inv_r = _tridiag(i0 - 2 * i1 + i2, i1 - i2, i2)
    a = nodes[:-1]
    mass = _tridiag(h * (a / 3 + h / 12), h * (a / 6 + h / 12), h * (a / 3 + h / 4))
    pot = _tridiag(*element_potential_terms(V, nodes))
    return ElementTerms(grid, grad, inv_r, mass, pot)


def check_coercivity(V: RadialPotential, grid: Grid1D) -> None:
    lip = V.lipschitz_constant(grid.R)
    if lip > 0 and grid.h >= 1.0 / (2.0 * lip):
        raise CoercivityError(
            f"mesh width h={grid.h:.4g} must be below 1/(2 L_V) = {1 / (2 * lip):.4g} "
            f"(Lipschitz constant of V estimated as {lip:.4g}); increase N_h")


@dataclass
class BandedSystem:
    """Rectangular tridiagonal system ``S`` with ``rows`` equations and ``rows + 1`` unknowns.

    Row ``r`` tests against node ``offset + r``; column ``c`` is the trial hat at
    node ``offset + c``.  ``offset`` is 1 for j >= 1 (phi_0 dropped) and 0 for j = 0.
    ``S[r, r-1] = lower[r]``, ``S[r, r] = diag[r]``, ``S[r, r+1] = upper[r]``.
    """

    j: int
    lam: float
    grid: Grid1D
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @property
    def offset(self) -> int:
        return 0 if self.j == 0 else 1

    @property
    def shape(self):
        return (self.diag.size, self.diag.size + 1)

    def matvec(self, c):
        c = np.asarray(c, dtype=float)
        out = self.diag * c[:-1] + self.upper * c[1:]
        out[1:] += self.lower[1:] * c[:-2]
        return out

    def to_dense(self):
        n = self.diag.size
        S = np.zeros((n, n + 1))
        idx = np.arange(n)
        S[idx, idx] = self.diag
        S[idx, idx + 1] = self.upper
        S[idx[1:], idx[1:] - 1] = self.lower[1:]
        return S

    def interior_block(self):
        """Square part on interior trial hats (drops the last column) as (diag, off)."""
        return self.diag.copy(), self.upper[:-1].copy()


def _system_from_terms(terms: ElementTerms, j: int, lam: float) -> BandedSystem:
    """Slice the global tridiagonal ``K_j - lam M`` into the rectangular test/trial block."""
    diag = terms.grad[0] + terms.pot[0] - lam * terms.mass[0]
    off = terms.grad[1] + terms.pot[1] - lam * terms.mass[1]
    if j:
        diag = diag + j * j * terms.inv_r[0]
        off = off + j * j * terms.inv_r[1]
    N = terms.grid.N
    o = 0 if j == 0 else 1
    rows = np.arange(o, N)
    lower = np.zeros(rows.size)
    lower[1:] = off[rows[1:] - 1]
    return BandedSystem(j, float(lam), terms.grid, lower, diag[rows].copy(), off[rows].copy())


def assemble(j: int, lam: float, V: RadialPotential, grid: Grid1D, check: bool = True) -> BandedSystem:
    """Galerkin system for angular index ``j`` at spectral value ``lam``."""
    if j < 0:
        raise ValueError(f"angular index must be >= 0, got {j}")
    if lam < 1.0:
        raise ValueError(f"spectral parameter must be >= 1, got {lam}")
    if check:
        check_coercivity(V, grid)
    return _system_from_terms(element_terms(grid, V), j, lam)


@numba.njit(cache=True)
def _givens_null(lower, diag, upper, out):
    """Null vector of one tridiagonal n x (n+1) system via Givens QR of its transpose.

    Writes the unit null vector into ``out`` (length n+1).
    """
    n = diag.size
    cs = np.empty(n)
    sn = np.empty(n)
    x = diag[0]
    y = lower[1] if n > 1 else 0.0
    for k in range(n):
        b = upper[k]
        r = np.hypot(x, b)
        if r == 0.0:
            c, s = 1.0, 0.0
        else:
            c, s = x / r, b / r
        cs[k] = c
        sn[k] = s
        if k + 1 < n:
            x = -s * y + c * diag[k + 1]
            y = c * lower[k + 2] if k + 2 < n else 0.0
    q = 1.0
    for k in range(n - 1, -1, -1):
        out[k + 1] = cs[k] * q
        q = -sn[k] * q
    out[0] = q


@numba.njit(cache=True)
def _givens_null_batch(lower, diag, upper, out):
    for i in range(diag.shape[0]):
        _givens_null(lower[i], diag[i], upper[i], out[i])


def _smallest_singular_of_r(system: BandedSystem, sweeps: int = 8) -> float:
    """Second-smallest singular value of S (the smallest nonzero one), by inverse iteration.

    Uses the banded normal matrix ``S S^T`` (n x n, nonsingular when the null
    space is one-dimensional).
    """
    S = system
    n = S.diag.size
    # S S^T is pentadiagonal: entries (r, r), (r, r+1), (r, r+2)
    lo, di, up = S.lower, S.diag, S.upper
    d0 = lo ** 2 + di ** 2 + up ** 2
    d1 = di[:-1] * lo[1:] + up[:-1] * di[1:]
    d2 = up[:-2] * lo[2:]
    ab = np.zeros((5, n))
    ab[2] = d0
    ab[1, 1:] = d1
    ab[3, :-1] = d1
    ab[0, 2:] = d2
    ab[4, :-2] = d2
    v = np.ones(n) / np.sqrt(n)
    est = 0.0
    for _ in range(sweeps):
        try:
            w = solve_banded((2, 2), ab, v)
        except np.linalg.LinAlgError:
            return 0.0
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0:
            return 0.0
        v = w / nw
        est = 1.0 / nw
    return float(np.sqrt(est))


def null_vector(system: BandedSystem, check_degeneracy: bool = True):
    """Unit-norm vector minimising ``|S c|`` and the residual ``|S c|``."""
    n = system.diag.size
    out = np.empty(n + 1)
    _givens_null(system.lower, system.diag, system.upper, out)
    out /= np.linalg.norm(out)
    residual = float(np.linalg.norm(system.matvec(out)))
    if check_degeneracy:
        sigma2 = _smallest_singular_of_r(system)
        if sigma2 == 0.0 or (sigma2 ** 2 - residual ** 2) <= 1e-10 * sigma2 ** 2:
            raise DegenerateNullSpace(
                f"j={system.j}, lam={system.lam}: two smallest singular values coincide "
                f"({residual:.3e}, {sigma2:.3e}); assembly error or h too large")
    return out, residual


def mass_norm_sq(coeffs_full: np.ndarray, mass: tuple) -> np.ndarray:
    """``c^T M c`` for nodal vectors on nodes 0..N (works on stacked rows)."""
    d, o = mass
    return np.sum(coeffs_full ** 2 * d, axis=-1) + 2 * np.sum(coeffs_full[..., :-1] * coeffs_full[..., 1:] * o,
                                                              axis=-1)


def _normalise_sign(c: np.ndarray) -> np.ndarray:
    """Unit r-norm is applied by the caller; here only the sign convention."""
    c = np.atleast_2d(c)
    last = c[:, -1]
    scale = np.max(np.abs(c), axis=1)
    tiny = np.abs(last) < 1e-12 * scale
    ref = last.copy()
    if np.any(tiny):
        rows = np.nonzero(tiny)[0]
        ref[rows] = c[rows, np.argmax(np.abs(c[rows]), axis=1)]
    flip = ref < 0
    c[flip] *= -1.0
    return c


@dataclass
class RadialBasis:
    """Nodal values on nodes 0..N of a unit ``L_r`` basis function; ``coeffs[0] = 0`` for j >= 1."""

    j: int
    lam: float
    grid: Grid1D
    coeffs: np.ndarray
    residual: float

    def to_csv(self, path) -> None:
        data = np.column_stack([self.grid.nodes, self.coeffs])
        np.savetxt(path, data, delimiter=",", header="r,c", comments="", fmt="%.17g")


def basis_function(j: int, lam: float, V: RadialPotential, grid: Grid1D,
                   check_degeneracy: bool = True) -> RadialBasis:
    """Unit ``L_r`` radial basis function for angular index ``j``."""
    check_coercivity(V, grid)
    terms = element_terms(grid, V)
    system = _system_from_terms(terms, j, lam)
    vec, _ = null_vector(system, check_degeneracy)
    full = np.zeros(grid.N + 1)
    full[system.offset:] = vec
    full /= np.sqrt(mass_norm_sq(full, terms.mass))
    full = _normalise_sign(full)[0]
    trial = full[system.offset:]
    return RadialBasis(j, float(lam), grid, full, float(np.linalg.norm(system.matvec(trial))))


def basis_family(J: int, lam: float, V: RadialPotential, grid: Grid1D,
                 terms: ElementTerms | None = None) -> np.ndarray:
    """Coefficients of all basis functions j = 0..J as a ``(J+1, N+1)`` array.

    ``terms`` may be passed in to reuse the element integrals across many ``lam``.
    """
    if lam < 1.0:
        raise ValueError(f"spectral parameter must be >= 1, got {lam}")
    if terms is None:
        check_coercivity(V, grid)
        terms = element_terms(grid, V)
    N = grid.N
    base_d = terms.grad[0] + terms.pot[0] - lam * terms.mass[0]
    base_o = terms.grad[1] + terms.pot[1] - lam * terms.mass[1]
    out = np.empty((J + 1, N + 1))
    # j = 0: rows on nodes 0..N-1, all N+1 trial hats
    lower0 = np.zeros(N)
    lower0[1:] = base_o[:N - 1]
    _givens_null(lower0, base_d[:N].copy(), base_o[:N].copy(), out[0])
    if J >= 1:
        js = np.arange(1, J + 1, dtype=float)[:, None] ** 2
        d = base_d[1:N] + js * terms.inv_r[0][1:N]
        o = base_o + js * terms.inv_r[1]
        up = o[:, 1:N]
        lo = np.zeros((J, N - 1))
        lo[:, 1:] = o[:, 1:N - 1]
        vecs = np.empty((J, N))
        _givens_null_batch(lo, np.ascontiguousarray(d), np.ascontiguousarray(up), vecs)
        out[1:, 0] = 0.0
        out[1:, 1:] = vecs
    out /= np.sqrt(mass_norm_sq(out, terms.mass))[:, None]
    return _normalise_sign(out)
