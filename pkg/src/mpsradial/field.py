"""Synthesis of trial fields from the radial basis functions.

Coefficient vectors interleave cosine and sine modes per angular index:
``(a0, a1c, a1s, a2c, a2s, ..., aJc, aJs)``.  Column ``2j - 1`` is the cosine
mode of order ``j`` and column ``2j`` the sine mode.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potential import RadialPotential
from .radial_fem import ElementTerms, Grid1D, RadialBasis, basis_family

RADIUS_SLACK = 1e-12


@dataclass
class BasisBundle:
    """Basis functions ``j = 0..J`` at one spectral value on a shared grid."""

    lam: float
    J: int
    grid: Grid1D
    coeffs: np.ndarray  # (J+1, N+1)
    V: RadialPotential | None = None

    @classmethod
    def build(cls, J: int, lam: float, V: RadialPotential, grid: Grid1D,
              terms: ElementTerms | None = None) -> "BasisBundle":
        return cls(float(lam), J, grid, basis_family(J, lam, V, grid, terms), V)

    @property
    def n_modes(self) -> int:
        return 2 * self.J + 1

    def basis(self, j: int) -> RadialBasis:
        return RadialBasis(j, self.lam, self.grid, self.coeffs[j], float("nan"))


def mode_index(j: int, kind: str = "cos") -> int:
    """Column of mode ``(j, kind)`` in the interleaved ordering."""
    if j == 0:
        if kind != "cos":
            raise ValueError("order 0 has only the cosine mode")
        return 0
    return 2 * j - 1 if kind == "cos" else 2 * j


def to_blocked(alpha: np.ndarray) -> np.ndarray:
    """Reorder to ``(a0, a1c..aJc, a1s..aJs)``, the all-cosines-first convention."""
    alpha = np.asarray(alpha)
    return np.concatenate([alpha[:1], alpha[1::2], alpha[2::2]])


def _locate(grid: Grid1D, r: np.ndarray):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > grid.R * (1 + RADIUS_SLACK)):
        raise ValueError(f"radius outside [0, {grid.R}]")
    s = np.clip(r / grid.h, 0.0, grid.N)
    idx = np.minimum(s.astype(np.int64), grid.N - 1)
    return idx, s - idx


def radial_values(coeffs: np.ndarray, grid: Grid1D, r) -> np.ndarray:
    """Piecewise-linear interpolation of nodal rows at radii ``r``; shape ``(rows, len(r))``."""
    idx, w = _locate(grid, np.atleast_1d(r))
    return coeffs[..., idx] * (1.0 - w) + coeffs[..., idx + 1] * w


def eval_radial(basis: RadialBasis, r):
    """Value of one radial basis function at ``r`` (scalar or array)."""
    vals = radial_values(basis.coeffs, basis.grid, np.atleast_1d(r))
    return vals if np.ndim(r) else float(vals[0])


@dataclass
class PolarTables:
    """Point-dependent factors of the mode matrix, reusable across spectral values."""

    idx: np.ndarray
    w: np.ndarray
    cos: np.ndarray  # (npts, J)
    sin: np.ndarray
    J: int

    @classmethod
    def build(cls, points: np.ndarray, grid: Grid1D, J: int) -> "PolarTables":
        points = np.atleast_2d(points)
        r = np.hypot(points[:, 0], points[:, 1])
        theta = np.arctan2(points[:, 1], points[:, 0])
        idx, w = _locate(grid, r)
        jt = np.outer(theta, np.arange(1, J + 1))
        return cls(idx, w, np.cos(jt), np.sin(jt), J)

    def mode_matrix(self, coeffs: np.ndarray, row_scale=None) -> np.ndarray:
        J = self.J
        u = (coeffs[:J + 1, self.idx] * (1.0 - self.w) + coeffs[:J + 1, self.idx + 1] * self.w).T
        if row_scale is not None:
            u *= np.asarray(row_scale)[:, None]
        out = np.empty((u.shape[0], 2 * J + 1))
        out[:, 0] = u[:, 0]
        np.multiply(u[:, 1:], self.cos, out=out[:, 1::2])
        np.multiply(u[:, 1:], self.sin, out=out[:, 2::2])
        return out


def mode_matrix(bundle: BasisBundle, points) -> np.ndarray:
    """Values of all ``2J+1`` pure modes at ``points``; shape ``(npts, 2J+1)``."""
    return PolarTables.build(points, bundle.grid, bundle.J).mode_matrix(bundle.coeffs)


def eval_field(bundle: BasisBundle, alpha, point):
    """Trial field at one point ``(x, y)`` or at an ``(n, 2)`` array of points."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (bundle.n_modes,):
        raise ValueError(f"alpha must have length {bundle.n_modes}, got {alpha.shape}")
    pts = np.asarray(point, dtype=float)
    vals = mode_matrix(bundle, np.atleast_2d(pts)) @ alpha
    return vals if pts.ndim == 2 else float(vals[0])


def polar_grid(R: float, n_r: int, n_theta: int):
    """Radii ``k R / n_r`` (k < n_r) and angles ``2 pi m / n_theta``."""
    if n_r < 2 or n_theta < 2:
        raise ValueError("need n_r >= 2 and n_theta >= 2")
    return np.arange(n_r) * (R / n_r), np.arange(n_theta) * (2 * np.pi / n_theta)


def sample_grid(bundle: BasisBundle, alpha, n_r: int, n_theta: int) -> np.ndarray:
    """Field on the polar grid as an ``(n_r, n_theta)`` array (rows: radius)."""
    r, th = polar_grid(bundle.grid.R, n_r, n_theta)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    pts = np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])
    vals = eval_field(bundle, alpha, pts)
    return vals.reshape(n_r, n_theta)


def write_grid_csv(path, bundle: BasisBundle, alpha, n_r: int, n_theta: int) -> None:
    """CSV with header ``r,theta,value``; rows ordered radius-major."""
    vals = sample_grid(bundle, alpha, n_r, n_theta)
    r, th = polar_grid(bundle.grid.R, n_r, n_theta)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    data = np.column_stack([rr.ravel(), tt.ravel(), vals.ravel()])
    np.savetxt(path, data, delimiter=",", header="r,theta,value", comments="", fmt="%.17g")
