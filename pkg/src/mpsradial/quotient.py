"""Collocation matrices and minimisation of the boundary/interior norm quotient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import dtrcon

from .field import BasisBundle, PolarTables
from .geometry import BoundaryNodeSet, InteriorSampleSet

MAX_CONDITION = 1e14


class RankDeficiencyError(np.linalg.LinAlgError):
    """Triangular factor of the stacked collocation matrix is numerically singular."""


@dataclass
class CollocationMatrices:
    boundary: np.ndarray  # (N_boundary, 2J+1)
    interior: np.ndarray  # (N_interior, 2J+1)


@dataclass
class CollocationGeometry:
    """Point data and trigonometric tables shared by every spectral value of a scan."""

    boundary: PolarTables
    interior: PolarTables
    boundary_scale: np.ndarray
    interior_scale: float

    @classmethod
    def build(cls, bnodes: BoundaryNodeSet, ipoints: InteriorSampleSet, grid, J: int) -> "CollocationGeometry":
        n_modes = 2 * J + 1
        if len(bnodes) <= n_modes or len(ipoints) <= n_modes:
            raise ValueError(f"need more than 2J+1 = {n_modes} boundary and interior points, "
                             f"got {len(bnodes)} and {len(ipoints)}")
        return cls(PolarTables.build(bnodes.points, grid, J), PolarTables.build(ipoints.points, grid, J),
                   np.sqrt(bnodes.weights), float(np.sqrt(ipoints.area / len(ipoints))))

    def matrices(self, bundle: BasisBundle) -> CollocationMatrices:
        return CollocationMatrices(self.boundary.mode_matrix(bundle.coeffs, self.boundary_scale),
                                   self.interior.mode_matrix(bundle.coeffs) * self.interior_scale)


def build_matrices(bundle: BasisBundle, bnodes: BoundaryNodeSet, ipoints: InteriorSampleSet) -> CollocationMatrices:
    """Boundary rows carry ``sqrt(|gamma'| dt)``, interior rows ``sqrt(|Omega| / N)``."""
    return CollocationGeometry.build(bnodes, ipoints, bundle.grid, bundle.J).matrices(bundle)


@dataclass
class QuotientSolution:
    sigmas: np.ndarray  # ascending
    alphas: np.ndarray  # (2J+1, k); column i minimises with value sigmas[i]
    F_min: float
    regularized_rank: int

    @property
    def alpha_min(self) -> np.ndarray:
        return self.alphas[:, 0]


def quotient_from_sigma(sigma):
    sigma = np.asarray(sigma, dtype=float)
    with np.errstate(divide="ignore"):
        return sigma / np.sqrt(np.maximum(1.0 - sigma ** 2, 0.0))


def _check_rank(R: np.ndarray) -> None:
    # column equilibration: the quotient is invariant under column scaling, so
    # only the scale-free condition number says anything about solvability
    norms = np.linalg.norm(R, axis=0)
    if np.any(norms == 0):
        raise RankDeficiencyError("stacked collocation matrix has a zero column")
    rcond, info = dtrcon(R / norms, norm="1", uplo="U", diag="N")
    if info != 0 or rcond * MAX_CONDITION < 1.0:
        raise RankDeficiencyError(f"triangular factor is numerically singular (condition ~ {1 / max(rcond, 1e-300):.2e})")


def minimize_quotient(mats: CollocationMatrices, reg_threshold: float | None = None,
                      n_vectors: int | None = None, rank_floor: float | None = None) -> QuotientSolution:
    """Minimise ``|M_b a| / |M_i a|`` by QR of the stacked matrix and SVD of the boundary block.

    With ``reg_threshold`` set, directions along right-singular vectors of the
    triangular factor with singular value below the threshold are dropped
    before the SVD.  ``rank_floor`` drops only directions below
    ``rank_floor * s_max``, i.e. the numerical null space, and leaves the rest
    of the problem untouched.  ``n_vectors`` limits how many minimisers are
    returned.
    """
    Mb, Mi = mats.boundary, mats.interior
    nb, n = Mb.shape
    Q, R = sla.qr(np.vstack([Mb, Mi]), mode="economic", check_finite=False)
    Qb = Q[:nb]
    if reg_threshold or rank_floor:
        U, s, Vt = sla.svd(R, check_finite=False)
        cut = max(reg_threshold or 0.0, (rank_floor or 0.0) * s[0])
        keep = s >= cut
        if not np.any(keep):
            raise RankDeficiencyError("regularisation removed every direction")
        _, sig, Wt = sla.svd(Qb @ U[:, keep], full_matrices=False, check_finite=False)
        sig, Wt = sig[::-1], Wt[::-1]
        k = sig.size if n_vectors is None else min(n_vectors, sig.size)
        alphas = Vt[keep].T @ (Wt[:k].T / s[keep][:, None])
        rank = int(keep.sum())
    else:
        _check_rank(R)
        _, sig, Wt = sla.svd(Qb, full_matrices=False, check_finite=False)
        sig, Wt = sig[::-1], Wt[::-1]
        k = sig.size if n_vectors is None else min(n_vectors, sig.size)
        alphas = sla.solve_triangular(R, Wt[:k].T, check_finite=False)
        rank = n
    sig = np.clip(sig, 0.0, 1.0)
    return QuotientSolution(sig, alphas, float(quotient_from_sigma(sig[0])), rank)


def quotient_value(mats: CollocationMatrices, alpha) -> float:
    alpha = np.asarray(alpha, dtype=float)
    if not np.any(alpha):
        raise ValueError("alpha must be nonzero")
    return float(np.linalg.norm(mats.boundary @ alpha) / np.linalg.norm(mats.interior @ alpha))


def quotient_at(bundle: BasisBundle, alpha, bnodes: BoundaryNodeSet, ipoints: InteriorSampleSet) -> float:
    """Discrete quotient evaluated directly, without any factorisation."""
    return quotient_value(build_matrices(bundle, bnodes, ipoints), alpha)
