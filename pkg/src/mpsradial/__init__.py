"""Dirichlet eigenpairs of -Lap + V(|x|) on planar domains by particular solutions.

Radial profiles come from a weighted 1D finite element solve; eigenvalues are
located by minimising the boundary-to-interior norm quotient of their
angular combinations.
"""
__version__ = "0.1.0"

from .geometry import Domain, area, boundary_nodes, contains, sample_interior
from .potential import RadialPotential
from .radial_fem import Grid1D, assemble, basis_function, null_vector
from .field import BasisBundle, eval_field, eval_radial, sample_grid
from .quotient import build_matrices, minimize_quotient, quotient_at
from .scanner import ScanConfig, Stage, detect_multiplicity, find_minima, refine, scan
from .oracle import bessel_j, bessel_zero, disk_spectrum, fd_radial_spectrum

__all__ = [
    "Domain", "area", "boundary_nodes", "contains", "sample_interior",
    "RadialPotential", "Grid1D", "assemble", "basis_function", "null_vector",
    "BasisBundle", "eval_field", "eval_radial", "sample_grid",
    "build_matrices", "minimize_quotient", "quotient_at",
    "ScanConfig", "Stage", "detect_multiplicity", "find_minima", "refine", "scan",
    "bessel_j", "bessel_zero", "disk_spectrum", "fd_radial_spectrum",
]
