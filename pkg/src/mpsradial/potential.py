"""Radial potentials and the three-point Gauss rule used for the potential term."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

# Gauss-Legendre nodes mapped to [0, 1] and the matching weights (sum to 1).
GAUSS_OFFSETS = 0.5 + 0.5 * np.sqrt(3.0 / 5.0) * np.array([-1.0, 0.0, 1.0])
GAUSS_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0


def gauss_points(a, b):
    """Nodes and weights of the 3-point rule on [a, b]; broadcasts over arrays of elements."""
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    return a + GAUSS_OFFSETS * (b - a), GAUSS_WEIGHTS * (b - a)


def quad_element(f: Callable, a: float, b: float) -> float:
    """Three-point Gauss quadrature of ``f`` over [a, b]; exact up to degree 5."""
    if not 0.0 <= a < b:
        raise ValueError(f"need 0 <= a < b, got [{a}, {b}]")
    nodes, weights = gauss_points(a, b)
    values = np.asarray(f(nodes), dtype=float)
    return float(np.sum(weights * values))


@dataclass(frozen=True)
class RadialPotential:
    """A potential ``V(r)`` on ``[0, R]``.

    ``smoothness`` is "C1" or "C2" and only records which FEM convergence
    order to expect. ``lipschitz`` may be left ``None``, in which case it is
    estimated by finite differences when the coercivity threshold is needed.
    """

    func: Callable[[np.ndarray], np.ndarray]
    smoothness: str = "C2"
    name: str = "custom"
    lipschitz: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.smoothness not in ("C1", "C2"):
            raise ValueError(f"smoothness must be 'C1' or 'C2', got {self.smoothness!r}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.broadcast_to(np.asarray(self.func(r), dtype=float), r.shape).copy()

    def lower_bound(self, R: float, samples: int = 20001) -> float:
        """Sampled infimum of V on [0, R]."""
        return float(np.min(self(np.linspace(0.0, R, samples))))

    def lipschitz_constant(self, R: float, samples: int = 20001) -> float:
        if self.lipschitz is not None:
            return float(self.lipschitz)
        r = np.linspace(0.0, R, samples)
        v = self(r)
        return float(np.max(np.abs(np.diff(v)) / np.diff(r)))

    def shifted(self, s: float) -> "RadialPotential":
        """``V + s`` with the same metadata."""
        if s == 0.0:
            return self
        base = self.func
        return RadialPotential(lambda r: base(r) + s, self.smoothness, f"{self.name}+{s:g}",
                               self.lipschitz, dict(self.params, shift=s))


def unit_floor_shift(V: RadialPotential, R: float) -> float:
    """Shift making ``inf V >= 1`` on [0, R]; eigenvalues move by the same amount."""
    return max(0.0, 1.0 - V.lower_bound(R))


def constant(c: float = 1.0) -> RadialPotential:
    if c < 1.0:
        raise ValueError(f"constant potential must be >= 1, got {c}")
    return RadialPotential(lambda r: np.full_like(r, c, dtype=float), "C2", "constant",
                           0.0, {"c": float(c)})


def ellipse_example() -> RadialPotential:
    """``V(r) = 2/(r^2 + 1) + 1``, the analytic potential paired with the ellipse."""
    # |V'| = 4r/(r^2+1)^2 peaks at r = 1/sqrt(3)
    lip = 4.0 / np.sqrt(3.0) / (4.0 / 3.0) ** 2
    return RadialPotential(lambda r: 2.0 / (r * r + 1.0) + 1.0, "C2", "ellipse_example", lip)


def star_example() -> RadialPotential:
    """``V(r) = 1 + r`` on [0, 1] and ``1 + r + (r-1)^2`` beyond; only C1 at r = 1."""
    return RadialPotential(lambda r: 1.0 + r + np.where(r > 1.0, (r - 1.0) ** 2, 0.0), "C1",
                           "star_example")


def tabulated(r, v) -> RadialPotential:
    """Monotone-cubic interpolant through tabulated samples."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    if r.ndim != 1 or r.shape != v.shape or r.size < 2:
        raise ValueError("tabulated potential needs two equal-length 1D arrays")
    if np.any(np.diff(r) <= 0):
        raise ValueError("tabulated radii must be strictly increasing")
    interp = PchipInterpolator(r, v, extrapolate=False)
    lo, hi = r[0], r[-1]

    def func(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            raise ValueError(f"radius outside tabulated range [{lo}, {hi}]")
        return interp(np.clip(x, lo, hi))

    return RadialPotential(func, "C1", "tabulated", None, {"r_min": float(lo), "r_max": float(hi)})


def read_csv_potential(path) -> RadialPotential:
    """Two-column CSV ``r, V(r)``; a non-numeric first row is treated as a header."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows:
                    raise
    data = np.array(rows)
    pot = tabulated(data[:, 0], data[:, 1])
    pot.params["path"] = str(path)
    return pot


def from_spec(spec: dict) -> RadialPotential:
    """Build a potential from a config mapping such as ``{"kind": "constant", "c": 2}``."""
    kind = spec.get("kind", "constant")
    if kind == "constant":
        # no floor check here: callers shift with unit_floor_shift
        c = float(spec.get("c", 1.0))
        return RadialPotential(lambda r: np.full_like(r, c, dtype=float), "C2", "constant", 0.0, {"c": c})
    if kind in ("ellipse_example", "V_E"):
        return ellipse_example()
    if kind in ("star_example", "V_S"):
        return star_example()
    if kind == "tabulated":
        if "path" in spec:
            return read_csv_potential(spec["path"])
        return tabulated(spec["r"], spec["v"])
    raise ValueError(f"unknown potential kind {kind!r}")


def element_potential_terms(V: RadialPotential, nodes: np.ndarray):
    """Gauss approximations of ``int V phi_m phi_n r dr`` on every element.

    Returns arrays ``(ll, lr, rr)`` of length ``len(nodes) - 1`` for the
    left/left, left/right and right/right hat pairings.
    """
    a, b = nodes[:-1], nodes[1:]
    pts, wts = gauss_points(a, b)
    vr = V(pts) * pts * wts
    right = GAUSS_OFFSETS
    left = 1.0 - right
    ll = vr @ (left * left)
    lr = vr @ (left * right)
    rr = vr @ (right * right)
    return ll, lr, rr


def potential_element_term(V: RadialPotential, a: float, b: float, m: str, n: str) -> float:
    """Gauss value of ``int_a^b V phi_m phi_n r dr`` for local hats ``m, n`` in {"left", "right"}."""
    if not 0.0 <= a < b:
        raise ValueError(f"need 0 <= a < b, got [{a}, {b}]")
    ll, lr, rr = element_potential_terms(V, np.array([a, b], dtype=float))
    key = {m, n}
    if key == {"left"}:
        return float(ll[0])
    if key == {"right"}:
        return float(rr[0])
    if key == {"left", "right"}:
        return float(lr[0])
    raise ValueError(f"local indices must be 'left' or 'right', got {m!r}, {n!r}")


def gauss_interpolant(V: RadialPotential, a: float, b: float):
    """Quadratic Lagrange interpolant of V through the Gauss nodes of [a, b]."""
    nodes = a + GAUSS_OFFSETS * (b - a)
    vals = V(nodes)

    def vh(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for k in range(3):
            basis = np.ones_like(r)
            for m in range(3):
                if m != k:
                    basis *= (r - nodes[m]) / (nodes[k] - nodes[m])
            out += vals[k] * basis
        return out

    return vh
