"""Planar domains containing the origin, boundary collocation nodes and interior samples."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

TWO_PI = 2.0 * np.pi
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class Domain:
    """A radial graph ``r < rho(theta)`` or an axis-aligned ellipse.

    Both are parametrised over ``[0, 2 pi)``: the radial graph by
    ``rho(t) (cos t, sin t)`` and the ellipse by ``(a cos t, b sin t)``.
    """

    kind: str
    R_out: float
    R_in: float
    rho: Callable | None = None
    rho_prime: Callable | None = None
    semi_axes: tuple | None = None
    description: dict = field(default_factory=dict)
    L: float = TWO_PI

    # constructors -----------------------------------------------------

    @classmethod
    def ellipse(cls, a: float, b: float, R_out: float | None = None) -> "Domain":
        if a <= 0 or b <= 0:
            raise ValueError(f"semi-axes must be positive, got {a}, {b}")
        if R_out is None:
            R_out = max(a, b)
        if R_out < max(a, b):
            raise ValueError(f"R_out={R_out} does not enclose the ellipse")
        return cls("ellipse", float(R_out), float(min(a, b)), semi_axes=(float(a), float(b)),
                   description={"kind": "ellipse", "a": a, "b": b, "R_out": R_out})

    @classmethod
    def radial_graph(cls, rho: Callable, rho_prime: Callable, R_out: float | None = None,
                     description: dict | None = None, samples: int = 20000) -> "Domain":
        t = np.linspace(0.0, TWO_PI, samples, endpoint=False)
        r = np.asarray(rho(t), dtype=float)
        if np.any(r <= 0):
            raise ValueError("rho must be positive: the domain has to contain the origin")
        r_max = float(r.max())
        if R_out is None:
            R_out = r_max
        if R_out < r_max:
            raise ValueError(f"R_out={R_out} is smaller than max rho={r_max}")
        R_in = 0.99 * float(r.min())
        return cls("radial-graph", float(R_out), R_in, rho=rho, rho_prime=rho_prime,
                   description=dict(description or {"kind": "radial-graph"}, R_out=R_out))

    @classmethod
    def disk(cls, radius: float = 1.0, R_out: float | None = None) -> "Domain":
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        dom = cls.radial_graph(lambda t: np.full_like(np.asarray(t, dtype=float), radius),
                               lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                               R_out=radius if R_out is None else R_out,
                               description={"kind": "disk", "radius": radius})
        return dom

    @classmethod
    def fourier_star(cls, base: float, cos_terms: dict | None = None, sin_terms: dict | None = None,
                     R_out: float | None = None) -> "Domain":
        """``rho(t) = base + sum_k a_k cos(k t) + b_k sin(k t)``."""
        cos_terms = {int(k): float(v) for k, v in (cos_terms or {}).items()}
        sin_terms = {int(k): float(v) for k, v in (sin_terms or {}).items()}

        def rho(t):
            t = np.asarray(t, dtype=float)
            out = np.full_like(t, base)
            for k, a in cos_terms.items():
                out += a * np.cos(k * t)
            for k, b in sin_terms.items():
                out += b * np.sin(k * t)
            return out

        def rho_prime(t):
            t = np.asarray(t, dtype=float)
            out = np.zeros_like(t)
            for k, a in cos_terms.items():
                out -= k * a * np.sin(k * t)
            for k, b in sin_terms.items():
                out += k * b * np.cos(k * t)
            return out

        return cls.radial_graph(rho, rho_prime, R_out,
                                {"kind": "fourier_star", "base": base, "cos": cos_terms, "sin": sin_terms})

    @classmethod
    def star_example(cls) -> "Domain":
        """``rho = 3 + cos(4 theta)/2`` inside the ball of radius 3.6."""
        return cls.fourier_star(3.0, {4: 0.5}, R_out=3.6)

    @classmethod
    def ellipse_example(cls) -> "Domain":
        """``x^2/4 + y^2 < 1`` inside the ball of radius 2.1."""
        return cls.ellipse(2.0, 1.0, R_out=2.1)

    # geometry ---------------------------------------------------------

    def gamma(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "ellipse":
            a, b = self.semi_axes
            return np.stack([a * np.cos(t), b * np.sin(t)], axis=-1)
        r = self.rho(t)
        return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)

    def gamma_prime(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "ellipse":
            a, b = self.semi_axes
            return np.stack([-a * np.sin(t), b * np.cos(t)], axis=-1)
        r, dr = self.rho(t), self.rho_prime(t)
        c, s = np.cos(t), np.sin(t)
        return np.stack([dr * c - r * s, dr * s + r * c], axis=-1)

    def speed(self, t):
        return np.linalg.norm(self.gamma_prime(t), axis=-1)

    def perimeter(self) -> float:
        val, _ = integrate.quad(lambda t: float(self.speed(t)), 0.0, self.L, limit=500,
                                epsabs=1e-13, epsrel=1e-13)
        return val


def contains(domain: Domain, point) -> bool | np.ndarray:
    """Strict interior test; accepts one point or an ``(n, 2)`` array."""
    p = np.asarray(point, dtype=float)
    x, y = p[..., 0], p[..., 1]
    if domain.kind == "ellipse":
        a, b = domain.semi_axes
        inside = (x / a) ** 2 + (y / b) ** 2 < 1.0
    else:
        inside = np.hypot(x, y) < domain.rho(np.arctan2(y, x))
    return bool(inside) if np.ndim(inside) == 0 else inside


def area(domain: Domain, panels: int = 64) -> float:
    """``|Omega|``; composite Gauss-Legendre on ``rho^2 / 2`` for radial graphs."""
    if domain.kind == "ellipse":
        a, b = domain.semi_axes
        return float(np.pi * a * b)
    edges = np.linspace(0.0, TWO_PI, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = mid[:, None] + half[:, None] * _GL_NODES
    vals = domain.rho(t) ** 2
    return float(0.5 * np.sum(half[:, None] * _GL_WEIGHTS * vals))


@dataclass
class BoundaryNodeSet:
    t: np.ndarray
    points: np.ndarray
    weights: np.ndarray

    @property
    def radius(self):
        return np.hypot(self.points[:, 0], self.points[:, 1])

    @property
    def angle(self):
        return np.arctan2(self.points[:, 1], self.points[:, 0])

    def __len__(self):
        return self.t.size


@dataclass
class InteriorSampleSet:
    points: np.ndarray
    area: float
    seed: int | None = None

    @property
    def radius(self):
        return np.hypot(self.points[:, 0], self.points[:, 1])

    @property
    def angle(self):
        return np.arctan2(self.points[:, 1], self.points[:, 0])

    def __len__(self):
        return self.points.shape[0]


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def boundary_nodes(domain: Domain, n: int, rng=None, jitter: bool = True) -> BoundaryNodeSet:
    """Jittered uniform grid on the parameter interval with arc-length weights.

    Each node of the uniform grid moves by at most a quarter of the grid step,
    so consecutive spacings stay strictly inside ``(L/(2n), 3L/(2n))``.
    """
    if n < 3:
        raise ValueError(f"need at least 3 boundary nodes, got {n}")
    L = domain.L
    step = L / n
    t = np.arange(n) * step
    if jitter:
        gen, _ = _as_rng(rng)
        t = t + gen.uniform(-0.25 * step, 0.25 * step, size=n)
    dt = np.diff(t, prepend=t[-1] - L)
    return BoundaryNodeSet(t, domain.gamma(t), domain.speed(t) * dt)


def sample_interior(domain: Domain, n: int, rng=None, batch: int | None = None,
                    max_trials: int = 10_000_000) -> InteriorSampleSet:
    """Uniform points in the domain by rejection from ``[-R_out, R_out]^2``."""
    if n < 1:
        raise ValueError(f"need at least one interior point, got {n}")
    gen, seed = _as_rng(rng)
    R = domain.R_out
    batch = batch or max(1024, 2 * n)
    kept = []
    count = 0
    trials = 0
    while count < n:
        cand = gen.uniform(-R, R, size=(batch, 2))
        trials += batch
        cand = cand[contains(domain, cand)]
        kept.append(cand)
        count += cand.shape[0]
        if trials >= max_trials and count < 1e-3 * trials:
            raise RuntimeError(f"rejection sampling accepted {count} of {trials} trials; "
                               "domain description looks degenerate")
    pts = np.concatenate(kept)[:n]
    return InteriorSampleSet(pts, area(domain), seed)


def domain_from_spec(spec: dict) -> Domain:
    """Build a domain from a config mapping."""
    kind = spec.get("kind")
    R_out = spec.get("R_out")
    if kind == "disk":
        return Domain.disk(float(spec.get("radius", 1.0)), R_out)
    if kind == "ellipse":
        return Domain.ellipse(float(spec["a"]), float(spec["b"]), R_out)
    if kind == "star_example":
        return Domain.star_example()
    if kind == "ellipse_example":
        return Domain.ellipse_example()
    if kind == "fourier_star":
        return Domain.fourier_star(float(spec["base"]), spec.get("cos"), spec.get("sin"), R_out)
    raise ValueError(f"unknown domain kind {kind!r}")
