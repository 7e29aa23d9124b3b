"""Spectral scans over [1, K], local-minimum detection and staged refinement."""
from __future__ import annotations

import logging
import resource
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry
from .field import BasisBundle
from .geometry import Domain
from .potential import RadialPotential
from .quotient import CollocationGeometry, QuotientSolution, minimize_quotient
from .radial_fem import Grid1D, check_coercivity, element_terms

log = logging.getLogger(__name__)


class ScanError(RuntimeError):
    def __init__(self, lam, cause):
        super().__init__(f"failed at lambda={lam!r}: {cause}")
        self.lam = lam


class RefinementError(RuntimeError):
    """Refinement did not lower the quotient; the candidate is likely spurious."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class Stage:
    J: int
    N_h: int
    N_boundary: int
    N_interior: int
    mu: float


@dataclass
class ScanConfig:
    K: float
    mu: float
    J: int
    N_h: int
    N_boundary: int
    N_interior: int
    reg_threshold: float | None = 1e-8
    epsilon: float = 1e-6
    epsilon_scan: float = 0.1
    seed: int = 0
    refine_schedule: list = field(default_factory=list)
    sigma_gap: float = 100.0
    lam_min: float = 1.0
    bracket_half_width: int = 5
    rank_floor: float | None = 1e-14

    def __post_init__(self):
        self.refine_schedule = [s if isinstance(s, Stage) else Stage(**s) for s in self.refine_schedule]
        self.validate()

    def validate(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.K > 1:
            raise ValueError(f"K must exceed 1, got {self.K}")
        if self.lam_min < 1.0 or self.lam_min >= self.K:
            raise ValueError(f"lam_min must lie in [1, K), got {self.lam_min}")
        for name in ("J", "N_h", "N_boundary", "N_interior"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        counts = ("J", "N_h", "N_boundary", "N_interior")
        for prev, cur in zip(self.refine_schedule, self.refine_schedule[1:]):
            if any(getattr(cur, c) < getattr(prev, c) for c in counts):
                raise ValueError("refine schedule counts must be non-decreasing")
            if not cur.mu < prev.mu:
                raise ValueError("refine schedule mu must decrease")

    @property
    def scan_stage(self) -> Stage:
        return Stage(self.J, self.N_h, self.N_boundary, self.N_interior, self.mu)

    def lambdas(self) -> np.ndarray:
        n = int(np.floor((self.K - self.lam_min) / self.mu + 1e-9)) + 1
        return self.lam_min + self.mu * np.arange(n)


class CollocationProblem:
    """Fixed discretisation (grid, nodes, samples) evaluated at many spectral values."""

    def __init__(self, domain: Domain, V: RadialPotential, stage: Stage, rng):
        self.domain = domain
        self.V = V
        self.stage = stage
        self.grid = Grid1D(domain.R_out, stage.N_h)
        check_coercivity(V, self.grid)
        self.terms = element_terms(self.grid, V)
        self.bnodes = geometry.boundary_nodes(domain, stage.N_boundary, rng)
        self.ipoints = geometry.sample_interior(domain, stage.N_interior, rng)
        self.geometry = CollocationGeometry.build(self.bnodes, self.ipoints, self.grid, stage.J)

    def bundle(self, lam: float) -> BasisBundle:
        return BasisBundle.build(self.stage.J, lam, self.V, self.grid, self.terms)

    def solve(self, lam: float, reg_threshold=None, n_vectors=None, rank_floor=None) -> QuotientSolution:
        try:
            mats = self.geometry.matrices(self.bundle(lam))
            return minimize_quotient(mats, reg_threshold, n_vectors, rank_floor)
        except Exception as exc:  # attach the offending spectral value
            raise ScanError(lam, exc) from exc

    def F(self, lam: float, reg_threshold=None, rank_floor=None) -> float:
        return self.solve(lam, reg_threshold, 1, rank_floor).F_min

    def F_many(self, lambdas, reg_threshold=None, threads: int = 1, rank_floor=None) -> np.ndarray:
        f = lambda lam: self.F(lam, reg_threshold, rank_floor)
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                vals = list(pool.map(f, lambdas))
        else:
            vals = [f(lam) for lam in lambdas]
        return np.array(vals)


@dataclass
class ScanResult:
    lambdas: np.ndarray
    F_values: np.ndarray
    minima: np.ndarray
    epsilon_scan: float

    def write_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.lambdas, self.F_values]), delimiter=",",
                   header="lambda,F", comments="", fmt="%.17g")

    def candidates(self) -> list:
        return [{"index": int(i), "lambda": float(self.lambdas[i]), "F": float(self.F_values[i])}
                for i in self.minima]


def find_minima(F, epsilon_scan: float) -> np.ndarray:
    """Strict interior local minima of ``F`` lying below ``epsilon_scan``."""
    F = np.asarray(F.F_values if isinstance(F, ScanResult) else F, dtype=float)
    if F.size < 3:
        return np.array([], dtype=int)
    mid = F[1:-1]
    hit = (mid < F[:-2]) & (mid < F[2:]) & (mid < epsilon_scan)
    return np.nonzero(hit)[0] + 1


def scan(domain: Domain, V: RadialPotential, config: ScanConfig, threads: int = 1,
         lambdas=None) -> ScanResult:
    """Regularised quotient minimum on the grid ``lam_min, lam_min + mu, ..., <= K``.

    Boundary nodes and interior samples are drawn once and reused for every
    grid value, which keeps ``F`` smooth in ``lam``.
    """
    lambdas = config.lambdas() if lambdas is None else np.asarray(lambdas, dtype=float)
    prob = CollocationProblem(domain, V, config.scan_stage, np.random.default_rng(config.seed))
    F = prob.F_many(lambdas, config.reg_threshold, threads)
    return ScanResult(lambdas, F, find_minima(F, config.epsilon_scan), config.epsilon_scan)


def detect_multiplicity(sigmas, epsilon: float, sigma_gap: float) -> int:
    """Largest ``m`` whose leading ``m`` singular values are below ``epsilon`` and
    separated from the next one by at least ``sigma_gap``."""
    s = np.asarray(sigmas, dtype=float)
    best = 0
    for m in range(1, s.size + 1):
        if not s[m - 1] < epsilon:
            break
        if m == s.size or s[m] >= sigma_gap * s[m - 1]:
            best = m
    return best


@dataclass
class StageRecord:
    stage: Stage
    lam: float
    F_min: float
    evaluations: int


@dataclass
class EigenpairApprox:
    lambda_star: float
    tolerance: float
    multiplicity: int
    alphas: np.ndarray  # (2J+1, m)
    sigma_values: np.ndarray  # the m retained singular values
    sigmas_leading: np.ndarray
    F_bound: float
    history: list
    peak_memory_mb: float = 0.0
    problem: "CollocationProblem | None" = field(default=None, repr=False, compare=False)

    @property
    def accepted(self) -> bool:
        return self.multiplicity >= 1

    def to_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "tolerance": self.tolerance,
            "multiplicity": self.multiplicity,
            "accepted": self.accepted,
            "sigma_values": self.sigma_values.tolist(),
            "sigmas_leading": self.sigmas_leading.tolist(),
            "F_bound": self.F_bound,
            "alpha_ordering": "interleaved: a0, a1c, a1s, ..., aJc, aJs",
            "alphas": self.alphas.T.tolist(),
            "stages": [dict(asdict(h.stage), lambda_star=h.lam, F_min=h.F_min, evaluations=h.evaluations)
                       for h in self.history],
            "peak_memory_mb": self.peak_memory_mb,
        }


def peak_memory_mb() -> float:
    """Resident-set high-water mark of this process."""
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def bracket_minimum(prob: CollocationProblem, center: float, mu: float, half_width: int = 5,
                    lam_min: float = 1.0, max_shift: int = 50, threads: int = 1, rank_floor=None):
    """Grid minimum of ``F`` on ``center + k mu``, extending the bracket while the minimum sits on its edge."""
    cache = {}

    def evaluate(ks):
        ks = [k for k in ks if k not in cache and center + k * mu >= lam_min]
        for k, f in zip(ks, prob.F_many([center + k * mu for k in ks], None, threads, rank_floor)):
            cache[k] = f

    evaluate(range(-half_width, half_width + 1))
    while True:
        ks = sorted(cache)
        best = min(ks, key=lambda k: cache[k])
        if abs(best) >= max_shift:
            break
        if best == ks[-1]:
            evaluate(range(best + 1, best + half_width + 1))
        elif best == ks[0] and center + (best - 1) * mu >= lam_min:
            evaluate(range(best - half_width, best))
        else:
            break
    best = min(cache, key=lambda k: cache[k])
    return center + best * mu, cache[best], len(cache)


def refine(domain: Domain, V: RadialPotential, candidate: float, config: ScanConfig,
           threads: int = 1, n_keep: int = 6) -> EigenpairApprox:
    """Re-scan shrinking brackets around ``candidate`` with the refinement schedule.

    Every stage uses fresh nodes and samples and no regularisation beyond
    removing the numerical null space (``config.rank_floor``).  Stops
    early when two successive estimates agree within twice the final step
    and the current step is fine enough to see that difference.
    """
    schedule = config.refine_schedule or [config.scan_stage]
    mu_final = schedule[-1].mu
    lam = float(candidate)
    history = []
    prob = None
    for s, stage in enumerate(schedule):
        prob = CollocationProblem(domain, V, stage, np.random.default_rng([config.seed, s + 1]))
        new_lam, F, n_eval = bracket_minimum(prob, lam, stage.mu, config.bracket_half_width,
                                             config.lam_min, threads=threads, rank_floor=config.rank_floor)
        log.info("stage %d: lambda=%.10f F=%.3e (%d evaluations)", s, new_lam, F, n_eval)
        history.append(StageRecord(stage, new_lam, F, n_eval))
        # a bracket is centred on the previous estimate, so an unchanged estimate
        # only certifies convergence once the grid itself resolves 2 * mu_final
        converged = s > 0 and stage.mu <= 2 * mu_final and abs(new_lam - lam) < 2 * mu_final
        lam = new_lam
        if converged:
            break
    sol = prob.solve(lam, None, n_keep, config.rank_floor)
    m = detect_multiplicity(sol.sigmas[:n_keep], config.epsilon, config.sigma_gap)
    result = EigenpairApprox(lam, history[-1].stage.mu, m, sol.alphas[:, :m], sol.sigmas[:m],
                             sol.sigmas[:n_keep].copy(), sol.F_min, history, peak_memory_mb(), prob)
    if len(history) > 1 and not history[-1].F_min < history[0].F_min:
        raise RefinementError(
            f"quotient did not decrease across refinement stages near {candidate:.6f} "
            f"({history[0].F_min:.3e} -> {history[-1].F_min:.3e}); spurious minimum", result)
    if m == 0:
        raise RefinementError(
            f"no singular value below epsilon={config.epsilon:g} at lambda={lam:.10g} "
            f"(sigma_1={result.sigmas_leading[0]:.3e}); candidate rejected", result)
    return result


def interior_gram(result: EigenpairApprox) -> np.ndarray:
    """Discrete L2(Omega) Gram matrix of the returned eigenfunction approximations."""
    prob = result.problem
    vals = prob.geometry.matrices(prob.bundle(result.lambda_star)).interior @ result.alphas
    return vals.T @ vals


def eigenpair_at(domain: Domain, V: RadialPotential, lam: float, stage: Stage, config: ScanConfig,
                 n_keep: int = 6):
    """Minimisers at a fixed spectral value, without refinement."""
    prob = CollocationProblem(domain, V, stage, np.random.default_rng([config.seed, 0]))
    sol = prob.solve(lam, None, n_keep, config.rank_floor)
    m = detect_multiplicity(sol.sigmas[:n_keep], config.epsilon, config.sigma_gap)
    return prob, sol, m
