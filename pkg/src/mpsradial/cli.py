"""Command-line driver: ``scan``, ``refine``, ``eigenfunction`` and ``oracle``.

Every run reads one YAML config, writes its outputs into ``--out`` and
finishes with a ``manifest.json`` recording what is needed to reproduce it.
Spectral values in configs and outputs refer to the shifted problem whose
potential satisfies ``V >= 1``; outputs also carry the unshifted values.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import jsonschema
import numpy as np
import scipy
import yaml

from . import __version__, geometry, oracle, potential
from .field import BasisBundle, write_grid_csv
from .radial_fem import Grid1D
from .scanner import (EigenpairApprox, RefinementError, ScanConfig, Stage, eigenpair_at, peak_memory_mb,
                      refine, scan)

log = logging.getLogger("mpsradial")

_COUNT = {"type": "integer", "minimum": 1}
_STAGE = {
    "type": "object",
    "required": ["J", "N_h", "N_boundary", "N_interior", "mu"],
    "properties": {"J": _COUNT, "N_h": _COUNT, "N_boundary": _COUNT, "N_interior": _COUNT,
                   "mu": {"type": "number", "exclusiveMinimum": 0}},
    "additionalProperties": False,
}
CONFIG_SCHEMA = {
    "type": "object",
    "required": ["domain", "potential", "scan"],
    "properties": {
        "domain": {"type": "object", "required": ["kind"],
                   "properties": {"kind": {"enum": ["disk", "ellipse", "star_example", "ellipse_example",
                                                    "fourier_star"]}}},
        "potential": {"type": "object",
                      "properties": {"kind": {"enum": ["constant", "ellipse_example", "V_E", "star_example",
                                                       "V_S", "tabulated"]}}},
        "seed": {"type": "integer", "minimum": 0},
        "scan": {
            "type": "object",
            "required": ["K", "mu", "J", "N_h", "N_boundary", "N_interior"],
            "properties": {
                "K": {"type": "number", "exclusiveMinimum": 1},
                "mu": {"type": "number", "exclusiveMinimum": 0},
                "J": _COUNT, "N_h": _COUNT, "N_boundary": _COUNT, "N_interior": _COUNT,
                "reg_threshold": {"type": ["number", "null"], "minimum": 0},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "epsilon_scan": {"type": "number", "exclusiveMinimum": 0},
                "sigma_gap": {"type": "number", "minimum": 1},
                "rank_floor": {"type": ["number", "null"], "minimum": 0},
                "lam_min": {"type": "number", "minimum": 1},
                "bracket_half_width": _COUNT,
            },
            "additionalProperties": False,
        },
        "refine_schedule": {"type": "array", "items": _STAGE},
        "output": {
            "type": "object",
            "properties": {"n_r": {"type": "integer", "minimum": 2}, "n_theta": {"type": "integer", "minimum": 2}},
            "additionalProperties": False,
        },
        "oracle": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["disk", "fd"]},
                "K": {"type": "number", "exclusiveMinimum": 1},
                "j": {"oneOf": [{"type": "integer", "minimum": 0},
                                {"type": "array", "items": {"type": "integer", "minimum": 0}}]},
                "N_fd": {"type": "integer", "minimum": 100},
                "count": _COUNT,
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


class Run:
    """Parsed configuration plus everything derived from it."""

    def __init__(self, path: Path, seed: int | None = None):
        self.path = Path(path)
        raw = self.path.read_bytes()
        self.sha256 = hashlib.sha256(raw).hexdigest()
        try:
            cfg = yaml.safe_load(raw)
            jsonschema.validate(cfg, CONFIG_SCHEMA)
        except (yaml.YAMLError, jsonschema.ValidationError) as exc:
            raise ConfigError(f"invalid config {self.path}: {getattr(exc, 'message', exc)}") from exc
        self.raw = cfg
        self.seed = int(cfg.get("seed", 0) if seed is None else seed)
        self.domain = geometry.domain_from_spec(cfg["domain"])
        V = potential.from_spec(cfg.get("potential", {}))
        self.shift = potential.unit_floor_shift(V, self.domain.R_out)
        self.V = V.shifted(self.shift)
        self.config = ScanConfig(**cfg["scan"], seed=self.seed,
                                 refine_schedule=[Stage(**s) for s in cfg.get("refine_schedule", [])])
        out = cfg.get("output", {})
        self.n_r = int(out.get("n_r", 100))
        self.n_theta = int(out.get("n_theta", 256))

    def unshifted(self, lam: float) -> float:
        return float(lam) - self.shift


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=False) + "\n")


def _export_eigenfunctions(run: Run, out: Path, lam: float, stage: Stage, alphas: np.ndarray) -> list:
    bundle = BasisBundle.build(stage.J, lam, run.V, Grid1D(run.domain.R_out, stage.N_h))
    names = []
    for k in range(alphas.shape[1]):
        name = f"eigenfunction_{k + 1}.csv"
        write_grid_csv(out / name, bundle, alphas[:, k], run.n_r, run.n_theta)
        names.append(name)
    return names


def cmd_scan(run: Run, out: Path, args) -> dict:
    res = scan(run.domain, run.V, run.config, threads=args.threads)
    res.write_csv(out / "scan.csv")
    cands = [dict(c, lambda_unshifted=run.unshifted(c["lambda"])) for c in res.candidates()]
    _write_json(out / "candidates.json", {"shift": run.shift, "epsilon_scan": run.config.epsilon_scan,
                                          "candidates": cands})
    log.info("scan: %d grid values, %d candidates", res.lambdas.size, len(cands))
    return {"outputs": ["scan.csv", "candidates.json"], "n_lambdas": int(res.lambdas.size),
            "n_candidates": len(cands)}


def _eigenpair_json(run: Run, res: EigenpairApprox) -> dict:
    data = res.to_dict()
    data["lambda_star_unshifted"] = run.unshifted(res.lambda_star)
    data["shift"] = run.shift
    data["parameters"] = {"domain": run.raw["domain"], "potential": run.raw.get("potential", {}),
                          "epsilon": run.config.epsilon, "sigma_gap": run.config.sigma_gap,
                          "rank_floor": run.config.rank_floor, "seed": run.seed}
    return data


def cmd_refine(run: Run, out: Path, args) -> dict:
    if args.lam is None:
        raise ConfigError("refine needs --lambda")
    if not run.config.refine_schedule:
        raise ConfigError("refine needs a refine_schedule in the config")
    try:
        res = refine(run.domain, run.V, args.lam, run.config, threads=args.threads)
    except RefinementError as exc:
        if exc.result is not None:
            _write_json(out / "eigenpair.json", dict(_eigenpair_json(run, exc.result), failed=str(exc)))
        raise
    outputs = ["eigenpair.json"]
    _write_json(out / "eigenpair.json", _eigenpair_json(run, res))
    if res.multiplicity:
        outputs += _export_eigenfunctions(run, out, res.lambda_star, res.history[-1].stage, res.alphas)
    return {"outputs": outputs, "lambda_star": res.lambda_star, "multiplicity": res.multiplicity}


def cmd_eigenfunction(run: Run, out: Path, args) -> dict:
    """Minimisers at a given spectral value with the last configured stage, no refinement."""
    if args.lam is None:
        raise ConfigError("eigenfunction needs --lambda")
    cfg = run.config
    stage = cfg.refine_schedule[-1] if cfg.refine_schedule else cfg.scan_stage
    _, sol, m = eigenpair_at(run.domain, run.V, args.lam, stage, cfg)
    keep = max(m, 1)
    outputs = _export_eigenfunctions(run, out, args.lam, stage, sol.alphas[:, :keep])
    _write_json(out / "eigenfunction.json", {
        "lambda": args.lam, "lambda_unshifted": run.unshifted(args.lam), "shift": run.shift,
        "multiplicity": m, "sigmas_leading": sol.sigmas[:6].tolist(), "F_min": sol.F_min,
        "stage": asdict(stage), "alpha_ordering": "interleaved: a0, a1c, a1s, ..., aJc, aJs",
        "alphas": sol.alphas[:, :keep].T.tolist(), "exported": outputs})
    return {"outputs": outputs + ["eigenfunction.json"], "multiplicity": m}


def cmd_oracle(run: Run, out: Path, args) -> dict:
    spec = run.raw.get("oracle")
    if spec is None:
        raise ConfigError("oracle needs an 'oracle' section in the config")
    if run.raw["domain"]["kind"] != "disk":
        raise ConfigError("oracles exist only for disks (radially symmetric problems)")
    R = float(run.domain.description["radius"])
    path = out / "oracle.csv"
    if spec["kind"] == "disk":
        if run.V.name != "constant" and not run.V.name.startswith("constant+"):
            raise ConfigError("the Bessel oracle needs a constant potential; use kind 'fd'")
        c = float(run.V(np.zeros(1))[0])
        spectrum = oracle.disk_spectrum(R, c, float(spec.get("K", run.config.K)))
        rows = [(e.lam, run.unshifted(e.lam), e.n, e.k, e.multiplicity) for e in spectrum.entries]
        header, fmt = "lambda,lambda_unshifted,n,k,multiplicity", ["%.17g", "%.17g", "%d", "%d", "%d"]
    else:
        js = spec.get("j", 0)
        js = [js] if isinstance(js, int) else js
        rows = []
        for j in js:
            fd = oracle.fd_radial_spectrum(j, run.V, R, int(spec.get("N_fd", 8000)), int(spec.get("count", 5)))
            rows += [(j, i + 1, v, run.unshifted(v)) for i, v in enumerate(fd.eigenvalues)]
        header, fmt = "j,index,lambda,lambda_unshifted", ["%d", "%d", "%.17g", "%.17g"]
    data = np.array(rows, dtype=float).reshape(-1, len(fmt))
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt=fmt)
    return {"outputs": ["oracle.csv"], "rows": len(rows)}


COMMANDS = {"scan": cmd_scan, "refine": cmd_refine, "eigenfunction": cmd_eigenfunction, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpsradial", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--threads", type=int, default=1, help="spectral values evaluated concurrently")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("refine", "eigenfunction"):
            p.add_argument("--lambda", dest="lam", type=float, required=True,
                           help="candidate spectral value (shifted problem)")
    return parser


def _fail(command: str, exc: BaseException, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "command": command}
    lam = getattr(exc, "lam", None)
    if lam is not None:
        err["lambda"] = lam
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        return _fail(args.command, ConfigError("--threads must be >= 1"), 2)
    start = time.perf_counter()
    try:
        run = Run(args.config, args.seed)
        args.out.mkdir(parents=True, exist_ok=True)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return _fail(args.command, exc, 2)
    try:
        summary = COMMANDS[args.command](run, args.out, args)
    except ConfigError as exc:
        return _fail(args.command, exc, 2)
    except Exception as exc:  # any module failure becomes a structured message
        log.debug("failure", exc_info=True)
        return _fail(args.command, exc, 1)
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:] if argv is None else list(argv),
        "config": str(args.config),
        "config_sha256": run.sha256,
        "seed": run.seed,
        "shift": run.shift,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "threads": args.threads,
        "wall_time_s": time.perf_counter() - start,
        "peak_memory_mb": peak_memory_mb(),
        **summary,
    }
    _write_json(args.out / "manifest.json", manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
