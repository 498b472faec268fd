"""Command line entry point.

Usage::

    fracpx <command> [--config FILE] [--out DIR] [--seed N] [--strategy NAME]

Commands: ``solve``, ``sweep``, ``verify``, ``norms``, ``degree``,
``continuation``.  The config file is YAML or JSON; a ``manifest.json``
written by an earlier run is accepted as a config and reproduces that run.

Environment overrides (applied after the file, before command line flags)::

    FRACPX_LAMBDA  FRACPX_H  FRACPX_S  FRACPX_SEED  FRACPX_STRATEGY
    FRACPX_TOL  FRACPX_MAX_ITER  FRACPX_OUT

Exit status: 0 success, 1 failed verification verdict, 2 solver did not
converge, 3 invalid configuration or exponent data.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .degree import (
    MAP_PRESETS,
    BoundaryHit,
    DegreeProblem,
    RefinementLimit,
    degree,
    verify_homotopy_invariance,
)
from .exponents import ExponentOutOfRange
from .mesh import EmptyMesh, InvalidOrder
from .modular import check_prop1, check_prop2, luxemburg, modular_gagliardo, modular_lebesgue
from .operators import NoConvergence, ProblemData
from .solver import (
    STRATEGIES,
    ContinuationStall,
    Diverged,
    SolverConfig,
    lambda_sweep,
    seed_function,
    solve,
    verify_apriori,
)
from .verify import run_verification

logger = logging.getLogger("fracpx")

COMMANDS = ("solve", "sweep", "verify", "norms", "degree", "continuation")
EXIT_OK, EXIT_VERDICT, EXIT_NOCONV, EXIT_INVALID = 0, 1, 2, 3
ENV_PREFIX = "FRACPX_"

DEFAULTS: dict[str, Any] = {
    "domain": {"extents": [[0.0, 1.0]], "h": 1.0 / 16, "s": 0.5},
    "exponents": {
        "p": {"kind": "constant", "value": 2.0},
        "r": {"kind": "constant", "value": 1.5},
    },
    "lambda": 10.0,
    "sweep": {"start": 0.0, "stop": 20.0, "num": 11},
    "solver": {
        "strategy": "minimize",
        "tol": 1e-9,
        "max_iter": 500,
        "damping": 0.5,
        "continuation_steps": 11,
        "seed": "constant",
        "seed_scale": 1.0,
    },
    "verify": {"samples": 100},
    "norms": {"function": "bump", "scale": 1.0},
    "degree": {"map": "identity", "region": [[-1.0, 1.0], [-1.0, 1.0]], "target": None,
               "resolution": 16},
    "seed": 0,
    "workers": 1,
    "out": "fracpx-run",
}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _merge(base: dict, override: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(where, "unknown field")
        if isinstance(base[key], dict) and key not in ("p", "r") and isinstance(value, dict):
            out[key] = _merge(base[key], value, where + ".")
        elif isinstance(value, str) and type(base[key]) in (int, float):
            # YAML 1.1 reads exponent literals such as 1e-09 as strings
            try:
                out[key] = type(base[key])(value)
            except ValueError:
                raise ConfigError(where, f"expected a number, got {value!r}") from None
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f"line {mark.line + 1}" if mark is not None else "?"
        raise ConfigError(f"{path}:{line}", "cannot parse config") from None
    if not isinstance(raw, dict):
        raise ConfigError(path, "top level must be a mapping")
    # a manifest from an earlier run carries the resolved config
    if "config" in raw and "versions" in raw:
        raw = raw["config"]
    return raw


def _env_overrides(env) -> dict:
    out: dict[str, Any] = {}

    def put(path, value):
        node = out
        for k in path[:-1]:
            node = node.setdefault(k, {})
        node[path[-1]] = value

    table = {
        "LAMBDA": (("lambda",), float),
        "H": (("domain", "h"), float),
        "S": (("domain", "s"), float),
        "SEED": (("seed",), int),
        "STRATEGY": (("solver", "strategy"), str),
        "TOL": (("solver", "tol"), float),
        "MAX_ITER": (("solver", "max_iter"), int),
        "OUT": (("out",), str),
    }
    for name, (path, cast) in table.items():
        key = ENV_PREFIX + name
        if key in env:
            try:
                put(path, cast(env[key]))
            except ValueError:
                raise ConfigError(key, f"cannot parse {env[key]!r}") from None
    return out


@dataclass
class RunConfig:
    command: str
    raw: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def out(self) -> Path:
        return Path(self.raw["out"])

    def problem(self, lam: float | None = None) -> ProblemData:
        d = self.raw["domain"]
        e = self.raw["exponents"]
        try:
            h = float(d["h"])
            s = float(d["s"])
            extents = [[float(a), float(b)] for a, b in d["extents"]]
        except (TypeError, ValueError, KeyError):
            raise ConfigError("domain", "expected extents [[a, b], ...], h and s") from None
        for key in ("p", "r"):
            if not isinstance(e.get(key), dict) or "kind" not in e[key]:
                raise ConfigError(f"exponents.{key}", "expected a preset mapping with 'kind'")
        lam = float(self.raw["lambda"] if lam is None else lam)
        return ProblemData.build(extents, h, s, e["p"], e["r"], lam)

    def solver(self) -> SolverConfig:
        try:
            return SolverConfig(**self.raw["solver"], rng_seed=self.seed)
        except TypeError as exc:
            raise ConfigError("solver", str(exc)) from None
        except ValueError as exc:
            raise ConfigError("solver", str(exc)) from None

    def lambdas(self) -> list[float]:
        sw = self.raw["sweep"]
        if "values" in sw:
            return [float(x) for x in sw["values"]]
        try:
            return [float(x) for x in np.linspace(float(sw["start"]), float(sw["stop"]), int(sw["num"]))]
        except (KeyError, TypeError, ValueError):
            raise ConfigError("sweep", "expected start/stop/num or values") from None


def resolve_config(command: str, path: str | None, env=None, **flags) -> RunConfig:
    raw = _merge(DEFAULTS, load_config(path))
    raw = _merge(raw, _env_overrides(os.environ if env is None else env))
    if flags.get("seed") is not None:
        raw["seed"] = int(flags["seed"])
    if flags.get("out") is not None:
        raw["out"] = str(flags["out"])
    if flags.get("strategy") is not None:
        raw["solver"]["strategy"] = flags["strategy"]
    if command == "continuation":
        raw["solver"]["strategy"] = "continuation"
    if raw["solver"]["strategy"] not in STRATEGIES:
        raise ConfigError("solver.strategy", f"expected one of {STRATEGIES}")
    return RunConfig(command=command, raw=raw)


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj):
    """JSON-safe copy: arrays to lists, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_solution_csv(path: Path, data: ProblemData, u) -> None:
    dim = data.mesh.dim
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{k}" for k in range(dim)] + ["value"])
        for x, val in zip(data.mesh.nodes, np.asarray(u, dtype=float)):
            w.writerow([repr(float(c)) for c in x] + [repr(float(val))])


def _manifest(cfg: RunConfig) -> dict:
    return {
        "command": cfg.command,
        "config": cfg.raw,
        "seed": cfg.seed,
        "versions": {
            "fracpx": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }


# ---------------------------------------------------------------------------
# commands


def _cmd_solve(cfg: RunConfig) -> tuple[dict, int]:
    data = cfg.problem()
    scfg = cfg.solver()
    try:
        rep = solve(data, scfg)
    except (NoConvergence, Diverged, ContinuationStall) as exc:
        best = getattr(exc, "best", None)
        if best is None:
            best = getattr(exc, "last_root", None)
        if best is not None and np.shape(best) == (data.mesh.n,):
            write_solution_csv(cfg.out / "solution.csv", data, best)
        return {"status": "no_convergence", "error": type(exc).__name__, "message": str(exc)}, EXIT_NOCONV
    report = rep.to_dict()
    report["apriori"] = verify_apriori(rep, data, rng_seed=cfg.seed)
    report["status"] = "ok"
    write_solution_csv(cfg.out / "solution.csv", data, rep.u)
    return report, EXIT_OK


def _cmd_sweep(cfg: RunConfig) -> tuple[dict, int]:
    data = cfg.problem()
    rows, _ = lambda_sweep(data, cfg.lambdas(), cfg.solver(), workers=int(cfg.raw["workers"]))
    cols = ["lambda", "residual", "energy", "w0_norm", "nontrivial", "converged", "apriori", "error"]
    with (cfg.out / "sweep.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([row.get(c) for c in cols])
    status = EXIT_OK if all(r["converged"] for r in rows) else EXIT_NOCONV
    return {"status": "ok" if status == EXIT_OK else "no_convergence", "rows": rows}, status


def _cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    verdicts = run_verification(int(cfg.raw["verify"]["samples"]), cfg.seed)
    ok = all(v["pass"] for v in verdicts)
    return {"status": "ok" if ok else "failed", "verdicts": verdicts}, EXIT_OK if ok else EXIT_VERDICT


def _cmd_norms(cfg: RunConfig) -> tuple[dict, int]:
    data = cfg.problem()
    opts = cfg.raw["norms"]
    u = seed_function(opts["function"], data, float(opts["scale"]), cfg.seed)
    f = data.field
    out = {"function": opts["function"], "scale": opts["scale"]}
    for name, expo in (("q", f.q), ("r", f.r)):
        rep = luxemburg(lambda g, e=expo: modular_lebesgue(g, e, data.mesh), u)
        v = check_prop1(u, expo, data.mesh)
        out[f"lebesgue_{name}"] = {"modular": modular_lebesgue(u, expo, data.mesh),
                                   "norm": rep.luxemburg, "iterations": rep.iterations,
                                   "checks": v.slacks, "pass": v.passed}
    rep = luxemburg(lambda g: modular_gagliardo(g, data.kernel, f), u)
    v = check_prop2(u, data.kernel, f)
    out["gagliardo"] = {"modular": modular_gagliardo(u, data.kernel, f), "norm": rep.luxemburg,
                        "iterations": rep.iterations, "checks": v.slacks, "pass": v.passed}
    ok = all(out[k]["pass"] for k in ("lebesgue_q", "lebesgue_r", "gagliardo"))
    out["status"] = "ok" if ok else "failed"
    write_solution_csv(cfg.out / "solution.csv", data, u)
    return out, EXIT_OK if ok else EXIT_VERDICT


def _cmd_degree(cfg: RunConfig) -> tuple[dict, int]:
    opts = cfg.raw["degree"]
    name = opts["map"]
    if name == "homotopy":
        data = cfg.problem()
        ver = verify_homotopy_invariance(data)
        out = {
            "status": "ok" if ver.all_one and ver.existence else "failed",
            "radius": ver.radius,
            "doublings": ver.doublings,
            "degrees": {str(t): d for t, d in ver.degrees.items()},
            "roots_u": ver.roots_u,
        }
        return out, EXIT_OK if out["status"] == "ok" else EXIT_VERDICT
    if name not in MAP_PRESETS:
        raise ConfigError("degree.map", f"expected 'homotopy' or one of {sorted(MAP_PRESETS)}")
    region = [[float(a), float(b)] for a, b in opts["region"]]
    target = opts["target"] if opts["target"] is not None else [0.0] * len(region)
    try:
        res = degree(DegreeProblem(MAP_PRESETS[name], region, target, int(opts["resolution"])))
    except (BoundaryHit, RefinementLimit) as exc:
        return {"status": "refused", "error": type(exc).__name__, "message": str(exc)}, EXIT_VERDICT
    return {
        "status": "ok",
        "degree": res.degree,
        "certificate": {"min_boundary_distance": res.min_distance,
                        "sampling_modulus": res.modulus, "samples": res.samples},
    }, EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "continuation": _cmd_solve,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "norms": _cmd_norms,
    "degree": _cmd_degree,
}

_INVALID = (ConfigError, ExponentOutOfRange, InvalidOrder, EmptyMesh)


def run(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out / "manifest.json", _manifest(cfg))
    try:
        report, status = _COMMANDS[cfg.command](cfg)
    except _INVALID as exc:
        report = {"status": "invalid", "error": type(exc).__name__, "message": str(exc)}
        status = EXIT_INVALID
    report["command"] = cfg.command
    write_json(cfg.out / "report.json", report)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracpx",
        description="Variable-exponent norms, nonlocal p(x,y)-Laplacian solvers and degree checks.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="YAML/JSON config or manifest.json")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="random seed (non-negative, < 2**64)")
    parser.add_argument("--strategy", choices=STRATEGIES)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("fracpx: --seed must lie in [0, 2**64)", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = resolve_config(args.command, args.config, seed=args.seed, out=args.out,
                             strategy=args.strategy)
    except (ConfigError, OSError) as exc:
        print(f"fracpx: invalid configuration: {exc}", file=sys.stderr)
        out = Path(args.out or DEFAULTS["out"])
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "report.json", {"status": "invalid", "command": args.command,
                                          "error": type(exc).__name__, "message": str(exc)})
        return EXIT_INVALID
    status = run(cfg)
    logger.info("%s finished with exit status %d; outputs in %s", cfg.command, status, cfg.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
