"""Command-line interface: ``chargelattice {theta,energy,optimize,verify,presets}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import energy as en
from .config import PRESETS, ConfigError, RunConfig, load_config, preset
from .lattice import TruncationError
from .optimize import (DEFAULT_THETA_ALPHAS, IncompatiblePeriodError, minimize_translated_theta,
                       optimal_charges, theta_landscape, verify_born)
from .potentials import Riesz

log = logging.getLogger("chargelattice")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_DISAGREE = 4
EXIT_MISMATCH = 5
MAX_CELL = 4096


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class _Outputs:
    """Collects output files and writes them once at the end."""

    def __init__(self, out: str | None):
        self.out = Path(out) if out else None
        self.files: dict[str, str] = {}
        self.primary: str | None = None

    def add(self, name: str, text: str, primary: bool = False):
        self.files[name] = text
        if primary:
            self.primary = name

    def flush(self):
        if self.out is None:
            if self.primary is not None:
                sys.stdout.write(self.files[self.primary])
            return
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out / name).write_text(text)
        log.info("wrote %s to %s", ", ".join(sorted(self.files)), self.out)


def _cell_cap(cfg: RunConfig, d: int):
    if cfg.get("N") is not None and cfg.N ** d > MAX_CELL:
        raise ConfigError(f"N^d = {cfg.N ** d} exceeds the limit {MAX_CELL}")


def _landscape_rows(lattice, alphas, grid, tol):
    rows = []
    for alpha in alphas:
        lams, values, branch, tail = theta_landscape(lattice, alpha, grid, tol)
        for lam, v in zip(lams, values):
            rows.append([repr(float(x)) for x in lam] + [repr(float(alpha)), repr(float(v)), branch,
                                                         repr(float(tail))])
    return rows


def _landscape_header(d):
    return [f"l{i + 1}" for i in range(d)] + ["alpha", "value", "branch", "tail"]


def _alphas(cfg: RunConfig, with_defaults: bool):
    extra = [float(a) for a in cfg.get("alphas", [])]
    base = list(DEFAULT_THETA_ALPHAS) if with_defaults or not extra else []
    return sorted(set(base + extra))


def cmd_theta(cfg: RunConfig, outputs: _Outputs) -> int:
    lattice = cfg.lattice()
    grid = int(cfg.get("grid", 16))
    if grid < 1:
        raise ConfigError("grid must have at least one point per axis")
    if grid ** lattice.dim > 1_000_000:
        raise ConfigError(f"grid^d = {grid ** lattice.dim} is too large")
    rows = _landscape_rows(lattice, _alphas(cfg, with_defaults=False), grid, min(cfg.tol, 1e-12))
    outputs.add("theta.csv", _csv(_landscape_header(lattice.dim), rows), primary=True)
    return EXIT_OK


def _default_routes(potential, d):
    routes = ["ewald", "spectral", "convergence-factor"]
    if potential.summable(d):
        routes.insert(0, "direct")
    if isinstance(potential, Riesz) and potential.s <= d:
        routes.append("epstein")
    return routes


def _run_route(route, lattice, potential, phi, cfg):
    tol = cfg.tol
    alpha = float(cfg.get("alpha", en.DEFAULT_ALPHA))
    if route == "direct":
        return en.energy_direct(lattice, potential, phi, tol=tol)
    if route == "convergence-factor":
        return en.energy_convergence_factor(lattice, potential, phi, tol=tol)
    if route == "ewald":
        return en.energy_ewald(lattice, potential, phi, alpha=alpha, tol=tol)
    if route == "spectral":
        return en.energy_spectral(lattice, potential, phi, tol=tol)
    if not isinstance(potential, Riesz):
        raise ConfigError("the epstein route needs a Riesz potential")
    return en.energy_epstein(lattice, potential.s, phi, tol=tol)


def _agreement(reports: dict, tol: float):
    names = list(reports)
    pairs = []
    ok = True
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ra, rb = reports[a], reports[b]
            diff = abs(ra.value - rb.value)
            allowed = ra.error + rb.error + tol * max(1.0, abs(ra.value))
            pairs.append({"routes": [a, b], "difference": diff, "allowed": allowed, "ok": diff <= allowed})
            ok = ok and diff <= allowed
    return {"ok": ok, "pairs": pairs,
            "max_difference": max((p["difference"] for p in pairs), default=0.0)}


def cmd_energy(cfg: RunConfig, outputs: _Outputs) -> int:
    lattice = cfg.lattice()
    potential = cfg.potential()
    _cell_cap(cfg, lattice.dim)
    phi = cfg.charges(lattice)
    if phi.size > MAX_CELL:
        raise ConfigError(f"N^d = {phi.size} exceeds the limit {MAX_CELL}")
    routes = cfg.get("routes") or _default_routes(potential, lattice.dim)
    reports = {}
    for route in routes:
        start = time.perf_counter()
        reports[route] = _run_route(route, lattice, potential, phi, cfg)
        log.info("%s: %.15g (+/- %.2g) in %.2fs", route, reports[route].value, reports[route].error,
                 time.perf_counter() - start)
    agreement = _agreement(reports, cfg.tol)
    reference = reports["ewald"] if "ewald" in reports else reports[routes[0]]
    route_dicts = {}
    for name, rep in reports.items():
        entry = rep.to_dict()
        entry.pop("modes", None)
        route_dicts[name] = entry
    doc = {"value": reference.value, "reference_route": reference.route, "routes": route_dicts,
           "agreement": agreement, "configuration": phi.to_dict(),
           "generator": lattice.generator, "config": cfg.raw}
    outputs.add("energy.json", dump_json(doc), primary=True)
    if cfg.get("modes_csv", True):
        table_report = next((r for r in (reports.get("ewald"), reports.get("spectral"), reference)
                             if r is not None and r.modes is not None), None)
        if table_report is not None:
            rows = [list(k) + [repr(v) if math.isfinite(v) else "", table_report.route]
                    for k, v in table_report.mode_rows()]
            header = [f"k{i + 1}" for i in range(lattice.dim)] + ["energy", "route"]
            outputs.add("modes.csv", _csv(header, rows))
    if not agreement["ok"]:
        bad = [p for p in agreement["pairs"] if not p["ok"]]
        log.error("routes disagree: %s", json.dumps(_jsonable(bad)))
        return EXIT_DISAGREE
    return EXIT_OK


def _add_configuration(outputs: _Outputs, phi):
    outputs.add("configuration.json", dump_json(phi.to_dict()))
    outputs.add("configuration.csv", phi.to_csv())


def cmd_optimize(cfg: RunConfig, outputs: _Outputs) -> int:
    lattice = cfg.lattice()
    grid = int(cfg.get("grid", 24))
    if grid < 8:
        raise ConfigError("optimize needs a grid of at least 8 points per axis")
    alphas = _alphas(cfg, with_defaults=True)
    theta = minimize_translated_theta(lattice, alphas, grid=grid)
    doc = {"theta": theta.to_dict(), "config": cfg.raw}
    code = EXIT_OK
    if not theta.consistent:
        log.error("theta minimizers differ across alpha: %s", theta.to_dict()["per_alpha"])
        code = EXIT_NUMERIC
    if "potential" in cfg.raw and "N" in cfg.raw and theta.consistent:
        _cell_cap(cfg, lattice.dim)
        opt = optimal_charges(lattice, cfg.potential(), cfg.N,
                              float(cfg.get("alpha", en.DEFAULT_ALPHA)), cfg.tol, theta=theta)
        doc["optimal"] = {
            "configuration": opt.configuration.to_dict(),
            "charges": sorted({round(float(v), 12) for v in opt.configuration.values.ravel()}),
            "energy": opt.energy, "k0": list(opt.k0), "degeneracy": opt.degeneracy,
            "degenerate_family": opt.degenerate_family, "theta_agrees": opt.theta_agrees,
        }
        _add_configuration(outputs, opt.configuration)
    outputs.add("optimize.json", dump_json(doc), primary=True)
    outputs.add("landscape.csv", _csv(_landscape_header(lattice.dim),
                                      _landscape_rows(lattice, alphas, min(grid, 64), 1e-12)))
    return code


def cmd_verify(cfg: RunConfig, outputs: _Outputs) -> int:
    lattice = cfg.lattice()
    potential = cfg.potential()
    N = cfg.N
    _cell_cap(cfg, lattice.dim)
    start = time.perf_counter()
    report = verify_born(lattice, potential, N, samples=int(cfg.get("samples", 200)), seed=cfg.seed,
                         alpha=float(cfg.get("alpha", en.DEFAULT_ALPHA)), tol=min(cfg.tol, 1e-12),
                         theta_grid=int(cfg.get("grid", 16)))
    log.info("verification finished in %.2fs", time.perf_counter() - start)
    outputs.add("verify.json", dump_json({**report.to_dict(), "config": cfg.raw}), primary=True)
    _add_configuration(outputs, report.configuration)
    if not report.match:
        log.error("constructed optimum does not match the eigen oracle: energy %.15g vs %.15g",
                  report.energy, report.brute_force_energy)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_presets(cfg: RunConfig | None, outputs: _Outputs) -> int:
    outputs.add("presets.json", dump_json(PRESETS), primary=True)
    return EXIT_OK


COMMANDS = {"theta": cmd_theta, "energy": cmd_energy, "optimize": cmd_optimize, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chargelattice",
                                     description="Energies and optimal charges on Bravais lattices.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("theta", "translated theta landscape as CSV"),
                       ("energy", "energy by several routes as JSON"),
                       ("optimize", "theta minimizers and the optimal cosine configuration"),
                       ("verify", "compare the optimal configuration with the eigen oracle"),
                       ("presets", "list the built-in run configurations")]:
        p = sub.add_parser(name, help=text)
        if name != "presets":
            src = p.add_mutually_exclusive_group()
            src.add_argument("--config", help="run configuration (JSON)")
            src.add_argument("--preset", help="name of a built-in configuration")
            p.add_argument("--tol", type=float, help="tolerance override")
            p.add_argument("--seed", type=int, help="random seed override")
        p.add_argument("--out", help="output directory (default: primary output to stdout)")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def _load(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("pass --config or --preset")
    return cfg.with_overrides(tol=args.tol, seed=args.seed)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "presets":
            outputs = _Outputs(args.out)
            code = cmd_presets(None, outputs)
        else:
            cfg = _load(args)
            outputs = _Outputs(args.out or cfg.get("out"))
            code = COMMANDS[args.command](cfg, outputs)
        outputs.flush()
        return code
    except (en.ConvergenceError, TruncationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (ConfigError, IncompatiblePeriodError, en.NonNeutralError, en.NotSummableError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_CONFIG


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
