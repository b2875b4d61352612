"""Command-line front end.

Every command accepts ``--config FILE`` (JSON object keyed by option name);
flags given on the command line override the file.  Results are JSON (or CSV
for point sets and sweeps) and embed the resolved configuration and the
library version.

Exit status: 0 success, 2 precondition error, 3 numeric cap reached,
64 unknown command.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapExceededError, PreconditionError
from .lattice import Lattice, normalize_lattice, preset
from .pointgen import (PointSet, choose_spectrum, make_partition, read_points, write_points)
from .qmc import DEFAULT_TRUNCATION_TOL, KernelSpec, wce
from .rng import RngSpec
from .sweep import GENERATORS, make_points, scan, write_sweep_csv
from .variance import (expected_variance_dpp, expected_variance_jittered, l2_discrepancy, threshold_profile,
                       variance_montecarlo, variance_realspace, variance_spectral)

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_CAP = 3
EXIT_USAGE = 64

COMMANDS = ("gen", "variance", "wce", "discrepancy", "scan", "dpp-expected", "jittered-expected")

DEFAULTS = {
    "common": {"lattice": "identity2", "seed": 0, "threads": 1, "format": "json", "output": None,
               "no_timestamp": False},
    "gen": {"generator": "uniform", "N": None, "m": None},
    "variance": {"points": None, "generator": None, "N": None, "m": None, "R": None, "method": "spectral",
                 "tol": None, "samples": 100_000,
                 "tail_correction": False},
    "wce": {"points": None, "generator": None, "N": None, "m": None, "alpha": 2.0,
            "tol": DEFAULT_TRUNCATION_TOL},
    "discrepancy": {"points": None, "generator": None, "N": None, "m": None, "quad_tol": 1e-6},
    "scan": {"regime": "large", "generator": "uniform", "Ns": None, "N": None, "R": None, "t_grid": None,
             "shrink": None, "replicates": 20, "method": "realspace", "delta": 0.05},
    "dpp-expected": {"N": None, "R": None, "t_grid": None, "tol": None},
    "jittered-expected": {"m": None, "R": None, "samples": 1000},
}

USAGE = "usage: torushu {" + ",".join(COMMANDS) + "} [options]   (torushu <command> --help for details)"


def _int_list(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    """Comma list, or ``start:stop:count`` for an evenly spaced grid."""
    text = str(text)
    if ":" in text:
        a, b, n = text.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(n))]
    return [float(v) for v in text.split(",") if v.strip()]


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with option values (flags override it)")
    common.add_argument("--lattice", help="preset name (identity<d>, hexagonal) or JSON basis file")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("-o", "--output", help="output path (default stdout)")
    common.add_argument("--no-timestamp", action="store_true", dest="no_timestamp")

    points = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    points.add_argument("--points", help="point-set CSV written by `gen`")
    points.add_argument("--generator", choices=GENERATORS, help="generate the points instead")
    points.add_argument("--N", type=int)
    points.add_argument("--m", type=int)

    p = argparse.ArgumentParser(prog="torushu", description="Hyperuniformity of point sets on flat tori.",
                                argument_default=argparse.SUPPRESS)
    p.add_argument("--version", action="version", version=f"torushu {__version__}")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("gen", parents=[common], argument_default=argparse.SUPPRESS, help="generate a point set")
    s.add_argument("--generator", choices=GENERATORS)
    s.add_argument("--N", type=int)
    s.add_argument("--m", type=int)

    s = sub.add_parser("variance", parents=[common, points], argument_default=argparse.SUPPRESS,
                       help="number variance of a point set")
    s.add_argument("--R", type=float)
    s.add_argument("--method", choices=("spectral", "realspace", "montecarlo", "all"))
    s.add_argument("--tol", type=float, help="spectral tail tolerance (default: truncate at the cap)")
    s.add_argument("--samples", type=int, help="Monte Carlo centers")
    s.add_argument("--tail-correction", action="store_true", dest="tail_correction",
                   help="add back the exactly known diagonal part of the spectral tail")

    s = sub.add_parser("wce", parents=[common, points], argument_default=argparse.SUPPRESS,
                       help="worst-case cubature error")
    s.add_argument("--alpha", type=float)
    s.add_argument("--tol", type=float)

    s = sub.add_parser("discrepancy", parents=[common, points], argument_default=argparse.SUPPRESS,
                       help="L2 discrepancy")
    s.add_argument("--quad-tol", type=float, dest="quad_tol")

    s = sub.add_parser("scan", parents=[common], argument_default=argparse.SUPPRESS,
                       help="replicate sweep and regime fit")
    s.add_argument("--regime", choices=("large", "small", "threshold"))
    s.add_argument("--generator", choices=GENERATORS)
    s.add_argument("--Ns", type=_int_list, help="comma-separated N values")
    s.add_argument("--N", type=int, help="N for the threshold regime")
    s.add_argument("--R", type=float)
    s.add_argument("--t-grid", type=_float_list, dest="t_grid", help="t values: a,b,c or start:stop:count")
    s.add_argument("--shrink", type=float, help="small regime: R_N = R (N/N_0)^-shrink")
    s.add_argument("--replicates", type=int)
    s.add_argument("--method", choices=("realspace", "pairsum", "spectral", "montecarlo"))
    s.add_argument("--delta", type=float)

    s = sub.add_parser("dpp-expected", parents=[common], argument_default=argparse.SUPPRESS,
                       help="expected variance of the projection DPP")
    s.add_argument("--N", type=int)
    s.add_argument("--R", type=float)
    s.add_argument("--t-grid", type=_float_list, dest="t_grid")
    s.add_argument("--tol", type=float)

    s = sub.add_parser("jittered-expected", parents=[common], argument_default=argparse.SUPPRESS,
                       help="expected variance of jittered sampling")
    s.add_argument("--m", type=int)
    s.add_argument("--R", type=float)
    s.add_argument("--samples", type=int, help="Monte Carlo pairs per cell")
    return p


def resolve_config(command: str, flags: dict) -> dict:
    """Defaults, then the ``--config`` file, then explicit flags."""
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS[command])
    path = flags.pop("config", None)
    if path:
        try:
            loaded = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PreconditionError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise PreconditionError("config file must hold a JSON object")
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in cfg:
                raise PreconditionError(f"unknown config key {key!r} for {command}")
            cfg[key] = value
    cfg.update(flags)
    if isinstance(cfg.get("Ns"), str):
        cfg["Ns"] = _int_list(cfg["Ns"])
    if isinstance(cfg.get("t_grid"), str):
        cfg["t_grid"] = _float_list(cfg["t_grid"])
    cfg["command"] = command
    return cfg


def load_lattice(spec: str) -> Lattice:
    path = Path(str(spec))
    if path.suffix == ".json" or path.exists():
        try:
            obj = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PreconditionError(f"cannot read lattice {spec}: {exc}") from exc
        basis = np.asarray(obj["basis"], dtype=np.float64)
        if basis.ndim == 1:
            d = int(obj.get("dim", round(math.sqrt(basis.size))))
            basis = basis.reshape(d, d)
        return normalize_lattice(basis)
    return preset(str(spec))


def _points(cfg: dict, lattice: Lattice) -> PointSet:
    if cfg.get("points"):
        return read_points(cfg["points"])
    gen = cfg.get("generator")
    if not gen:
        raise PreconditionError("give --points FILE or --generator")
    N = cfg.get("N")
    if N is None and cfg.get("m") is not None:
        N = int(cfg["m"]) ** lattice.dim
    if N is None:
        raise PreconditionError("give --N (or --m for grid generators)")
    return make_points(lattice, gen, int(N), RngSpec(int(cfg["seed"])))


def _opt_float(value):
    return None if value is None else float(value)


def _require(cfg: dict, *keys):
    for key in keys:
        if cfg.get(key) is None:
            raise PreconditionError(f"missing required option --{key.replace('_', '-')}")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _envelope(cfg: dict, result) -> dict:
    out = {"command": cfg["command"], "version": __version__, "config": cfg, "result": result}
    if not cfg.get("no_timestamp"):
        out["timestamp"] = datetime.now(timezone.utc).isoformat()
    return out


def _emit_text(text: str, cfg: dict) -> None:
    if cfg.get("output"):
        Path(cfg["output"]).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(cfg: dict, result) -> None:
    _emit_text(json.dumps(_envelope(cfg, result), indent=2, default=_json_default) + "\n", cfg)


def _config_comment(cfg: dict) -> str:
    env = _envelope(cfg, None)
    env.pop("result")
    return json.dumps(env, default=_json_default, separators=(",", ":"))


def cmd_gen(cfg: dict) -> None:
    lattice = load_lattice(cfg["lattice"])
    X = _points(dict(cfg, points=None), lattice)
    if not cfg.get("output"):
        raise PreconditionError("gen needs -o/--output")
    write_points(X, cfg["output"], comment=_config_comment(cfg))


def cmd_variance(cfg: dict) -> None:
    _require(cfg, "R")
    X = _points(cfg, load_lattice(cfg["lattice"]))
    R, method = float(cfg["R"]), cfg["method"]
    methods = ("spectral", "realspace", "montecarlo") if method == "all" else (method,)
    out = []
    for m in methods:
        if m == "spectral":
            est = variance_spectral(X, R, _opt_float(cfg["tol"]), tail_correction=bool(cfg["tail_correction"]))
        elif m == "realspace":
            est = variance_realspace(X, R)
        else:
            est = variance_montecarlo(X, R, int(cfg["samples"]), RngSpec(int(cfg["seed"]), 1))
        out.append(est.to_dict())
    _emit_json(cfg, {"N": X.N, "estimates": out})


def cmd_wce(cfg: dict) -> None:
    X = _points(cfg, load_lattice(cfg["lattice"]))
    K = KernelSpec(X.lattice, float(cfg["alpha"]), float(cfg["tol"]))
    W = K.truncation()
    value, bound = wce(X, K, W=W, return_bound=True)
    _emit_json(cfg, {"N": X.N, "alpha": K.alpha, "wce": value, "tail_bound": bound, "W": W})


def cmd_discrepancy(cfg: dict) -> None:
    X = _points(cfg, load_lattice(cfg["lattice"]))
    _emit_json(cfg, {"N": X.N, "l2_discrepancy": l2_discrepancy(X, float(cfg["quad_tol"]))})


def cmd_scan(cfg: dict) -> None:
    lattice = load_lattice(cfg["lattice"])
    regime = cfg["regime"]
    if regime == "threshold":
        _require(cfg, "N", "t_grid")
    else:
        _require(cfg, "Ns", "R")
    report, rows = scan(lattice, cfg["generator"], regime, int(cfg["replicates"]), int(cfg["seed"]),
                        Ns=cfg.get("Ns"), R=cfg.get("R"), N=cfg.get("N"), t_values=cfg.get("t_grid"),
                        shrink=cfg.get("shrink"), threads=int(cfg["threads"]), method=cfg["method"],
                        delta=float(cfg["delta"]))
    if cfg["format"] == "csv":
        if not cfg.get("output"):
            raise PreconditionError("csv output needs -o/--output")
        write_sweep_csv(rows, cfg["output"], comment=_config_comment(cfg))
        report_path = Path(cfg["output"]).with_suffix(".report.json")
        report_path.write_text(json.dumps(_envelope(cfg, report.to_dict()), indent=2,
                                          default=_json_default) + "\n")
    else:
        _emit_json(cfg, {"report": report.to_dict(), "rows": [vars(r) for r in rows]})


def cmd_dpp_expected(cfg: dict) -> None:
    _require(cfg, "N")
    lattice = load_lattice(cfg["lattice"])
    S = choose_spectrum(lattice, int(cfg["N"]))
    tol = _opt_float(cfg["tol"])
    if cfg.get("t_grid"):
        prof = threshold_profile(S, cfg["t_grid"], tol)
        result = {"N": prof.N, "t_values": prof.t_values, "estimates": [e.to_dict() for e in prof.variance_at_t]}
    else:
        _require(cfg, "R")
        result = expected_variance_dpp(S, float(cfg["R"]), tol).to_dict()
    _emit_json(cfg, result)


def cmd_jittered_expected(cfg: dict) -> None:
    _require(cfg, "m", "R")
    P = make_partition(load_lattice(cfg["lattice"]), int(cfg["m"]))
    est = expected_variance_jittered(P, float(cfg["R"]), int(cfg["samples"]), RngSpec(int(cfg["seed"])))
    _emit_json(cfg, est.to_dict())


HANDLERS = {
    "gen": cmd_gen,
    "variance": cmd_variance,
    "wce": cmd_wce,
    "discrepancy": cmd_discrepancy,
    "scan": cmd_scan,
    "dpp-expected": cmd_dpp_expected,
    "jittered-expected": cmd_jittered_expected,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] in ("-h", "--help", "--version"):
        try:
            _parser().parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
    if not argv or argv[0] not in COMMANDS:
        print(USAGE, file=sys.stderr)
        if argv:
            print(f"torushu: unknown command {argv[0]!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(ns).items() if k != "command"}
    try:
        cfg = resolve_config(argv[0], flags)
        HANDLERS[argv[0]](cfg)
    except CapExceededError as exc:
        print(f"torushu: {exc}", file=sys.stderr)
        if exc.partial is not None and hasattr(exc.partial, "to_dict"):
            print(json.dumps({"partial": exc.partial.to_dict()}, default=_json_default), file=sys.stderr)
        return EXIT_CAP
    except (PreconditionError, OSError) as exc:
        print(f"torushu: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
