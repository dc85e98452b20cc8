"""Command-line scenario runner.

Verbs: solve, threshold, persson, ring, ims, example, sweep.  Global flags:
--config <path>, --out <dir>, --seed <u64>, --threads <n>, --tol <float>.
Exit codes: 0 success, 2 validation error, 3 numerical failure; failures also
leave a machine-readable error.json in the output directory.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import io, scenarios
from .errors import (
    BadRadii,
    BracketInvalid,
    CellCollapse,
    ConfigError,
    EmptyMask,
    GridMismatch,
    InsufficientSweep,
    NoConvergence,
    NotConverged,
    SpecpartError,
    WindowTooSmall,
    ZeroField,
)

_VALIDATION_ERRORS = (ConfigError, BracketInvalid, BadRadii, GridMismatch, EmptyMask)
_NUMERICAL_ERRORS = (NoConvergence, CellCollapse, NotConverged, WindowTooSmall,
                     InsufficientSweep, ZeroField)


def load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_text()
    if p.suffix.lower() == ".json":
        return json.loads(text)
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        return tomllib.loads(text)
    except Exception:
        try:
            return json.loads(text)
        except Exception as exc:
            raise ConfigError(f"could not parse {path} as TOML or JSON: {exc}") from exc


def _values_list(text):
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        out.append(math.inf if tok == "inf" else float(tok))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specpart",
        description="Spectral minimal partitions of truncated Schrodinger domains.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML/JSON configuration file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, help="64-bit seed for all stochastic choices")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--tol", type=float, help="eigensolver residual tolerance")

    sub = parser.add_subparsers(dest="verb", required=True)

    solve = sub.add_parser("solve", parents=[common], help="optimize a k-partition")
    solve.add_argument("--domain", help="domain config file (region, window, h)")
    solve.add_argument("--k", type=int)
    solve.add_argument("--p", help="energy exponent, float or 'inf'")

    thresh = sub.add_parser("threshold", parents=[common],
                            help="threshold report T_{k,p} vs computed energies")
    thresh.add_argument("--domain")
    thresh.add_argument("--k", type=int)
    thresh.add_argument("--p")

    persson = sub.add_parser("persson", parents=[common], help="Persson exhaustion sweep")
    persson.add_argument("--domain")
    persson.add_argument("--radii", help="comma-separated puncture radii")

    ring = sub.add_parser("ring", parents=[common], help="ring-union test partition")
    ring.add_argument("--domain")
    ring.add_argument("--k", type=int)
    ring.add_argument("--eps", type=float)
    ring.add_argument("--sigma", type=float)

    ims = sub.add_parser("ims", parents=[common], help="IMS localization of the ground state")
    ims.add_argument("--domain")
    ims.add_argument("--n", type=float, help="cutoff scale")

    example = sub.add_parser("example", parents=[common], help="run a named construction")
    example.add_argument("name", choices=scenarios.EXAMPLES)
    example.add_argument("--m", type=int)
    example.add_argument("--k", type=int)
    example.add_argument("--r", type=float)
    example.add_argument("--c", type=float)
    example.add_argument("--R", type=float)
    example.add_argument("--W", type=float)
    example.add_argument("--X", type=float)
    example.add_argument("--h", type=float)
    example.add_argument("--p")
    example.add_argument("--eps", type=float)
    example.add_argument("--ell", type=float)
    example.add_argument("--ny", type=int)

    sweep = sub.add_parser("sweep", parents=[common], help="sweep one axis of a config")
    sweep.add_argument("--axis", required=True, choices=["window", "p", "k", "h"])
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--domain")
    sweep.add_argument("--k", type=int)
    sweep.add_argument("--p")
    sweep.add_argument("--example", dest="example_name", choices=scenarios.EXAMPLES)

    return parser


def _merged_config(args) -> dict:
    config = load_config(args.config) if getattr(args, "config", None) else {}
    if getattr(args, "domain", None):
        loaded = load_config(args.domain)
        config["domain"] = loaded.get("domain", loaded)
    for key in ("k", "seed", "tol", "eps", "sigma", "n"):
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if getattr(args, "p", None) is not None:
        config["p"] = args.p
    if getattr(args, "radii", None):
        config["radii"] = _values_list(args.radii)
    config.setdefault("seed", 0)
    return config


def _example_params(args) -> dict:
    keys = ("m", "k", "r", "c", "R", "W", "X", "h", "p", "eps", "ell", "ny")
    return {k: getattr(args, k) for k in keys
            if getattr(args, k, None) is not None}


def run(args) -> dict:
    out = args.out
    config = _merged_config(args)
    if args.verb == "solve":
        return scenarios.run_solve(config, out)
    if args.verb == "threshold":
        return scenarios.run_threshold(config, out)
    if args.verb == "persson":
        return scenarios.run_persson(config, out)
    if args.verb == "ring":
        return scenarios.run_ring(config, out)
    if args.verb == "ims":
        return scenarios.run_ims(config, out)
    if args.verb == "example":
        params = _example_params(args)
        config["example"] = {"name": args.name, "params": params}
        return scenarios.run_example(args.name, params, config, out)
    if args.verb == "sweep":
        if getattr(args, "example_name", None):
            config["example"] = {"name": args.example_name, "params": {}}
        values = _values_list(args.values)
        return scenarios.run_sweep(config, args.axis, values, out,
                                   threads=args.threads)
    raise ConfigError(f"unknown verb {args.verb!r}")


def _write_error(out_dir, exc, code) -> None:
    try:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        io.write_report(Path(out_dir) / "error.json",
                        {"error": type(exc).__name__, "message": str(exc),
                         "exit_code": code})
    except OSError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run(args)
    except _VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        _write_error(args.out, exc, 2)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        _write_error(args.out, exc, 3)
        return 3
    except SpecpartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_error(args.out, exc, 3)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
