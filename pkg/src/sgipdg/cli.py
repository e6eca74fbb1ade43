"""Command line driver for sparse grid IPDG convergence studies.

Example::

    sgipdg --dim 2 --degree 1 --levels 2..6 --method both --out k1.csv

Options may also come from a JSON file given with ``--config``; keys are the
long option names (dashes or underscores). Command line flags win.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .multiwavelet import ParameterError
from .problems import PROBLEMS
from .study import StudyConfig, run_study, write_csv


def parse_levels(text):
    """``"A..B"`` or ``"A"`` into an ascending tuple of levels."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
    else:
        lo = hi = int(text)
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid level range {text!r}")
    return tuple(range(lo, hi + 1))


def _on_off(text):
    text = str(text).lower()
    if text not in ("on", "off", "auto"):
        raise argparse.ArgumentTypeError("expected on, off or auto")
    return None if text == "auto" else text == "on"


def build_parser():
    p = argparse.ArgumentParser(prog="sgipdg", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--dim", type=int, help="space dimension d >= 2")
    p.add_argument("--degree", type=int, help="polynomial degree k >= 1")
    p.add_argument("--levels", type=parse_levels, help="level range, e.g. 2..6")
    p.add_argument("--method", choices=["original", "modified", "both"])
    p.add_argument("--problem", choices=sorted(PROBLEMS))
    p.add_argument("--sigma", type=float, help="penalty parameter (default 5 k d)")
    p.add_argument("--quad-points", type=int, help="Gauss points per cell and axis")
    p.add_argument("--solver", choices=["dense", "cg"])
    p.add_argument("--rel-tol", type=float, help="CG relative residual tolerance")
    p.add_argument("--droptol", type=float, help="drop |a_ij| <= droptol * max|a|")
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    p.add_argument("--emit-matrix", help="Matrix Market path; tagged per method and N")
    p.add_argument("--emit-pattern", help="coordinate file path; tagged per method and N")
    p.add_argument("--kappa2", type=_on_off, default=argparse.SUPPRESS,
                   help="condition numbers on/off (default: on up to 20000 dofs)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


_DEFAULTS = {"method": "both", "problem": "example1", "rel_tol": 1e-11, "droptol": 0.0}
_KEYS = ("dim", "degree", "levels", "method", "problem", "sigma", "quad_points", "solver",
         "rel_tol", "droptol", "out", "emit_matrix", "emit_pattern", "kappa2")


def _load_config(path):
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ParameterError("config file must hold a JSON object")
    cfg = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ParameterError(f"unknown config key {key!r}")
        if key == "levels":
            value = parse_levels(value) if isinstance(value, (str, int)) else tuple(value)
        elif key == "kappa2" and isinstance(value, str):
            value = _on_off(value)
        cfg[key] = value
    return cfg


def resolve_options(args):
    """Merge defaults, the JSON config and explicit flags (in that order)."""
    opts = dict(_DEFAULTS)
    if args.config:
        opts.update(_load_config(args.config))
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None or (key == "kappa2" and hasattr(args, "kappa2")):
            opts[key] = value
    for key in ("dim", "degree", "levels"):
        if opts.get(key) is None:
            raise ParameterError(f"--{key} is required (flag or config file)")
    return opts


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        o = resolve_options(args)
        cfg = StudyConfig(
            d=o["dim"], k=o["degree"], levels=o["levels"], method=o["method"],
            problem=o["problem"], sigma=o.get("sigma"), quad_points=o.get("quad_points"),
            solver=o.get("solver"), rel_tol=o["rel_tol"], droptol=o["droptol"],
            kappa2=o.get("kappa2"), out=o.get("out"), emit_matrix=o.get("emit_matrix"),
            emit_pattern=o.get("emit_pattern"),
        )
    except (ParameterError, OSError, json.JSONDecodeError) as exc:
        print(f"sgipdg: error: {exc}", file=sys.stderr)
        return 2
    rows = run_study(cfg)
    if cfg.out is None:
        write_csv(rows, sys.stdout)
    failed = [r for r in rows if not r.ok]
    for r in failed:
        print(f"sgipdg: {r.method} N={r.N} failed: {r.error}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
