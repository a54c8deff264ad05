"""Batch front end: ``wedge-edge <command> [flags] [--config file.json] [--out dir]``.

Exit status is 0 on success, 2 when the inputs violate the theorem's
hypotheses (a legitimate outcome) and 1 for malformed configs or crashes.
Outputs are written with sorted keys and no timestamps so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import zoo
from .continuation import (
    DEFAULT_DEGREE,
    DEFAULT_RHO,
    ContinuationDomain,
    RestrictedOracle,
    certify,
    reconstruct_germ,
    rescaling_sweep,
)
from .errors import ConfigError, HypothesisFailure, WedgeEdgeError
from .geometry import ConeSpec, RealWedge, cone_wedge, wedge_report
from .interpolation import constants_table
from .polynomial import MultiPoly

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS = 0, 1, 2

# config key -> argparse dest, per command; aliases map onto the same dest
_COMMON = {"seed": "seed", "workers": "workers"}
_FUNCTION = {"function": "function", "params": "params", "poly": "poly", "wedge": "wedge"}
_GERM = {"degree": "degree", "D": "degree", "rays": "rays", "rho": "rho"}
SCHEMAS = {
    "constants": {"n": "n", "p": "p", "d_max": "d_max"},
    "reconstruct": {**_COMMON, **_FUNCTION, **_GERM},
    "radius": {**_COMMON, **_FUNCTION, **_GERM, "sn_samples": "sn_samples"},
    "wedge-check": {**_COMMON, "wedge": "wedge", "samples": "samples"},
    "zoo": {"name": "name", "params": "params", "grid": "grid", "extent": "extent"},
    "sweep": {**_COMMON, **_FUNCTION, **_GERM, "scales": "scales", "sn_samples": "sn_samples"},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from exc


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wedge-edge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=True):
        p.add_argument("--config", type=Path, help="JSON file; its keys override flags")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--workers", type=int, default=1)

    def function_args(p):
        p.add_argument("--function", default="geom", help="zoo name or 'poly'")
        p.add_argument("--params", type=_json_arg, default=None, help="zoo parameters as JSON")
        p.add_argument("--poly", type=_json_arg, default=None, help="serialized polynomial (with --function poly)")
        p.add_argument("--wedge", type=_json_arg, default=None, help="wedge spec as JSON")
        p.add_argument("--degree", type=int, default=DEFAULT_DEGREE)
        p.add_argument("--rays", type=int, default=None)
        p.add_argument("--rho", type=float, default=DEFAULT_RHO)

    p = sub.add_parser("constants", help="table of the interpolation constants")
    common(p, seed=False)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--d-max", dest="d_max", type=int, default=10)

    p = sub.add_parser("reconstruct", help="recover homogeneous parts from restricted evaluations")
    common(p)
    function_args(p)

    p = sub.add_parser("radius", help="reconstruct and certify a continuation radius")
    common(p)
    function_args(p)
    p.add_argument("--sn-samples", dest="sn_samples", type=int, default=2000)

    p = sub.add_parser("wedge-check", help="starlike and measure validation of a wedge")
    common(p)
    p.add_argument("--wedge", type=_json_arg, default=None)
    p.add_argument("--samples", type=int, default=10_000)

    p = sub.add_parser("zoo", help="list test functions or emit an evaluation grid")
    common(p, seed=False)
    p.add_argument("--name", default=None)
    p.add_argument("--params", type=_json_arg, default=None)
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--extent", type=float, default=2.0)

    p = sub.add_parser("sweep", help="certified radius on rescaled wedges")
    common(p)
    function_args(p)
    p.add_argument("--scales", type=_floats, default=[1.0, 2.0, 4.0])
    p.add_argument("--sn-samples", dest="sn_samples", type=int, default=2000)
    return parser


def apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Override flag values with the keys of ``--config``; unknown keys are errors."""
    if args.config is None:
        return args
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    schema = SCHEMAS[args.command]
    extra = {}
    for key, value in data.items():
        if key in schema:
            setattr(args, schema[key], value)
        else:
            extra[key] = value
    if args.command == "zoo" and extra:
        # zoo parameters may sit at the top level, e.g. {"name": "geom", "t": 4}
        name = data.get("name")
        allowed = zoo.ZOO_PARAMS.get(name, set())
        bad = sorted(set(extra) - allowed)
        if not bad:
            args.params = {**(args.params or {}), **extra}
            extra = {}
    if extra:
        key = sorted(extra)[0]
        raise ConfigError(f"unknown config key {key!r} for command {args.command!r}")
    return args


# output helpers -----------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n")


def write_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                             for k, v in _clean(row).items()})
    path.write_text(buf.getvalue())


# config -> objects --------------------------------------------------------------

def load_function(args) -> zoo.ZooFunction:
    if args.function == "poly":
        if args.poly is None:
            raise ConfigError("function 'poly' needs a serialized polynomial under 'poly'")
        return zoo.zoo_poly(MultiPoly.from_dict(args.poly))
    try:
        return zoo.make(args.function, args.params)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc


WEDGE_KEYS = {
    "box": {"kind", "side", "nvars", "ball", "scale"},
    "orthant": {"kind", "nvars", "one", "ball", "scale", "samples"},
    "polyhedral": {"kind", "halfspaces", "one", "ball", "scale", "samples"},
    "hermitian": {"kind", "m", "ball", "scale", "samples"},
    "zoo": {"kind", "ball", "scale"},
}


def load_wedge(spec: dict | None, default: zoo.ZooFunction | None, seed: int = 0) -> tuple[RealWedge, float]:
    """``(wedge, ball)`` from a wedge spec; ``None`` or kind ``zoo`` means the function's own."""
    spec = dict(spec or {"kind": "zoo"})
    kind = spec.get("kind")
    if kind not in WEDGE_KEYS:
        raise ConfigError(f"unknown wedge kind {kind!r}; choose from {sorted(WEDGE_KEYS)}")
    bad = sorted(set(spec) - WEDGE_KEYS[kind])
    if bad:
        raise ConfigError(f"unknown wedge key {bad[0]!r} for kind {kind!r}")
    samples = int(spec.get("samples", 100_000))
    try:
        if kind == "zoo":
            if default is None:
                raise ConfigError("wedge kind 'zoo' needs a function")
            wedge, ball = default.wedge, default.ball
        elif kind == "box":
            wedge = RealWedge.box(spec.get("side", 1.0), spec.get("nvars"))
            ball = 0.0
        elif kind == "orthant":
            n = int(spec.get("nvars", default.nvars if default else 2))
            wedge = cone_wedge(ConeSpec.orthant(n, spec.get("one")), samples=samples, seed=seed)
            ball = 0.0
        elif kind == "polyhedral":
            if "halfspaces" not in spec or "one" not in spec:
                raise ConfigError("polyhedral wedges need 'halfspaces' and 'one'")
            wedge = cone_wedge(ConeSpec.polyhedral(spec["halfspaces"], spec["one"]), samples=samples, seed=seed)
            ball = 0.0
        else:
            wedge = cone_wedge(ConeSpec.hermitian(int(spec.get("m", 2))), samples=samples, seed=seed)
            ball = 0.0
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad wedge spec: {exc}") from exc
    ball = float(spec.get("ball", ball))
    scale = float(spec.get("scale", 1.0))
    if scale != 1.0:
        wedge, ball = wedge.scaled(scale), ball * scale
    return wedge, ball


def _bounds_rows(germ) -> list[dict]:
    return [{"d": d, "l1_bound": b} for d, b in enumerate(germ.l1_bounds)]


# commands -----------------------------------------------------------------------

def cmd_constants(args) -> int:
    rows = constants_table(int(args.n), float(args.p), int(args.d_max))
    write_csv(args.out / "constants.csv", rows)
    print(f"wrote {len(rows)} rows to {args.out / 'constants.csv'}")
    return EXIT_OK


def _domain(args):
    fn = load_function(args)
    wedge, ball = load_wedge(args.wedge, fn, args.seed)
    if wedge.nvars != fn.nvars:
        raise ConfigError(f"wedge has {wedge.nvars} variables but the function has {fn.nvars}")
    return fn, ContinuationDomain(wedge, ball)


def cmd_reconstruct(args) -> int:
    fn, domain = _domain(args)
    domain.check_hypotheses()
    oracle = RestrictedOracle.on_domain(fn.evaluate, domain)
    germ = reconstruct_germ(oracle, domain.wedge, int(args.degree), args.rays, float(args.rho),
                            seed=int(args.seed), workers=int(args.workers))
    out = germ.to_dict()
    out["function"] = fn.name
    write_json(args.out / "reconstruct.json", out)
    write_csv(args.out / "l1_bounds.csv", _bounds_rows(germ))
    print(f"fitted_C={germ.fitted_C:.6g} radius={'inf' if germ.infinite else f'{germ.radius:.6g}'}")
    return EXIT_OK


def cmd_radius(args) -> int:
    fn, domain = _domain(args)
    oracle = RestrictedOracle.on_domain(fn.evaluate, domain)
    rep = certify(oracle, domain, int(args.degree), args.rays, float(args.rho),
                  seed=int(args.seed), sn_samples=int(args.sn_samples), workers=int(args.workers))
    out = {**rep.germ.to_dict(), **rep.to_dict(), "function": fn.name}
    write_json(args.out / "radius.json", out)
    write_csv(args.out / "l1_bounds.csv", _bounds_rows(rep.germ))
    print(f"certified_radius={rep.certified:.6g} N0={rep.N0:g}")
    return EXIT_OK


def cmd_wedge_check(args) -> int:
    wedge, ball = load_wedge(args.wedge or {"kind": "box", "nvars": 2}, None, int(args.seed))
    report = wedge_report(wedge, int(args.samples))
    report["ball"] = ball
    write_json(args.out / "wedge_check.json", report)
    ok = report["starlike"] and report["in_positive_orthant"] and report["measure_estimate"] > 0
    print(f"starlike={report['starlike']} measure={report['measure_estimate']:.6g}")
    if not ok:
        raise HypothesisFailure("wedge fails validation")
    return EXIT_OK


def cmd_zoo(args) -> int:
    if not args.name:
        listing = []
        for name in sorted(zoo.ZOO):
            fn = zoo.make(name)
            listing.append({"name": name, "nvars": fn.nvars, "profile": fn.profile.value,
                            "singular_distance": fn.singular_distance, "params": sorted(zoo.ZOO_PARAMS[name])})
        write_json(args.out / "zoo.json", listing)
        for row in listing:
            print(f"{row['name']}\t{row['profile']}")
        return EXIT_OK
    try:
        fn = zoo.make(args.name, args.params)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    rows = zoo.evaluation_grid(fn, int(args.grid), float(args.extent))
    write_csv(args.out / f"zoo_{fn.name}.csv", rows)
    print(f"wrote {len(rows)} grid values to {args.out / f'zoo_{fn.name}.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    fn, domain = _domain(args)
    rows = rescaling_sweep(fn.evaluate, domain.wedge, [float(s) for s in args.scales], ball=domain.ball,
                           D=int(args.degree), rays=args.rays, rho=float(args.rho), seed=int(args.seed),
                           sn_samples=int(args.sn_samples), workers=int(args.workers))
    table = [r.to_dict() for r in rows]
    write_csv(args.out / "sweep.csv", table)
    write_json(args.out / "sweep.json", table)
    for r in rows:
        print(f"scale={r.scale:g} radius={r.radius} status={r.status}")
    if all(r.status != "ok" for r in rows):
        return EXIT_HYPOTHESIS
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "reconstruct": cmd_reconstruct,
    "radius": cmd_radius,
    "wedge-check": cmd_wedge_check,
    "zoo": cmd_zoo,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = apply_config(args)
        return COMMANDS[args.command](args)
    except HypothesisFailure as exc:
        write_json(args.out / "failure.json", {"command": args.command, "error": type(exc).__name__,
                                               "message": str(exc)})
        print(f"hypothesis failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (WedgeEdgeError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
