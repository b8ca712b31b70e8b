"""Command-line entry point.

Options are resolved in increasing priority: built-in defaults, the
``LIPSCOPE_SEED`` environment variable (seed only), a ``--config`` file of
``key=value`` lines, then flags on the command line.

Exit codes: 0 success, 1 usage or configuration error, 2 a check failed that
was expected to pass.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from lipscope import __version__
from lipscope.fields import CATALOG_HELP, resolve
from lipscope.kernels import BACKEND
from lipscope.numerics import FdConfig, derivative_errors
from lipscope.report import RunConfig, canonical_json, classify, emit_report, emit_witness_csv
from lipscope.witness import log_grid, refute_rho_order, verify_witness_bounds, witness_spec_for

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2

SEED_ENV = "LIPSCOPE_SEED"

DEFAULTS = {
    "classify": {"rho_grid": "0,0.5,1,2", "radii": "1,2,4,8,16,32,64", "samples": "10000",
                 "seed": "0", "center": "0", "workers": "1", "out": None},
    "witness": {"N": "4", "d": "1", "rho": "1", "n_max": "10000", "count": "32", "out": None},
    "check-grad": {"points": "100", "seed": "0", "box": "3"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path: str) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped.

    Keys may use dashes or underscores (``rho-grid`` and ``rho_grid`` agree).
    """
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc.strerror}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _settings(command: str, args: argparse.Namespace) -> dict:
    merged = dict(DEFAULTS[command])
    env_seed = os.environ.get(SEED_ENV)
    if env_seed and "seed" in merged:
        merged["seed"] = env_seed
    if args.config:
        for key, value in read_config(args.config).items():
            if key not in merged and key != "fn":
                raise UsageError(f"unknown config key {key!r} for {command}")
            merged[key] = value
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config"):
            merged[key] = value
    return merged


def _int(name, value) -> int:
    try:
        return int(str(value))
    except ValueError as exc:
        raise UsageError(f"{name} must be an integer, got {value!r}") from exc


def _float(name, value) -> float:
    try:
        return float(str(value))
    except ValueError as exc:
        raise UsageError(f"{name} must be a number, got {value!r}") from exc


def _float_list(name, value) -> tuple:
    text = str(value).strip()
    if not text:
        return ()
    return tuple(_float(name, v) for v in text.split(","))


def _require_fn(s: dict) -> str:
    fn = s.get("fn")
    if not fn:
        raise UsageError("--fn is required (on the command line or in the config file)")
    return fn


def cmd_list(args) -> int:
    for key, text in CATALOG_HELP.items():
        print(f"{key:12s} {text}")
    return EXIT_OK


def cmd_classify(args) -> int:
    s = _settings("classify", args)
    fn = _require_fn(s)
    cfg = RunConfig(
        rho_grid=_float_list("rho-grid", s["rho_grid"]),
        radii=_float_list("radii", s["radii"]),
        samples=_int("samples", s["samples"]),
        seed=_int("seed", s["seed"]),
        center=_float("center", s["center"]),
        workers=_int("workers", s["workers"]),
    )
    report = classify(fn, cfg)
    if s["out"]:
        emit_report(report, s["out"])
    else:
        sys.stdout.write(canonical_json(report.to_dict()))
    print(f"verdict: {report.verdict}", file=sys.stderr if not s["out"] else sys.stdout)
    bad = [f for f in report.fits if f.max_violation > 0]
    if bad:
        print(f"fitted constants violated on {len(bad)} fits", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _witness_id(s: dict) -> str:
    fn = _require_fn(s)
    if fn == "dlnnN":
        return f"dlnnN:{_int('N', s['N'])},{_int('d', s['d'])}"
    return fn


def cmd_witness(args) -> int:
    s = _settings("witness", args)
    fn_id = _witness_id(s)
    spec = witness_spec_for(fn_id)
    n_max = _int("n-max", s["n_max"])
    count = min(_int("count", s["count"]), max(n_max - spec.min_n + 1, 0))
    grid = log_grid(spec.min_n, n_max, count) if count >= 1 else []
    rho = _float("rho", s["rho"])
    report = refute_rho_order(spec, rho, grid)
    if s["out"]:
        emit_witness_csv(report, s["out"])
    failures = [b for b in (verify_witness_bounds(fn_id, n) for n in grid) if not b.ok]
    print(f"{fn_id} rho={rho:g}: {report.verdict} over {len(grid)} values of n")
    for b in failures:
        print(f"n={b.n}: " + "; ".join(b.failures), file=sys.stderr)
    return EXIT_CHECK_FAILED if failures else EXIT_OK


def cmd_check_grad(args) -> int:
    s = _settings("check-grad", args)
    f = resolve(_require_fn(s))
    points = _int("points", s["points"])
    if points < 1:
        raise UsageError("points must be positive")
    box = _float("box", s["box"])
    rng = np.random.default_rng(_int("seed", s["seed"]))
    X = rng.uniform(-box, box, size=(points, f.dim))
    cfg = FdConfig()
    res = derivative_errors(f, X, cfg)
    print(f"{f.name}: max gradient error {res.grad_error:.3e} (tol {cfg.tolerance_grad:g}), "
          f"max hessian error {res.hess_error:.3e} (tol {cfg.tolerance_hess:g}) over {points} points")
    return EXIT_OK if res.ok else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lipscope", description="Numerical probes of gradient smoothness.")
    parser.add_argument("--version", action="version", version=f"lipscope {__version__} ({BACKEND} kernels)")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value file of defaults for this command")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("list", help="list catalog functions", parents=[common])

    p = sub.add_parser("classify", help="fit constants on a region ladder and classify", parents=[common])
    p.add_argument("--fn")
    p.add_argument("--rho-grid", dest="rho_grid", help="comma-separated rho values")
    p.add_argument("--radii", help="comma-separated, strictly increasing ball radii")
    p.add_argument("--samples", help="samples per region")
    p.add_argument("--seed")
    p.add_argument("--center", help="common centre coordinate of the balls")
    p.add_argument("--workers")
    p.add_argument("--out", help="JSON report path (default: stdout)")

    p = sub.add_parser("witness", help="evaluate a built-in witness sequence", parents=[common])
    p.add_argument("--fn", help="dlnn3, dlnnN, or dlnnN:N,d")
    p.add_argument("--N")
    p.add_argument("--d")
    p.add_argument("--rho")
    p.add_argument("--n-max", dest="n_max")
    p.add_argument("--count", help="number of log-spaced n values")
    p.add_argument("--out", help="CSV path")

    p = sub.add_parser("check-grad", help="compare analytic and finite-difference derivatives", parents=[common])
    p.add_argument("--fn")
    p.add_argument("--points")
    p.add_argument("--seed")
    p.add_argument("--box", help="half-width of the sampling cube")
    return parser


COMMANDS = {"list": cmd_list, "classify": cmd_classify, "witness": cmd_witness, "check-grad": cmd_check_grad}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    # the package's own errors all derive from ValueError
    except (UsageError, ValueError, OSError) as exc:
        print(f"lipscope {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
