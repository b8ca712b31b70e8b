"""Classification against the smoothness hierarchy and byte-stable report files.

The classifier fits ``(C0, C1)`` for every ``rho`` on an expanding ladder of
balls around a centre. A ``rho`` whose fitted cost ``C0 + C1`` settles over the
largest regions is taken as evidence for rho-order smoothness; ``rho = 0``
settling is evidence for a global Lipschitz gradient. Each region pools the
samples of every smaller region, so fitted costs never shrink up the ladder.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from lipscope import __version__
from lipscope.fields import resolve
from lipscope.probes import fit_rho_constants, merge_norms, sample_norms
from lipscope.sampling import Region, derive_seed
from lipscope.witness import RefutationReport, log_grid, refute_rho_order, witness_spec_for

STABILITY_WINDOW = 3
STABILITY_SPREAD = 0.05
DEFAULT_RHO_GRID = (0.0, 0.5, 1.0, 2.0)
DEFAULT_RADII = tuple(2.0**k for k in range(7))
DEFAULT_SAMPLES = 10_000
REFUTATION_N_MAX = 10_000
REFUTATION_POINTS = 32
WITNESS_FAMILIES = ("dlnn3", "dlnnN")

VERDICT_GLOBAL = "global-evidence"
VERDICT_LOCAL = "local-only-evidence"

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["tool", "version", "function", "seed", "config", "rho_grid", "regions",
                 "fits", "stability", "verdict", "refutations", "timestamps"],
    "properties": {
        "tool": {"const": "lipscope"},
        "version": {"type": "string"},
        "function": {"type": "string"},
        "seed": {"type": "integer"},
        "config": {"type": "object"},
        "rho_grid": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "regions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "center", "radius", "seed"],
                "properties": {"kind": {"const": "ball"}, "radius": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
        "fits": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["rho", "region", "radius", "C0", "C1", "cost", "n_samples", "max_violation"],
                "properties": {
                    "rho": {"type": "number"},
                    "region": {"type": "integer", "minimum": 0},
                    "C0": {"type": "number", "minimum": 0},
                    "C1": {"type": "number", "minimum": 0},
                    "n_samples": {"type": "integer", "minimum": 1},
                },
            },
        },
        "stability": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["rho", "spread", "stable", "refuted"],
                "properties": {"stable": {"type": "boolean"}, "refuted": {"type": "boolean"}},
            },
        },
        "verdict": {"type": "string", "pattern": r"^(global-evidence|local-only-evidence|rho-order-evidence\(.+\))$"},
        "refutations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "rho", "verdict", "rows",
                             "hypothesis1_ok", "hypothesis2_ok", "hypothesis3_ok"],
                "properties": {"verdict": {"enum": ["refuted", "inconclusive"]}},
            },
        },
        "timestamps": {
            "type": "object",
            "required": ["generated"],
            "properties": {"generated": {"type": ["string", "null"]}},
        },
    },
}


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    rho_grid: tuple = DEFAULT_RHO_GRID
    radii: tuple = DEFAULT_RADII
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    center: float = 0.0
    workers: int = 1

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho_grid)
        radii = tuple(float(r) for r in self.radii)
        if any(not math.isfinite(r) or r < 0 for r in rho):
            raise ConfigError("rho values must be finite and non-negative")
        if len(set(rho)) != len(rho):
            raise ConfigError("rho grid must not repeat values")
        if not radii:
            raise ConfigError("need at least one radius")
        if any(not math.isfinite(r) or r <= 0 for r in radii):
            raise ConfigError("radii must be finite and positive")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigError("radii must be strictly increasing")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ConfigError("samples must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if not math.isfinite(self.center):
            raise ConfigError("center must be finite")
        object.__setattr__(self, "rho_grid", tuple(sorted(rho)))
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "samples", int(self.samples))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "workers", int(self.workers))
        object.__setattr__(self, "center", float(self.center))

    def to_dict(self) -> dict:
        return {
            "rho_grid": list(self.rho_grid),
            "radii": list(self.radii),
            "samples": self.samples,
            "seed": self.seed,
            "center": self.center,
            "workers": self.workers,
        }


@dataclass
class Fit:
    rho: float
    region: int
    radius: float
    C0: float
    C1: float
    n_samples: int
    max_violation: float

    @property
    def cost(self) -> float:
        return self.C0 + self.C1

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "region": self.region,
            "radius": self.radius,
            "C0": self.C0,
            "C1": self.C1,
            "cost": self.cost,
            "n_samples": self.n_samples,
            "max_violation": self.max_violation,
        }


@dataclass
class ClassificationReport:
    function: str
    config: RunConfig
    regions: list
    fits: list = field(default_factory=list)
    refutations: list = field(default_factory=list)
    verdict: str = VERDICT_LOCAL
    generated: Optional[str] = None

    def costs(self, rho: float) -> list:
        return [f.cost for f in sorted(self.fits, key=lambda f: f.region) if f.rho == rho]

    def refuted(self, rho: float) -> bool:
        return any(r.rho == rho and r.verdict == "refuted" for r in self.refutations)

    def stability(self) -> list:
        out = []
        for rho in self.config.rho_grid:
            s = spread(self.costs(rho))
            out.append({"rho": rho, "spread": s, "stable": s < STABILITY_SPREAD, "refuted": self.refuted(rho)})
        return out

    def to_dict(self) -> dict:
        return {
            "tool": "lipscope",
            "version": __version__,
            "function": self.function,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "rho_grid": list(self.config.rho_grid),
            "regions": [r.to_dict() for r in self.regions],
            "fits": [f.to_dict() for f in self.fits],
            "stability": self.stability(),
            "verdict": self.verdict,
            "refutations": [r.to_dict() for r in self.refutations],
            "timestamps": {"generated": self.generated},
        }


def spread(costs: Sequence[float]) -> float:
    """Relative spread ``(max - min) / max`` of the last ``STABILITY_WINDOW`` costs.

    Fewer regions use all available. No costs, or a non-finite cost, give ``inf``.
    """
    window = np.asarray(list(costs)[-STABILITY_WINDOW:], dtype=float)
    if window.size == 0 or not np.all(np.isfinite(window)):
        return math.inf
    top = float(np.max(window))
    if top == 0.0:
        return 0.0
    return (top - float(np.min(window))) / top


def decide(rho_grid: Sequence[float], costs_by_rho: dict, refuted: frozenset = frozenset()) -> str:
    """Verdict from fitted costs per ``rho`` (ordered by region).

    The smallest ``rho`` whose costs settle (and which no witness refutes)
    decides: zero means global evidence, anything else rho-order evidence.
    """
    for rho in sorted(rho_grid):
        if rho in refuted:
            continue
        if spread(costs_by_rho.get(rho, [])) < STABILITY_SPREAD:
            return VERDICT_GLOBAL if rho == 0 else f"rho-order-evidence({rho:g})"
    return VERDICT_LOCAL


def verdict_rank(verdict: str) -> int:
    """Position along the hierarchy: 0 global, 1 rho-order, 2 local only."""
    if verdict == VERDICT_GLOBAL:
        return 0
    if verdict == VERDICT_LOCAL:
        return 2
    if verdict.startswith("rho-order-evidence("):
        return 1
    raise ValueError(f"unknown verdict {verdict!r}")


def _generated_timestamp() -> Optional[str]:
    # reproducible builds convention; without it the field stays null so reruns match byte for byte
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if not epoch:
        return None
    try:
        stamp = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    except ValueError as exc:
        raise ConfigError(f"SOURCE_DATE_EPOCH must be an integer, got {epoch!r}") from exc
    return stamp.strftime("%Y-%m-%dT%H:%M:%SZ")


def builtin_refutations(fn_id: str, rho_grid: Sequence[float]) -> list:
    if fn_id.split(":", 1)[0] not in WITNESS_FAMILIES:
        return []
    spec = witness_spec_for(fn_id)
    grid = log_grid(spec.min_n, REFUTATION_N_MAX, REFUTATION_POINTS)
    return [refute_rho_order(spec, rho, grid) for rho in rho_grid]


def classify(fn_id: str, cfg: RunConfig = RunConfig()) -> ClassificationReport:
    f = resolve(fn_id)
    regions = [
        Region.ball(cfg.center, r, dim=f.dim, seed=derive_seed(cfg.seed, k))
        for k, r in enumerate(cfg.radii)
    ]
    report = ClassificationReport(fn_id, cfg, regions, generated=_generated_timestamp())
    if cfg.rho_grid:
        pooled = None
        for k, region in enumerate(regions):
            fresh = sample_norms(f, region, cfg.samples, cfg.workers)
            # balls share a centre, so every earlier sample lies in this one too
            pooled = fresh if pooled is None else merge_norms(pooled, fresh)
            for rho in cfg.rho_grid:
                res = fit_rho_constants(f, rho, region, cfg.samples, norms=pooled)
                report.fits.append(Fit(rho, k, region.radius, res.C0, res.C1, res.n_samples, res.max_violation))
    report.refutations = builtin_refutations(fn_id, cfg.rho_grid)
    refuted = frozenset(r.rho for r in report.refutations if r.verdict == "refuted")
    report.verdict = decide(cfg.rho_grid, {rho: report.costs(rho) for rho in cfg.rho_grid}, refuted)
    return report


def _canonical_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def canonical_json(obj) -> str:
    """JSON with sorted keys, two-space indent and floats at 17 significant digits.

    Non-finite floats become ``null``.
    """
    out = io.StringIO()

    def emit(o, depth):
        pad = "  " * (depth + 1)
        end = "  " * depth
        if o is None:
            out.write("null")
        elif isinstance(o, (bool, np.bool_)):
            out.write("true" if o else "false")
        elif isinstance(o, (int, np.integer)):
            out.write(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            out.write(_canonical_float(float(o)))
        elif isinstance(o, str):
            out.write(_json_string(o))
        elif isinstance(o, dict):
            if not o:
                out.write("{}")
                return
            out.write("{\n")
            keys = sorted(o)
            for i, key in enumerate(keys):
                if not isinstance(key, str):
                    raise TypeError(f"JSON keys must be strings, got {key!r}")
                out.write(pad + _json_string(key) + ": ")
                emit(o[key], depth + 1)
                out.write(",\n" if i < len(keys) - 1 else "\n")
            out.write(end + "}")
        elif isinstance(o, (list, tuple, np.ndarray)):
            items = list(o)
            if not items:
                out.write("[]")
                return
            out.write("[\n")
            for i, item in enumerate(items):
                out.write(pad)
                emit(item, depth + 1)
                out.write(",\n" if i < len(items) - 1 else "\n")
            out.write(end + "]")
        else:
            raise TypeError(f"cannot serialise {type(o).__name__}")

    emit(obj, 0)
    out.write("\n")
    return out.getvalue()


def _json_string(s: str) -> str:
    return json.dumps(s, ensure_ascii=True)


def emit_report(report: ClassificationReport, path) -> None:
    """Write ``report`` as canonical JSON; identical reports give identical bytes."""
    text = canonical_json(report.to_dict())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


CSV_HEADER = ("n", "grad_norm", "hess_lb", "kappa", "kappa_g_rho", "lower_bound", "upper_bound")


def _csv_float(x) -> str:
    return "" if x is None else _canonical_float(float(x)).replace("null", "")


def witness_csv(report: RefutationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(report.rows, key=lambda r: r.n):
        writer.writerow([str(r.n)] + [_csv_float(v) for v in
                                      (r.grad_norm, r.hess_lb, r.kappa, r.kappa_g_rho, r.lower_bound, r.upper_bound)])
    return buf.getvalue()


def emit_witness_csv(report: RefutationReport, path) -> None:
    """One row per ``n`` in ascending order; missing bounds are left empty."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(witness_csv(report))
