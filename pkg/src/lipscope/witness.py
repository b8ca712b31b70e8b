"""Witness sequences that refute rho-order smoothness, and the checks on them.

A witness is a sequence of points ``x^n`` with scalars ``kappa_n`` such that
``kappa_n`` and ``kappa_n * ||grad f(x^n)||^rho`` both diverge while the
Hessian stays above ``kappa_n * ||grad f(x^n)||^rho``. No pair of constants
``(C0, C1)`` can then satisfy the rho-order Hessian bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from lipscope.dlnn import DlnnParams, make_dlnn3, make_dlnnN, weight_index, witness_params
from lipscope.fields import CatalogError, ScalarField

GROWTH_FACTOR = 1e3
ARITH_SLACK = 1e-12
DLNN3_MIN_N = 2
DLNNN_MIN_N = 3


class WitnessError(ValueError):
    """Invalid witness request, or a witness point where the field is not finite."""


def _norm(v) -> float:
    # exactly rounded sum of squares: padding zeros never change the result
    v = np.asarray(v, dtype=float).ravel()
    return math.sqrt(math.fsum(v * v))


def witness_dlnn3(n: int, rho: float) -> tuple[np.ndarray, float]:
    """``x^n = (1/n, 1, 1, n ln n)`` and ``kappa_n = n ln(n)^2 / (4 (2 ln n)^rho)``."""
    if n <= 1:
        raise WitnessError(f"dlnn3 witness needs n >= 2, got {n}")
    if rho < 0:
        raise WitnessError("rho must be non-negative")
    ln = math.log(n)
    x = np.array([1.0 / n, 1.0, 1.0, n * ln])
    return x, n * ln * ln / (4.0 * (2.0 * ln) ** rho)


def _check_dlnnN(N, d, n):
    if int(N) != N or N < 4:
        raise WitnessError(f"dlnnN witness needs depth N >= 4, got {N}")
    if int(d) != d or d < 1:
        raise WitnessError(f"width d must be a positive integer, got {d}")
    if n < DLNNN_MIN_N:
        raise WitnessError(f"dlnnN witness needs n >= 3, got {n}")


def witness_dlnnN(N: int, d: int, n: int, rho: float) -> tuple[DlnnParams, float]:
    """Network parameters of the deep witness and ``kappa_n = (n ln(n)^2 / 8) (2 / (N ln(n)^2))^(rho/2)``."""
    _check_dlnnN(N, d, n)
    if rho < 0:
        raise WitnessError("rho must be non-negative")
    ln = math.log(n)
    kappa = n * ln * ln / 8.0 * (2.0 / (N * ln * ln)) ** (rho / 2.0)
    return witness_params(int(N), int(d), n), kappa


@dataclass(frozen=True)
class WitnessBounds:
    """Sandwich bounds checked at one witness point.

    ``squared`` says whether ``lower``/``upper`` bound ``grad_norm**2`` rather
    than ``grad_norm``. ``hess_exact`` is the closed-form Hessian entry where
    one is known.
    """

    kind: str
    n: int
    grad_norm: float
    lower: float
    upper: float
    squared: bool
    hess_lb: float
    hess_threshold: float
    hess_exact: Optional[float] = None
    failures: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.failures


def _parse_kind(kind: str):
    if kind == "dlnn3":
        return "dlnn3", None, None
    if kind.startswith("dlnnN:"):
        try:
            N, d = (int(v) for v in kind.split(":", 1)[1].split(","))
        except ValueError as exc:
            raise WitnessError(f"malformed witness kind {kind!r}; expected dlnnN:N,d") from exc
        return "dlnnN", N, d
    raise WitnessError(f"no built-in witness for {kind!r}")


def _within(value, lo, hi):
    slack = ARITH_SLACK * max(1.0, abs(value))
    return lo - slack <= value <= hi + slack


def verify_witness_bounds(kind: str, n: int, f: Optional[ScalarField] = None) -> WitnessBounds:
    """Evaluate the gradient norm and the bounded Hessian entry at ``x^n``.

    Bound violations are reported in ``failures``, not raised.
    """
    family, N, d = _parse_kind(kind)
    failures = []
    ln = math.log(n) if n > 0 else float("nan")
    if family == "dlnn3":
        x, _ = witness_dlnn3(n, 0.0)
        f = f or make_dlnn3()
        g = _norm(f.gradient(x))
        lower, upper = 0.5 * ln, 2.0 * ln
        hess = abs(f.entry(x, 0, 0))
        threshold = n * ln * ln / 4.0
        exact = None
        if not _within(g, lower, upper):
            failures.append(f"grad norm {g!r} outside [{lower!r}, {upper!r}]")
        squared = False
    else:
        params, _ = witness_dlnnN(N, d, n, 0.0)
        f = f or make_dlnnN(N, d)
        theta = params.flatten()
        g = _norm(f.gradient(theta))
        lower, upper = ln * ln / 16.0, N * ln * ln / 2.0
        k = weight_index(N, d, N, 0, 0)
        hess = abs(f.entry(theta, k, k))
        threshold = n * ln * ln / 8.0
        exact = n**3 * ln * ln / (2.0 * (1.0 + n) ** 2)
        if not _within(g * g, lower, upper):
            failures.append(f"squared grad norm {g * g!r} outside [{lower!r}, {upper!r}]")
        if abs(hess - exact) > 1e-8 * exact:
            failures.append(f"hessian entry {hess!r} differs from closed form {exact!r}")
        squared = True
    if hess < threshold * (1.0 - ARITH_SLACK):
        failures.append(f"hessian entry {hess!r} below {threshold!r}")
    return WitnessBounds(kind, int(n), g, lower, upper, squared, hess, threshold, exact, tuple(failures))


@dataclass(frozen=True)
class WitnessSpec:
    """A candidate witness for ``f``.

    ``strategy`` picks the Hessian lower bound: ``"entrywise-max"`` takes the
    largest absolute entry of the full Hessian, ``"analytic-entry"`` the
    absolute value of the single entry ``entry``. Both bound the spectral norm
    from below. ``bounds(n)`` optionally gives gradient-norm bounds for reports.
    """

    f: ScalarField
    point_of: Callable[[int], np.ndarray]
    kappa_of: Callable[[int, float], float]
    strategy: str = "analytic-entry"
    entry: Optional[tuple] = None
    min_n: int = 2
    bounds: Optional[Callable[[int], tuple]] = None
    name: str = ""

    def __post_init__(self):
        if self.strategy not in ("entrywise-max", "analytic-entry"):
            raise WitnessError(f"unknown hessian lower-bound strategy {self.strategy!r}")
        if self.strategy == "analytic-entry" and self.entry is None:
            raise WitnessError("analytic-entry strategy needs an entry index")

    def hessian_lower_bound(self, x) -> float:
        if self.strategy == "analytic-entry":
            i, j = self.entry
            return abs(self.f.entry(x, i, j))
        return float(np.max(np.abs(self.f.hessian(x))))


def dlnn3_witness_spec(strategy: str = "analytic-entry") -> WitnessSpec:
    def bounds(n):
        ln = math.log(n)
        return 0.5 * ln, 2.0 * ln

    return WitnessSpec(
        f=make_dlnn3(),
        point_of=lambda n: witness_dlnn3(n, 0.0)[0],
        kappa_of=lambda n, rho: witness_dlnn3(n, rho)[1],
        strategy=strategy,
        entry=(0, 0),
        min_n=DLNN3_MIN_N,
        bounds=bounds,
        name="dlnn3",
    )


def dlnnN_witness_spec(N: int, d: int, strategy: str = "analytic-entry") -> WitnessSpec:
    _check_dlnnN(N, d, DLNNN_MIN_N)
    k = weight_index(N, d, N, 0, 0)

    def bounds(n):
        # square roots of the squared-norm sandwich
        ln = math.log(n)
        return ln / 4.0, ln * math.sqrt(N / 2.0)

    return WitnessSpec(
        f=make_dlnnN(N, d),
        point_of=lambda n: witness_dlnnN(N, d, n, 0.0)[0].flatten(),
        kappa_of=lambda n, rho: witness_dlnnN(N, d, n, rho)[1],
        strategy=strategy,
        entry=(k, k),
        min_n=DLNNN_MIN_N,
        bounds=bounds,
        name=f"dlnnN:{N},{d}",
    )


def witness_spec_for(fn_id: str, strategy: str = "analytic-entry") -> WitnessSpec:
    """Built-in witness for a catalog id (``dlnn3`` or ``dlnnN:N,d``)."""
    try:
        family, N, d = _parse_kind(fn_id)
    except WitnessError as exc:
        raise CatalogError(str(exc)) from exc
    if family == "dlnn3":
        return dlnn3_witness_spec(strategy)
    return dlnnN_witness_spec(N, d, strategy)


@dataclass(frozen=True)
class WitnessRow:
    n: int
    grad_norm: float
    hess_lb: float
    kappa: float
    kappa_g_rho: float
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None


@dataclass
class RefutationReport:
    rho: float
    rows: list = field(default_factory=list)
    hypothesis1_ok: bool = False
    hypothesis2_ok: bool = False
    hypothesis3_ok: bool = False
    name: str = ""

    @property
    def verdict(self) -> str:
        ok = self.hypothesis1_ok and self.hypothesis2_ok and self.hypothesis3_ok
        return "refuted" if ok else "inconclusive"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rho": self.rho,
            "hypothesis1_ok": self.hypothesis1_ok,
            "hypothesis2_ok": self.hypothesis2_ok,
            "hypothesis3_ok": self.hypothesis3_ok,
            "verdict": self.verdict,
            "rows": [
                {
                    "n": r.n,
                    "grad_norm": r.grad_norm,
                    "hess_lb": r.hess_lb,
                    "kappa": r.kappa,
                    "kappa_g_rho": r.kappa_g_rho,
                    "lower_bound": r.lower_bound,
                    "upper_bound": r.upper_bound,
                }
                for r in self.rows
            ],
        }


def diverges(seq) -> bool:
    """Growth proxy: the last value beats every earlier one and the first by ``GROWTH_FACTOR``."""
    seq = np.asarray(seq, dtype=float)
    if seq.size < 2:
        return False
    return bool(seq[-1] > np.max(seq[:-1]) and seq[-1] > GROWTH_FACTOR * seq[0])


def grows_monotonically(seq) -> bool:
    """Growth by ``GROWTH_FACTOR`` overall and non-decreasing over the last half."""
    seq = np.asarray(seq, dtype=float)
    if seq.size < 2:
        return False
    tail = seq[seq.size // 2:]
    return bool(seq[-1] > GROWTH_FACTOR * seq[0] and np.all(np.diff(tail) >= 0))


def witness_row(spec: WitnessSpec, n: int, rho: float) -> WitnessRow:
    x = spec.point_of(n)
    grad = spec.f.gradient(x)
    g = _norm(grad)
    h = spec.hessian_lower_bound(x)
    kappa = float(spec.kappa_of(n, rho))
    kg = kappa if rho == 0 else kappa * g**rho
    if not all(math.isfinite(v) for v in (g, h, kappa, kg)):
        raise WitnessError(f"non-finite evaluation at witness point n={n} of {spec.name or spec.f.name}")
    lo, hi = spec.bounds(n) if spec.bounds is not None else (None, None)
    return WitnessRow(int(n), g, h, kappa, kg, lo, hi)


def refute_rho_order(spec: WitnessSpec, rho: float, n_grid) -> RefutationReport:
    """Evaluate the witness over ``n_grid`` and test the three hypotheses.

    An empty ``n_grid`` gives a report with no rows and an inconclusive verdict.
    """
    if rho < 0:
        raise WitnessError("rho must be non-negative")
    grid = sorted(int(n) for n in n_grid)
    if len(set(grid)) != len(grid):
        raise WitnessError("n_grid must not repeat values")
    if grid and grid[0] < spec.min_n:
        raise WitnessError(f"n_grid starts at {grid[0]}, witness needs n >= {spec.min_n}")
    rows = [witness_row(spec, n, rho) for n in grid]
    report = RefutationReport(float(rho), rows, name=spec.name or spec.f.name)
    if rows:
        kappa = [r.kappa for r in rows]
        kg = [r.kappa_g_rho for r in rows]
        report.hypothesis1_ok = diverges(kappa)
        report.hypothesis2_ok = grows_monotonically(kg)
        report.hypothesis3_ok = all(r.hess_lb >= r.kappa_g_rho for r in rows)
    return report


def log_grid(lo: int, hi: int, count: int = 32) -> list[int]:
    """``count`` strictly increasing integers from ``lo`` to ``hi``, roughly log-spaced."""
    lo, hi, count = int(lo), int(hi), int(count)
    if count < 1 or lo < 1 or hi < lo:
        raise ValueError("need 1 <= lo <= hi and count >= 1")
    if count == 1:
        return [lo]
    if hi - lo + 1 < count:
        raise ValueError(f"cannot fit {count} distinct integers in [{lo}, {hi}]")
    vals = np.rint(np.geomspace(lo, hi, count)).astype(np.int64)
    vals[0], vals[-1] = lo, hi
    for i in range(1, count):
        vals[i] = max(vals[i], vals[i - 1] + 1)
    for i in range(count - 2, -1, -1):
        vals[i] = min(vals[i], vals[i + 1] - 1)
    return [int(v) for v in vals]


__all__ = [
    "WitnessError", "WitnessBounds", "WitnessSpec", "WitnessRow", "RefutationReport",
    "witness_dlnn3", "witness_dlnnN", "verify_witness_bounds", "dlnn3_witness_spec",
    "dlnnN_witness_spec", "witness_spec_for", "refute_rho_order", "log_grid",
]
