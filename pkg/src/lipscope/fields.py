"""Twice continuously differentiable scalar fields and the one-dimensional catalog.

A :class:`ScalarField` bundles value, gradient and Hessian callables for a map
``R^p -> R``. Single-point callables take a float array of shape ``(p,)``.
Catalog entries also provide vectorised batch callables operating on arrays of
shape ``(m, p)``, which the probes use for large sample sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

Array = np.ndarray


class CatalogError(ValueError):
    """Unknown or malformed catalog identifier."""


@dataclass(frozen=True)
class ScalarField:
    """A C^2 function ``R^dim -> R`` with exact first and second derivatives.

    ``branches`` is only populated for piecewise functions; it maps a branch
    name to a callable returning ``(value, gradient, hessian)`` of that branch's
    formula, evaluated even outside the branch's domain, so one-sided limits at
    ``breakpoints`` can be compared exactly.
    """

    dim: int
    name: str
    value: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    hessian: Callable[[Array], Array]
    batch_value: Optional[Callable[[Array], Array]] = None
    batch_gradient: Optional[Callable[[Array], Array]] = None
    batch_hessian: Optional[Callable[[Array], Array]] = None
    hessian_entry: Optional[Callable[[Array, int, int], float]] = None
    breakpoints: tuple = ()
    branches: Mapping[str, Callable] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")

    def values(self, X: Array) -> Array:
        X = _as_batch(X, self.dim)
        if self.batch_value is not None:
            return np.asarray(self.batch_value(X), dtype=float)
        return np.array([self.value(x) for x in X], dtype=float)

    def gradients(self, X: Array) -> Array:
        X = _as_batch(X, self.dim)
        if self.batch_gradient is not None:
            return np.asarray(self.batch_gradient(X), dtype=float)
        return np.array([self.gradient(x) for x in X], dtype=float).reshape(len(X), self.dim)

    def hessians(self, X: Array) -> Array:
        X = _as_batch(X, self.dim)
        if self.batch_hessian is not None:
            return np.asarray(self.batch_hessian(X), dtype=float)
        out = np.empty((len(X), self.dim, self.dim))
        for i, x in enumerate(X):
            out[i] = self.hessian(x)
        return out

    def entry(self, x: Array, i: int, j: int) -> float:
        """Single Hessian entry ``d^2 f / dx_i dx_j`` at ``x``."""
        if self.hessian_entry is not None:
            return float(self.hessian_entry(np.asarray(x, dtype=float), i, j))
        return float(self.hessian(np.asarray(x, dtype=float))[i, j])


def _as_batch(X, dim: int) -> Array:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, dim) if dim > 1 else X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"expected points of shape (m, {dim}), got {X.shape}")
    return X


def _univariate(name, f, df, d2f, **extra) -> ScalarField:
    """Wrap elementwise 1-D formulas ``f, df, d2f`` into a ScalarField."""

    def value(x):
        return float(f(np.asarray(x, dtype=float).reshape(-1)[:1])[0])

    def gradient(x):
        return df(np.asarray(x, dtype=float).reshape(-1)[:1]).astype(float)

    def hessian(x):
        return d2f(np.asarray(x, dtype=float).reshape(-1)[:1]).reshape(1, 1).astype(float)

    return ScalarField(
        dim=1,
        name=name,
        value=value,
        gradient=gradient,
        hessian=hessian,
        batch_value=lambda X: f(X[:, 0]),
        batch_gradient=lambda X: df(X[:, 0])[:, None],
        batch_hessian=lambda X: d2f(X[:, 0])[:, None, None],
        **extra,
    )


def make_monomial(k: int) -> ScalarField:
    """``x -> x**(2k+2)``; level-set but not globally Lipschitz gradient for k >= 1."""
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k!r}")
    k = int(k)
    m = 2 * k + 2

    def f(x):
        return np.asarray(x, dtype=float) ** m

    def df(x):
        return m * np.asarray(x, dtype=float) ** (m - 1)

    def d2f(x):
        return m * (m - 1) * np.asarray(x, dtype=float) ** (m - 2)

    return _univariate(f"monomial:{k}", f, df, d2f)


def make_exp_counterexample() -> ScalarField:
    """``e^|x|`` glued to the quadratic ``(e/2) x^2 + e/2`` on ``|x| < 1``.

    Its derivative is 1-order (and any rho >= 1) Lipschitz with constants (e, 1)
    but has unbounded second derivative.
    """
    e = math.e

    def outer(x):
        x = np.asarray(x, dtype=float)
        ex = np.exp(np.abs(x))
        return ex, np.sign(x) * ex, ex

    def inner(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * e * x * x + 0.5 * e, e * x, np.full_like(x, e)

    def pick(x, which):
        x = np.asarray(x, dtype=float)
        mask = np.abs(x) >= 1.0
        return np.where(mask, outer(x)[which], inner(x)[which])

    return _univariate(
        "expce",
        lambda x: pick(x, 0),
        lambda x: pick(x, 1),
        lambda x: pick(x, 2),
        breakpoints=(-1.0, 1.0),
        branches={"outer": outer, "inner": inner},
    )


def make_fractional_counterexample(rho: float) -> ScalarField:
    """Power-growth example whose derivative is rho-order Lipschitz for rho in (0, 1).

    Outside the unit interval ``f'(x) = sign(x)|x|^(1/(1-rho))``; inside, a
    quartic patch matching value, slope and curvature at ``|x| = 1``.
    """
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    q = 1.0 - rho
    r = 2.0 - rho

    def outer(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        return (
            (q / r) * ax ** (r / q),
            np.sign(x) * ax ** (1.0 / q),
            ax ** (rho / q) / q,
        )

    def inner(x):
        x = np.asarray(x, dtype=float)
        x2 = x * x
        val = (
            rho / (8 * q) * x2 * x2
            + (2 - 3 * rho) / (4 * q) * x2
            + q / r
            - (4 - 5 * rho) / (8 * q)
        )
        grad = rho / (2 * q) * x2 * x + (2 - 3 * rho) / (2 * q) * x
        hess = 3 * rho / (2 * q) * x2 + (2 - 3 * rho) / (2 * q)
        return val, grad, hess

    def pick(x, which):
        x = np.asarray(x, dtype=float)
        mask = np.abs(x) >= 1.0
        return np.where(mask, outer(x)[which], inner(x)[which])

    return _univariate(
        f"fracce:{rho:g}",
        lambda x: pick(x, 0),
        lambda x: pick(x, 1),
        lambda x: pick(x, 2),
        breakpoints=(-1.0, 1.0),
        branches={"outer": outer, "inner": inner},
    )


CATALOG_HELP = {
    "monomial:k": "x^(2k+2), k a non-negative integer",
    "expce": "e^|x| with quadratic patch on |x|<1",
    "fracce:rho": "power-growth counterexample, 0 < rho < 1",
    "dlnn3": "log(1+exp(-x1 x2 x3 x4)), three-hidden-layer scalar network",
    "dlnnN:N,d": "binary cross-entropy risk of an N-layer width-d linear network",
}


def resolve(fn_id: str) -> ScalarField:
    """Look up a catalog function by identifier, e.g. ``"fracce:0.5"``."""
    from lipscope.dlnn import make_dlnn3, make_dlnnN

    head, _, arg = fn_id.strip().partition(":")
    try:
        if head == "monomial" and arg:
            if not arg.isdigit():
                raise ValueError(arg)
            return make_monomial(int(arg))
        if head == "expce" and not arg:
            return make_exp_counterexample()
        if head == "fracce" and arg:
            return make_fractional_counterexample(float(arg))
        if head == "dlnn3" and not arg:
            return make_dlnn3()
        if head == "dlnnN" and arg:
            n_str, d_str = arg.split(",")
            return make_dlnnN(int(n_str), int(d_str))
    except ValueError as exc:
        raise CatalogError(f"malformed function id {fn_id!r}: {exc}") from exc
    raise CatalogError(f"unknown function id {fn_id!r}; known: {', '.join(CATALOG_HELP)}")
