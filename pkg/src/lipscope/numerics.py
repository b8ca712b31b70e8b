"""Finite differences, matrix norms, a two-variable LP fit and Simpson quadrature."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from lipscope import kernels

LP_TIE_TOL = 1e-12


class NumericsError(ValueError):
    """Raised when a numerical routine meets invalid or non-finite input."""


@dataclass(frozen=True)
class FdConfig:
    """Central finite-difference settings.

    The step for coordinate ``i`` is ``step_scale * max(1, |x_i|)``. The two
    tolerances bound :func:`relative_error` between analytic and FD results.
    """

    step_scale: float = 1e-6
    scheme: str = "central"
    tolerance_grad: float = 1e-5
    tolerance_hess: float = 1e-4

    def __post_init__(self):
        for name in ("step_scale", "tolerance_grad", "tolerance_hess"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.scheme != "central":
            raise ValueError(f"only the central scheme is supported, got {self.scheme!r}")


def relative_error(approx, exact) -> float:
    """``max|approx - exact| / max(1, max|exact|)``; absolute near zero, relative otherwise."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    scale = max(1.0, float(np.max(np.abs(exact))) if exact.size else 1.0)
    return float(np.max(np.abs(approx - exact))) / scale if exact.size else 0.0


def _steps(x, cfg):
    return cfg.step_scale * np.maximum(1.0, np.abs(x))


def fd_gradient(f, x, cfg: FdConfig = FdConfig()) -> np.ndarray:
    """Central-difference gradient of ``f.value`` at ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != f.dim:
        raise NumericsError(f"point has {x.size} coordinates, field expects {f.dim}")
    steps = _steps(x, cfg)
    probes = np.repeat(x[None, :], 2 * x.size, axis=0)
    for i, h in enumerate(steps):
        probes[2 * i, i] += h
        probes[2 * i + 1, i] -= h
    vals = f.values(probes)
    grad = np.empty(x.size)
    for i, h in enumerate(steps):
        hi, lo = vals[2 * i], vals[2 * i + 1]
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NumericsError(f"non-finite function value when perturbing coordinate {i}")
        grad[i] = (hi - lo) / (2.0 * h)
    return grad


def fd_hessian(f, x, cfg: FdConfig = FdConfig()) -> np.ndarray:
    """Central differences of the analytic gradient, symmetrised."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != f.dim:
        raise NumericsError(f"point has {x.size} coordinates, field expects {f.dim}")
    steps = _steps(x, cfg)
    H = np.empty((x.size, x.size))
    for i, h in enumerate(steps):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        gp, gm = f.gradient(xp), f.gradient(xm)
        if not (np.all(np.isfinite(gp)) and np.all(np.isfinite(gm))):
            raise NumericsError(f"non-finite gradient when perturbing coordinate {i}")
        H[:, i] = (gp - gm) / (2.0 * h)
    return 0.5 * (H + H.T)


@dataclass(frozen=True)
class DerivativeCheck:
    """Worst FD disagreement over a batch of points."""

    grad_error: float
    hess_error: float
    worst_grad_point: np.ndarray
    worst_hess_point: np.ndarray
    cfg: FdConfig

    @property
    def ok(self) -> bool:
        return self.grad_error <= self.cfg.tolerance_grad and self.hess_error <= self.cfg.tolerance_hess


def derivative_errors(f, X, cfg: FdConfig = FdConfig()) -> DerivativeCheck:
    """Compare analytic gradient and Hessian of ``f`` with FD at every row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != f.dim or len(X) == 0:
        raise NumericsError(f"expected a non-empty (m, {f.dim}) array of points")
    g_err = np.array([relative_error(fd_gradient(f, x, cfg), f.gradient(x)) for x in X])
    h_err = np.array([relative_error(fd_hessian(f, x, cfg), f.hessian(x)) for x in X])
    ig, ih = int(np.argmax(g_err)), int(np.argmax(h_err))
    return DerivativeCheck(float(g_err[ig]), float(h_err[ih]), X[ig].copy(), X[ih].copy(), cfg)


def _check_symmetric(M: np.ndarray) -> None:
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise NumericsError(f"expected square matrices, got shape {M.shape}")
    if M.size == 0:
        return
    asym = np.max(np.abs(M - np.swapaxes(M, -1, -2)))
    scale = max(1.0, float(np.max(np.abs(M))))
    if asym > 1e-8 * scale:
        raise NumericsError(f"matrix is not symmetric (max asymmetry {asym:.3g})")


def op_norm_2(M) -> float:
    """Spectral norm of a symmetric matrix: its largest absolute eigenvalue."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _check_symmetric(M)
    return float(kernels.spectral_norms(M[None])[0])


def op_norms_2(Ms) -> np.ndarray:
    """Vectorised :func:`op_norm_2` over a ``(m, p, p)`` stack."""
    Ms = np.asarray(Ms, dtype=float)
    _check_symmetric(Ms)
    return kernels.spectral_norms(Ms)


def norm_entrywise_11(M) -> float:
    return float(np.sum(np.abs(np.asarray(M, dtype=float))))


def _upper_hull(a: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Indices of the upper convex hull of points ``(a_i, h_i)``, left to right.

    Every constraint strictly below this hull is implied by two hull constraints.
    """
    order = np.lexsort((-h, a))
    # equal abscissae keep only the highest point, which sorts first
    return order[kernels.upper_hull(a[order], h[order])]


def fit_two_var_lp(constraints: Sequence) -> tuple[float, float]:
    """Cheapest ``(C0, C1) >= 0`` with ``C0 + C1 * a_i >= h_i`` for every pair.

    Minimises ``C0 + C1``; among minimisers the smallest ``C1`` wins. The optimum
    is a vertex of the feasible polygon, so the candidates are the two axis
    intercepts and the intersections of constraints adjacent on the upper hull
    of the points ``(a_i, h_i)``. The cheapest candidates are confirmed against
    every constraint before one is returned.
    """
    arr = np.asarray(constraints, dtype=float)
    if arr.size == 0:
        raise NumericsError("at least one constraint is required")
    arr = arr.reshape(-1, 2)
    a, h = arr[:, 0], arr[:, 1]
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(h))):
        raise NumericsError("constraints must be finite")
    if np.any(a < 0) or np.any(h < 0):
        raise NumericsError("constraints need a_i >= 0 and h_i >= 0")

    hull = _upper_hull(a, h)
    ha, hh = a[hull], h[hull]
    c0s = [float(np.max(h))]
    c1s = [0.0]
    pos = a > 0
    # tiny abscissae can overflow a slope; such candidates are never optimal
    with np.errstate(over="ignore", invalid="ignore"):
        if np.all(h[~pos] <= 0.0) and pos.any():
            c0s.append(0.0)
            c1s.append(float(np.max(h[pos] / a[pos])))
        slope = np.diff(hh) / np.diff(ha)  # C1 making two adjacent constraints tight together
        inter = hh[:-1] - slope * ha[:-1]
    keep = (slope >= 0) & (inter >= 0)
    c1s.extend(slope[keep].tolist())
    c0s.extend(inter[keep].tolist())

    c0s, c1s = np.array(c0s), np.array(c1s)
    finite = np.isfinite(c0s) & np.isfinite(c1s)
    c0s, c1s = c0s[finite], c1s[finite]
    # every candidate is feasible in exact arithmetic, so confirm the cheapest first
    cost = c0s + c1s
    near = np.flatnonzero(cost <= np.min(cost) * (1.0 + LP_TIE_TOL))
    idx = kernels.lp_best_vertex(a, h, c0s[near], c1s[near], tie_tol=LP_TIE_TOL)
    idx = near[idx] if idx >= 0 else kernels.lp_best_vertex(a, h, c0s, c1s, tie_tol=LP_TIE_TOL)
    if idx < 0:  # unreachable: the C1 = 0 intercept passes any feasibility tolerance
        raise NumericsError("no feasible vertex found")
    c0, c1 = float(c0s[idx]), float(c1s[idx])
    # absorb rounding so the returned pair is feasible without slack
    viol = float(np.max(h - (c0 + c1 * a)))
    if viol > 0:
        c0 += viol
        while np.any(c0 + c1 * a < h):
            c0 = float(np.nextafter(c0, np.inf))
    return float(c0), float(c1)


def quad_segment(g: Callable, n_points: int) -> float:
    """Composite Simpson approximation of ``integral_0^1 g(t) dt``.

    ``g`` is called once with the array of nodes and must return an array of
    matching shape (a scalar is broadcast). An even ``n_points`` is bumped to the
    next odd number.
    """
    if int(n_points) != n_points or n_points < 2:
        raise NumericsError(f"n_points must be an integer >= 2, got {n_points!r}")
    n = int(n_points)
    if n % 2 == 0:
        n += 1
    t = np.linspace(0.0, 1.0, n)
    vals = np.broadcast_to(np.asarray(g(t), dtype=float), t.shape)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise NumericsError(f"non-finite integrand at node t={t[bad]!r}")
    h = 1.0 / (n - 1)
    return float(h / 3.0 * (vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-1:2].sum()))
