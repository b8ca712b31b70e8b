"""Sampling probes for global, level-set, local, rho-order and rho-integrated smoothness.

Every probe is deterministic given the region seed. Gradient and Hessian
evaluation can be spread over ``workers`` threads; chunks are reassembled in
sample order, so results do not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from lipscope.numerics import NumericsError, fit_two_var_lp, op_norms_2, quad_segment
from lipscope.sampling import Region, derive_seed, sample_ball, sample_points

CHUNK = 2048
MIN_PAIR_DISTANCE = 1e-14
MAX_RESAMPLES = 100


class ProbeError(ValueError):
    """A probe could not be carried out as requested."""


@dataclass
class ProbeResult:
    """Outcome of a smoothness probe.

    ``max_violation <= 0`` means no sampled point broke the tested inequality.
    Estimation probes fill ``estimate`` and leave ``max_violation`` at 0.
    """

    rho: float
    C0: float
    C1: float
    region: Region
    n_samples: int
    max_violation: float
    worst_point: np.ndarray
    estimate: Optional[float] = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.max_violation <= 0.0

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "C0": self.C0,
            "C1": self.C1,
            "region": self.region.to_dict(),
            "n_samples": self.n_samples,
            "max_violation": self.max_violation,
            "worst_point": np.asarray(self.worst_point, dtype=float).tolist(),
            "estimate": self.estimate,
            "note": self.note,
        }


@dataclass
class SampleNorms:
    """Sample points with ``||grad f||_2`` and ``||hess f||_2`` at each."""

    points: np.ndarray
    grad_norms: np.ndarray
    hess_norms: np.ndarray


def _chunked(fn, X: np.ndarray, workers: int) -> list:
    chunks = [X[i:i + CHUNK] for i in range(0, len(X), CHUNK)]
    if workers <= 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def _norms_of(f, X):
    G = f.gradients(X)
    H = f.hessians(X)
    return np.linalg.norm(G, axis=1), op_norms_2(H)


def gradient_and_hessian_norms(f, X, workers: int = 1):
    X = np.asarray(X, dtype=float)
    parts = _chunked(lambda c: _norms_of(f, c), X, workers)
    g = np.concatenate([p[0] for p in parts])
    h = np.concatenate([p[1] for p in parts])
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        bad = int(np.flatnonzero(~(np.isfinite(g) & np.isfinite(h)))[0])
        raise ProbeError(f"non-finite derivative at sample {bad}: {X[bad].tolist()}")
    return g, h


def sample_norms(f, region: Region, n: int, workers: int = 1, extra_points=None) -> SampleNorms:
    """Sample ``region`` and evaluate derivative norms.

    ``extra_points`` (inside the region) are appended to the ``n`` samples, e.g.
    known witness points or samples from smaller nested regions.
    """
    if n < 1:
        raise ProbeError("need at least one sample")
    if region.dim != f.dim:
        raise ProbeError(f"region has dimension {region.dim}, field has {f.dim}")
    X = sample_points(region, n, f=f)
    if extra_points is not None and len(extra_points):
        extra = np.asarray(extra_points, dtype=float).reshape(-1, f.dim)
        outside = [i for i, x in enumerate(extra) if not region.contains(x, f)]
        if outside:
            raise ProbeError(f"extra point {outside[0]} lies outside the region")
        X = np.vstack([X, extra])
    g, h = gradient_and_hessian_norms(f, X, workers)
    return SampleNorms(X, g, h)


def merge_norms(*parts: SampleNorms) -> SampleNorms:
    return SampleNorms(
        np.vstack([p.points for p in parts]),
        np.concatenate([p.grad_norms for p in parts]),
        np.concatenate([p.hess_norms for p in parts]),
    )


def _powered(g: np.ndarray, rho: float) -> np.ndarray:
    # rho = 0 maps every norm to 1, including a zero gradient
    return np.ones_like(g) if rho == 0 else g**rho


def _check_constants(rho, C0, C1):
    if rho < 0 or C0 < 0 or C1 < 0:
        raise ProbeError("rho, C0 and C1 must all be non-negative")


def hessian_bound_check(f, rho: float, C0: float, C1: float, region: Region, n: int,
                        workers: int = 1, norms: Optional[SampleNorms] = None) -> ProbeResult:
    """Largest sampled ``||hess f(x)|| - C0 - C1 ||grad f(x)||^rho`` and where it occurs."""
    _check_constants(rho, C0, C1)
    s = norms if norms is not None else sample_norms(f, region, n, workers)
    viol = s.hess_norms - (C0 + C1 * _powered(s.grad_norms, rho))
    k = int(np.argmax(viol))
    return ProbeResult(float(rho), float(C0), float(C1), region, len(s.points),
                       float(viol[k]), s.points[k].copy())


def fit_rho_constants(f, rho: float, region: Region, n: int, workers: int = 1,
                      norms: Optional[SampleNorms] = None) -> ProbeResult:
    """Cheapest ``(C0, C1)`` bounding ``||hess f||`` by ``C0 + C1 ||grad f||^rho`` on the samples."""
    if rho < 0:
        raise ProbeError("rho must be non-negative")
    s = norms if norms is not None else sample_norms(f, region, n, workers)
    a = _powered(s.grad_norms, rho)
    C0, C1 = fit_two_var_lp(np.column_stack([a, s.hess_norms]))
    viol = s.hess_norms - (C0 + C1 * a)
    k = int(np.argmax(viol))
    return ProbeResult(float(rho), C0, C1, region, len(s.points), float(viol[k]),
                       s.points[k].copy(), estimate=C0 + C1)


def _pair_ratios(f, X1, X2, workers):
    def work(idx):
        G1 = f.gradients(X1[idx])
        G2 = f.gradients(X2[idx])
        return np.linalg.norm(G1 - G2, axis=1) / np.linalg.norm(X1[idx] - X2[idx], axis=1)

    idx = np.arange(len(X1))
    parts = _chunked(work, idx, workers)
    return np.concatenate(parts)


def local_lipschitz_estimate(f, ball: Region, n_pairs: int, workers: int = 1) -> ProbeResult:
    """Lower bound on the gradient's Lipschitz constant inside ``ball``.

    The larger of the best sampled difference quotient and the largest Hessian
    norm at the pair midpoints.
    """
    if ball.kind != "ball" or not (ball.radius and ball.radius > 0):
        raise ProbeError("local estimate needs a ball of positive radius")
    if n_pairs < 1:
        raise ProbeError("need at least one pair")
    if ball.dim != f.dim:
        raise ProbeError(f"ball has dimension {ball.dim}, field has {f.dim}")
    X1 = sample_ball(ball, n_pairs, seed=derive_seed(ball.seed, 1))
    X2 = sample_ball(ball, n_pairs, seed=derive_seed(ball.seed, 2))
    close = np.linalg.norm(X1 - X2, axis=1) < MIN_PAIR_DISTANCE
    for i in np.flatnonzero(close):
        for attempt in range(MAX_RESAMPLES):
            rng = np.random.default_rng([ball.seed, int(i), attempt])
            u = rng.standard_normal((2, ball.dim))
            r = ball.radius * rng.random(2) ** (1.0 / ball.dim)
            pts = ball.center + u / np.linalg.norm(u, axis=1)[:, None] * r[:, None]
            if np.linalg.norm(pts[0] - pts[1]) >= MIN_PAIR_DISTANCE:
                X1[i], X2[i] = pts
                break
        else:
            raise ProbeError(f"pair {i} stayed coincident after {MAX_RESAMPLES} resamples")
    ratios = _pair_ratios(f, X1, X2, workers)
    mid = 0.5 * (X1 + X2)
    _, hmid = gradient_and_hessian_norms(f, mid, workers)
    kr, kh = int(np.argmax(ratios)), int(np.argmax(hmid))
    if ratios[kr] >= hmid[kh]:
        est, worst = float(ratios[kr]), X1[kr]
    else:
        est, worst = float(hmid[kh]), mid[kh]
    return ProbeResult(0.0, 0.0, 0.0, ball, n_pairs, 0.0, worst.copy(), estimate=est)


def rho_integrated_check(f, rho: float, C0: float, C1: float, x1, x2,
                         quad_points: int = 1001) -> ProbeResult:
    """``||grad f(x1) - grad f(x2)|| - (C0 + C1 * avg ||grad f||^rho) ||x1 - x2||`` along the segment."""
    _check_constants(rho, C0, C1)
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.size != f.dim or x2.size != f.dim:
        raise ProbeError("segment endpoints must match the field dimension")
    length = float(np.linalg.norm(x2 - x1))
    if length == 0.0:
        raise ProbeError("segment endpoints coincide")
    if int(quad_points) != quad_points or quad_points < 3:
        raise ProbeError(f"quad_points must be an integer >= 3, got {quad_points!r}")
    d = x2 - x1

    def integrand(t):
        pts = x1[None, :] + t[:, None] * d[None, :]
        return _powered(np.linalg.norm(f.gradients(pts), axis=1), rho)

    try:
        avg = quad_segment(integrand, quad_points)
    except NumericsError as exc:
        raise ProbeError(f"quadrature failed: {exc}") from exc
    lhs = float(np.linalg.norm(f.gradient(x2) - f.gradient(x1)))
    rhs = (C0 + C1 * avg) * length
    return ProbeResult(float(rho), float(C0), float(C1), Region.segment(x1, x2), int(quad_points),
                       lhs - rhs, x1.copy(), estimate=rhs)


def level_set_lipschitz_probe(f, s: float, bbox: Region, n_pairs: int, workers: int = 1) -> ProbeResult:
    """Difference-quotient estimate of the gradient's Lipschitz constant on ``{f <= s}``.

    Sub-level sets of the network objectives are unbounded, so sampling is by
    rejection from ``bbox`` and the estimate only covers the part inside it.
    """
    if n_pairs < 1:
        raise ProbeError("need at least one pair")
    region = Region.level_set(s, bbox)
    X = sample_points(region, 2 * n_pairs, f=f)
    if len(X) < 2:
        raise ProbeError("fewer than two points of the level set were found")
    perm = np.random.default_rng([region.seed, 7]).permutation(len(X))
    m = len(X) // 2
    X1, X2 = X[perm[:m]], X[perm[m:2 * m]]
    keep = np.linalg.norm(X1 - X2, axis=1) >= MIN_PAIR_DISTANCE
    X1, X2 = X1[keep], X2[keep]
    if len(X1) == 0:
        raise ProbeError("all level-set pairs were coincident")
    ratios = _pair_ratios(f, X1, X2, workers)
    k = int(np.argmax(ratios))
    return ProbeResult(0.0, 0.0, 0.0, region, len(X1), 0.0, X1[k].copy(), estimate=float(ratios[k]),
                       note="estimate restricted to the bounding box")
