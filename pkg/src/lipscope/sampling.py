"""Regions and deterministic low-discrepancy sampling inside them."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

MAX_CORNER_DIM = 12
MAX_LATTICE_DIM = 5


class EmptyRegionError(ValueError):
    """No sample could be drawn from the region (e.g. an empty level set)."""


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a sub-stream identified by ``keys``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sobol(dim: int, n: int, seed: int, skip: int = 0) -> np.ndarray:
    """``n`` scrambled Sobol points in ``[0, 1)^dim`` after skipping ``skip``."""
    eng = qmc.Sobol(dim, scramble=True, rng=np.random.default_rng(seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non power-of-two counts
        if skip:
            eng.fast_forward(skip)
        return eng.random(n)


@dataclass(frozen=True)
class Region:
    """A box ``[lo, hi]``, an open ball, a sub-level set clipped to a box, or a segment.

    Use the constructors :meth:`box`, :meth:`ball`, :meth:`level_set`.
    """

    kind: str
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    level: Optional[float] = None
    bbox: Optional["Region"] = None
    seed: int = 0
    endpoints: tuple = field(default=(), compare=False)

    @classmethod
    def box(cls, lo, hi, dim: Optional[int] = None, seed: int = 0) -> "Region":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if dim is not None:
            lo = np.broadcast_to(lo, (dim,)).copy()
            hi = np.broadcast_to(hi, (dim,)).copy()
        if lo.shape != hi.shape:
            raise ValueError("box bounds must have the same shape")
        if not np.all(lo < hi):
            raise ValueError("box needs lo < hi in every coordinate")
        return cls("box", lo=lo, hi=hi, seed=int(seed))

    @classmethod
    def ball(cls, center, radius: float, dim: Optional[int] = None, seed: int = 0) -> "Region":
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if dim is not None:
            center = np.broadcast_to(center, (dim,)).copy()
        if not (np.isfinite(radius) and radius > 0):
            raise ValueError(f"ball radius must be positive, got {radius!r}")
        return cls("ball", center=center, radius=float(radius), seed=int(seed))

    @classmethod
    def level_set(cls, s: float, bbox: "Region", seed: Optional[int] = None) -> "Region":
        if bbox.kind != "box":
            raise ValueError("level-set regions need a box as bounding region")
        return cls("level_set", level=float(s), bbox=bbox, seed=int(bbox.seed if seed is None else seed))

    @classmethod
    def segment(cls, x1, x2) -> "Region":
        x1 = np.atleast_1d(np.asarray(x1, dtype=float))
        x2 = np.atleast_1d(np.asarray(x2, dtype=float))
        return cls("segment", endpoints=(x1, x2))

    @property
    def dim(self) -> int:
        if self.kind == "box":
            return self.lo.size
        if self.kind == "ball":
            return self.center.size
        if self.kind == "level_set":
            return self.bbox.dim
        return self.endpoints[0].size

    def contains(self, x, f=None) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            return bool(np.all(x >= self.lo) and np.all(x <= self.hi))
        if self.kind == "ball":
            return bool(np.linalg.norm(x - self.center) < self.radius)
        if self.kind == "level_set":
            inside = self.bbox.contains(x)
            return inside and (f is None or f.value(x) <= self.level)
        x1, x2 = self.endpoints
        d = x2 - x1
        t = float(np.dot(x - x1, d) / np.dot(d, d))
        return 0.0 <= t <= 1.0 and bool(np.allclose(x1 + t * d, x, rtol=1e-12, atol=1e-12))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "seed": self.seed}
        if self.kind == "box":
            out.update(lo=self.lo.tolist(), hi=self.hi.tolist())
        elif self.kind == "ball":
            out.update(center=self.center.tolist(), radius=self.radius)
        elif self.kind == "level_set":
            out.update(level=self.level, bbox=self.bbox.to_dict())
        else:
            out.update(x1=self.endpoints[0].tolist(), x2=self.endpoints[1].tolist())
        return out


def box_corners(region: Region, budget: int) -> np.ndarray:
    """Extreme points of a box: all corners when few enough, else the two diagonal ones."""
    p = region.dim
    if p <= MAX_CORNER_DIM and 2**p <= max(budget // 2, 2):
        bits = (np.arange(2**p)[:, None] >> np.arange(p)[None, :]) & 1
        return np.where(bits == 1, region.hi, region.lo)
    return np.stack([region.lo, region.hi])


def ball_anchors(region: Region, budget: int) -> np.ndarray:
    """Points just inside the sphere along sign-pattern directions.

    All ``{-1, 0, 1}^p`` directions for small ``p``, otherwise the coordinate
    axes and the two main diagonals. Empty when they would exceed half the budget.
    """
    p = region.dim
    if p <= MAX_LATTICE_DIM:
        grid = np.array(np.meshgrid(*[[-1.0, 0.0, 1.0]] * p, indexing="ij")).reshape(p, -1).T
        dirs = grid[np.any(grid != 0, axis=1)]
    else:
        eye = np.eye(p)
        diag = np.ones((1, p))
        dirs = np.vstack([eye, -eye, diag, -diag])
    if len(dirs) > budget // 2:
        return np.empty((0, p))
    dirs = dirs / np.linalg.norm(dirs, axis=1)[:, None]
    return region.center + (region.radius * (1.0 - 1e-9)) * dirs


def sample_box(region: Region, n: int, seed: Optional[int] = None, skip: int = 0) -> np.ndarray:
    u = sobol(region.dim, n, region.seed if seed is None else seed, skip=skip)
    return region.lo + u * (region.hi - region.lo)


def sample_ball(region: Region, n: int, seed: Optional[int] = None) -> np.ndarray:
    p = region.dim
    u = sobol(p + 1, n, region.seed if seed is None else seed)
    u = np.clip(u, 1e-15, 1.0 - 1e-15)
    direction = ndtri(u[:, :p])
    norms = np.linalg.norm(direction, axis=1)
    degenerate = norms == 0.0
    direction[degenerate] = 0.0
    direction[degenerate, 0] = 1.0
    norms[degenerate] = 1.0
    r = region.radius * u[:, p] ** (1.0 / p)
    # stay strictly inside the open ball
    r = np.minimum(r, np.nextafter(region.radius, 0.0) * (1.0 - 1e-12))
    return region.center + direction / norms[:, None] * r[:, None]


def sample_points(region: Region, n: int, f=None, max_attempts: int = 10**6) -> np.ndarray:
    """``n`` deterministic points in ``region``.

    Boxes always include their extreme points and balls their sign-pattern
    anchors (see :func:`ball_anchors`). Level sets are rejection-sampled
    from their bounding box and need ``f``; fewer than ``n`` points come back if
    the attempt budget runs out, and :class:`EmptyRegionError` if none is accepted.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if region.kind == "box":
        corners = box_corners(region, n)
        if len(corners) >= n:
            return corners[:n]
        return np.vstack([corners, sample_box(region, n - len(corners))])
    if region.kind == "ball":
        anchors = ball_anchors(region, n)
        return np.vstack([anchors, sample_ball(region, n - len(anchors))])
    if region.kind == "level_set":
        if f is None:
            raise ValueError("level-set sampling needs the scalar field")
        return rejection_sample(f, region, n, max_attempts)
    raise ValueError(f"cannot sample a {region.kind} region")


def rejection_sample(f, region: Region, n: int, max_attempts: int = 10**6) -> np.ndarray:
    bbox = region.bbox
    accepted = []
    count = 0
    attempts = 0
    batch = 1 << 14
    while count < n and attempts < max_attempts:
        m = min(batch, max_attempts - attempts)
        X = sample_box(bbox, m, seed=region.seed, skip=attempts)
        attempts += m
        keep = X[f.values(X) <= region.level]
        if len(keep):
            accepted.append(keep)
            count += len(keep)
    if count == 0:
        raise EmptyRegionError(
            f"empty-level-set: no point of the bounding box has f <= {region.level} "
            f"after {attempts} attempts"
        )
    return np.vstack(accepted)[:n]
