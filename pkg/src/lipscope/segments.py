"""Segments, chained partitions of [0, 1], and Riemann sums along segments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

SAFETY = 0.9
DEFAULT_CAP = 10**6


class PartitionError(ValueError):
    """A partition could not be built or is malformed."""


@dataclass(frozen=True)
class Segment:
    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        x1 = np.atleast_1d(np.asarray(self.x1, dtype=float))
        x2 = np.atleast_1d(np.asarray(self.x2, dtype=float))
        if x1.shape != x2.shape:
            raise ValueError("segment endpoints must have the same shape")
        if np.array_equal(x1, x2):
            raise ValueError("segment endpoints must differ")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.x2 - self.x1))

    def point(self, t):
        """``x1 + t (x2 - x1)``; vectorised over an array of ``t``."""
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return self.x1 + float(t) * (self.x2 - self.x1)
        return self.x1[None, :] + t[:, None] * (self.x2 - self.x1)[None, :]


@dataclass(frozen=True)
class Partition:
    """``0 = t_0 < t_1 < ... < t_size = 1``."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        if t.size < 2 or t[0] != 0.0 or t[-1] != 1.0:
            raise PartitionError("a partition must start at 0 and end at 1")
        if not np.all(np.diff(t) > 0):
            raise PartitionError("partition times must be strictly increasing")
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, intervals: int) -> "Partition":
        t = np.linspace(0.0, 1.0, int(intervals) + 1)
        t[-1] = 1.0
        return cls(t)

    @property
    def size(self) -> int:
        return self.times.size - 1

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.times)))

    def refines(self, other: "Partition") -> bool:
        """Every time of ``other`` is also a time of ``self`` (equality counts)."""
        return bool(np.all(np.isin(other.times, self.times)))


def chaining_holds(seg: Segment, radius_fn: Callable, part: Partition) -> bool:
    """Each consecutive pair lies inside the ball of one of its two endpoints."""
    pts = seg.point(part.times)
    radii = np.array([radius_fn(z) for z in pts])
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return bool(np.all(gaps < np.maximum(radii[:-1], radii[1:])))


def build_chain_partition(seg: Segment, radius_fn: Callable, cap: int = DEFAULT_CAP,
                          base: Optional[Partition] = None) -> Partition:
    """Refine ``base`` (default ``{0, 1}``) until consecutive points chain.

    Greedy march: from ``t_i`` step to the furthest time whose point is within
    ``SAFETY * radius_fn(point(t_i))``, never crossing the next base time. On a
    straight segment the distance is linear in the step, so that time is exact.
    Raises :class:`PartitionError` once more than ``cap`` intervals are needed.
    """
    if cap < 2:
        raise PartitionError("cap must be at least 2")
    base = base if base is not None else Partition(np.array([0.0, 1.0]))
    length = seg.length
    times = [0.0]
    for s_next in base.times[1:]:
        t = times[-1]
        while t < s_next:
            r = float(radius_fn(seg.point(t)))
            if not (np.isfinite(r) and r > 0):
                raise PartitionError(f"radius function must be positive, got {r!r} at t={t}")
            step = SAFETY * r / length
            nxt = s_next if t + step >= s_next else t + step
            if nxt <= t:
                raise PartitionError(f"radius {r!r} too small to advance from t={t}")
            times.append(float(nxt))
            t = nxt
            if len(times) - 1 > cap:
                raise PartitionError(f"chain partition needs more than {cap} intervals")
    times[-1] = 1.0
    return Partition(np.array(times))


def riemann_sum(seg: Segment, g: Callable, part: Partition, anchor: str = "left") -> float:
    """``sum_i g(point(t*_i)) (t_{i+1} - t_i)`` with ``t*_i`` the left or right end.

    ``g`` receives an ``(m, p)`` array of points and returns ``m`` values (a
    scalar is broadcast).
    """
    if anchor not in ("left", "right"):
        raise ValueError(f"anchor must be 'left' or 'right', got {anchor!r}")
    t = part.times
    tags = t[:-1] if anchor == "left" else t[1:]
    vals = np.broadcast_to(np.asarray(g(seg.point(tags)), dtype=float), tags.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite integrand value")
    return float(np.sum(vals * np.diff(t)))
