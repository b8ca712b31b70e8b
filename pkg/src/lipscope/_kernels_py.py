"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same algorithms, same stopping rules; the Jacobi sweep is vectorised across the
batch dimension instead of looping over matrices.
"""

from __future__ import annotations

import numpy as np

JACOBI_MAX_DIM = 64


def _jacobi_max_abs(A: np.ndarray, max_sweeps: int) -> np.ndarray:
    m, n, _ = A.shape
    frob = np.sqrt(np.einsum("kij,kij->k", A, A))
    iu = np.triu_indices(n, 1)
    active = np.ones(m, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A[:, iu[0], iu[1]] ** 2, axis=1))
        active &= ~((off == 0.0) | (off <= 1e-15 * frob))
        if not active.any():
            break
        idx = np.flatnonzero(active)
        B = A[idx]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = B[:, p, q]
                rot = apq != 0.0
                if not rot.any():
                    continue
                safe = np.where(rot, apq, 1.0)
                theta = (B[:, q, q] - B[:, p, p]) / (2.0 * safe)
                big = np.abs(theta) > 1e150
                with np.errstate(over="ignore", invalid="ignore"):
                    t = 1.0 / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta < 0.0, -t, t)
                t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
                t = np.where(rot, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cp = B[:, :, p].copy()
                cq = B[:, :, q].copy()
                B[:, :, p] = c[:, None] * cp - s[:, None] * cq
                B[:, :, q] = s[:, None] * cp + c[:, None] * cq
                rp = B[:, p, :].copy()
                rq = B[:, q, :].copy()
                B[:, p, :] = c[:, None] * rp - s[:, None] * rq
                B[:, q, :] = s[:, None] * rp + c[:, None] * rq
        A[idx] = B
    return np.max(np.abs(np.diagonal(A, axis1=1, axis2=2)), axis=1)


def _power_max_abs(a: np.ndarray, max_iter: int, tol: float) -> float:
    n = a.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam, prev = 0.0, -1.0
    for _ in range(max_iter):
        w = a @ v
        lam = float(np.sqrt(w @ w))
        if lam == 0.0:
            return 0.0
        v = w / lam
        if abs(lam - prev) <= tol * lam:
            break
        prev = lam
    return lam


def spectral_norms(H, max_sweeps: int = 100, max_iter: int = 100000, tol: float = 1e-12) -> np.ndarray:
    """Largest absolute eigenvalue of each symmetric matrix in a ``(m, p, p)`` stack."""
    work = np.array(H, dtype=np.float64, copy=True)
    if work.ndim != 3 or work.shape[1] != work.shape[2]:
        raise ValueError("expected a stack of square matrices with shape (m, p, p)")
    m, n, _ = work.shape
    if m == 0 or n == 0:
        return np.zeros(m)
    if n == 1:
        return np.abs(work[:, 0, 0])
    if n <= JACOBI_MAX_DIM:
        return _jacobi_max_abs(work, max_sweeps)
    return np.array([_power_max_abs(a, max_iter, tol) for a in work])


def lp_best_vertex(a, h, c0s, c1s, feas_tol: float = 1e-12, tie_tol: float = 1e-12) -> int:
    """Index of the cheapest feasible candidate ``(c0s[j], c1s[j])`` or -1."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    c0s = np.ascontiguousarray(c0s, dtype=np.float64)
    c1s = np.ascontiguousarray(c1s, dtype=np.float64)
    scale = np.maximum(np.abs(h), 1.0)
    best, best_cost, best_c1 = -1, 0.0, 0.0
    for j in range(c0s.size):
        c0, c1 = c0s[j], c1s[j]
        if c0 < 0.0 or c1 < 0.0:
            continue
        if np.any(c0 + c1 * a - h < -feas_tol * scale):
            continue
        cost = c0 + c1
        if best < 0 or cost < best_cost - tie_tol * abs(best_cost):
            best, best_cost, best_c1 = j, cost, c1
        elif abs(cost - best_cost) <= tie_tol * abs(best_cost) and c1 < best_c1:
            best, best_cost, best_c1 = j, cost, c1
    return best


def upper_hull(a, h) -> np.ndarray:
    """Upper convex hull of points already sorted by ``a`` ascending, ties by ``h`` descending."""
    a = np.asarray(a, dtype=float)
    h = np.asarray(h, dtype=float)
    hull: list[int] = []
    for i in range(a.size):
        if hull and a[i] == a[hull[-1]]:
            continue
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (a[i1] - a[i0]) * (h[i] - h[i0]) - (h[i1] - h[i0]) * (a[i] - a[i0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=np.intp)
