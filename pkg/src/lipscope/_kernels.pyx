# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: batched symmetric spectral norms and LP vertex scans.

Mirrors :mod:`lipscope._kernels_py` operation for operation.
"""

import numpy as np

from libc.math cimport fabs, sqrt

cdef enum:
    JACOBI_MAX_DIM = 64


cdef double _jacobi_max_abs(double[:, ::1] a, Py_ssize_t n, int max_sweeps) noexcept nogil:
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double frob = 0.0, off, apq, theta, t, c, s, akp, akq, best
    for p in range(n):
        for q in range(n):
            frob += a[p, q] * a[p, q]
    frob = sqrt(frob)
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off == 0.0 or sqrt(off) <= 1e-15 * frob:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
    best = 0.0
    for p in range(n):
        if fabs(a[p, p]) > best:
            best = fabs(a[p, p])
    return best


cdef double _power_max_abs(double[:, ::1] a, double[::1] v, double[::1] w,
                           Py_ssize_t n, int max_iter, double tol) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef int it
    cdef double lam = 0.0, prev = -1.0, acc, norm
    for i in range(n):
        v[i] = 1.0 / sqrt(<double>n)
    for it in range(max_iter):
        norm = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += a[i, j] * v[j]
            w[i] = acc
            norm += acc * acc
        lam = sqrt(norm)
        if lam == 0.0:
            return 0.0
        for i in range(n):
            v[i] = w[i] / lam
        if fabs(lam - prev) <= tol * lam:
            break
        prev = lam
    return lam


def spectral_norms(H, int max_sweeps=100, int max_iter=100000, double tol=1e-12):
    """Largest absolute eigenvalue of each symmetric matrix in a ``(m, p, p)`` stack."""
    work = np.array(H, dtype=np.float64, order="C", copy=True)
    if work.ndim != 3 or work.shape[1] != work.shape[2]:
        raise ValueError("expected a stack of square matrices with shape (m, p, p)")
    cdef Py_ssize_t m = work.shape[0], n = work.shape[1], i
    out = np.zeros(m)
    if n == 0 or m == 0:
        return out
    cdef double[:, :, ::1] w = work
    cdef double[::1] res = out
    cdef double[::1] v = np.empty(n)
    cdef double[::1] tmp = np.empty(n)
    with nogil:
        for i in range(m):
            if n <= JACOBI_MAX_DIM:
                res[i] = _jacobi_max_abs(w[i], n, max_sweeps)
            else:
                res[i] = _power_max_abs(w[i], v, tmp, n, max_iter, tol)
    return out


def lp_best_vertex(a, h, c0s, c1s, double feas_tol=1e-12, double tie_tol=1e-12):
    """Index of the cheapest feasible candidate ``(c0s[j], c1s[j])`` or -1.

    Feasible means ``c0 + c1 * a_i >= h_i - feas_tol * max(1, |h_i|)`` for all i.
    Costs within ``tie_tol`` (relative) are ties, resolved toward smaller ``c1``.
    """
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[::1] c0v = np.ascontiguousarray(c0s, dtype=np.float64)
    cdef double[::1] c1v = np.ascontiguousarray(c1s, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0], k = c0v.shape[0], i, j
    cdef Py_ssize_t best = -1
    cdef double best_cost = 0.0, best_c1 = 0.0, cost, slack, scale
    cdef bint ok
    with nogil:
        for j in range(k):
            if c0v[j] < 0.0 or c1v[j] < 0.0:
                continue
            ok = True
            for i in range(m):
                scale = fabs(hv[i])
                if scale < 1.0:
                    scale = 1.0
                slack = c0v[j] + c1v[j] * av[i] - hv[i]
                if slack < -feas_tol * scale:
                    ok = False
                    break
            if not ok:
                continue
            cost = c0v[j] + c1v[j]
            if best < 0 or cost < best_cost - tie_tol * fabs(best_cost):
                best, best_cost, best_c1 = j, cost, c1v[j]
            elif fabs(cost - best_cost) <= tie_tol * fabs(best_cost) and c1v[j] < best_c1:
                best, best_cost, best_c1 = j, cost, c1v[j]
    return best


def upper_hull(a, h):
    """Upper convex hull of points already sorted by ``a`` ascending, ties by ``h`` descending.

    Returns positions into the sorted arrays, left to right.
    """
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0], i, top = 0
    out = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] hull = out
    cdef Py_ssize_t i0, i1
    cdef double cross
    with nogil:
        for i in range(m):
            if top > 0 and av[i] == av[hull[top - 1]]:
                continue
            while top >= 2:
                i0 = hull[top - 2]
                i1 = hull[top - 1]
                cross = (av[i1] - av[i0]) * (hv[i] - hv[i0]) - (hv[i1] - hv[i0]) * (av[i] - av[i0])
                if cross >= 0.0:
                    top -= 1
                else:
                    break
            hull[top] = i
            top += 1
    return out[:top].copy()
