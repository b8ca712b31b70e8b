"""Binary cross-entropy risks of deep linear networks with a sigmoid output.

Two objectives live here:

* ``dlnn3``: four scalar weights, no biases, ``f(x) = log(1 + exp(-x1 x2 x3 x4))``.
* ``dlnnN``: N layers of width d with biases, trained on the two samples
  ``(0, y=0)`` and ``(s_1, y=1)`` with equal weight.

Parameters of ``dlnnN`` are flattened compactly: ``W_1, ..., W_N`` then
``b_1, ..., b_N``, each matrix column-major. ``W_N`` is a ``1 x d`` row and
``b_N`` a single scalar, so the vector length is ``(N-1)d^2 + d + (N-1)d + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from lipscope.fields import ScalarField


def softplus(t):
    """``log(1 + exp(t))`` without overflow for large ``|t|``."""
    t = np.asarray(t, dtype=float)
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


# ---------------------------------------------------------------------------
# dlnn3
# ---------------------------------------------------------------------------

_PAIRS = [(i, j) for i in range(4) for j in range(4) if i != j]


def _others(X, skip):
    out = np.ones(X.shape[0])
    for c in range(4):
        if c not in skip:
            out = out * X[:, c]
    return out


def _dlnn3_batch(X):
    X = np.asarray(X, dtype=float)
    t = X[:, 0] * X[:, 1] * X[:, 2] * X[:, 3]
    P = np.stack([_others(X, (i,)) for i in range(4)], axis=1)
    return t, P


def _dlnn3_values(X):
    t, _ = _dlnn3_batch(X)
    return softplus(-t)


def _dlnn3_gradients(X):
    t, P = _dlnn3_batch(X)
    return -expit(-t)[:, None] * P


def _dlnn3_hessians(X):
    X = np.asarray(X, dtype=float)
    t, P = _dlnn3_batch(X)
    Q = np.zeros((X.shape[0], 4, 4))
    for i, j in _PAIRS:
        Q[:, i, j] = _others(X, (i, j))
    curv = expit(t) * expit(-t)
    return -expit(-t)[:, None, None] * Q + curv[:, None, None] * P[:, :, None] * P[:, None, :]


def make_dlnn3() -> ScalarField:
    def entry(x, i, j):
        x = np.asarray(x, dtype=float).reshape(1, 4)
        t, P = _dlnn3_batch(x)
        val = expit(t[0]) * expit(-t[0]) * P[0, i] * P[0, j]
        if i != j:
            val -= expit(-t[0]) * _others(x, (i, j))[0]
        return float(val)

    return ScalarField(
        dim=4,
        name="dlnn3",
        value=lambda x: float(_dlnn3_values(np.reshape(x, (1, 4)))[0]),
        gradient=lambda x: _dlnn3_gradients(np.reshape(x, (1, 4)))[0],
        hessian=lambda x: _dlnn3_hessians(np.reshape(x, (1, 4)))[0],
        batch_value=_dlnn3_values,
        batch_gradient=_dlnn3_gradients,
        batch_hessian=_dlnn3_hessians,
        hessian_entry=entry,
    )


# ---------------------------------------------------------------------------
# dlnnN
# ---------------------------------------------------------------------------


def param_count(N: int, d: int) -> int:
    return (N - 1) * d * d + d + (N - 1) * d + 1


def _check_shape(N, d):
    if int(N) != N or N < 2:
        raise ValueError(f"depth N must be an integer >= 2, got {N!r}")
    if int(d) != d or d < 1:
        raise ValueError(f"width d must be a positive integer, got {d!r}")


@dataclass
class DlnnParams:
    """Weights ``W[0..N-1]`` and biases ``b[0..N-1]`` of an N-layer network.

    ``W[l]`` and ``b[l]`` hold layer ``l + 1``; the last layer has a ``(1, d)``
    weight and a length-1 bias.
    """

    N: int
    d: int
    W: list
    b: list

    def __post_init__(self):
        _check_shape(self.N, self.d)
        if len(self.W) != self.N or len(self.b) != self.N:
            raise ValueError("need exactly N weight matrices and N bias vectors")
        self.W = [np.asarray(w, dtype=float).reshape(self.rows(l + 1), self.d) for l, w in enumerate(self.W)]
        self.b = [np.asarray(v, dtype=float).reshape(self.rows(l + 1)) for l, v in enumerate(self.b)]

    def rows(self, layer: int) -> int:
        return 1 if layer == self.N else self.d

    @classmethod
    def zeros(cls, N: int, d: int) -> "DlnnParams":
        _check_shape(N, d)
        rows = [d] * (N - 1) + [1]
        return cls(N, d, [np.zeros((r, d)) for r in rows], [np.zeros(r) for r in rows])

    @classmethod
    def unflatten(cls, theta, N: int, d: int) -> "DlnnParams":
        _check_shape(N, d)
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != param_count(N, d):
            raise ValueError(f"expected {param_count(N, d)} parameters for N={N}, d={d}, got {theta.size}")
        rows = [d] * (N - 1) + [1]
        pos = 0
        W, b = [], []
        for r in rows:
            W.append(theta[pos:pos + r * d].reshape(r, d, order="F"))
            pos += r * d
        for r in rows:
            b.append(theta[pos:pos + r])
            pos += r
        return cls(N, d, W, b)

    def flatten(self) -> np.ndarray:
        parts = [w.ravel(order="F") for w in self.W] + [v.ravel() for v in self.b]
        return np.concatenate(parts)


def weight_index(N: int, d: int, layer: int, row: int, col: int) -> int:
    """Flat position of ``W_layer(row, col)``; ``layer`` is 1-based, row/col 0-based."""
    if not 1 <= layer <= N:
        raise IndexError(f"layer {layer} out of range 1..{N}")
    rows = 1 if layer == N else d
    if not (0 <= row < rows and 0 <= col < d):
        raise IndexError(f"entry ({row}, {col}) out of range for layer {layer}")
    return (layer - 1) * d * d + col * rows + row


def bias_index(N: int, d: int, layer: int, row: int) -> int:
    """Flat position of ``b_layer(row)``; ``layer`` is 1-based."""
    if not 1 <= layer <= N:
        raise IndexError(f"layer {layer} out of range 1..{N}")
    rows = 1 if layer == N else d
    if not 0 <= row < rows:
        raise IndexError(f"bias entry {row} out of range for layer {layer}")
    return (N - 1) * d * d + d + (layer - 1) * d + row


def _forward(params: DlnnParams, z):
    """Activations ``h[0..N]`` and output sensitivities ``g[l] = d eta / d h[l]``."""
    N = params.N
    h = [np.asarray(z, dtype=float)]
    for l in range(N):
        h.append(params.W[l] @ h[-1] + params.b[l])
    g = [None] * (N + 1)
    g[N] = np.ones(1)
    for l in range(N, 0, -1):
        g[l - 1] = g[l] @ params.W[l - 1]
    return h, g


def eta(params: DlnnParams, z) -> float:
    """Pre-sigmoid output of the network for input ``z``."""
    h, _ = _forward(params, z)
    return float(h[-1][0])


def eta_gradient(params: DlnnParams, z) -> np.ndarray:
    h, g = _forward(params, z)
    N = params.N
    w_parts = [np.outer(g[l], h[l - 1]).ravel(order="F") for l in range(1, N + 1)]
    b_parts = [g[l] for l in range(1, N + 1)]
    return np.concatenate(w_parts + b_parts)


def eta_hessian(params: DlnnParams, z) -> np.ndarray:
    """Second derivatives of ``eta_z``.

    ``eta`` is affine in each layer's ``(W_l, b_l)``, so same-layer blocks vanish.
    For layers ``l1 < l2`` only the upper weight ``W_l2`` couples downward:
    ``d2 eta / dW_l2(k2,r2) dW_l1(k1,r1) = g_l2[k2] M[r2,k1] h_{l1-1}[r1]`` and
    ``d2 eta / dW_l2(k2,r2) db_l1(r1) = g_l2[k2] M[r2,r1]``, where
    ``M = W_{l2-1} ... W_{l1+1}``.
    """
    N, d = params.N, params.d
    h, g = _forward(params, z)
    p = param_count(N, d)
    H = np.zeros((p, p))
    w_start = [weight_index(N, d, l, 0, 0) for l in range(1, N + 1)]
    b_start = [bias_index(N, d, l, 0) for l in range(1, N + 1)]
    for l2 in range(2, N + 1):
        rows2 = params.rows(l2)
        M = np.eye(d)
        # walk l1 downward so M accumulates W_{l2-1} ... W_{l1+1}
        for l1 in range(l2 - 1, 0, -1):
            if l1 < l2 - 1:
                M = M @ params.W[l1]
            ww = np.einsum("a,bc,d->abcd", g[l2], M, h[l1 - 1]).reshape(rows2 * d, d * d, order="F")
            wb = np.einsum("a,bc->abc", g[l2], M).reshape(rows2 * d, d, order="F")
            i0 = w_start[l2 - 1]
            j0 = w_start[l1 - 1]
            H[i0:i0 + rows2 * d, j0:j0 + d * d] = ww
            k0 = b_start[l1 - 1]
            H[i0:i0 + rows2 * d, k0:k0 + d] = wb
    return H + H.T


def _unpack(theta, N, d):
    return DlnnParams.unflatten(theta, N, d)


def make_dlnnN(N: int, d: int) -> ScalarField:
    _check_shape(N, d)
    N, d = int(N), int(d)
    p = param_count(N, d)
    zero = np.zeros(d)
    s1 = np.zeros(d)
    s1[0] = 1.0

    def value(theta):
        params = _unpack(theta, N, d)
        e0, e1 = eta(params, zero), eta(params, s1)
        return float(0.5 * softplus(e0) + 0.5 * softplus(-e1))

    def gradient(theta):
        params = _unpack(theta, N, d)
        e0, e1 = eta(params, zero), eta(params, s1)
        return 0.5 * expit(e0) * eta_gradient(params, zero) - 0.5 * expit(-e1) * eta_gradient(params, s1)

    def hessian(theta):
        params = _unpack(theta, N, d)
        e0, e1 = eta(params, zero), eta(params, s1)
        g0, g1 = eta_gradient(params, zero), eta_gradient(params, s1)
        curv0 = expit(e0) * expit(-e0)
        curv1 = expit(e1) * expit(-e1)
        H = 0.5 * (curv0 * np.outer(g0, g0) + expit(e0) * eta_hessian(params, zero))
        H += 0.5 * (curv1 * np.outer(g1, g1) - expit(-e1) * eta_hessian(params, s1))
        return 0.5 * (H + H.T)

    def batch_value(X):
        return np.array([value(x) for x in X])

    def entry(theta, i, j):
        if i != j:
            return float(hessian(theta)[i, j])
        # eta is affine in every single parameter, so only the outer-product terms survive
        params = _unpack(theta, N, d)
        e0, e1 = eta(params, zero), eta(params, s1)
        g0, g1 = eta_gradient(params, zero)[i], eta_gradient(params, s1)[i]
        return float(0.5 * expit(e0) * expit(-e0) * g0 * g0 + 0.5 * expit(e1) * expit(-e1) * g1 * g1)

    return ScalarField(
        dim=p,
        name=f"dlnnN:{N},{d}",
        value=value,
        gradient=gradient,
        hessian=hessian,
        batch_value=batch_value,
        hessian_entry=entry,
    )


def witness_params(N: int, d: int, n: float) -> DlnnParams:
    """Deep-network analogue of the dlnn3 witness: first-coordinate chain of weights.

    ``W_1 = ... = W_{N-2} = E_11``, ``W_{N-1} = n log(n) E_11``,
    ``W_N = s_1^T / n`` and every bias zero.
    """
    params = DlnnParams.zeros(N, d)
    for l in range(N - 2):
        params.W[l][0, 0] = 1.0
    params.W[N - 2][0, 0] = n * math.log(n)
    params.W[N - 1][0, 0] = 1.0 / n
    return params
