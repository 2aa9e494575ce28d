"""Independent reference computations for the test-suite.

Nothing here calls the solver internals: continuous forms use
Gauss-Legendre quadrature of analytic fields, the projection is a dense
pseudo-inverse assembled by loops, and the moments are closed forms.
"""
from __future__ import annotations

import numpy as np

MAX_REFERENCE_N = 16


# ---------------------------------------------------------------------------
# dense Leray projection


def dense_divergence(n: int, h: float) -> np.ndarray:
    """Divergence on interior faces, ordered as all interior ``u1`` then all interior ``u2`` (row-major)."""
    n1 = (n - 1) * n
    D = np.zeros((n * n, 2 * n1))
    for i in range(n):
        for j in range(n):
            c = i * n + j
            if i + 1 <= n - 1:
                D[c, i * n + j] += 1.0 / h  # u1[i+1, j] is interior index i*n+j
            if i >= 1:
                D[c, (i - 1) * n + j] -= 1.0 / h
            if j + 1 <= n - 1:
                D[c, n1 + i * (n - 1) + j] += 1.0 / h
            if j >= 1:
                D[c, n1 + i * (n - 1) + j - 1] -= 1.0 / h
    return D


def faces_to_vec(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    return np.concatenate([u1[1:-1, :].ravel(), u2[:, 1:-1].ravel()])


def vec_to_faces(x: np.ndarray, n: int):
    n1 = (n - 1) * n
    u1 = np.zeros((n + 1, n))
    u2 = np.zeros((n, n + 1))
    u1[1:-1, :] = x[:n1].reshape(n - 1, n)
    u2[:, 1:-1] = x[n1:].reshape(n, n - 1)
    return u1, u2


def dense_leray(u1: np.ndarray, u2: np.ndarray, h: float):
    """Euclidean projection onto the kernel of the discrete divergence."""
    n = u1.shape[1]
    D = dense_divergence(n, h)
    x = faces_to_vec(u1, u2)
    p = x - np.linalg.pinv(D) @ (D @ x)
    return vec_to_faces(p, n)


# ---------------------------------------------------------------------------
# quadrature of continuous trilinear forms


def _gauss(m: int = 64):
    x, w = np.polynomial.legendre.leggauss(m)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    return X, Y, np.outer(w, w)


def quad_b1(u, v, grad_v, w, m: int = 64) -> float:
    """``int (u . grad) v . w`` on the unit square.

    ``u``, ``v``, ``w`` map ``(X, Y)`` to a pair of arrays; ``grad_v`` to
    ``((dv1/dx, dv1/dy), (dv2/dx, dv2/dy))``.
    """
    X, Y, W = _gauss(m)
    uu, ww = u(X, Y), w(X, Y)
    g = grad_v(X, Y)
    conv = [uu[0] * g[k][0] + uu[1] * g[k][1] for k in range(2)]
    return float(np.sum(W * (conv[0] * ww[0] + conv[1] * ww[1])))


def quad_b2(u, grad_d, b, m: int = 64) -> float:
    """``int (u . grad) d . b`` with ``grad_d`` returning ``[(dd_k/dx, dd_k/dy) for k in 0..2]``."""
    X, Y, W = _gauss(m)
    uu, bb = u(X, Y), b(X, Y)
    g = grad_d(X, Y)
    return float(np.sum(W * sum((uu[0] * g[k][0] + uu[1] * g[k][1]) * bb[k] for k in range(3))))


def quad_m(grad_d, grad_b, grad_v, m: int = 64) -> float:
    """Weak form ``<div(grad d (.) grad b), v> = -int T_ij d_i v_j``, ``T_ij = sum_k d_i d_k d_j b_k``.

    The divergence acts on the first index.  ``grad_v`` returns
    ``((dv1/dx, dv1/dy), (dv2/dx, dv2/dy))``; valid for ``v`` vanishing on
    the boundary.
    """
    X, Y, W = _gauss(m)
    gd, gb, gv = grad_d(X, Y), grad_b(X, Y), grad_v(X, Y)
    total = 0.0
    for i in range(2):
        for j in range(2):
            T = sum(gd[k][i] * gb[k][j] for k in range(3))
            total = total - np.sum(W * T * gv[j][i])
    return float(total)


# ---------------------------------------------------------------------------
# closed-form moments


def ou_stats(x0: float, decay: float, sigma: float, t: float):
    """Mean and variance of ``dX = -decay X dt + sigma dB``."""
    e = np.exp(-decay * t)
    return x0 * e, sigma ** 2 * (1.0 - e * e) / (2.0 * decay)


def lognormal(sigmas, t: float):
    """Mean and variance of ``exp(sum_k sigma_k W_k(t))``."""
    s2 = float(np.sum(np.square(sigmas))) * t
    return np.exp(0.5 * s2), np.exp(2.0 * s2) - np.exp(s2)


# ---------------------------------------------------------------------------
# explicit reference trajectory


def reference_trajectory(disc, v0: np.ndarray, d0: np.ndarray, params, t_end: float, dt: float):
    """Noise-free forward-Euler reference with dense projection (small grids only).

    ``disc`` supplies spatial operators; time stepping and projection are
    independent of the solver.  Returns final ``(v, d)`` raw arrays.
    """
    n = disc.n
    if n > MAX_REFERENCE_N:
        raise ValueError(f"reference trajectory limited to n <= {MAX_REFERENCE_N}")
    D = np.asarray(disc.D.todense()) if hasattr(disc.D, "todense") else np.asarray(disc.D)
    P = np.eye(D.shape[1]) - np.linalg.pinv(D) @ D
    L = np.asarray(disc.L.todense()) if hasattr(disc.L, "todense") else np.asarray(disc.L)
    steps = int(round(t_end / dt))
    v, d = v0.copy(), d0.copy()
    bn = disc.boundary_nodes
    for _ in range(steps):
        dv = -params.mu * (L @ v) - disc.b1_raw(v, v) - params.lam * disc.stress_div_raw(d, d)
        s = np.sum(d * d, axis=1, keepdims=True) - 1.0
        dd = params.gamma * disc.lap_nodes(d) - disc.b2_raw(v, d) - params.gamma * s * d / params.eta ** 2
        dd[bn] = 0.0
        v = P @ (v + dt * dv)
        d = d + dt * dd
    return v, d
