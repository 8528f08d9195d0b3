"""Pure numpy implementations of the kernel sums.

Semantics are identical to the compiled ``_kernels`` module; this module is
the fallback when the extension is not built and the reference the compiled
code is tested against.
"""

import numpy as np

INV_2PI = 1.0 / (2.0 * np.pi)
SPHERE_C0 = -1.0 / (4.0 * np.pi)
_CHUNK = 1 << 22


def _row_chunks(n, m):
    step = max(1, _CHUNK // max(m, 1))
    for start in range(0, n, step):
        yield slice(start, min(n, start + step))


def sphere_green_sum(X, Y, w, fy, fx):
    out = np.empty(X.shape[0])
    for sl in _row_chunks(X.shape[0], Y.shape[0]):
        r2 = ((X[sl, None, :] - Y[None, :, :]) ** 2).sum(axis=-1)
        near = r2 < 1e-28
        r2[near] = 1.0
        g = -0.5 * INV_2PI * np.log(0.25 * r2) + SPHERE_C0
        g[near] = 0.0
        out[sl] = g @ (w * fy) - fx[sl] * (g @ w)
    return out


def plane_log_sum(X, Y, w):
    out = np.empty(X.shape[0])
    for sl in _row_chunks(X.shape[0], Y.shape[0]):
        r2 = ((X[sl, None, :] - Y[None, :, :]) ** 2).sum(axis=-1)
        near = r2 < 1e-28
        r2[near] = 1.0
        out[sl] = -0.5 * INV_2PI * (np.log(r2) @ w)
    return out


def torus_green_exact(D):
    D = np.asarray(D, dtype=float)
    dx = D[:, 0] - np.floor(D[:, 0] + 0.5)
    dy = D[:, 1] - np.floor(D[:, 1] + 0.5)
    s2 = np.sin(np.pi * dx) ** 2 + np.sinh(np.pi * dy) ** 2
    acc = np.log(2.0) - np.pi / 6.0 + 0.5 * np.log(s2)
    c = np.cos(2.0 * np.pi * dx)
    for k in range(1, 8):
        a = np.exp(-2.0 * np.pi * (k + dy))
        b = np.exp(-2.0 * np.pi * (k - dy))
        acc += 0.5 * (np.log(1.0 - 2.0 * a * c + a * a) + np.log(1.0 - 2.0 * b * c + b * b))
    return -INV_2PI * acc + 0.5 * dy * dy


def torus_green_sum(X, Y, w, fy, fx):
    out = np.empty(X.shape[0])
    for sl in _row_chunks(X.shape[0], Y.shape[0]):
        D = (X[sl, None, :] - Y[None, :, :]).reshape(-1, 2)
        D = D - np.floor(D + 0.5)
        near = (D ** 2).sum(axis=1) < 1e-28
        D[near] = 0.5
        g = torus_green_exact(D)
        g[near] = 0.0
        g = g.reshape(-1, Y.shape[0])
        out[sl] = g @ (w * fy) - fx[sl] * (g @ w)
    return out


def torus_fourier(D, truncation):
    D = np.asarray(D, dtype=float)
    T = int(truncation)
    k = np.arange(T + 1)
    mult = np.where(k > 0, 2.0, 1.0)
    K2 = k[:, None] ** 2 + k[None, :] ** 2
    W = np.outer(mult, mult) / np.where(K2 == 0, 1, K2)
    W[0, 0] = 0.0
    out = np.empty(D.shape[0])
    step = max(1, _CHUNK // (T + 1) ** 2)
    for start in range(0, D.shape[0], step):
        sl = slice(start, start + step)
        cx = np.cos(2.0 * np.pi * D[sl, 0:1] * k)
        cy = np.cos(2.0 * np.pi * D[sl, 1:2] * k)
        out[sl] = np.einsum("ia,ab,ib->i", cx, W, cy)
    return out / (4.0 * np.pi ** 2)
