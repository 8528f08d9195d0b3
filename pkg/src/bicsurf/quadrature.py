"""Quadrature rules shared by measures, potentials and metric lengths.

All rules return ``(points, weights)`` with ``weights`` already containing the
area (or length) element, so that ``weights @ f(points)`` approximates the
integral of ``f``.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=64)
def _legendre(n):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def _jacobi(n, alpha, beta):
    x, w = roots_jacobi(n, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a=0.0, b=1.0):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _legendre(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_jacobi_unit(n, alpha, beta):
    """Nodes ``t`` in ``[0, 1]`` and weights for ``int_0^1 (1-t)^alpha t^beta g(t) dt``."""
    x, w = _jacobi(int(n), float(alpha), float(beta))
    scale = 0.5 ** (1.0 + alpha + beta)
    return 0.5 * (x + 1.0), scale * w


def orthonormal_frame(axis):
    """Return ``(e1, e2, e3)`` with ``e3`` along ``axis``."""
    e3 = np.asarray(axis, dtype=float)
    e3 = e3 / np.linalg.norm(e3)
    helper = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - (helper @ e3) * e3
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return e1, e2, e3


def _frame_points(theta, phi, axis):
    e1, e2, e3 = orthonormal_frame(axis)
    st = np.sin(theta)[:, None]
    ct = np.cos(theta)[:, None]
    cp = np.cos(phi)[None, :]
    sp = np.sin(phi)[None, :]
    pts = (
        (st * cp)[..., None] * e1
        + (st * sp)[..., None] * e2
        + np.broadcast_to(ct[..., None], st.shape[:1] + (phi.size, 1)) * e3
    )
    return pts.reshape(-1, 3)


@lru_cache(maxsize=32)
def _sphere_rule_cached(n_theta, n_phi, axis, pole_exponent):
    if pole_exponent == 0.0:
        theta, wt = gauss_legendre(n_theta, 0.0, np.pi)
        wt = wt * np.sin(theta)
    else:
        x, w = _jacobi(n_theta, pole_exponent, pole_exponent)
        theta = 0.5 * np.pi * (x + 1.0)
        wt = 0.5 * np.pi * w / (1.0 - x * x) ** pole_exponent * np.sin(theta)
    phi = (np.arange(n_phi) + 0.5) * (TWO_PI / n_phi)
    pts = _frame_points(theta, phi, np.array(axis))
    weights = np.repeat(wt * (TWO_PI / n_phi), n_phi)
    pts.setflags(write=False)
    weights.setflags(write=False)
    return pts, weights


def sphere_rule(n_theta=128, n_phi=256, axis=(0.0, 0.0, 1.0), pole_exponent=0.0):
    """Product rule on the unit sphere.

    Gauss-Legendre (or Gauss-Jacobi when ``pole_exponent`` is nonzero) in the
    polar angle measured from ``axis``, midpoint rule in azimuth. A nonzero
    ``pole_exponent`` p absorbs integrands behaving like ``theta**p`` near
    both poles of the axis.
    """
    axis = tuple(float(a) for a in axis)
    return _sphere_rule_cached(int(n_theta), int(n_phi), axis, float(pole_exponent))


def pole_rule(center, n=64):
    """Sphere rule centred at ``center`` resolving a log singularity there.

    Uses the variable ``w = sin(theta/2)`` (so ``dA = 4 w dw dphi``) with
    ``n`` Gauss-Legendre nodes in ``w`` and ``2n`` azimuthal nodes.
    """
    w, ww = gauss_legendre(n, 0.0, 1.0)
    theta = 2.0 * np.arcsin(w)
    n_phi = 2 * n
    phi = (np.arange(n_phi) + 0.5) * (TWO_PI / n_phi)
    pts = _frame_points(theta, phi, center)
    weights = np.repeat(4.0 * w * ww * (TWO_PI / n_phi), n_phi)
    return pts, weights


def disc_rule(center, radius, n_r=64, n_phi=128, radial="linear"):
    """Polar rule on a Euclidean disc.

    ``radial="linear"`` uses Gauss-Legendre in ``r``. ``radial="cusp"``
    substitutes ``r = exp(-L)`` with ``L = L0 / (1 - s)`` which integrates
    densities like ``1 / (r**2 log(r)**2)`` exactly near the centre; it needs
    ``radius < 1``.
    """
    center = np.asarray(center, dtype=float)
    phi = (np.arange(n_phi) + 0.5) * (TWO_PI / n_phi)
    if radial == "linear":
        r, wr = gauss_legendre(n_r, 0.0, radius)
        wr = wr * r
    elif radial == "cusp":
        if not 0.0 < radius < 1.0:
            raise ValueError("cusp radial map needs 0 < radius < 1")
        s, ws = gauss_legendre(n_r, 0.0, 1.0)
        L0 = -np.log(radius)
        L = L0 / (1.0 - s)
        r = np.exp(-L)
        # r dr = r^2 dL ; dL = L0 / (1-s)^2 ds
        wr = ws * r * r * L0 / (1.0 - s) ** 2
    else:
        raise ValueError(f"unknown radial map {radial!r}")
    pts = np.stack(
        [
            center[0] + np.outer(r, np.cos(phi)).ravel(),
            center[1] + np.outer(r, np.sin(phi)).ravel(),
        ],
        axis=1,
    )
    weights = np.repeat(wr * (TWO_PI / n_phi), n_phi)
    return pts, weights


def rect_midpoints(x0, x1, y0, y1, nx, ny):
    """Cell centres of an ``ny x nx`` grid and the common cell area."""
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / ny
    xs = x0 + (np.arange(nx) + 0.5) * hx
    ys = y0 + (np.arange(ny) + 0.5) * hy
    X, Y = np.meshgrid(xs, ys)
    return np.stack([X.ravel(), Y.ravel()], axis=1), hx * hy
