"""Panel-based Gauss-Legendre quadrature for power-law kernels.

Everything here works on |z|^e integrands over boxes, their overlap
(tent) weights, and the closed-form pieces used for exterior tails.
Singular endpoints are handled by geometric panel grading, never by a
regularization parameter.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

__all__ = [
    "gauss_rule",
    "uniform_edges",
    "graded_edges",
    "panel_nodes",
    "axis_nodes",
    "tent",
    "pair_integral",
    "cell_average_power",
    "power_segment_integral",
    "halfplane_profile_constant",
    "quadrant_integral",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL32_X, _GL32_W = np.polynomial.legendre.leggauss(32)


def gauss_rule(n):
    return np.polynomial.legendre.leggauss(n)


def uniform_edges(a, b, panels):
    return np.linspace(a, b, panels + 1)


def graded_edges(a, b, levels):
    """Panel edges on [a, b] clustering geometrically toward a."""
    frac = 0.5 ** np.arange(levels, -1, -1.0)
    return np.concatenate(([a], a + (b - a) * frac))


def panel_nodes(edges, rule=None):
    """Composite Gauss nodes/weights over consecutive panels."""
    gx, gw = rule if rule is not None else (_GL_X, _GL_W)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    return x, w


def axis_nodes(delta, width, separated_panels=4, graded_levels=12):
    """Quadrature for one axis of a tent-supported integrand.

    The support is [delta - width, delta + width].  If 0 lies inside, the
    axis is split there and graded toward it from both sides; if 0 sits at
    an endpoint, panels grade toward that endpoint; otherwise uniform
    panels suffice.
    """
    lo, hi = delta - width, delta + width
    eps = 1e-12 * max(width, abs(delta))
    if lo > eps or hi < -eps:
        x, w = panel_nodes(uniform_edges(lo, hi, separated_panels))
    elif abs(lo) <= eps:
        x, w = panel_nodes(graded_edges(0.0, hi, graded_levels))
    elif abs(hi) <= eps:
        x, w = panel_nodes(graded_edges(0.0, lo, graded_levels))
        w = -w  # reversed orientation
    else:
        xl, wl = panel_nodes(graded_edges(0.0, lo, graded_levels))
        xr, wr = panel_nodes(graded_edges(0.0, hi, graded_levels))
        x = np.concatenate([xl, xr])
        w = np.concatenate([-wl, wr])
    return x, w


def tent(t, width):
    """Overlap length of two width-`width` intervals at center offset t."""
    return np.maximum(0.0, width - np.abs(t))


def pair_integral(exponent, delta, widths):
    """integral of |z|^exponent * prod_a tent(z_a - delta_a, w_a) dz.

    `delta` is the center-to-center offset of two axis-aligned cells with
    per-axis widths `widths`; the tent product is the overlap volume in
    the z = x - y substitution.
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    widths = np.atleast_1d(np.asarray(widths, dtype=float))
    dim = delta.size
    axes = [axis_nodes(delta[a], widths[a]) for a in range(dim)]
    if dim == 1:
        z, w = axes[0]
        vals = np.abs(z) ** exponent * tent(z - delta[0], widths[0])
        return float(np.sum(w * vals))
    (z1, w1), (z2, w2) = axes
    r = np.hypot(z1[:, None], z2[None, :])
    vals = r**exponent
    vals *= tent(z1 - delta[0], widths[0])[:, None]
    vals *= tent(z2 - delta[1], widths[1])[None, :]
    return float(w1 @ vals @ w2)


def cell_average_power(exponent, widths):
    """Average of |z|^exponent over the cell prod_a [-w_a/2, w_a/2].

    Needs exponent > -dim.  The singular part is integrated exactly over
    the inscribed disk; the remainder is smooth and handled by an angular
    Gauss rule.
    """
    widths = np.atleast_1d(np.asarray(widths, dtype=float))
    dim = widths.size
    if exponent <= -dim:
        raise ValueError(f"cell average diverges for exponent {exponent} in dim {dim}")
    if dim == 1:
        w = widths[0]
        return 2.0 * (w / 2.0) ** (1.0 + exponent) / ((1.0 + exponent) * w)
    w1, w2 = widths
    rho = 0.5 * min(w1, w2)
    e2 = exponent + 2.0
    disk = 2.0 * math.pi * rho**e2 / e2
    # quadrant angular split where the two cell edges meet
    theta_hat = math.atan2(w2, w1)
    segs = [(0.0, theta_hat), (theta_hat, 0.5 * math.pi)]
    remainder = 0.0
    for lo, hi in segs:
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        th = mid + half * _GL32_X
        wq = half * _GL32_W
        r_edge = np.minimum(w1 / (2.0 * np.cos(th)), w2 / (2.0 * np.sin(th)))
        remainder += 4.0 * np.sum(wq * (r_edge**e2 - rho**e2) / e2)
    return (disk + remainder) / (w1 * w2)


def power_segment_integral(exponent, a, b):
    """integral_a^b t^exponent dt for 0 < a < b, vectorized and log-aware."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if abs(exponent + 1.0) < 1e-13:
        return np.log(b / a)
    e1 = exponent + 1.0
    return (b**e1 - a**e1) / e1


def halfplane_profile_constant(sp):
    """sqrt(pi) * Gamma((sp+1)/2) / Gamma((sp+2)/2).

    Transverse profile factor of the 2D kernel |z|^{-(2+sp)} integrated
    along a line.
    """
    return math.sqrt(math.pi) * math.exp(gammaln((sp + 1.0) / 2.0) - gammaln((sp + 2.0) / 2.0))


def quadrant_integral(sp, a, b):
    """integral over {y1 > a, y2 > b} of (y1^2 + y2^2)^{-(2+sp)/2}, a,b > 0.

    Polar form: (1/sp) * [ b^-sp int_0^that sin^sp + a^-sp int_that^(pi/2) cos^sp ]
    with that = arctan(b/a).  Vectorized over a, b.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    theta_hat = np.arctan2(b, a)
    t = 0.5 * (_GL32_X + 1.0)  # nodes on [0, 1]
    wt = 0.5 * _GL32_W
    th1 = theta_hat[..., None] * t
    seg1 = np.sum(wt * np.sin(th1) ** sp, axis=-1) * theta_hat * b ** (-sp)
    span = 0.5 * math.pi - theta_hat
    th2 = theta_hat[..., None] + span[..., None] * t
    seg2 = np.sum(wt * np.cos(th2) ** sp, axis=-1) * span * a ** (-sp)
    return (seg1 + seg2) / sp
