"""Electric field of a periodic configuration and the energy computed from it.

The potential is

    H(x, y) = sum_i -log|2 sin(pi (z - a_i) / N)| + pi |y|,    z = x + i y,

which solves ``-Laplace H = 2 pi (sum_i delta_{a_i} - delta_R)`` on the
cylinder of circumference ``N`` and decays exponentially in ``|y|``.  The
field returned here is ``E = -grad H`` so that ``div E = 2 pi (nu - delta_R)``
and the outward flux around a charge is positive.  The energy only sees
``|E|^2`` so the orientation does not affect it.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import AtCharge, MeshTooCoarse
from .quadrature import gauss_legendre, panel_nodes, subdivide


def _grad_h_upper(a, N, x, y):
    """``grad H`` for ``y >= 0`` (``y == 0`` allowed away from charges), broadcast over x, y."""
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    # q = exp(2 i w), w = pi (x - a + i y) / N; cot w + i = -2 i q / (1 - q) for |q| <= 1.
    q = np.exp(2j * np.pi * (x - a) / N) * np.exp(-2.0 * np.pi * y / N)
    r = np.sum(-2j * q / (1.0 - q), axis=-1)
    hx = -(np.pi / N) * r.real
    hy = (np.pi / N) * r.imag
    return hx, hy


def field(config, x, y):
    """Vectorized ``E = -grad H`` at points ``(x, y)``; returns ``(Ex, Ey)``.

    On the real line (``y == 0``) the vertical component is the average of
    its one-sided limits.  No check is made for evaluation at a charge.
    """
    a = config.array
    N = config.N
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    hx, hy = _grad_h_upper(a, N, x, np.abs(y))
    hy = np.where(y < 0, -hy, hy)
    # One-sided limits are +-(hy - pi) + ... ; on the line the background jump averages out.
    on_line = y == 0
    if np.any(on_line):
        hy = np.where(on_line, hy - np.pi, hy)
    return -hx, -hy


def field_at(config, z):
    """Field at a single planar point ``z = (x, y)``.

    Raises
    ------
    AtCharge
        If ``z`` lies within ``1e-14 * N`` of a charge.
    """
    x, y = float(z[0]), float(z[1])
    N = config.N
    dx = np.mod(x - config.array + N / 2, N) - N / 2
    if np.min(np.hypot(dx, y)) < 1e-14 * N:
        raise AtCharge(f"evaluation point {z} coincides with a charge")
    ex, ey = field(config, x, y)
    return np.array([float(ex), float(ey)])


def flux_through_circle(config, center, r, n=64):
    """Outward flux of ``E`` through the circle of radius ``r`` about ``center``.

    The two half circles are integrated separately since ``E`` jumps across
    the real line.
    """
    cx, cy = center
    th, w = panel_nodes([0.0, np.pi, 2 * np.pi], n)
    px, py = cx + r * np.cos(th), cy + r * np.sin(th)
    ex, ey = field(config, px, py)
    return float(np.sum(w * (ex * np.cos(th) + ey * np.sin(th))) * r)


def circulation(config, rect, n=32, panel=0.1):
    """Line integral of ``E`` counter-clockwise around ``rect = (x0, x1, y0, y1)``.

    Edges are split into panels no wider than ``panel``; loops passing close
    to a charge need ``panel`` comparable to that distance.
    """
    x0, x1, y0, y1 = rect
    ycuts = [y0, y1] if not (y0 < 0 < y1) else [y0, 0.0, y1]
    ycuts = subdivide(ycuts, panel)
    total = 0.0
    # bottom and top edges
    xs, wx = panel_nodes(subdivide([x0, x1], panel), n)
    ex, _ = field(config, xs, np.full_like(xs, y0))
    total += np.sum(wx * ex)
    ex, _ = field(config, xs, np.full_like(xs, y1))
    total -= np.sum(wx * ex)
    # right and left edges
    ys, wy = panel_nodes(ycuts, n)
    _, ey = field(config, np.full_like(ys, x1), ys)
    total += np.sum(wy * ey)
    _, ey = field(config, np.full_like(ys, x0), ys)
    total -= np.sum(wy * ey)
    return float(total)


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization of the regularized energy integral.

    ``etas`` are the excision radii (decreasing); ``y_max`` the truncation
    height (defaults to ``2N``); ``order`` the Gauss-Legendre order per panel.
    """

    etas: tuple = (0.1, 0.05, 0.025)
    y_max: float = None
    order: int = 16
    polar_order: int = 48
    tol: float = 1e-6

    def resolve(self, config):
        s = 0.5 * config.min_gap()
        etas = tuple(float(e) for e in self.etas)
        if len(etas) < 2 or any(e <= 0 for e in etas) or list(etas) != sorted(etas, reverse=True):
            raise ValueError("etas must be positive and strictly decreasing")
        if etas[0] >= s:
            raise ValueError(f"eta={etas[0]} must be below half the minimal gap ({s})")
        y_max = 2.0 * config.N if self.y_max is None else float(self.y_max)
        if y_max < config.N:
            raise ValueError("y_max must be at least N")
        return etas, y_max, s


def default_etas(config, levels=3):
    s = 0.5 * config.min_gap()
    top = min(0.1, 0.4 * s)
    return tuple(top / 2**k for k in range(levels))


@dataclass
class DefinitionResult:
    value: float
    levels: list
    brackets: list
    slope: float
    extrapolation_gap: float
    details: dict = dc_field(default_factory=dict)


def _box_integral(config, a0, s, etas, n):
    """``int |E|^2`` over the upper half box ``[a0-s, a0+s] x [0, s]`` minus the half disk of radius eta.

    Polar coordinates about the charge with ``log r`` as radial variable;
    one value per eta.
    """
    xt, wt = gauss_legendre(n)
    out = []
    sectors = [(0.0, np.pi / 4), (np.pi / 4, 3 * np.pi / 4), (3 * np.pi / 4, np.pi)]
    for eta in etas:
        total = 0.0
        for t0, t1 in sectors:
            th = t0 + 0.5 * (t1 - t0) * (xt + 1.0)
            wth = 0.5 * (t1 - t0) * wt
            if t0 == np.pi / 4:
                rmax = s / np.sin(th)
            else:
                rmax = s / np.abs(np.cos(th))
            lo, hi = math.log(eta), np.log(rmax)
            # two radial panels in log r
            for k in range(2):
                l0 = lo + (hi - lo) * k / 2
                half = 0.25 * (hi - lo)
                r = np.exp(l0[:, None] + half[:, None] * (xt + 1.0))
                px = a0 + r * np.cos(th)[:, None]
                py = r * np.sin(th)[:, None]
                ex, ey = field(config, px, py)
                f = (ex**2 + ey**2) * r**2
                total += float(np.sum(wth[:, None] * half[:, None] * wt[None, :] * f))
        out.append(total)
    return np.array(out)


def _rect_integral(config, xedges, yedges, n):
    xs, wx = panel_nodes(xedges, n)
    ys, wy = panel_nodes(yedges, n)
    total = 0.0
    # chunk over y to bound memory
    for k in range(0, ys.size, 256):
        yy = ys[k:k + 256]
        ex, ey = field(config, xs[None, :], yy[:, None])
        total += float(wy[k:k + 256] @ ((ex**2 + ey**2) @ wx))
    return total


def upper_half_integrals(config, etas, y_max, s, order=16, polar_order=48):
    """``int |E|^2`` over one period of the upper half strip minus half disks, per eta."""
    a = config.array
    N = config.N
    x0 = a[0] - s
    boxes = sum(_box_integral(config, ai, s, etas, polar_order) for ai in a)
    # Row 0 <= y <= s between boxes.
    lefts = a + s
    rights = np.append(a[1:] - s, x0 + N)
    row = 0.0
    for l, r in zip(lefts, rights):
        if r - l > 1e-14 * N:
            row += _rect_integral(config, subdivide([l, r], s), [0.0, s], order)
    # Region above the boxes: geometric panels in y, x panels as wide as the height allows.
    upper = 0.0
    ybreaks = [s]
    while ybreaks[-1] < min(N, y_max):
        ybreaks.append(min(2 * ybreaks[-1], N, y_max))
    ylevels = list(zip(ybreaks[:-1], ybreaks[1:]))
    if y_max > ybreaks[-1]:
        tail = subdivide([ybreaks[-1], y_max], N / 2)
        ylevels += list(zip(tail[:-1], tail[1:]))
    xbreaks = np.concatenate(([x0], np.sort(np.concatenate((a - s, a + s))), [x0 + N]))
    xbreaks = np.unique(xbreaks)
    for y0, y1 in ylevels:
        upper += _rect_integral(config, subdivide(xbreaks, max(s, y0)), [y0, y1], order)
    return boxes + row + upper


def richardson(etas, values):
    """Polynomial extrapolation of ``values(eta)`` to ``eta = 0``.

    Returns the extrapolated value and the fitted linear coefficient.
    """
    etas = np.asarray(etas, dtype=float)
    coef = np.polynomial.polynomial.polyfit(etas, values, len(etas) - 1)
    slope = coef[1] if coef.size > 1 else 0.0
    return float(coef[0]), float(slope)


def energy_via_definition(config, spec=None):
    """Renormalized energy from the eta-regularized field integral.

    For each ``eta`` the bracket

        (1/N) [ 1/2 int_{period strip minus balls} |E|^2 + pi N log(eta) ]

    is evaluated (the integrand is even in ``y``, so the half-plane integral
    is used once), then extrapolated to ``eta -> 0``.

    Raises
    ------
    MeshTooCoarse
        If the bracket at the finest eta changes by more than ``spec.tol``
        when the quadrature mesh is refined.
    """
    spec = spec or QuadratureSpec(etas=default_etas(config))
    etas, y_max, s = spec.resolve(config)
    N = config.N
    upper = upper_half_integrals(config, etas, y_max, s, spec.order, spec.polar_order)
    brackets = (upper + math.pi * N * np.log(etas)) / N
    value, slope = richardson(etas, brackets)
    fine = upper_half_integrals(config, etas[-1:], y_max, s, spec.order + 8, spec.polar_order + 16)
    mesh_gap = abs(float(fine[0] - upper[-1])) / N
    if mesh_gap > spec.tol:
        raise MeshTooCoarse(f"finest eta level moves by {mesh_gap:.3g} > {spec.tol} under mesh refinement")
    if len(etas) >= 3:
        coarse, _ = richardson(etas[-2:], brackets[-2:])
    else:
        coarse = float(brackets[-1])
    return DefinitionResult(value=value, levels=list(etas), brackets=[float(b) for b in brackets],
                            slope=slope, extrapolation_gap=abs(value - coarse),
                            details={"y_max": y_max, "box_half_width": s, "mesh_gap": mesh_gap})
