"""Compactly supported C^1 test functions on the plane.

The built-in family is made of quintic smoothstep bumps

    g(t) = S(1 - |t - c| / h),   S(s) = 6 s^5 - 15 s^4 + 10 s^3 on [0, 1],

which are C^2 with ``g(c) = 1``, support ``[c - h, c + h]`` and
``max |g'| = 15 / (8 h)``.
"""

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RectBivariateSpline

BUMP_SLOPE = 15.0 / 8.0


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def smoothstep_prime(s):
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 30.0 * s**2 * (1.0 - s) ** 2, 0.0)


def bump(t, c, h):
    return smoothstep(1.0 - np.abs(t - c) / h)


def bump_prime(t, c, h):
    d = t - c
    return -np.sign(d) / h * smoothstep_prime(1.0 - np.abs(d) / h)


@dataclass(frozen=True)
class TestFunction2D:
    """A test function with declared support box ``[-T, T]^2`` and sup-norms.

    ``evaluate(x, y)`` and ``gradient(x, y)`` are vectorized; ``gradient``
    returns a pair ``(d/dx, d/dy)``.
    """

    evaluate: Callable
    gradient: Callable
    T: float
    sup_norm: float
    grad_sup_norm: float
    spec: dict = field(default_factory=dict, compare=False)

    __test__ = False  # not a pytest class

    def __call__(self, x, y):
        return self.evaluate(x, y)

    @property
    def support_box(self):
        return (-self.T, self.T)

    def scaled(self, s):
        return TestFunction2D(
            evaluate=lambda x, y: s * self.evaluate(x, y),
            gradient=lambda x, y: tuple(s * g for g in self.gradient(x, y)),
            T=self.T,
            sup_norm=abs(s) * self.sup_norm,
            grad_sup_norm=abs(s) * self.grad_sup_norm,
            spec={**self.spec, "scale": s * self.spec.get("scale", 1.0)},
        )

    def validate(self, n=512, fd_step=1e-6, fd_tol=1e-6, rng=None):
        """Check support, declared norms and the gradient against finite differences.

        Returns a dict of the sampled quantities; raises ``ValueError`` on a
        violated declaration.
        """
        T = self.T
        g = np.linspace(-T, T, n)
        X, Y = np.meshgrid(g, g, indexing="ij")
        vals = self.evaluate(X, Y)
        gx, gy = self.gradient(X, Y)
        sup = float(np.max(np.abs(vals)))
        gsup = float(np.max(np.hypot(gx, gy)))
        if sup > self.sup_norm * (1 + 1e-12):
            raise ValueError(f"sampled sup {sup} exceeds declared {self.sup_norm}")
        if gsup > self.grad_sup_norm * (1 + 1e-12):
            raise ValueError(f"sampled gradient sup {gsup} exceeds declared {self.grad_sup_norm}")
        ring = np.linspace(-2 * T, 2 * T, 4 * n)
        outside = np.concatenate([
            self.evaluate(ring, np.full_like(ring, 1.001 * T)),
            self.evaluate(ring, np.full_like(ring, -1.001 * T)),
            self.evaluate(np.full_like(ring, 1.001 * T), ring),
            self.evaluate(np.full_like(ring, -1.001 * T), ring),
        ])
        if np.any(outside != 0.0):
            raise ValueError("test function does not vanish outside its support box")
        rng = rng or np.random.default_rng(0)
        px, py = rng.uniform(-T, T, size=(2, 200))
        fdx = (self.evaluate(px + fd_step, py) - self.evaluate(px - fd_step, py)) / (2 * fd_step)
        fdy = (self.evaluate(px, py + fd_step) - self.evaluate(px, py - fd_step)) / (2 * fd_step)
        ax, ay = self.gradient(px, py)
        scale = max(self.grad_sup_norm, 1e-300)
        fd_err = float(max(np.max(np.abs(fdx - ax)), np.max(np.abs(fdy - ay))) / scale)
        if fd_err > fd_tol:
            raise ValueError(f"gradient disagrees with finite differences (rel. err {fd_err:.2e})")
        return {"sup": sup, "grad_sup": gsup, "fd_error": fd_err}


def _support_T(*intervals):
    return max(1.0, *(abs(v) for iv in intervals for v in iv))


def product_bump(cx, hx, cy, hy, amplitude=1.0):
    """``g_{cx,hx}(x) * g_{cy,hy}(y)``."""

    def evaluate(x, y):
        return amplitude * bump(x, cx, hx) * bump(y, cy, hy)

    def gradient(x, y):
        gx, gy = bump(x, cx, hx), bump(y, cy, hy)
        return amplitude * bump_prime(x, cx, hx) * gy, amplitude * gx * bump_prime(y, cy, hy)

    T = _support_T((cx - hx, cx + hx), (cy - hy, cy + hy))
    a = abs(amplitude)
    return TestFunction2D(evaluate, gradient, T, a, a * BUMP_SLOPE * np.hypot(1 / hx, 1 / hy),
                          spec={"kind": "product", "cx": cx, "hx": hx, "cy": cy, "hy": hy, "scale": amplitude})


def diagonal_bump(cx, hx, d, hd, amplitude=1.0):
    """``g_{cx,hx}(x) * g_{d,hd}(y - x)``: pairs near ``cx`` separated by about ``d``."""

    def evaluate(x, y):
        return amplitude * bump(x, cx, hx) * bump(y - x, d, hd)

    def gradient(x, y):
        gx, gd = bump(x, cx, hx), bump(y - x, d, hd)
        gxp, gdp = bump_prime(x, cx, hx), bump_prime(y - x, d, hd)
        return amplitude * (gxp * gd - gx * gdp), amplitude * gx * gdp

    ylo, yhi = cx - hx + d - hd, cx + hx + d + hd
    T = _support_T((cx - hx, cx + hx), (ylo, yhi))
    a = abs(amplitude)
    bound = a * BUMP_SLOPE * np.hypot(1 / hx + 1 / hd, 1 / hd)
    return TestFunction2D(evaluate, gradient, T, a, bound,
                          spec={"kind": "diagonal", "cx": cx, "hx": hx, "d": d, "hd": hd, "scale": amplitude})


def from_grid(xs, ys, values):
    """Bicubic spline through sampled values on a tensor grid.

    The outer two rows and columns must be zero so the function (and, to
    spline accuracy, its gradient) vanishes on the border; the spline is cut
    to zero outside the grid.  Norms are taken from a dense resample with a
    small safety margin.
    """
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    values = np.asarray(values, float)
    border = np.concatenate([values[:2].ravel(), values[-2:].ravel(), values[:, :2].ravel(), values[:, -2:].ravel()])
    if np.any(border != 0.0):
        raise ValueError("grid values must vanish on the two outermost rows and columns")
    spl = RectBivariateSpline(xs, ys, values, kx=3, ky=3, s=0)
    x0, x1, y0, y1 = xs[0], xs[-1], ys[0], ys[-1]

    def inside(x, y):
        return (x > x0) & (x < x1) & (y > y0) & (y < y1)

    def evaluate(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = spl.ev(x, y)
        return np.where(inside(x, y), out, 0.0)

    def gradient(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        m = inside(x, y)
        return np.where(m, spl.ev(x, y, dx=1), 0.0), np.where(m, spl.ev(x, y, dy=1), 0.0)

    fx = np.linspace(x0, x1, 1024)
    fy = np.linspace(y0, y1, 1024)
    FX, FY = np.meshgrid(fx, fy, indexing="ij")
    sup = 1.01 * float(np.max(np.abs(evaluate(FX, FY))))
    gsup = 1.01 * float(np.max(np.hypot(*gradient(FX, FY))))
    T = _support_T((x0, x1), (y0, y1))
    return TestFunction2D(evaluate, gradient, T, sup, gsup, spec={"kind": "grid"})


def parse_phi(text):
    """Build a test function from a CLI description.

    Accepted forms are ``product:cx,hx,cy,hy``, ``diagonal:cx,hx,d,hd`` (an
    optional fifth number is an amplitude) or the path of a JSON grid file
    ``{"x": [...], "y": [...], "values": [[...], ...]}``.
    """
    kind, _, rest = text.partition(":")
    if kind in ("product", "diagonal") and rest:
        nums = [float(v) for v in rest.split(",")]
        if len(nums) not in (4, 5):
            raise ValueError(f"{kind} test function takes 4 or 5 numbers, got {len(nums)}")
        return (product_bump if kind == "product" else diagonal_bump)(*nums)
    with open(text) as fh:
        data = json.load(fh)
    return from_grid(data["x"], data["y"], data["values"])
