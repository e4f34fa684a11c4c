"""Stationary point processes built from periodic configurations.

The process ``P_Lambda`` attached to a configuration averages the periodic
set ``Lambda`` over a uniform translation in one period.  Its two-point
correlation is only ever used through pairings with test functions:

    <rho_2, phi> = (1/N) sum_i sum_{p != 0} int phi(s, s + u_{p,i}) ds,

with ``u_{p,i} = a_{i+p} - a_i`` (``p`` of either sign).  For the lattice all
offsets are integers and the sum reduces to ``sum_{k != 0} int phi(s, s + k) ds``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .energy import W_LATTICE, energy_periodic
from .errors import WindowTooSmall, ZeroGap
from .quadrature import adaptive_gl

QUAD_TOL = 1e-13


class Method(str, enum.Enum):
    EXACT_QUADRATURE = "exact_quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class PairingResult:
    value: float
    method: Method
    error_estimate: float

    def to_dict(self):
        return {"value": self.value, "method": Method(self.method).value, "error_estimate": self.error_estimate}


@dataclass(frozen=True)
class CountStats:
    T: float
    mean: float
    variance: float
    mean_square: float

    def to_dict(self):
        return {"T": self.T, "mean": self.mean, "variance": self.variance, "mean_square": self.mean_square}


def pair_sum(points, phi, window=None):
    """Sum of ``phi(x, y)`` over ordered pairs of distinct points.

    ``window = (lo, hi)`` declares the interval the point list was cut from;
    it must contain the support box of ``phi`` or the sum would miss pairs.
    Without a window the list is taken to be the whole configuration.
    """
    if window is not None:
        lo, hi = window
        if lo > -phi.T or hi < phi.T:
            raise WindowTooSmall(f"window {window} does not cover [-{phi.T}, {phi.T}]")
    x = np.asarray(points, dtype=float)
    x = x[(x >= -phi.T) & (x <= phi.T)]
    if x.size < 2:
        return 0.0
    vals = phi(x[:, None], x[None, :])
    return float(vals.sum() - np.trace(vals))


def offset_integral(phi, u, tol=QUAD_TOL):
    """``int phi(s, s + u) ds`` and its error estimate."""
    T = phi.T
    lo, hi = max(-T, -T - u), min(T, T - u)
    if hi <= lo:
        return 0.0, 0.0
    return adaptive_gl(lambda s: phi(s, s + u), lo, hi, tol=tol * (hi - lo) / (2 * T))


def pairing_lattice(phi, tol=QUAD_TOL):
    """Pairing of the stationary lattice process ``P_Z`` with ``phi``."""
    kmax = int(math.floor(2 * phi.T))
    total, err = 0.0, 0.0
    for k in range(1, kmax + 1):
        for u in (k, -k):
            v, e = offset_integral(phi, float(u), tol)
            total += v
            err += e
    return PairingResult(total, Method.EXACT_QUADRATURE, err)


def neighbour_offsets(config, reach):
    """All offsets ``u_{p,i}`` with ``0 < |u| <= reach``, one entry per (i, p)."""
    N = config.N
    a = config.array
    out = []
    for i in range(N):
        for sign in (1, -1):
            p = sign
            while True:
                u = float(config.point(i + p) - a[i])
                if abs(u) > reach:
                    break
                out.append(u)
                p += sign
    return np.array(out)


def pairing_periodic(config, phi, tol=QUAD_TOL):
    """Pairing of ``P_Lambda`` with ``phi`` by exact offset quadrature."""
    offsets = neighbour_offsets(config, 2 * phi.T)
    total, err = 0.0, 0.0
    for u in offsets:
        v, e = offset_integral(phi, u, tol)
        total += v
        err += e
    N = config.N
    return PairingResult(total / N, Method.EXACT_QUADRATURE, err / N)


def pairing_periodic_mc(config, phi, samples=100_000, seed=0, chunk=20_000):
    """Monte Carlo pairing: average pair sums of ``Lambda - t`` over uniform ``t`` in one period.

    The error estimate is the standard error of the mean.
    """
    rng = np.random.default_rng(seed)
    N = config.N
    T = phi.T
    kmin = int(math.floor((-T - config.array[-1]) / N)) - 1
    kmax = int(math.ceil((N + T - config.array[0]) / N)) + 1
    ext = np.sort((config.array[None, :] + N * np.arange(kmin, kmax + 1)[:, None]).ravel())
    sums = np.empty(samples)
    for start in range(0, samples, chunk):
        t = rng.uniform(0.0, N, size=min(chunk, samples - start))
        lo = np.searchsorted(ext, t - T, side="left")
        hi = np.searchsorted(ext, t + T, side="right")
        K = int(np.max(hi - lo)) if t.size else 0
        idx = lo[:, None] + np.arange(K)[None, :]
        valid = idx < hi[:, None]
        pts = ext[np.minimum(idx, ext.size - 1)] - t[:, None]
        vals = phi(pts[:, :, None], pts[:, None, :])
        mask = valid[:, :, None] & valid[:, None, :] & ~np.eye(K, dtype=bool)[None]
        sums[start:start + t.size] = np.where(mask, vals, 0.0).sum(axis=(1, 2))
    mean = float(sums.mean())
    se = float(sums.std(ddof=1) / math.sqrt(samples))
    return PairingResult(mean, Method.MONTE_CARLO, se)


def correlation_gap(config, phi, tol=QUAD_TOL):
    """``|<rho_2(P_Lambda) - rho_2(P_Z), phi>|``."""
    return abs(pairing_periodic(config, phi, tol).value - pairing_lattice(phi, tol).value)


@dataclass(frozen=True)
class Theorem1Record:
    lhs: float
    sqrt_gap: float
    ratio: float
    energy_gap: float

    def to_dict(self):
        return {"lhs": self.lhs, "sqrt_gap": self.sqrt_gap, "ratio": self.ratio, "energy_gap": self.energy_gap}


def theorem1_check(config, phi, tol=QUAD_TOL):
    """Correlation gap against the square root of the energy gap.

    Raises
    ------
    ZeroGap
        If the energy gap is at most ``1e-14``.
    """
    gap = energy_periodic(config) - W_LATTICE
    if gap <= 1e-14:
        raise ZeroGap(f"energy gap {gap:.3g} too small for a ratio")
    lhs = correlation_gap(config, phi, tol)
    root = math.sqrt(gap)
    return Theorem1Record(lhs=lhs, sqrt_gap=root, ratio=lhs / root, energy_gap=gap)


def count_statistics(config, T):
    """Exact mean and variance of the number of points in ``[-T, T]`` under ``P_Lambda``.

    The count is piecewise constant in the translation ``t``; it is
    evaluated once per piece between sorted breakpoints.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    N = config.N
    a = config.array
    breaks = np.concatenate(([0.0, float(N)], np.mod(a - T, N), np.mod(a + T, N)))
    breaks = np.sort(breaks)
    keep = np.concatenate(([True], np.diff(breaks) > 1e-14 * N))
    breaks = breaks[keep]
    if breaks[-1] < N:
        breaks = np.append(breaks, float(N))
    else:
        breaks[-1] = float(N)
    lengths = np.diff(breaks)
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    # number of k with a_i + kN in [t - T, t + T]
    upper = np.floor((mid[:, None] + T - a[None, :]) / N)
    lower = np.ceil((mid[:, None] - T - a[None, :]) / N)
    counts = (upper - lower + 1).sum(axis=1)
    mean = float(lengths @ counts) / N
    mean_sq = float(lengths @ counts**2) / N
    var = max(mean_sq - mean**2, 0.0)
    return CountStats(T=float(T), mean=mean, variance=var, mean_square=mean_sq)
