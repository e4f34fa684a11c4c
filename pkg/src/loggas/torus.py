"""Periodic point configurations on the torus R / NZ at unit density.

A configuration stores ``N`` sorted points inside a single window
``[a_1, a_1 + N)``.  Indices beyond ``N`` follow the periodic extension
``a_{i+N} = a_i + N``; :meth:`TorusConfiguration.point` is the only place
where that convention is implemented.
"""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import AmplitudeTooLarge, BadLength, DuplicatePoint, NonpositiveDensity

#: Relative distance (in units of the period) below which two points coincide.
DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class TorusConfiguration:
    """``N`` ordered points on a circle of circumference ``N``.

    Use :func:`new_config` to build one from arbitrary input; the constructor
    itself only validates.
    """

    points: tuple
    period: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if self.period < 2:
            raise BadLength(f"period must be >= 2, got {self.period}")
        if pts.shape != (self.period,):
            raise BadLength(f"expected {self.period} points, got {pts.size}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        gaps = np.diff(np.append(pts, pts[0] + self.period))
        if np.any(gaps <= DUPLICATE_TOL * self.period):
            raise DuplicatePoint("points must be strictly increasing and simple on the torus")

    @property
    def N(self):
        return self.period

    @property
    def array(self):
        """Points as a fresh float array."""
        return np.array(self.points, dtype=float)

    def point(self, i):
        """Point with 0-based index ``i`` of the periodic extension.

        ``i`` may be any integer or integer array; ``point(i + N) == point(i) + N``.
        """
        q, r = np.divmod(np.asarray(i), self.period)
        return self.array[r] + q * self.period

    def gaps(self):
        """Nearest-neighbour spacings ``u_{1,i}``, length ``N``."""
        return self.point(np.arange(1, self.period + 1)) - self.array

    def min_gap(self):
        return float(self.gaps().min())

    def translate(self, c):
        return new_config(self.array + c, self.period)

    def to_dict(self):
        return {"period": self.period, "points": [float(x) for x in self.points]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self):
        buf = io.StringIO()
        for x in self.points:
            buf.write(f"{x:.17g}\n")
        return buf.getvalue()


def new_config(points, N):
    """Validate, reduce mod ``N`` and sort a list of points.

    Raises
    ------
    BadLength
        If ``len(points) != N``.
    DuplicatePoint
        If two points coincide modulo ``N`` (within ``1e-12 * N``).
    """
    pts = np.asarray(points, dtype=float).ravel()
    N = int(N)
    if pts.size != N:
        raise BadLength(f"expected {N} points, got {pts.size}")
    if N < 2:
        raise BadLength("a torus configuration needs at least 2 points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    pts = np.sort(pts)
    # Keep the smallest point where it is and fold the rest into [a_1, a_1 + N).
    # Points already inside the window are kept bit-for-bit.
    base = pts[0]
    red = np.where(pts - base < N, pts, base + np.mod(pts - base, N))
    red = np.sort(red)
    gaps = np.diff(np.append(red, red[0] + N))
    if np.any(gaps <= DUPLICATE_TOL * N):
        raise DuplicatePoint("two points coincide modulo the period")
    return TorusConfiguration(tuple(float(x) for x in red), N)


def lattice(N):
    """The integer lattice ``(0, 1, ..., N-1)``."""
    return TorusConfiguration(tuple(float(i) for i in range(N)), int(N))


def perturb_lattice(N, q, eps):
    """Sinusoidal perturbation ``a_i = i + eps * sin(2 pi q i / N)``, ``i = 0..N-1``.

    Modes alias: when ``2q = N`` every sine vanishes at integer ``i`` and the
    result is the unperturbed lattice, and modes ``q`` and ``N - q`` give
    mirror-image perturbations.
    """
    N, q = int(N), int(q)
    if not 1 <= q <= N - 1:
        raise ValueError(f"mode q must lie in [1, N-1], got {q}")
    if abs(eps) >= 0.5:
        raise AmplitudeTooLarge(f"|eps| must be < 1/2 to keep points ordered, got {eps}")
    i = np.arange(N)
    return new_config(i + eps * np.sin(2 * np.pi * q * i / N), N)


def random_config(N, rng, min_gap=0.0):
    """Uniform random simple configuration; ``min_gap`` enforces a spacing floor.

    With ``min_gap > 0`` the free length ``N - N*min_gap`` is split uniformly
    (sorted uniforms) and the floor added back to each gap.
    """
    if min_gap * N >= N:
        raise ValueError("min_gap must be < 1")
    free = N * (1.0 - min_gap)
    cuts = np.sort(rng.uniform(0.0, free, size=N - 1))
    gaps = np.diff(np.concatenate(([0.0], cuts, [free]))) + min_gap
    pts = rng.uniform(0.0, N) + np.concatenate(([0.0], np.cumsum(gaps[:-1])))
    return new_config(pts, N)


@dataclass(frozen=True)
class DefectTable:
    """Neighbour spacings ``u[p-1, i] = a_{i+p} - a_i`` and defects ``b = u - p``.

    Row ``p-1`` holds the ``p``-th neighbour spacings for ``p = 1..N``.
    """

    u: np.ndarray
    b: np.ndarray

    @property
    def N(self):
        return self.u.shape[1]


def defect_table(config):
    N = config.N
    p = np.arange(1, N + 1)[:, None]
    i = np.arange(N)[None, :]
    u = config.point(i + p) - config.point(i)
    return DefectTable(u=u, b=u - p)


@dataclass(frozen=True)
class ScalingParams:
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise NonpositiveDensity(f"density must be positive, got {self.m}")


def load_config(path):
    """Read a configuration from JSON ``{"period": N, "points": [...]}``."""
    with open(path) as fh:
        data = json.load(fh)
    return config_from_dict(data)


def config_from_dict(data):
    try:
        return new_config(data["points"], int(data["period"]))
    except KeyError as exc:
        raise ValueError(f"configuration is missing field {exc}") from None


def save_config(config, path):
    with open(path, "w") as fh:
        fh.write(config.to_json())


def read_csv_points(text):
    return [float(row[0]) for row in csv.reader(io.StringIO(text)) if row]
