"""Renormalized energy of periodic configurations.

For ``N`` points on the torus of circumference ``N`` the energy has the closed
form

    W = -(pi/N) sum_{i != j} log|2 sin(pi (a_i - a_j) / N)| - pi log(2 pi / N),

minimized by the lattice with value ``W(Z) = -pi log(2 pi)``.

Note on second derivatives: for ``F(x) = log|2 sin x|`` one has
``F''(x) = -1/sin^2 x``.  The defect lower bound only uses ``|F''| = csc^2 x``,
which is what the convexity arguments here rely on.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MaxIterations, NearCoincidence, NonpositiveDensity, OrderingCollapse, ZeroDefect
from .torus import TorusConfiguration, defect_table, new_config

log = logging.getLogger(__name__)

#: Energy of the integer lattice, evaluated in closed form.
W_LATTICE = -math.pi * math.log(2 * math.pi)

COINCIDENCE_TOL = 1e-12


class Normalization(str, enum.Enum):
    """Bookkeeping for the right-hand side of the defect lower bound.

    ``PAPER_RHS`` is ``sum_{p<=N/2} (1/N) sum_i min(b_{p,i}^2 / p^2, 1)``;
    ``PREFACTORED`` multiplies the same sum by an extra ``1/N``.
    """

    PAPER_RHS = "paper_rhs"
    PREFACTORED = "prefactored"


def _pair_differences(config):
    a = config.array
    iu, ju = np.triu_indices(config.N, k=1)
    d = a[ju] - a[iu]
    if np.any(np.minimum(d, config.N - d) < COINCIDENCE_TOL * config.N):
        raise NearCoincidence("two points are closer than 1e-12 * N")
    return d


def energy_periodic(config: TorusConfiguration) -> float:
    """Closed-form renormalized energy of a periodic configuration."""
    N = config.N
    d = _pair_differences(config)
    # Each unordered pair appears twice in the i != j sum.
    s = np.sum(np.log(2.0 * np.sin(np.pi * d / N)))
    return float(-2.0 * math.pi / N * s - math.pi * math.log(2 * math.pi / N))


def energy_gradient(config: TorusConfiguration) -> np.ndarray:
    """Gradient ``dW/da_i = -(2 pi^2 / N^2) sum_{j != i} cot(pi (a_i - a_j) / N)``."""
    N = config.N
    _pair_differences(config)
    a = config.array
    diff = a[:, None] - a[None, :]
    np.fill_diagonal(diff, N / 2.0)  # cot(pi/2) = 0, drops the diagonal
    cot = 1.0 / np.tan(np.pi * diff / N)
    np.fill_diagonal(cot, 0.0)
    return -(2.0 * math.pi**2 / N**2) * cot.sum(axis=1)


def scale_energy(w_unit: float, m: float) -> float:
    """Energy at density ``m`` from the unit-density energy: ``m (w - pi log m)``."""
    if not m > 0:
        raise NonpositiveDensity(f"density must be positive, got {m}")
    return m * (w_unit - math.pi * math.log(m))


def lattice_energy(m: float = 1.0) -> float:
    """Minimal energy at density ``m``, ``-pi m log(2 pi m)``."""
    if not m > 0:
        raise NonpositiveDensity(f"density must be positive, got {m}")
    return -math.pi * m * math.log(2 * math.pi * m)


def defect_functional(config, normalization=Normalization.PAPER_RHS) -> float:
    normalization = Normalization(normalization)
    N = config.N
    table = defect_table(config)
    pmax = N // 2
    p = np.arange(1, pmax + 1)[:, None]
    terms = np.minimum(table.b[:pmax] ** 2 / p**2, 1.0)
    value = float(terms.mean(axis=1).sum())
    if normalization is Normalization.PREFACTORED:
        value /= N
    return value


def qlb_ratio(config, normalization=Normalization.PAPER_RHS) -> float:
    """Energy gap divided by the defect functional."""
    defect = defect_functional(config, normalization)
    if defect == 0.0:
        raise ZeroDefect("configuration is a lattice translate; the ratio is undefined")
    return (energy_periodic(config) - W_LATTICE) / defect


@dataclass(frozen=True)
class EnergyReport:
    w: float
    gap: float
    defect_paper_rhs: float
    defect_prefactored: float
    ratio: Optional[float]

    def to_dict(self):
        return {
            "w": self.w,
            "gap": self.gap,
            "defect_paper_rhs": self.defect_paper_rhs,
            "defect_prefactored": self.defect_prefactored,
            "ratio": self.ratio,
        }


def energy_report(config, normalization=Normalization.PAPER_RHS) -> EnergyReport:
    w = energy_periodic(config)
    gap = w - W_LATTICE
    d_paper = defect_functional(config, Normalization.PAPER_RHS)
    d_pre = defect_functional(config, Normalization.PREFACTORED)
    denom = d_paper if Normalization(normalization) is Normalization.PAPER_RHS else d_pre
    ratio = gap / denom if denom > 0 else None
    return EnergyReport(w=w, gap=gap, defect_paper_rhs=d_paper, defect_prefactored=d_pre, ratio=ratio)


def _cyclically_ordered(x, N):
    gaps = np.diff(np.append(x, x[0] + N))
    return bool(np.all(gaps > COINCIDENCE_TOL * N))


def minimize_energy(init: TorusConfiguration, tol: float = 1e-8, max_iter: int = 100_000,
                    polish_threshold: float = 1e-5) -> TorusConfiguration:
    """Gradient descent on the torus energy.

    Armijo backtracking is used while the energy decrease is resolvable in
    floating point; once the gradient sup-norm drops below
    ``polish_threshold`` the last accepted step is frozen and plain gradient
    steps finish the job.

    Raises
    ------
    MaxIterations
        If the gradient sup-norm does not reach ``tol`` within ``max_iter``.
    OrderingCollapse
        If a polish step would reorder the points.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    N = init.N
    x = init.array
    cfg = init
    w = energy_periodic(cfg)
    g = energy_gradient(cfg)
    step = N / (2 * math.pi**2)
    polishing = False
    for it in range(max_iter):
        gmax = float(np.max(np.abs(g)))
        if gmax <= tol:
            log.debug("minimize_energy converged in %d iterations", it)
            return cfg
        if not polishing and gmax < polish_threshold:
            polishing = True
        if polishing:
            xn = x - step * g
            if not _cyclically_ordered(xn, N):
                raise OrderingCollapse("polish step broke the cyclic ordering")
            cfg_n = new_config(xn, N)
            g_n = energy_gradient(cfg_n)
            if np.max(np.abs(g_n)) > gmax:
                step *= 0.5
            x, cfg, g = cfg_n.array, cfg_n, g_n
            continue
        gg = float(g @ g)
        t = step * 2.0
        while True:
            xn = x - t * g
            if _cyclically_ordered(xn, N):
                cfg_n = new_config(xn, N)
                w_n = energy_periodic(cfg_n)
                if w_n <= w - 1e-4 * t * gg:
                    break
            t *= 0.5
            if t < 1e-300:
                # Decrease no longer resolvable; let the polish phase finish.
                polishing = True
                break
        if polishing:
            continue
        step = t
        x, cfg, w = cfg_n.array, cfg_n, w_n
        g = energy_gradient(cfg)
    raise MaxIterations(f"gradient sup-norm still above {tol} after {max_iter} iterations")
