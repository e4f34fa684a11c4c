"""Finite-N log-gas on the line.

Hamiltonian

    w_N(x) = -sum_{i != j} log|x_i - x_j| + N sum_i V(x_i).

The Gibbs measure used throughout is proportional to ``exp(-(beta/2) w_N)``,
the usual beta-ensemble normalization (for ``V = x^2 / 2`` scaled suitably it
reproduces the Gaussian beta-ensembles).  Crystallization is observed as
``beta`` grows: nearest-neighbour gaps in the bulk, rescaled to unit mean
spacing, concentrate around 1.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numba
import numpy as np

from .errors import BadSchedule, Coincidence, EmptyWindow, MaxIterations, OrderingCollapse, SolverFailure, WindowTooSmall
from .process import Method, PairingResult, pair_sum

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Potential:
    """Confining potential ``V`` with its derivatives.

    ``second_derivative`` is optional; Newton steps fall back to a central
    difference of ``derivative`` when it is missing.
    """

    name: str
    evaluate: Callable
    derivative: Callable
    second_derivative: Optional[Callable] = None

    def __call__(self, x):
        return self.evaluate(x)

    def d2(self, x):
        if self.second_derivative is not None:
            return self.second_derivative(x)
        h = 1e-5 * np.maximum(1.0, np.abs(x))
        return (self.derivative(x + h) - self.derivative(x - h)) / (2 * h)

    @property
    def growth_ok(self):
        """``V(x) - 2 log|x|`` grows at ``|x| = 1e3`` and ``1e6`` on both sides."""
        for s in (1.0, -1.0):
            f3 = self.evaluate(s * 1e3) - 2 * math.log(1e3)
            f6 = self.evaluate(s * 1e6) - 2 * math.log(1e6)
            if not (np.isfinite(f3) and np.isfinite(f6) and f6 > f3 > 0):
                return False
        return True


def quadratic():
    return Potential("quad", lambda x: x * x, lambda x: 2 * x, lambda x: 2.0 + 0 * x)


def quartic():
    return Potential("quartic", lambda x: x**4, lambda x: 4 * x**3, lambda x: 12 * x**2)


POTENTIALS = {"quad": quadratic, "quartic": quartic}


def get_potential(name):
    try:
        return POTENTIALS[name]()
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; choose from {sorted(POTENTIALS)}") from None


def _differences(x):
    x = np.asarray(x, dtype=float)
    d = x[:, None] - x[None, :]
    off = ~np.eye(x.size, dtype=bool)
    scale = max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0
    if np.any(np.abs(d[off]) <= 1e-300 * scale):
        raise Coincidence("two points coincide")
    return x, d, off


def hamiltonian(points, V):
    x, d, off = _differences(points)
    N = x.size
    return float(-np.sum(np.log(np.abs(d[off]))) + N * np.sum(V(x)))


def hamiltonian_gradient(points, V):
    x, d, off = _differences(points)
    N = x.size
    inv = np.zeros_like(d)
    inv[off] = 1.0 / d[off]
    return -2.0 * inv.sum(axis=1) + N * V.derivative(x)


def hamiltonian_hessian(points, V):
    x, d, off = _differences(points)
    N = x.size
    inv2 = np.zeros_like(d)
    inv2[off] = 1.0 / d[off] ** 2
    hess = -2.0 * inv2
    hess[np.diag_indices(N)] = 2.0 * inv2.sum(axis=1) + N * V.d2(x)
    return hess


@dataclass(frozen=True)
class FeketeResult:
    points: np.ndarray
    w_value: float
    grad_norm: float
    iterations: int
    history: tuple = ()

    def to_dict(self):
        return {"points": [float(v) for v in self.points], "w_value": self.w_value,
                "grad_norm": self.grad_norm, "iterations": self.iterations}


def fekete_optimize(V, N, init=None, tol=1e-10, max_iter=500):
    """Minimize ``w_N`` by damped Newton steps.

    The Hamiltonian is strictly convex on ordered configurations when ``V``
    is convex; Newton with an Armijo line search keeps the iterates ordered
    and the energy non-increasing.  ``grad_norm`` is the Euclidean norm.

    Raises
    ------
    MaxIterations
        If the gradient norm stays above ``tol``.
    OrderingCollapse
        If no step can be taken without two points merging.
    """
    if init is None:
        init = np.linspace(-1.0, 1.0, N) if N > 1 else np.zeros(1)
    x = np.sort(np.asarray(init, dtype=float))
    if x.size != N:
        raise ValueError(f"init has {x.size} points, expected {N}")
    if N > 1 and np.any(np.diff(x) <= 0):
        raise Coincidence("init points must be distinct")
    w = hamiltonian(x, V)
    g = hamiltonian_gradient(x, V)
    history = [w]
    for it in range(max_iter):
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            return FeketeResult(x, w, gn, it, tuple(history))
        hess = hamiltonian_hessian(x, V)
        try:
            step = -np.linalg.solve(hess, g)
            if g @ step >= 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = -g
        t = 1.0
        while True:
            xn = x + t * step
            if N == 1 or np.all(np.diff(xn) > 0):
                wn = hamiltonian(xn, V)
                gn_new = hamiltonian_gradient(xn, V)
                if wn <= w + 1e-4 * t * float(g @ step):
                    break
                # Below round-off the energy cannot certify progress; the gradient can.
                if abs(wn - w) <= 1e-13 * max(1.0, abs(w)) and np.linalg.norm(gn_new) < gn:
                    wn = min(wn, w)
                    break
            t *= 0.5
            if t < 1e-16:
                raise OrderingCollapse("line search could not find an ordered descent step")
        x, w, g = xn, wn, gn_new
        history.append(w)
    raise MaxIterations(f"gradient norm {np.linalg.norm(g):.3g} above {tol} after {max_iter} iterations")


@dataclass
class SampleSet:
    chains: np.ndarray
    steps: np.ndarray
    burn_in: int
    thinning: int
    seed: int
    acceptance_rate: float
    beta: float
    N: int
    proposal_width: float
    potential: str = ""
    warning: Optional[str] = None

    def to_csv(self):
        lines = []
        for s, state in zip(self.steps, self.chains):
            lines.append(",".join([str(int(s))] + [f"{v:.17g}" for v in state]))
        return "\n".join(lines) + "\n"


@numba.njit(cache=True)
def _sweep(x, prop, dv, u, half_beta):
    n = x.size
    accepted = 0
    for i in range(n):
        xi = x[i]
        xp = prop[i]
        dlog = 0.0
        for j in range(n):
            if j != i:
                dlog += math.log(abs(xp - x[j])) - math.log(abs(xi - x[j]))
        dw = -2.0 * dlog + dv[i]
        if dw <= 0.0 or u[i] < math.exp(-half_beta * dw):
            x[i] = xp
            accepted += 1
    return accepted


def mcmc_sample(V, N, beta, steps, burn_in, thinning=1, seed=12345, init=None,
                width=None, target=0.4, tune_every=50):
    """Systematic-scan single-site Metropolis for ``exp(-(beta/2) w_N)``.

    One step is a sweep of ``N`` single-site proposals.  The proposal width
    is tuned towards ``target`` acceptance during burn-in and frozen after.
    States are recorded sorted every ``thinning`` sweeps after burn-in.

    Raises
    ------
    BadSchedule
        If ``thinning >= steps - burn_in``.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if steps <= burn_in or burn_in < 0:
        raise BadSchedule("steps must exceed burn_in")
    if thinning < 1 or thinning >= steps - burn_in:
        raise BadSchedule(f"thinning {thinning} must be in [1, steps - burn_in)")
    rng = np.random.default_rng(seed)
    if init is None:
        init = fekete_optimize(V, N, tol=1e-8).points if N > 1 else np.zeros(1)
    x = np.array(init, dtype=float)
    delta = width if width is not None else 1.0 / N
    half_beta = 0.5 * beta
    recorded, rec_steps = [], []
    acc_window = acc_post = 0
    for step in range(steps):
        z = rng.standard_normal(N)
        u = rng.random(N)
        prop = x + delta * z
        dv = N * (V(prop) - V(x))
        acc = _sweep(x, prop, dv, u, half_beta)
        if step < burn_in:
            acc_window += acc
            if (step + 1) % tune_every == 0:
                rate = acc_window / (tune_every * N)
                delta *= math.exp(rate - target)
                acc_window = 0
        else:
            acc_post += acc
            if (step - burn_in + 1) % thinning == 0:
                recorded.append(np.sort(x))
                rec_steps.append(step + 1)
    rate = acc_post / ((steps - burn_in) * N)
    warning = None
    if not 0.1 < rate < 0.7:
        warning = f"acceptance rate {rate:.3f} outside (0.1, 0.7)"
        log.warning(warning)
    return SampleSet(chains=np.array(recorded), steps=np.array(rec_steps), burn_in=burn_in, thinning=thinning,
                     seed=seed, acceptance_rate=rate, beta=beta, N=N, proposal_width=delta,
                     potential=getattr(V, "name", ""), warning=warning)


def _log_kernel_antiderivative(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    nz = t != 0
    out[nz] = 0.5 * t[nz] ** 2 * np.log(np.abs(t[nz])) - 0.75 * t[nz] ** 2
    return out


@dataclass
class EquilibriumMeasure:
    """Piecewise-constant minimizer of the logarithmic energy on a uniform grid."""

    edges: np.ndarray
    weights: np.ndarray
    residual: float
    constant: float
    iterations: int
    extra: dict = field(default_factory=dict)

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def h(self):
        return float(self.edges[1] - self.edges[0])

    @property
    def density(self):
        return self.weights / self.h

    def density_at(self, x):
        return np.interp(x, self.centers, self.density, left=0.0, right=0.0)

    def cdf(self, x):
        cum = np.concatenate(([0.0], np.cumsum(self.weights)))
        return np.interp(x, self.edges, cum)

    def support(self, rel=1e-9):
        on = np.nonzero(self.weights > rel * self.weights.max())[0]
        return float(self.edges[on[0]]), float(self.edges[on[-1] + 1])


def equilibrium_oracle(V, grid=(-3.0, 3.0, 600), max_iter=200):
    """Discrete minimizer of ``int int -log|x-y| dmu dmu + int V dmu``.

    ``mu`` is piecewise constant on ``grid = (lo, hi, cells)``; the
    interaction matrix holds exact cell-by-cell averages of ``-log|x-y|``.
    The quadratic program over the simplex is solved by a primal active-set
    iteration on the KKT system.  The Euler-Lagrange residual is then
    measured by collocation at cell centres on the support.

    Raises
    ------
    SolverFailure
        If the active set does not settle within ``max_iter`` iterations.
    """
    lo, hi, M = grid
    M = int(M)
    edges = np.linspace(lo, hi, M + 1)
    h = edges[1] - edges[0]
    m = np.arange(M)
    G = _log_kernel_antiderivative
    # Toeplitz Galerkin matrix of -log|x - y| averaged over cells
    row = -(G((m + 1) * h) - 2 * G(m * h) + G((m - 1) * h)) / h**2
    K = row[np.abs(m[:, None] - m[None, :])]
    xg, wg = np.polynomial.legendre.leggauss(4)
    centers = 0.5 * (edges[:-1] + edges[1:])
    v = (V(centers[:, None] + 0.5 * h * xg[None, :]) @ wg) / 2.0

    active = np.ones(M, dtype=bool)
    seen = set()
    for it in range(max_iter):
        S = np.nonzero(active)[0]
        k = S.size
        A = np.zeros((k + 1, k + 1))
        A[:k, :k] = 2 * K[np.ix_(S, S)]
        A[:k, k] = -1.0
        A[k, :k] = 1.0
        rhs = np.concatenate((-v[S], [1.0]))
        try:
            sol = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverFailure(f"singular KKT system: {exc}") from None
        wS, lam = sol[:k], sol[k]
        if np.any(wS < 0):
            key = active.tobytes()
            if key in seen:
                # cycling: drop only the most negative weight
                active[S[np.argmin(wS)]] = False
            else:
                seen.add(key)
                active[S[wS < 0]] = False
            continue
        w = np.zeros(M)
        w[S] = wS
        mult = 2 * K @ w + v - lam
        viol = (~active) & (mult < -1e-12)
        if not viol.any():
            break
        active[np.argmin(np.where(viol, mult, np.inf))] = True
    else:
        raise SolverFailure(f"active set did not settle in {max_iter} iterations")

    # Collocation potential at cell centres: 2 * int -log|x - y| dmu(y) + V(x)
    def cell_avg_log(xc):
        d0 = xc[:, None] - edges[None, :-1]
        d1 = xc[:, None] - edges[None, 1:]
        F = lambda t: np.where(t == 0, 0.0, t * np.log(np.abs(np.where(t == 0, 1.0, t))) - t)
        return -(F(d0) - F(d1)) / h

    U = 2 * cell_avg_log(centers) @ w + V(centers)
    on = w > 1e-9 * w.max()
    # cells at the support edge carry the square-root singularity of the density
    interior = on & np.roll(on, 1) & np.roll(on, -1)
    const = float(np.mean(U[interior]))
    residual = float(np.max(np.abs(U[interior] - const)))
    return EquilibriumMeasure(edges=edges, weights=w, residual=residual, constant=const, iterations=it + 1,
                              extra={"lagrange": float(lam)})


def kolmogorov_distance(points, measure):
    """Sup distance between the empirical CDF of ``points`` and ``measure.cdf``."""
    x = np.sort(np.asarray(points, dtype=float))
    n = x.size
    F = measure.cdf(x)
    return float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))


def rescale(state, N, density, center):
    return N * density * (np.asarray(state) - center)


def bulk_half_width(measure, fraction=0.2):
    lo, hi = measure.support()
    return fraction * 0.5 * (hi - lo)


def rescaled_gaps(samples, measure, center=0.0, fraction=0.2):
    """Nearest-neighbour gaps in the bulk window, in units of the local mean spacing."""
    m0 = float(measure.density_at(center))
    half = bulk_half_width(measure, fraction)
    out = []
    for state in samples.chains:
        inside = state[np.abs(state - center) <= half]
        out.append(np.diff(rescale(inside, samples.N, m0, center)))
    return np.concatenate(out) if out else np.array([])


def empirical_pair_correlation(samples, phi, center, measure, fraction=0.2):
    """Average pair sum of ``phi`` over rescaled bulk windows of the recorded states.

    Points are mapped by ``x -> N m0 (x - center)`` where ``m0`` is the
    equilibrium density at ``center``, so the local spacing is about 1.

    Raises
    ------
    WindowTooSmall
        If the support box of ``phi`` does not fit in the rescaled bulk window.
    EmptyWindow
        If no pair of points ever falls in the support box.
    """
    if len(samples.chains) == 0:
        raise EmptyWindow("no recorded states")
    m0 = float(measure.density_at(center))
    if not m0 > 0:
        raise ValueError(f"center {center} is outside the equilibrium support")
    half = samples.N * m0 * bulk_half_width(measure, fraction)
    window = (-half, half)
    sums = []
    any_pairs = False
    for state in samples.chains:
        y = rescale(state, samples.N, m0, center)
        y = y[np.abs(y) <= half]
        if np.count_nonzero(np.abs(y) <= phi.T) >= 2:
            any_pairs = True
        sums.append(pair_sum(y, phi, window=window))
    if not any_pairs:
        raise EmptyWindow("no pairs of points fall in the support of phi")
    sums = np.asarray(sums)
    n = sums.size
    se = float(sums.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return PairingResult(float(sums.mean()), Method.MONTE_CARLO, se)
