import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from loggas.errors import WindowTooSmall, ZeroGap
from loggas.process import (count_statistics, correlation_gap, pair_sum, pairing_lattice, pairing_periodic,
                            pairing_periodic_mc, theorem1_check)
from loggas.testfunctions import bump, diagonal_bump, product_bump
from loggas.torus import lattice, new_config, perturb_lattice, random_config


def pairing_riemann(cfg, phi, m=4000):
    """Average of the windowed pair sum over a midpoint grid of translations."""
    N, T = cfg.N, phi.T
    reach = int(math.ceil((T + N) / N)) + 1
    ext = np.concatenate([cfg.array + k * N for k in range(-reach, reach + 1)])
    ts = (np.arange(m) + 0.5) * N / m
    return float(np.mean([pair_sum(ext - t, phi) for t in ts]))


def counts_bruteforce(cfg, T, m=200_000):
    N = cfg.N
    ext = np.concatenate([cfg.array + k * N for k in range(-3, 4)])
    ts = (np.arange(m) + 0.5) * N / m
    c = np.array([np.count_nonzero((ext - t >= -T) & (ext - t <= T)) for t in ts[::50]])
    return c.mean(), c.var()


def g_integral(h):
    return quad(lambda t: bump(t, 0.0, h), -h, h, epsabs=1e-14)[0]


def test_pair_sum_disjoint_supports():
    phi = product_bump(0, 0.4, 0, 0.4)
    assert pair_sum(np.arange(-3.0, 4.0), phi) == 0.0


def test_pair_sum_two_terms():
    phi = product_bump(0, 0.3, 1, 0.3).scaled(2.0)
    psi = product_bump(1, 0.3, 0, 0.3).scaled(-0.5)
    both = lambda x, y: phi(x, y) + psi(x, y)
    both.T = 1.3
    assert pair_sum([0.0, 1.0], both) == pytest.approx(1.5)


def test_pair_sum_counting_bound():
    phi = product_bump(0, 3.0, 0, 3.0)
    T = 3
    assert abs(pair_sum(np.arange(-T, T + 1.0), phi)) <= (2 * T + 1) ** 2 * phi.sup_norm


def test_pair_sum_window_check():
    phi = product_bump(0, 2.0, 0, 2.0)
    with pytest.raises(WindowTooSmall):
        pair_sum([0.0, 1.0], phi, window=(-1.0, 1.0))


def test_pairing_lattice_disjoint_diagonals():
    phi = product_bump(0, 0.4, 0, 0.4)
    assert pairing_lattice(phi).value == 0.0


def test_pairing_lattice_single_offset():
    phi = diagonal_bump(0, 0.4, 1, 0.4)
    assert pairing_lattice(phi).value == pytest.approx(g_integral(0.4), abs=1e-10)


def test_pairing_lattice_against_riemann():
    phi = diagonal_bump(0.2, 0.9, 1.3, 0.6)
    assert pairing_lattice(phi).value == pytest.approx(pairing_riemann(lattice(4), phi), abs=1e-6)


@pytest.mark.parametrize("N", [2, 5, 16])
def test_pairing_periodic_lattice(N):
    phi = diagonal_bump(0, 1.0, 1.2, 0.5)
    assert pairing_periodic(lattice(N), phi).value == pytest.approx(pairing_lattice(phi).value, abs=1e-8)


def test_pairing_two_point_config():
    cfg = new_config([0.0, 1.5], 2)
    phi = diagonal_bump(0, 0.4, 1, 0.4)
    # offsets are 0.5 and 1.5 with g vanishing beyond 0.4 from 1: no pair contributes
    assert pairing_periodic(cfg, phi).value == 0.0
    wide = diagonal_bump(0, 0.4, 1, 0.6)
    exact = pairing_periodic(cfg, wide)
    # per point the positive offsets are {1.5, 2} and {0.5, 2}; g vanishes at 2
    hand = 0.5 * g_integral(0.4) * (bump(0.5, 1, 0.6) + bump(1.5, 1, 0.6))
    assert exact.value == pytest.approx(hand, abs=1e-10)
    mc = pairing_periodic_mc(cfg, wide, samples=100_000, seed=3)
    assert abs(mc.value - exact.value) <= 4 * mc.error_estimate


def test_pairing_periodic_against_riemann(rng):
    cfg = random_config(5, rng, min_gap=0.1)
    phi = product_bump(0.3, 0.9, -0.2, 1.0)
    assert pairing_periodic(cfg, phi).value == pytest.approx(pairing_riemann(cfg, phi), abs=1e-5)


def test_monte_carlo_agrees(rng):
    cfg = perturb_lattice(64, 16, 0.2)
    phi = diagonal_bump(0, 1.0, 1.2, 0.5)
    exact = pairing_periodic(cfg, phi).value
    mc = pairing_periodic_mc(cfg, phi, samples=50_000, seed=11)
    assert abs(mc.value - exact) <= 4 * mc.error_estimate


def test_monte_carlo_standard_error_scaling():
    cfg = perturb_lattice(16, 2, 0.2)
    phi = diagonal_bump(0, 1.0, 1.2, 0.5)
    a = pairing_periodic_mc(cfg, phi, samples=10_000, seed=1).error_estimate
    b = pairing_periodic_mc(cfg, phi, samples=40_000, seed=1).error_estimate
    assert a / b == pytest.approx(2.0, rel=0.1)


def test_pairing_linear_in_scale(rng):
    cfg = random_config(6, rng, min_gap=0.1)
    phi = diagonal_bump(0, 1.0, 1.2, 0.5)
    assert pairing_periodic(cfg, phi.scaled(-3.5)).value == pytest.approx(
        -3.5 * pairing_periodic(cfg, phi).value, rel=1e-10)


def test_correlation_gap_lattice():
    assert correlation_gap(lattice(8), diagonal_bump(0, 1.0, 1.2, 0.5)) <= 1e-8


def test_correlation_gap_quadratic_response():
    # the first-order term cancels since the neighbour offsets sum to p N
    phi = product_bump(0.3, 0.9, -0.2, 1.0)
    gaps = [correlation_gap(perturb_lattice(16, 1, e), phi) for e in (0.01, 0.02, 0.04)]
    for lo, hi in zip(gaps, gaps[1:]):
        assert 3.7 <= hi / lo <= 4.3


def test_correlation_gap_translation():
    phi = diagonal_bump(0, 1.0, 1.2, 0.5)
    a = correlation_gap(new_config([0.0, 1.5], 2), phi)
    b = correlation_gap(new_config([0.2, 1.7], 2), phi)
    assert a == pytest.approx(b, abs=1e-12)


def test_theorem1_ratio_scaling():
    phi = product_bump(0.3, 0.9, -0.2, 1.0)
    r1 = theorem1_check(perturb_lattice(32, 2, 0.05), phi).ratio
    r2 = theorem1_check(perturb_lattice(32, 2, 0.025), phi).ratio
    assert np.isfinite(r1) and r1 > 0
    # ratio is linear in the amplitude
    assert r1 / r2 == pytest.approx(2.0, rel=0.05)


def test_theorem1_zero_gap():
    with pytest.raises(ZeroGap):
        theorem1_check(lattice(8), product_bump(0, 1, 0, 1))


def test_counts_lattice():
    s = count_statistics(lattice(5), 0.25)
    assert s.mean == pytest.approx(0.5, abs=1e-12)
    assert s.variance == pytest.approx(0.25, abs=1e-12)


def test_counts_two_point():
    s = count_statistics(new_config([0.0, 1.5], 2), 0.5)
    assert s.mean == pytest.approx(1.0, abs=1e-12)
    assert s.variance == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1), st.floats(0.01, 30))
def test_counts_mean(N, seed, T):
    cfg = random_config(N, np.random.default_rng(seed))
    s = count_statistics(cfg, T)
    assert s.mean == pytest.approx(2 * T, abs=1e-12 * max(1, T))
    assert s.variance >= -1e-12
    assert s.mean_square == pytest.approx(s.variance + s.mean ** 2, abs=1e-9)


def test_counts_against_bruteforce(rng):
    for _ in range(5):
        cfg = random_config(int(rng.integers(2, 8)), rng)
        T = float(rng.uniform(0.1, 3))
        mean, var = counts_bruteforce(cfg, T)
        s = count_statistics(cfg, T)
        assert s.mean == pytest.approx(mean, abs=2e-3)
        assert s.variance == pytest.approx(var, abs=5e-3)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1), st.floats(-20, 20))
def test_statistics_translation_invariant(N, seed, c):
    cfg = random_config(N, np.random.default_rng(seed), min_gap=0.05)
    phi = diagonal_bump(0, 1.0, 1.2, 0.5)
    assert pairing_periodic(cfg.translate(c), phi).value == pytest.approx(pairing_periodic(cfg, phi).value,
                                                                          abs=1e-9)
    assert count_statistics(cfg.translate(c), 0.7).variance == pytest.approx(count_statistics(cfg, 0.7).variance,
                                                                             abs=1e-9)
