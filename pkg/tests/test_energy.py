import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loggas.energy import (W_LATTICE, Normalization, defect_functional, energy_gradient, energy_periodic,
                           energy_report, lattice_energy, minimize_energy, qlb_ratio, scale_energy)
from loggas.errors import NonpositiveDensity, ZeroDefect
from loggas.torus import lattice, new_config, perturb_lattice, random_config


def two_point_gap(d):
    """Closed form for N = 2: W - W(Z) = -pi log cos(pi d / 2) for points (0, 1 + d)."""
    return -math.pi * math.log(math.cos(math.pi * d / 2))


def repeat(cfg, k):
    """The same periodic set seen with period k N."""
    N = cfg.N
    pts = np.concatenate([cfg.array + j * N for j in range(k)])
    return new_config(pts, k * N)


def fd_gradient(cfg, h=1e-6):
    out = np.empty(cfg.N)
    for i in range(cfg.N):
        e = np.zeros(cfg.N)
        e[i] = h
        out[i] = (energy_periodic(new_config(cfg.array + e, cfg.N))
                  - energy_periodic(new_config(cfg.array - e, cfg.N))) / (2 * h)
    return out


def test_lattice_constant():
    assert W_LATTICE == pytest.approx(-math.pi * math.log(2 * math.pi), abs=1e-15)
    assert W_LATTICE == pytest.approx(-5.7738611, abs=1e-7)


@pytest.mark.parametrize("N", [2, 3, 5, 17, 128, 512])
def test_lattice_energy(N):
    assert energy_periodic(lattice(N)) == pytest.approx(W_LATTICE, abs=1e-10)


def test_two_point_example():
    cfg = new_config([0.0, 1.5], 2)
    assert energy_periodic(cfg) == pytest.approx(W_LATTICE + two_point_gap(0.5), abs=1e-13)
    assert energy_periodic(cfg) == pytest.approx(-4.6850680, abs=1e-7)


def test_translate_of_lattice():
    assert energy_periodic(new_config([0.3, 1.3], 2)) == pytest.approx(W_LATTICE, abs=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.95, 0.95))
def test_two_point_closed_form(d):
    cfg = new_config([0.0, 1.0 + d], 2)
    assert energy_periodic(cfg) - W_LATTICE == pytest.approx(two_point_gap(d), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_energy_per_period_unchanged_by_repetition(N, k, seed):
    cfg = random_config(N, np.random.default_rng(seed), min_gap=0.01)
    assert energy_periodic(repeat(cfg, k)) == pytest.approx(energy_periodic(cfg), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1), st.floats(-100, 100))
def test_translation_invariance(N, seed, c):
    cfg = random_config(N, np.random.default_rng(seed), min_gap=0.01)
    assert energy_periodic(cfg.translate(c)) == pytest.approx(energy_periodic(cfg), abs=1e-12 * max(1, N))


def test_minimality_random(rng):
    for _ in range(1000):
        N = int(rng.integers(2, 65))
        cfg = random_config(N, rng)
        assert energy_periodic(cfg) >= W_LATTICE - 1e-9


def test_gradient_lattice_zero():
    assert np.allclose(energy_gradient(lattice(9)), 0, atol=1e-13)


def test_gradient_two_point_fd():
    cfg = new_config([0.0, 1.5], 2)
    g, fd = energy_gradient(cfg), fd_gradient(cfg)
    assert np.max(np.abs(g - fd)) <= 1e-6 * np.max(np.abs(g))


def test_gradient_random_fd(rng):
    for _ in range(100):
        cfg = random_config(int(rng.integers(2, 12)), rng, min_gap=0.05)
        g, fd = energy_gradient(cfg), fd_gradient(cfg)
        assert abs(g.sum()) < 1e-10
        assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(g)


def test_scale_energy_examples():
    w = W_LATTICE
    assert scale_energy(w, 1) == w
    assert scale_energy(w, 2) == pytest.approx(-2 * math.pi * math.log(4 * math.pi), abs=1e-12)
    assert scale_energy(w, 0.5) == pytest.approx(-(math.pi / 2) * math.log(math.pi), abs=1e-12)
    with pytest.raises(NonpositiveDensity):
        scale_energy(w, 0)


@pytest.mark.parametrize("m", [0.5, 1, 2, 3])
def test_scaling_consistency(m):
    assert scale_energy(energy_periodic(lattice(16)), m) == pytest.approx(
        -math.pi * m * math.log(2 * math.pi * m), abs=1e-10)
    assert lattice_energy(m) == pytest.approx(scale_energy(W_LATTICE, m), abs=1e-12)


def test_defect_functional_examples():
    cfg = new_config([0.0, 1.5], 2)
    assert defect_functional(lattice(8)) == 0
    assert defect_functional(lattice(8), Normalization.PREFACTORED) == 0
    assert defect_functional(cfg, Normalization.PAPER_RHS) == pytest.approx(0.25, abs=1e-15)
    assert defect_functional(cfg, Normalization.PREFACTORED) == pytest.approx(0.125, abs=1e-15)


def test_qlb_ratio_examples():
    cfg = new_config([0.0, 1.5], 2)
    assert qlb_ratio(cfg) == pytest.approx(two_point_gap(0.5) / 0.25, rel=1e-12)
    assert qlb_ratio(cfg) == pytest.approx(4.355, abs=1e-3)
    with pytest.raises(ZeroDefect):
        qlb_ratio(lattice(8))


def test_qlb_ratio_stable_at_small_amplitude():
    ratios = [qlb_ratio(perturb_lattice(16, 1, eps)) for eps in (1e-3, 1e-2, 1e-1)]
    assert max(ratios) / min(ratios) < 1.1


def test_gap_positive_and_bounded_below(rng):
    for _ in range(300):
        cfg = random_config(int(rng.integers(2, 40)), rng)
        rep = energy_report(cfg)
        assert rep.gap > 0
        assert rep.ratio > 0


def test_minimize_lattice_unchanged():
    assert minimize_energy(lattice(8), 1e-8) == lattice(8)


def test_minimize_perturbed_lattice():
    res = minimize_energy(perturb_lattice(16, 3, 0.2), 1e-8)
    assert np.max(np.abs(res.gaps() - 1)) < 1e-6


def test_minimize_random_reaches_lattice_energy(rng):
    res = minimize_energy(random_config(8, rng), 1e-8)
    assert energy_periodic(res) == pytest.approx(W_LATTICE, abs=1e-8)
    assert np.max(np.abs(energy_gradient(res))) <= 1e-8
    assert np.max(np.abs(res.gaps() - 1)) <= 10 * 1e-8
