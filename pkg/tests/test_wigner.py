import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twomicro.lattice import make_lattice
from twomicro.quantum import QuantumState, wave_packet
from twomicro.weyl import Symbol, TwoMicroSymbol, quantize, quantize_two_micro
from twomicro.wigner import (AliasedGrid, KNotInLambda, circle_distance, eta_cutoff_split, eta_moments,
                             fourier_mode_observable, mass_in_tube, position_density, tube_coordinate,
                             two_micro_wigner, wigner)

seeds = st.integers(0, 2**32 - 1)


def random_state(rng, N, hbar):
    c = rng.normal(size=(2 * N + 1) ** 2) + 1j * rng.normal(size=(2 * N + 1) ** 2)
    return QuantumState(c / np.linalg.norm(c), hbar)


@given(seeds)
def test_wigner_equals_dense_expectation(seed):
    rng = np.random.default_rng(seed)
    u = random_state(rng, 4, 0.05)
    a = Symbol.random(rng, real=True)
    A = quantize(a, 0.05, 4).matrix
    w = wigner(u, a)
    assert w.imag == 0.0
    assert w.real == pytest.approx(np.vdot(u.coefficients, A @ u.coefficients).real, abs=1e-12)


def test_two_micro_wigner_matches_quantize_two_micro():
    rng = np.random.default_rng(3)
    lat = make_lattice((1, 2))
    u = random_state(rng, 4, 0.05)
    a = TwoMicroSymbol.separable(lat, {1: 0.5, -1: 0.5}, lambda eta: np.exp(-np.asarray(eta) ** 2))
    A = quantize_two_micro(lat, a, 0.05, 0.3, 4).matrix
    val = two_micro_wigner(lat, u, a, 0.3)
    assert val.real == pytest.approx(np.vdot(u.coefficients, A @ u.coefficients).real, abs=1e-12)
    with pytest.raises(ValueError):
        two_micro_wigner(lat, u, a, 0.0)


class _Gauss:
    def __init__(self, c, w):
        self.c, self.w = c, w

    def __call__(self, eta):
        return self.c * np.exp(-(np.asarray(eta) / self.w) ** 2)


class _TwoMicroGauss:
    def __init__(self, c, w):
        self.g = _Gauss(c, w)

    def __call__(self, xi, eta):
        return self.g(eta)


@given(seeds, st.sampled_from([(1, 0), (1, 1), (2, -1)]))
def test_eta_moments_reproduce_two_micro_wigner(seed, e):
    rng = np.random.default_rng(seed)
    lat = make_lattice(e)
    eps, hbar = 0.3, 0.05
    u = random_state(rng, 4, hbar)
    # lattice harmonics n e plus one transverse mode
    keys = [0, 1, -1, 2, tuple(lat.perp)]
    coefs = {k: _Gauss(complex(rng.normal(), rng.normal()), 1.0 + rng.random()) for k in keys}
    modes = {}
    for k, c in coefs.items():
        m = tuple(int(v) for v in (np.asarray(k) if isinstance(k, tuple) else k * np.asarray(lat.generator)))
        modes[m] = _TwoMicroGauss(c.c, c.w)
    sym = TwoMicroSymbol(modes, {m: (0.0, 0.0) for m in modes}, eta_cutoff=1e9, check=False)
    ref = two_micro_wigner(lat, u, sym, eps).value
    got = eta_moments(lat, u, eps, keys).pair(coefs)
    assert got == pytest.approx(ref, abs=1e-12)


def test_fourier_mode_requires_lattice_mode():
    lat = make_lattice((1, 0))
    u = wave_packet((0.2, 0.3), (0.0, 1.0), 1 / 16, 8)
    a = TwoMicroSymbol.from_symbol(Symbol.constant(1.0))
    with pytest.raises(KNotInLambda):
        fourier_mode_observable(lat, (0, 1), u, a, 0.25)
    with pytest.raises(KNotInLambda):
        fourier_mode_observable(lat, (0, 0), u, a, 0.25)
    v = fourier_mode_observable(lat, (1, 0), u, a, 0.25).value
    # <u, e^{-2 i pi x1} u> is the Fourier coefficient of |u|^2 at (1, 0)
    M = 64
    rho = position_density(u, M)
    g = np.arange(M) / M
    ref = np.mean(rho * np.exp(-2j * math.pi * g)[:, None])
    assert v == pytest.approx(ref, abs=1e-12)


def test_eta_cutoff_split_adds_up():
    rng = np.random.default_rng(5)
    lat = make_lattice((1, 1))
    u = random_state(rng, 4, 0.05)
    a = TwoMicroSymbol.separable(lat, {0: 1.0, 1: 0.3, -1: 0.3}, _Gauss(1.0, 2.0), eta_cutoff=50.0, real=True)
    inner, outer = eta_cutoff_split(lat, u, a, 0.2, R=1.5)
    full = two_micro_wigner(lat, u, a, 0.2)
    assert inner.value + outer.value == pytest.approx(full.value, abs=1e-12)


@given(seeds, st.sampled_from([(1, 0), (1, 1), (1, -2)]), st.floats(0, 1), st.floats(0.05, 0.45))
def test_spectral_tube_mass_matches_fine_grid(seed, e, s_star, r):
    rng = np.random.default_rng(seed)
    lat = make_lattice(e)
    u = random_state(rng, 3, 0.05)
    spectral = mass_in_tube(u, lat, s_star, r)
    grid = mass_in_tube(u, lat, s_star, r, method="grid", M=448)
    # the grid sum is a Riemann sum of a discontinuous indicator
    assert spectral == pytest.approx(grid, abs=0.02)


def test_tube_masses_of_flat_state_and_complement():
    lat = make_lattice((1, 0))
    u = QuantumState.basis((0, 3), 0.1, 3)
    assert mass_in_tube(u, lat, 0.3, 0.1) == pytest.approx(0.2, abs=1e-14)
    v = wave_packet((0.4, 0.1), (0.0, 1.0), 1 / 16, 10)
    r = 0.25
    assert mass_in_tube(v, lat, 0.4, r) + mass_in_tube(v, lat, 0.9, r) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        mass_in_tube(v, lat, 0.4, 0.5)


def test_position_density_grid_guard():
    u = QuantumState.basis((0, 0), 0.1, 3)
    with pytest.raises(AliasedGrid):
        position_density(u, 10)
    assert np.allclose(position_density(u, 14), 1.0)


def test_circle_distance_and_tube_coordinate():
    assert float(circle_distance(0.95, 0.05)) == pytest.approx(0.1)
    assert float(circle_distance(0.3, 0.3)) == 0.0
    lat = make_lattice((2, 1))
    assert float(tube_coordinate(lat, np.array([0.3, 0.6]))) == pytest.approx(0.2)
