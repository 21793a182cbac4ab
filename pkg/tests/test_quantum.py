import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twomicro.potential import FourierField
from twomicro.quantum import (HamiltonianSpec, QuantumState, StrangPropagator, build_hamiltonian, eigenpairs_near,
                              embed, energy, evolve_exact, evolve_strang, gaussian_box_mass, in_box_mass,
                              is_quasimode, oscillation_diagnostics, restrict, state_from_json, state_to_json,
                              wave_packet)
from twomicro.weyl import Symbol, TruncationTooSmall, box_modes, quantize


def random_state(rng, N, hbar=0.05):
    c = rng.normal(size=(2 * N + 1) ** 2) + 1j * rng.normal(size=(2 * N + 1) ** 2)
    return QuantumState(c / np.linalg.norm(c), hbar)


def test_state_validation_and_basis():
    with pytest.raises(ValueError):
        QuantumState(np.ones(9), 0.1)
    with pytest.raises(ValueError):
        QuantumState(np.ones(16) / 4, 0.1)
    u = QuantumState.basis((1, -2), 0.1, 3)
    assert u.coefficient((1, -2)) == 1
    assert u.coefficient((9, 9)) == 0


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_embed_restrict_and_grid_density(seed, N):
    rng = np.random.default_rng(seed)
    u = random_state(rng, N)
    M = 2 * (2 * N + 1)
    assert np.allclose(restrict(embed(u.coefficients, N, M), N), u.coefficients)
    vals = u.grid_values(M)
    # direct Fourier sum at one grid point
    i, j = 1, M - 2
    x = np.array([i, j]) / M
    ref = np.sum(u.coefficients * np.exp(2j * math.pi * (box_modes(N) @ x)))
    assert vals[i, j] == pytest.approx(ref, abs=1e-10)
    assert u.position_density(M).mean() == pytest.approx(1.0, abs=1e-12)


def test_hamiltonian_is_kinetic_plus_potential():
    V = FourierField.cosine((1, 0)) + FourierField.cosine((1, 1), 0.3, 0.4)
    spec = HamiltonianSpec(1 / 16, 0.25, V, 4)
    H = build_hamiltonian(spec)
    ref = quantize(Symbol.kinetic(), spec.hbar, 4).matrix + spec.eps ** 2 * quantize(Symbol.from_field(V),
                                                                                     spec.hbar, 4).matrix
    assert np.max(np.abs(H.matrix - ref)) <= 1e-15
    assert H.hermiticity_defect() == 0.0
    with pytest.raises(TruncationTooSmall):
        build_hamiltonian(HamiltonianSpec(0.1, 0.5, FourierField.cosine((5, 0)), 2))


def test_spec_validation():
    V = FourierField.zero()
    with pytest.raises(ValueError):
        HamiltonianSpec(0.0, 0.5, V, 3)
    with pytest.raises(ValueError):
        HamiltonianSpec(0.1, 1.5, V, 3)
    assert HamiltonianSpec.from_alpha(1 / 16, 0.5, V, 3).eps == pytest.approx(0.25)


def test_exact_evolution_is_unitary_and_conserves_energy():
    rng = np.random.default_rng(1)
    V = FourierField.random(rng, n_modes=3, max_k=1)
    spec = HamiltonianSpec(1 / 16, 0.25, V, 5)
    u = random_state(rng, 5, spec.hbar)
    v = evolve_exact(spec, u, 10.0)
    assert abs(np.linalg.norm(v.coefficients) - 1) <= 1e-12
    assert energy(spec, v) == pytest.approx(energy(spec, u), abs=1e-10)
    w = evolve_exact(spec, evolve_exact(spec, u, 3.0), 7.0)
    assert np.allclose(w.coefficients, v.coefficients, atol=1e-10)


def test_free_evolution_phases():
    spec = HamiltonianSpec(0.1, 0.3, FourierField.zero(), 3)
    u = QuantumState.basis((2, 1), 0.1, 3)
    t = 0.7
    phase = np.exp(-1j * t * 2 * math.pi ** 2 * 0.1 * 5)
    assert evolve_exact(spec, u, t).coefficient((2, 1)) == pytest.approx(phase)
    assert evolve_strang(spec, u, t, 0.1).coefficient((2, 1)) == pytest.approx(phase)


def test_strang_second_order():
    V = FourierField.cosine((1, 0)) + FourierField.cosine((0, 1), 0.5)
    spec = HamiltonianSpec(1 / 16, 0.25, V, 6)
    u = wave_packet((0.3, 0.6), (0.6, 0.3), spec.hbar, 6)
    T = 1.0
    ref = evolve_exact(spec, u, T).coefficients
    dts = [0.2 / 2 ** j for j in range(4)]
    errs = [np.linalg.norm(evolve_strang(spec, u, T, dt).coefficients - ref) for dt in dts]
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def test_trajectory_rejects_decreasing_times():
    spec = HamiltonianSpec(0.1, 0.3, FourierField.cosine((1, 0)), 3)
    u = QuantumState.basis((0, 0), 0.1, 3)
    with pytest.raises(ValueError):
        list(StrangPropagator(spec).trajectory(u, [1.0, 0.5], 0.1))


def test_eigenpairs_near_match_dense_spectrum():
    V = FourierField.cosine((1, 0))
    spec = HamiltonianSpec(1 / 8, 1 / 8 ** 0.5, V, 4)
    pairs = eigenpairs_near(spec, 0.5, 6)
    w = np.linalg.eigvalsh(build_hamiltonian(spec).matrix)
    nearest = w[np.argsort(np.abs(w - 0.5))[:6]]
    assert np.allclose(sorted(p.energy for p in pairs), sorted(nearest), atol=1e-12)
    assert all(p.residual <= 1e-10 for p in pairs)
    assert [abs(p.energy - 0.5) for p in pairs] == sorted(abs(p.energy - 0.5) for p in pairs)
    p = pairs[0]
    assert is_quasimode(p, spec, 0.5, c=(abs(p.energy - 0.5) + p.residual) / (spec.hbar * spec.eps) + 1e-9)
    assert not is_quasimode(p, spec, p.energy + 1.0, c=1.0)


@given(st.floats(0.2, 1.0), st.floats(-1.0, 1.0), st.floats(0, 1), st.floats(0, 1))
def test_wave_packet_mass_and_centre(a, b, x1, x2):
    hbar = 1 / 32
    xi0 = np.array([a, b])
    N = int(math.ceil((np.max(np.abs(xi0)) + 8 * math.sqrt(hbar)) / (2 * math.pi * hbar))) + 1
    u = wave_packet((x1, x2), xi0, hbar, N)
    assert gaussian_box_mass(xi0, hbar, N) >= 1 - 1e-8
    xi, w = u.momentum_marginal()
    # sampling the Gaussian on the lattice 2 pi h Z^2 biases the mean by a small fraction of the spacing
    assert np.allclose(w @ xi, xi0, atol=0.01 * 2 * math.pi * hbar)
    assert in_box_mass(u) == pytest.approx(1.0)


def test_wave_packet_rejects_small_box():
    with pytest.raises(TruncationTooSmall):
        wave_packet((0, 0), (1.0, 0.0), 1 / 32, 3)
    with pytest.raises(ValueError):
        wave_packet((0, 0), (0.0, 0.0), 1 / 32, 10)


def test_oscillation_diagnostics():
    u = QuantumState.basis((2, 0), 0.1, 4)
    d = oscillation_diagnostics(u, delta=0.1, R=4.0)
    lap = 4 * math.pi ** 2 * 0.01 * 4
    assert d.low_mass == (1.0 if lap <= 0.1 else 0.0)
    assert d.high_mass == 0.0
    assert oscillation_diagnostics(u, 0.1, 4.0, margin=3).in_box_mass == 0.0


@given(st.integers(0, 2**32 - 1))
def test_state_json_roundtrip(seed):
    u = random_state(np.random.default_rng(seed), 2)
    v = state_from_json(state_to_json(u))
    assert np.allclose(v.coefficients, u.coefficients, atol=1e-15)
    assert v.hbar == u.hbar


def test_state_json_rejects_bad_data():
    bad = '{"hbar": 0.1, "N": 1, "coefficients": [[3, 0, 1.0, 0.0]]}'
    with pytest.raises(ValueError):
        state_from_json(bad)
    off = '{"hbar": 0.1, "N": 1, "coefficients": [[0, 0, 1.1, 0.0]]}'
    with pytest.raises(ValueError):
        state_from_json(off)
