import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twomicro.lattice import make_lattice
from twomicro.potential import FourierField
from twomicro.weyl import (DegreeTooHigh, Symbol, TruncationTooSmall, TwoMicroSymbol, apply_symbol,
                           average_symbol, box_index, box_modes, commutator, expectation, moyal_leading,
                           poisson_bracket, quantize, quantize_two_micro, schur_norm_bound, weinstein_average)

seeds = st.integers(0, 2**32 - 1)


def brute_quantize(a: Symbol, hbar: float, N: int) -> np.ndarray:
    """Entry (q, k) is a_{q-k}(pi h (q + k)), one entry at a time."""
    ks = [tuple(k) for k in box_modes(N)]
    pos = {k: i for i, k in enumerate(ks)}
    out = np.zeros((len(ks), len(ks)), dtype=complex)
    for k in ks:
        for m, f in a.modes.items():
            q = (k[0] + m[0], k[1] + m[1])
            if q in pos:
                xi = np.array([[math.pi * hbar * (q[0] + k[0]), math.pi * hbar * (q[1] + k[1])]])
                out[pos[q], pos[k]] += complex(np.asarray(f(xi)).reshape(-1)[0])
    return out


def test_box_layout():
    N = 3
    ks = box_modes(N)
    assert ks.shape == ((2 * N + 1) ** 2, 2)
    assert np.array_equal(box_index(N, ks), np.arange(len(ks)))
    assert tuple(ks[0]) == (-N, -N) and tuple(ks[1]) == (-N, -N + 1)


@given(seeds, st.integers(2, 5), st.floats(1 / 64, 1 / 4), st.booleans())
def test_quantize_matches_entrywise_definition(seed, N, hbar, real):
    rng = np.random.default_rng(seed)
    a = Symbol.random(rng, n_modes=3, max_k=2, real=real)
    A = quantize(a, hbar, N)
    assert np.max(np.abs(A.matrix - brute_quantize(a, hbar, N))) <= 1e-13
    v = rng.normal(size=A.dim) + 1j * rng.normal(size=A.dim)
    assert np.allclose(apply_symbol(a, hbar, N, v), A.matrix @ v, atol=1e-12)
    assert expectation(a, hbar, N, v) == pytest.approx(np.vdot(v, A.matrix @ v), abs=1e-10)
    if real:
        assert A.hermiticity_defect() <= 1e-12


def test_truncation_window():
    a = Symbol.exponential((5, 0))
    with pytest.raises(TruncationTooSmall):
        quantize(a, 0.1, 2)
    assert np.count_nonzero(quantize(a, 0.1, 3).matrix) == 2 * 7


@given(seeds, st.floats(1 / 64, 1 / 4))
def test_schur_bound_dominates_spectral_norm(seed, hbar):
    rng = np.random.default_rng(seed)
    a = Symbol.random(rng, real=False)
    N = 4
    assert schur_norm_bound(a, hbar, N) >= np.linalg.norm(quantize(a, hbar, N).matrix, 2) * (1 - 1e-12)


@given(seeds)
def test_weinstein_average_keeps_lattice_modes(seed):
    rng = np.random.default_rng(seed)
    lat = make_lattice((1, -1))
    a = Symbol.random(rng, n_modes=4, max_k=2, real=False)
    A = quantize(a, 0.05, 4)
    W = weinstein_average(lat, A)
    ks = box_modes(4)
    # entries survive exactly when q - k is in L
    diff = ks[:, None, :] - ks[None, :, :]
    keep = (diff[..., 0] * lat.generator[1] - diff[..., 1] * lat.generator[0]) == 0
    assert np.max(np.abs(W.matrix - np.where(keep, A.matrix, 0))) <= 1e-12
    assert set(average_symbol(lat, a).modes) == {k for k in a.modes if lat.contains(k)}


def _fd_bracket(a, b, x, xi, h=1e-5):
    def d(f, var, axis):
        dx = np.zeros(2)
        dx[axis] = h
        if var == "x":
            return (f(x + dx, xi) - f(x - dx, xi)) / (2 * h)
        return (f(x, xi + dx) - f(x, xi - dx)) / (2 * h)
    return sum(d(a, "xi", i) * d(b, "x", i) - d(a, "x", i) * d(b, "xi", i) for i in range(2))


@given(seeds)
def test_poisson_bracket_against_finite_differences(seed):
    rng = np.random.default_rng(seed)
    polys = {k: {m: complex(rng.normal(), rng.normal()) for m in ((0, 0), (1, 0), (0, 2), (1, 1))}
             for k in ((0, 0), (1, -1))}
    a = Symbol.polynomial(polys, real=False)
    b = Symbol.polynomial({(0, 1): {(2, 0): 0.7, (0, 1): -0.3}, (0, 0): {(1, 1): 1.1}}, real=False)
    x, xi = rng.random(2), rng.normal(size=2)
    got = complex(np.asarray(poisson_bracket(a, b)(x, xi)))
    assert got == pytest.approx(complex(_fd_bracket(a, b, x, xi)), rel=1e-6, abs=1e-6)
    c = Symbol.random(rng, real=False)
    q = Symbol.kinetic()
    got = complex(np.asarray(poisson_bracket(c, q)(x, xi)))
    assert got == pytest.approx(complex(_fd_bracket(c, q, x, xi)), rel=1e-5, abs=1e-5)


@given(seeds, st.floats(1 / 64, 1 / 8))
def test_commutator_with_kinetic_energy_is_exact(seed, hbar):
    rng = np.random.default_rng(seed)
    a = Symbol.random(rng, real=False)
    N = 5
    C = commutator(quantize(a, hbar, N), quantize(Symbol.kinetic(), hbar, N)).matrix
    ref = quantize(moyal_leading(a, Symbol.kinetic(), hbar), hbar, N).matrix
    assert np.max(np.abs(C - ref)) <= 1e-12


def test_moyal_leading_rejects_inexact_pairs():
    cubic = Symbol.polynomial({(0, 0): {(3, 0): 1.0}})
    with pytest.raises(DegreeTooHigh):
        moyal_leading(Symbol.kinetic(), cubic, 0.1)
    bx = Symbol.polynomial({(1, 0): {(2, 0): 1.0}}, real=False)
    with pytest.raises(ValueError):
        moyal_leading(Symbol.kinetic(), bx, 0.1)


def test_from_field_quantizes_to_multiplication():
    V = FourierField.cosine((1, 2), 0.8)
    N = 4
    A = quantize(Symbol.from_field(V), 0.1, N).matrix
    ks = box_modes(N)
    for j, k in enumerate(ks):
        for m, c in V.terms:
            q = k + np.asarray(m)
            if np.max(np.abs(q)) <= N:
                assert A[box_index(N, q), j] == pytest.approx(c)


def test_two_micro_symbol_limits_and_induced_values():
    lat = make_lattice((1, 1))
    a = TwoMicroSymbol.separable(lat, {1: 0.5, -1: 0.5}, np.tanh, g_limits=(-1.0, 1.0), eta_cutoff=40.0)
    assert a.real
    eps, hbar, N = 0.3, 0.05, 3
    A = quantize_two_micro(lat, a, hbar, eps, N).matrix
    # the pair (q, k) sees eta = H_L(pi h (q + k)) / eps
    k = np.array([1, 0])
    q = k + np.array(lat.generator)
    eta = (math.pi * hbar * (q + k)) @ lat.e / lat.length / eps
    assert A[box_index(N, q), box_index(N, k)] == pytest.approx(0.5 * math.tanh(eta))
    with pytest.raises(ValueError):
        TwoMicroSymbol.separable(lat, {0: 1.0}, np.tanh, g_limits=(0.0, 0.0), eta_cutoff=40.0)


def test_two_micro_far_region_uses_declared_limits():
    lat = make_lattice((1, 0))
    f = lambda xi, eta: np.exp(-np.asarray(eta) ** 2)  # noqa: E731
    a = TwoMicroSymbol({(0, 0): f}, {(0, 0): (0.25, 0.75)}, eta_cutoff=5.0, check=False)
    b = a.induced(lat, 0.01)
    xi = np.array([[0.1, 0.0], [-0.1, 0.0], [0.0, 0.3]])
    assert np.allclose(b.modes[(0, 0)](xi), [0.75, 0.25, 1.0])
