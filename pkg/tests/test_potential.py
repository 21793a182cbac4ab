import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from twomicro.lattice import make_lattice
from twomicro.potential import (DegenerateDirection, FourierField, Profile, average_along, critical_geodesics,
                                critical_points, critical_set, evaluate, geodesic_average)


def test_reality_is_enforced():
    with pytest.raises(ValueError):
        FourierField((((1, 0), 1.0),))
    V = FourierField((((1, 0), 0.5j), ((-1, 0), -0.5j)))
    x = np.random.default_rng(0).random((50, 2))
    assert np.allclose(evaluate(V, x), -np.sin(2 * math.pi * x[:, 0]))


@given(st.integers(0, 2**32 - 1))
def test_json_roundtrip_and_gradient(seed):
    rng = np.random.default_rng(seed)
    V = FourierField.random(rng)
    W = FourierField.from_json(V.to_json())
    assert W.coeffs == V.coeffs
    x = rng.random((5, 2))
    h = 1e-6
    for axis in range(2):
        d = np.zeros(2)
        d[axis] = h
        fd = (V.evaluate(x + d) - V.evaluate(x - d)) / (2 * h)
        assert np.allclose(V.gradient(x)[:, axis], fd, atol=1e-5 * max(1, np.abs(fd).max()))


@given(st.integers(0, 2**32 - 1))
def test_average_along_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    V = FourierField.random(rng, n_modes=4, max_k=2)
    lat = make_lattice((1, 1))
    # closed geodesics are the lines x + s e_perp/L, s in [0, L)
    x0 = rng.random(2)
    s = np.arange(400) / 400 * lat.length
    pts = x0 + s[:, None] * lat.e_perp / lat.length
    quad = V.evaluate(pts).mean()
    assert average_along(lat, V).evaluate(x0) == pytest.approx(quad, abs=1e-10)


def test_geodesic_average_irrational_direction():
    V = FourierField.cosine((1, 0)) + FourierField.constant(0.25)
    assert geodesic_average(V, (1.0, math.sqrt(3))).coeffs == {(0, 0): 0.25}
    assert set(geodesic_average(V, (0, 1)).coeffs) == {(0, 0), (1, 0), (-1, 0)}


def test_profile_of_cosine_field():
    lat = make_lattice((1, 0))
    W = Profile.from_field(lat, FourierField.cosine((1, 0)))
    th = np.linspace(0, 1, 33)
    assert np.allclose(W(th), np.cos(2 * math.pi * th))
    assert np.allclose(W.derivative(th, 1), -2 * math.pi * np.sin(2 * math.pi * th))
    assert critical_points(W) == [0.0, 0.5]


@given(st.integers(1, 4), st.floats(0, 1))
def test_critical_points_of_shifted_harmonic(n, phase):
    W = Profile(((-n, 0.5 * complex(math.cos(phase), -math.sin(phase))),
                 (n, 0.5 * complex(math.cos(phase), math.sin(phase)))))
    roots = critical_points(W)
    assert len(roots) == 2 * n
    # cos(2 pi n t + phase) is critical at t = (j/2 - phase/(2 pi)) / n
    expected = np.array([(j / 2 - phase / (2 * math.pi)) / n for j in range(2 * n)])
    for r in roots:
        d = np.mod(expected - r, 1.0)
        assert np.min(np.minimum(d, 1 - d)) <= 1e-10
    assert max(abs(float(W.derivative(r, 1))) for r in roots) <= 1e-10


def test_critical_geodesics_kinds_and_degenerate():
    V = FourierField.cosine((1, 0))
    rep = critical_geodesics(make_lattice((1, 0)), V)
    assert rep.positions == (0.0, 0.5)
    assert rep.kinds == ("max", "min")
    with pytest.raises(DegenerateDirection):
        critical_geodesics(make_lattice((0, 1)), V)
    assert critical_geodesics(make_lattice((0, 1)), V, allow_degenerate=True).degenerate


def test_critical_set_of_cos_x1():
    reports = critical_set(FourierField.cosine((1, 0)), 2.5)
    live = [r for r in reports if not r.degenerate]
    assert [r.lattice.generator for r in live] == [(1, 0)]
    assert live[0].positions == (0.0, 0.5)


@given(st.integers(-3, 3), st.integers(-3, 3))
def test_constant_field_is_degenerate_everywhere(a, b):
    assume((a, b) != (0, 0) and math.gcd(a, b) == 1)
    rep = critical_geodesics(make_lattice((a, b)), FourierField.constant(1.0), allow_degenerate=True)
    assert rep.degenerate and rep.positions == ()
