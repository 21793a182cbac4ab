import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from twomicro.lattice import (LatticeError, NotPrimitive, PrimitiveLattice, ZeroVector, classify_direction,
                              enumerate_lattices, h_lambda, h_lambda_perp, make_lattice)

ints = st.integers(-20, 20)


@given(ints, ints)
def test_make_lattice_canonical_sign(a, b):
    assume((a, b) != (0, 0) and math.gcd(a, b) == 1)
    lat = make_lattice((a, b))
    assert lat == make_lattice((-a, -b))
    g = lat.generator
    assert g[0] > 0 or (g[0] == 0 and g[1] > 0)


def test_rejections():
    with pytest.raises(ZeroVector):
        make_lattice((0, 0))
    with pytest.raises(NotPrimitive):
        make_lattice((2, 4))
    with pytest.raises(LatticeError):
        PrimitiveLattice((-1, 0))


@given(ints, ints, ints)
def test_contains_and_coordinate(a, b, n):
    assume((a, b) != (0, 0) and math.gcd(a, b) == 1)
    lat = make_lattice((a, b))
    k = (n * lat.generator[0], n * lat.generator[1])
    assert lat.contains(k)
    assert lat.coordinate(k) == n
    assert not lat.contains((k[0] + lat.perp[0], k[1] + lat.perp[1]))


@given(ints, ints, st.floats(-5, 5), st.floats(-5, 5))
def test_split_of_norm(a, b, x, y):
    assume((a, b) != (0, 0) and math.gcd(a, b) == 1)
    lat = make_lattice((a, b))
    xi = np.array([x, y])
    assert h_lambda(lat, xi) ** 2 + h_lambda_perp(lat, xi) ** 2 == pytest.approx(x * x + y * y, abs=1e-9)
    assert float(lat.e @ lat.e_perp) == 0.0


@given(ints, ints)
def test_rational_direction_lattice_is_orthogonal(p, q):
    assume((p, q) != (0, 0))
    d = classify_direction((p, q))
    assert d.rational
    e = d.lattice.generator
    assert e[0] * p + e[1] * q == 0


def test_fraction_and_irrational_directions():
    d = classify_direction((Fraction(1, 3), Fraction(2, 3)))
    assert d.lattice == make_lattice((2, -1))
    assert not classify_direction((1.0, math.sqrt(2))).rational
    assert classify_direction((0, 2.5)).lattice == make_lattice((1, 0))
    with pytest.raises(ZeroVector):
        classify_direction((0, 0))


def test_enumerate_lattices():
    lats = enumerate_lattices(math.sqrt(5))
    assert [lat.generator for lat in lats] == [(0, 1), (1, 0), (1, -1), (1, 1), (1, -2), (1, 2), (2, -1), (2, 1)]
    for r in (1, 2.5, 4):
        lats = enumerate_lattices(r)
        assert len(set(lats)) == len(lats)
        assert all(lat.length <= r + 1e-12 for lat in lats)
    brute = {make_lattice((a, b)) for a in range(-4, 5) for b in range(-4, 5)
             if (a, b) != (0, 0) and math.gcd(a, b) == 1 and a * a + b * b <= 16}
    assert set(enumerate_lattices(4)) == brute
    with pytest.raises(ValueError):
        enumerate_lattices(0.5)
