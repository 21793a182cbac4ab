"""Primitive rank-1 sublattices of Z^2 and rational directions.

A lattice ``L = Z e`` is stored through its generator ``e`` with the sign
normalised so that the first nonzero coordinate is positive; ``e`` and ``-e``
therefore give the same object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np


class LatticeError(ValueError):
    pass


class NotPrimitive(LatticeError):
    pass


class ZeroVector(LatticeError):
    pass


@dataclass(frozen=True, order=True)
class PrimitiveLattice:
    generator: tuple[int, int]

    def __post_init__(self):
        a, b = self.generator
        if (a, b) == (0, 0):
            raise ZeroVector("generator must be nonzero")
        if math.gcd(a, b) != 1:
            raise NotPrimitive(f"gcd{self.generator} = {math.gcd(a, b)}")
        if a < 0 or (a == 0 and b < 0):
            raise LatticeError(f"generator {self.generator} is not sign-canonical; use make_lattice")

    @property
    def perp(self) -> tuple[int, int]:
        """Generator rotated by +90 degrees."""
        a, b = self.generator
        return (-b, a)

    @property
    def length(self) -> float:
        return math.hypot(*self.generator)

    @property
    def e(self) -> np.ndarray:
        return np.array(self.generator, dtype=float)

    @property
    def e_perp(self) -> np.ndarray:
        return np.array(self.perp, dtype=float)

    def contains(self, k) -> bool:
        """True when the integer vector ``k`` lies in the lattice."""
        a, b = self.generator
        return k[0] * b - k[1] * a == 0

    def coordinate(self, k) -> int:
        """Integer n with k = n e (k must be in the lattice)."""
        a, b = self.generator
        return (k[0] * a + k[1] * b) // (a * a + b * b)

    def __repr__(self):
        return f"Z{self.generator}"


def make_lattice(e) -> PrimitiveLattice:
    a, b = int(e[0]), int(e[1])
    if (a, b) == (0, 0):
        raise ZeroVector("e = (0, 0)")
    if math.gcd(a, b) != 1:
        raise NotPrimitive(f"gcd({a}, {b}) = {math.gcd(a, b)} > 1")
    if a < 0 or (a == 0 and b < 0):
        a, b = -a, -b
    return PrimitiveLattice((a, b))


@dataclass(frozen=True)
class DirectionClass:
    """Rational (periodic geodesics, ``lattice`` set) or irrational (dense)."""

    lattice: Optional[PrimitiveLattice] = None

    @property
    def rational(self) -> bool:
        return self.lattice is not None


def _exact(v) -> Fraction:
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    return Fraction(float(v))


def classify_direction(xi, max_denominator: int = 10**6, rtol: float = 1e-14) -> DirectionClass:
    """Decide whether ``xi`` generates a closed geodesic.

    The slope is reconstructed by continued fractions with denominators up to
    ``max_denominator``; it is accepted when it reproduces the input to
    relative precision ``rtol``.  Integer and ``Fraction`` inputs are exact.
    """
    x1, x2 = _exact(xi[0]), _exact(xi[1])
    if x1 == 0 and x2 == 0:
        raise ZeroVector("xi = 0")
    if x1 == 0:
        p, q = 0, 1
    elif x2 == 0:
        p, q = 1, 0
    else:
        ratio = x2 / x1
        approx = ratio.limit_denominator(max_denominator)
        if abs(approx - ratio) > rtol * abs(ratio):
            return DirectionClass(None)
        p, q = approx.denominator, approx.numerator
    # xi is parallel to (p, q); the lattice is spanned by a vector orthogonal to it
    return DirectionClass(make_lattice((q, -p)))


def h_lambda(lat: PrimitiveLattice, xi) -> np.ndarray:
    """H_L(xi) = <xi, e>/L, vectorised over a trailing axis of length 2."""
    xi = np.asarray(xi, dtype=float)
    return (xi[..., 0] * lat.generator[0] + xi[..., 1] * lat.generator[1]) / lat.length


def h_lambda_perp(lat: PrimitiveLattice, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    p = lat.perp
    return (xi[..., 0] * p[0] + xi[..., 1] * p[1]) / lat.length


def enumerate_lattices(max_norm: float) -> list[PrimitiveLattice]:
    """All canonical primitive lattices with L <= max_norm, sorted by (L, generator)."""
    if max_norm < 1:
        raise ValueError("max_norm must be >= 1")
    r = int(math.floor(max_norm))
    found = []
    for a in range(0, r + 1):
        for b in range(-r, r + 1):
            if a == 0 and b <= 0:
                continue
            if a * a + b * b > max_norm * max_norm or math.gcd(a, b) != 1:
                continue
            found.append(PrimitiveLattice((a, b)))
    found.sort(key=lambda lat: (lat.length, lat.generator))
    return found
