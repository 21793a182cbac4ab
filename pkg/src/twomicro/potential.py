"""Real trigonometric potentials on T^2 and their averages along closed geodesics.

Along a lattice ``L = Z e`` the averaged field only contains modes ``n e`` and
is a function of the dimensionless coordinate ``theta = <x, e> mod 1``.  That
one-variable function is represented by :class:`Profile`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import brentq

from .lattice import PrimitiveLattice, classify_direction, enumerate_lattices

TWO_PI = 2.0 * math.pi
REALITY_TOL = 1e-12


class DegenerateDirection(ValueError):
    """The averaged potential is constant: every geodesic of the direction is critical."""


@dataclass(frozen=True)
class FourierField:
    """Finite Fourier series sum_k c_k e^{2 i pi k.x} of a real function on T^2."""

    terms: tuple = ()

    def __post_init__(self):
        items = {}
        for k, c in self.terms:
            k = (int(k[0]), int(k[1]))
            items[k] = items.get(k, 0.0) + complex(c)
        items = {k: c for k, c in items.items() if c != 0}
        scale = max([abs(c) for c in items.values()], default=1.0)
        for k, c in items.items():
            partner = items.get((-k[0], -k[1]), 0.0)
            if abs(partner - c.conjugate()) > REALITY_TOL * max(scale, 1.0):
                raise ValueError(f"coefficients at {k} and its negative violate reality")
        object.__setattr__(self, "terms", tuple(sorted(items.items())))

    @classmethod
    def from_modes(cls, modes: Mapping) -> "FourierField":
        return cls(tuple(modes.items()))

    @classmethod
    def zero(cls) -> "FourierField":
        return cls(())

    @classmethod
    def constant(cls, c: float) -> "FourierField":
        return cls((((0, 0), c),))

    @classmethod
    def cosine(cls, k, amplitude: float = 1.0, phase: float = 0.0) -> "FourierField":
        """amplitude * cos(2 pi k.x + phase)."""
        k = (int(k[0]), int(k[1]))
        if k == (0, 0):
            return cls.constant(amplitude * math.cos(phase))
        c = 0.5 * amplitude * complex(math.cos(phase), math.sin(phase))
        return cls(((k, c), ((-k[0], -k[1]), c.conjugate())))

    @classmethod
    def random(cls, rng: np.random.Generator, n_modes: int = 5, max_k: int = 2,
               scale: float = 1.0) -> "FourierField":
        modes = {}
        while len(modes) < 2 * n_modes:
            k = tuple(int(v) for v in rng.integers(-max_k, max_k + 1, size=2))
            if k == (0, 0) or k in modes:
                continue
            c = scale * complex(rng.normal(), rng.normal()) / 2
            modes[k] = c
            modes[(-k[0], -k[1])] = c.conjugate()
        return cls.from_modes(modes)

    def __add__(self, other: "FourierField") -> "FourierField":
        return FourierField(self.terms + other.terms)

    def scaled(self, factor: float) -> "FourierField":
        return FourierField(tuple((k, factor * c) for k, c in self.terms))

    @property
    def coeffs(self) -> dict:
        return dict(self.terms)

    @property
    def support_bound(self) -> int:
        return max([max(abs(k[0]), abs(k[1])) for k, _ in self.terms], default=0)

    @property
    def mean(self) -> complex:
        return self.coeffs.get((0, 0), 0.0)

    def is_constant(self, tol: float = 1e-14) -> bool:
        return all(abs(c) <= tol for k, c in self.terms if k != (0, 0))

    def evaluate(self, x) -> np.ndarray:
        return evaluate(self, x)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for k, c in self.terms:
            ph = c * np.exp(1j * TWO_PI * (k[0] * x[..., 0] + k[1] * x[..., 1]))
            out[..., 0] += 1j * TWO_PI * k[0] * ph
            out[..., 1] += 1j * TWO_PI * k[1] * ph
        return out.real

    # -- serialization -------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps([{"k": list(k), "re": c.real, "im": c.imag} for k, c in self.terms])

    @classmethod
    def from_json(cls, text: str) -> "FourierField":
        data = json.loads(text)
        return cls(tuple(((d["k"][0], d["k"][1]), complex(d["re"], d["im"])) for d in data))


def evaluate(V: FourierField, x) -> np.ndarray:
    """Real value of V at points x (trailing axis of length 2)."""
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape[:-1], dtype=complex)
    for k, c in V.terms:
        total += c * np.exp(1j * TWO_PI * (k[0] * x[..., 0] + k[1] * x[..., 1]))
    scale = sum(abs(c) for _, c in V.terms)
    if np.any(np.abs(total.imag) > 1e-12 * max(scale, 1.0)):
        raise ArithmeticError("field evaluation is not real")
    return total.real


def average_along(lat: PrimitiveLattice, V: FourierField) -> FourierField:
    """Average over the closed geodesics of direction e_perp: keep the modes in L."""
    return FourierField(tuple((k, c) for k, c in V.terms if lat.contains(k)))


def geodesic_average(V: FourierField, xi, max_denominator: int = 10**6) -> FourierField:
    cls = classify_direction(xi, max_denominator=max_denominator)
    if not cls.rational:
        return FourierField.constant(V.mean.real)
    # xi lies in L^perp, i.e. xi is orthogonal to the generator
    return average_along(cls.lattice, V)


@dataclass(frozen=True)
class Profile:
    """1-periodic trigonometric polynomial W(theta) = sum_n w_n e^{2 i pi n theta}."""

    coeffs: tuple = ()

    @classmethod
    def from_field(cls, lat: PrimitiveLattice, V: FourierField) -> "Profile":
        terms = [(lat.coordinate(k), c) for k, c in V.terms if lat.contains(k)]
        return cls(tuple(sorted(terms)))

    @classmethod
    def cosine(cls, amplitude: float = 1.0, harmonic: int = 1) -> "Profile":
        return cls(((-harmonic, amplitude / 2), (harmonic, amplitude / 2)))

    def __add__(self, other: "Profile") -> "Profile":
        merged: dict[int, complex] = {}
        for n, c in self.coeffs + other.coeffs:
            merged[n] = merged.get(n, 0) + c
        return Profile(tuple(sorted(merged.items())))

    @property
    def max_harmonic(self) -> int:
        return max([abs(n) for n, _ in self.coeffs], default=0)

    def is_constant(self, tol: float = 1e-14) -> bool:
        return all(abs(c) <= tol for n, c in self.coeffs if n != 0)

    def derivative(self, theta, order: int = 0) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=complex)
        for n, c in self.coeffs:
            out += c * (1j * TWO_PI * n) ** order * np.exp(1j * TWO_PI * n * theta)
        return out.real

    def __call__(self, theta) -> np.ndarray:
        return self.derivative(theta, 0)

    def max_abs_second_derivative(self) -> float:
        # bound by the coefficient sum; exact for single harmonics
        return float(sum(abs(c) * (TWO_PI * n) ** 2 for n, c in self.coeffs))


@dataclass(frozen=True)
class CriticalGeodesicReport:
    lattice: PrimitiveLattice
    positions: tuple = ()
    kinds: tuple = ()
    degenerate: bool = False


def _fold(theta: float) -> float:
    t = theta % 1.0
    return 0.0 if t >= 1.0 - 1e-15 else t


def critical_points(W: Profile, root_tol: float = 1e-12, n_grid: int = 4096) -> list[float]:
    """Roots of W' on [0, 1): grid bracketing, Brent refinement, Newton polish."""
    grid = np.arange(n_grid + 1) / n_grid
    d1 = W.derivative(grid, 1)
    scale = max(float(np.max(np.abs(d1))), 1e-300)
    zero_tol = 1e-13 * scale
    roots = []

    def polish(t):
        for _ in range(4):
            f, fp = W.derivative(t, 1), W.derivative(t, 2)
            if fp == 0 or abs(f) <= root_tol * 1e-3:
                break
            t = t - float(f / fp)
        return float(t)

    for j in range(n_grid):
        a, b = grid[j], grid[j + 1]
        fa, fb = d1[j], d1[j + 1]
        if abs(fa) <= zero_tol:
            roots.append(polish(a))
        elif fa * fb < 0 and abs(fb) > zero_tol:
            r = brentq(lambda t: float(W.derivative(t, 1)), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            roots.append(polish(r))
        elif j > 0 and abs(fa) < abs(d1[j - 1]) and abs(fa) < abs(fb) and fa * d1[j - 1] > 0 and fa * fb > 0:
            # local extremum of W' close to zero: candidate tangential root
            t = float(a)
            for _ in range(60):
                f2, f3 = W.derivative(t, 2), W.derivative(t, 3)
                if f3 == 0:
                    break
                t -= float(f2 / f3)
            if abs(W.derivative(t, 1)) <= root_tol * max(scale, 1.0):
                roots.append(t)
    out: list[float] = []
    for r in sorted(_fold(r) for r in roots):
        if abs(W.derivative(r, 1)) > root_tol * max(scale, 1.0):
            continue
        if out and min(abs(r - out[-1]), 1 - abs(r - out[-1])) < 1e-9:
            continue
        out.append(r)
    if len(out) > 1 and min(abs(out[-1] - out[0]), 1 - abs(out[-1] - out[0])) < 1e-9:
        out.pop()
    return out


def critical_geodesics(lat: PrimitiveLattice, V: FourierField, root_tol: float = 1e-12,
                       allow_degenerate: bool = False) -> CriticalGeodesicReport:
    """Critical positions theta* of W = I_L(V) along one lattice direction."""
    W = Profile.from_field(lat, V)
    if W.is_constant():
        if not allow_degenerate:
            raise DegenerateDirection(f"I_L(V) is constant for {lat!r}")
        return CriticalGeodesicReport(lat, (), (), True)
    positions = critical_points(W, root_tol)
    curv_scale = W.max_abs_second_derivative()
    kinds = []
    for t in positions:
        w2 = float(W.derivative(t, 2))
        if abs(w2) <= 1e-8 * curv_scale:
            kinds.append("degenerate")
        else:
            kinds.append("min" if w2 > 0 else "max")
    return CriticalGeodesicReport(lat, tuple(positions), tuple(kinds), False)


def critical_set(V: FourierField, max_norm: float, root_tol: float = 1e-12) -> list[CriticalGeodesicReport]:
    """Critical geodesic reports for every lattice with L <= max_norm.

    Only lattices up to ``max_norm`` are listed, so for non-generic V the union
    of the reports is a truncation of the full critical set.
    """
    return [critical_geodesics(lat, V, root_tol, allow_degenerate=True)
            for lat in enumerate_lattices(max_norm)]
