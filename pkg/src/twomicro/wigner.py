"""Wigner and two-microlocal Wigner values, position densities and tube masses."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lattice import PrimitiveLattice
from .quantum import QuantumState
from .weyl import Symbol, TwoMicroSymbol, box_index, box_modes, expectation, in_box

TWO_PI = 2.0 * math.pi
REAL_TOL = 1e-10


class KNotInLambda(ValueError):
    pass


class AliasedGrid(ValueError):
    pass


@dataclass(frozen=True)
class WignerValue:
    value: complex
    hbar: float
    eps: Optional[float] = None
    lattice: Optional[PrimitiveLattice] = None
    time: Optional[float] = None

    @property
    def real(self) -> float:
        return float(self.value.real)

    @property
    def imag(self) -> float:
        return float(self.value.imag)


def _finish(value: complex, real: bool, u: QuantumState, **meta) -> WignerValue:
    if real:
        if abs(value.imag) > REAL_TOL * max(1.0, abs(value)):
            raise ArithmeticError(f"real symbol produced a complex Wigner value {value!r}")
        value = complex(value.real, 0.0)
    return WignerValue(value, u.hbar, **meta)


def wigner(u: QuantumState, a: Symbol, time: Optional[float] = None) -> WignerValue:
    """<u, Op_h(a) u> (matrix-free, same truncation as the dense quantization)."""
    return _finish(expectation(a, u.hbar, u.N, u.coefficients), a.real, u, time=time)


def two_micro_wigner(lat: PrimitiveLattice, u: QuantumState, a: TwoMicroSymbol, eps: float,
                     time: Optional[float] = None) -> WignerValue:
    """<u, Op_h(a(x, xi, H_L(xi)/eps)) u>."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    b = a.induced(lat, eps)
    return _finish(expectation(b, u.hbar, u.N, u.coefficients), a.real, u, eps=eps, lattice=lat, time=time)


def fourier_mode_symbol(lat: PrimitiveLattice, k, a: TwoMicroSymbol) -> TwoMicroSymbol:
    """e^{-2 i pi k.x} a(xi, eta) for an x-independent two-micro symbol a."""
    k = (int(k[0]), int(k[1]))
    if k == (0, 0) or not lat.contains(k):
        raise KNotInLambda(f"{k} is not a nonzero element of {lat!r}")
    if set(a.modes) != {(0, 0)}:
        raise ValueError("the amplitude a(xi, eta) must not depend on x")
    m = (-k[0], -k[1])
    return TwoMicroSymbol({m: a.modes[(0, 0)]}, {m: a.limits[(0, 0)]}, a.eta_cutoff, real=False, check=False)


def fourier_mode_observable(lat: PrimitiveLattice, k, u: QuantumState, a: TwoMicroSymbol, eps: float,
                            time: Optional[float] = None) -> WignerValue:
    return two_micro_wigner(lat, u, fourier_mode_symbol(lat, k, a), eps, time)


class _Window:
    def __init__(self, f, R: float, inside: bool):
        self.f, self.R, self.inside = f, R, inside

    def __call__(self, xi, eta):
        mask = np.abs(np.asarray(eta)) <= self.R
        return np.asarray(self.f(xi, eta)) * (mask if self.inside else ~mask)


def eta_cutoff_split(lat: PrimitiveLattice, u: QuantumState, a: TwoMicroSymbol, eps: float,
                     R: float) -> tuple[WignerValue, WignerValue]:
    """Values of a 1_{|eta| <= R} and a 1_{|eta| > R}; they add up to the full value."""
    inner = TwoMicroSymbol({k: _Window(f, R, True) for k, f in a.modes.items()},
                           {k: (0.0, 0.0) for k in a.modes}, a.eta_cutoff, a.real, check=False)
    outer = TwoMicroSymbol({k: _Window(f, R, False) for k, f in a.modes.items()}, a.limits,
                           a.eta_cutoff, a.real, check=False)
    return two_micro_wigner(lat, u, inner, eps), two_micro_wigner(lat, u, outer, eps)


# --------------------------------------------------------------------- densities

def position_density(u: QuantumState, M: int) -> np.ndarray:
    """|u(x)|^2 at x = (i, j)/M; the grid mean is 1 (exact when M >= 2(2N+1))."""
    if M < 2 * (2 * u.N + 1):
        raise AliasedGrid(f"grid {M} < 2(2N+1) = {2 * (2 * u.N + 1)}")
    return u.position_density(M)


def density_coefficients(u: QuantumState) -> tuple[np.ndarray, int]:
    """Fourier coefficients of |u|^2 on the grid of size M; entry [m1 % M, m2 % M]."""
    M = 2 * (2 * u.N + 1)
    rho = u.position_density(M)
    return np.fft.fft2(rho) / (M * M), M


def tube_coordinate(lat: PrimitiveLattice, x) -> np.ndarray:
    """theta = <x, e> mod 1, the fraction of a period across the closed geodesics."""
    x = np.asarray(x, dtype=float)
    return np.mod(x[..., 0] * lat.generator[0] + x[..., 1] * lat.generator[1], 1.0)


def circle_distance(a, b):
    d = np.mod(np.asarray(a) - b, 1.0)
    return np.minimum(d, 1.0 - d)


def mass_in_tube(u: QuantumState, lat: PrimitiveLattice, s_star: float, r: float,
                 method: str = "spectral", M: Optional[int] = None) -> float:
    """Mass of |u|^2 in {x : dist(<x, e> mod 1, s_star) < r}.

    ``spectral`` integrates the exact Fourier series of |u|^2 against the
    tube indicator; ``grid`` sums the density over an M x M grid.
    """
    if not 0 < r < 0.5:
        raise ValueError("radius must lie in (0, 1/2)")
    if method == "grid":
        M = M or 8 * (2 * u.N + 1)
        rho = position_density(u, M)
        g = np.arange(M) / M
        X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
        inside = circle_distance(tube_coordinate(lat, X), s_star) < r
        return float(rho[inside].sum() / (M * M))
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    coef, Mg = density_coefficients(u)
    e = np.asarray(lat.generator)
    n_max = (2 * u.N) // max(abs(e[0]), abs(e[1]))
    total = 2 * r * coef[0, 0].real
    for n in range(1, n_max + 1):
        m = n * e
        c = coef[m[0] % Mg, m[1] % Mg]
        # n and -n together give twice the real part
        total += 2 * (c * np.exp(2j * math.pi * n * s_star)).real * math.sin(2 * math.pi * n * r) / (math.pi * n)
    return float(total)


def write_density_csv(path, density: np.ndarray, meta: dict):
    M1, M2 = density.shape
    with open(path, "w") as fh:
        for key, val in meta.items():
            fh.write(f"# {key}={val!r}\n")
        fh.write("x1,x2,density\n")
        for i in range(M1):
            for j in range(M2):
                fh.write(f"{i / M1!r},{j / M2!r},{float(density[i, j])!r}\n")


# ----------------------------------------------------------- eta-resolved moments

@dataclass(frozen=True, eq=False)
class EtaMoments:
    """Exact reduction of <u, Op_h(a) u> for a(x, xi, eta) = sum_n c_n(eta) e^{2 i pi n <x, e>}.

    For each harmonic n, ``values[n]`` holds the distinct eta = H_L(pi h (q + k))/eps
    met by pairs q = k + n e and ``weights[n]`` the sums of conj(u_q) u_k.
    """

    lattice: PrimitiveLattice
    eps: float
    values: dict
    weights: dict

    def pair(self, coefficients: dict) -> complex:
        """sum_n sum_j c_n(eta_j) w_{n,j} for callables c_n of eta."""
        total = 0j
        for n, c in coefficients.items():
            if n in self.weights:
                total += complex(np.dot(np.asarray(c(self.values[n]), dtype=complex), self.weights[n]))
        return total


def _mode_vector(lat: PrimitiveLattice, n) -> np.ndarray:
    if isinstance(n, (int, np.integer)):
        return int(n) * np.asarray(lat.generator)
    return np.asarray(n, dtype=int).reshape(2)


def eta_moments(lat: PrimitiveLattice, u: QuantumState, eps: float, harmonics) -> EtaMoments:
    """Harmonics are integers n (mode n e) or integer vectors m (mode m)."""
    N, hbar = u.N, u.hbar
    ks = box_modes(N)
    e = np.asarray(lat.generator)
    L2 = int(e @ e)
    ke = ks @ e
    values, weights = {}, {}
    for n in harmonics:
        m = _mode_vector(lat, n)
        qs = ks + m
        mask = in_box(N, qs)
        if not np.any(mask):
            continue
        # eta of the pair (k + m, k) is pi h <2k + m, e>/(L eps)
        idx = 2 * ke[mask] + int(m @ e)
        prod = np.conj(u.coefficients[box_index(N, qs[mask])]) * u.coefficients[mask]
        lo = idx.min()
        count = np.bincount(idx - lo)
        re = np.bincount(idx - lo, weights=prod.real)
        im = np.bincount(idx - lo, weights=prod.imag)
        keep = np.nonzero(count)[0]
        values[n] = math.pi * hbar * (keep + lo) / (math.sqrt(L2) * eps)
        weights[n] = re[keep] + 1j * im[keep]
    return EtaMoments(lat, eps, values, weights)
