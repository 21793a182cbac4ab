"""Weyl quantization on T^2 in the Fourier basis e_k(x) = e^{2 i pi k.x}.

    Op_h(a) e_k = sum_q a_{q-k}(pi h (q + k)) e_q

Operators are dense matrices on the truncated box ``|k|_inf <= N``; target
frequencies outside the box are dropped.  Basis order is row-major in
``(k1, k2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .lattice import PrimitiveLattice, h_lambda
from .potential import FourierField

TWO_PI = 2.0 * math.pi


class TruncationTooSmall(ValueError):
    pass


class DegreeTooHigh(ValueError):
    pass


# --------------------------------------------------------------------------- box

@lru_cache(maxsize=64)
def box_modes(N: int) -> np.ndarray:
    """Integer frequencies of the box, shape ((2N+1)^2, 2), row-major."""
    r = np.arange(-N, N + 1)
    k1, k2 = np.meshgrid(r, r, indexing="ij")
    out = np.stack([k1.ravel(), k2.ravel()], axis=-1)
    out.setflags(write=False)
    return out


def box_index(N: int, k) -> np.ndarray:
    """Flat indices of frequencies ``k`` (assumed inside the box)."""
    k = np.asarray(k)
    return (k[..., 0] + N) * (2 * N + 1) + (k[..., 1] + N)


def in_box(N: int, k) -> np.ndarray:
    k = np.asarray(k)
    return (np.abs(k[..., 0]) <= N) & (np.abs(k[..., 1]) <= N)


# ------------------------------------------------------------------- coefficients

class Const:
    def __init__(self, value: complex):
        self.value = complex(value)

    def __call__(self, xi):
        return np.full(np.shape(xi)[:-1], self.value, dtype=complex)


class Poly:
    """Polynomial sum_{(i,j)} c_ij xi_1^i xi_2^j."""

    def __init__(self, coeffs: Mapping):
        self.coeffs = {tuple(e): complex(c) for e, c in coeffs.items() if c != 0}

    @property
    def degree(self) -> int:
        return max([i + j for i, j in self.coeffs], default=0)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for (i, j), c in self.coeffs.items():
            out += c * xi[..., 0] ** i * xi[..., 1] ** j
        return out

    def grad(self, axis: int) -> "Poly":
        out = {}
        for (i, j), c in self.coeffs.items():
            if axis == 0 and i > 0:
                out[(i - 1, j)] = out.get((i - 1, j), 0) + i * c
            if axis == 1 and j > 0:
                out[(i, j - 1)] = out.get((i, j - 1), 0) + j * c
        return Poly(out)

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict = {}
        for (i, j), c in self.coeffs.items():
            for (p, q), d in other.coeffs.items():
                out[(i + p, j + q)] = out.get((i + p, j + q), 0) + c * d
        return Poly(out)

    def scale(self, factor: complex) -> "Poly":
        return Poly({e: factor * c for e, c in self.coeffs.items()})

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return Poly(out)


class Bump:
    """amplitude * exp(-|xi - center|^2 / (2 width^2))."""

    def __init__(self, amplitude: complex, center, width: float):
        self.amplitude = complex(amplitude)
        self.center = np.asarray(center, dtype=float)
        self.width = float(width)

    def __call__(self, xi):
        d = np.asarray(xi, dtype=float) - self.center
        return self.amplitude * np.exp(-(d[..., 0] ** 2 + d[..., 1] ** 2) / (2 * self.width ** 2))


class _Conj:
    def __init__(self, f):
        self.f = f

    def __call__(self, xi):
        return np.conj(self.f(xi))


class _Scaled:
    def __init__(self, f, delta: float):
        self.f, self.delta = f, delta

    def __call__(self, xi):
        return self.f(self.delta * np.asarray(xi, dtype=float))


class _Times:
    def __init__(self, factor: complex, f):
        self.factor, self.f = factor, f

    def __call__(self, xi):
        return self.factor * self.f(xi)


class _Sum:
    def __init__(self, *fs):
        self.fs = fs

    def __call__(self, xi):
        out = self.fs[0](xi)
        for f in self.fs[1:]:
            out = out + f(xi)
        return out


class _DotGrad:
    """xi -> c * (k . grad p(xi)) * f(xi) for a polynomial p."""

    def __init__(self, c: complex, k, p: Poly, f):
        self.c, self.f = c, f
        self.g = p.grad(0).scale(k[0]) + p.grad(1).scale(k[1])

    def __call__(self, xi):
        return self.c * self.g(xi) * self.f(xi)


# ------------------------------------------------------------------------ symbols

KINDS = ("compact", "bounded", "poly2", "poly")


class Symbol:
    """Periodic symbol a(x, xi) = sum_k a_k(xi) e^{2 i pi k.x}.

    ``modes`` maps integer frequencies to vectorised callables of xi.  When the
    symbol is polynomial in xi the monomial data is kept in ``poly`` and the
    Poisson bracket can be computed exactly.
    """

    def __init__(self, modes: Mapping, kind: str = "bounded", poly: Optional[Mapping] = None,
                 real: bool = False):
        if kind not in KINDS:
            raise ValueError(f"unknown symbol class {kind!r}")
        self.modes = {(int(k[0]), int(k[1])): f for k, f in modes.items()}
        self.kind = kind
        self.poly = None if poly is None else {(int(k[0]), int(k[1])): p for k, p in poly.items()}
        self.real = real

    # constructors
    @classmethod
    def constant(cls, c: complex = 1.0) -> "Symbol":
        return cls.polynomial({(0, 0): {(0, 0): c}})

    @classmethod
    def exponential(cls, m, c: complex = 1.0) -> "Symbol":
        """c * e^{2 i pi m.x}."""
        return cls.polynomial({tuple(m): {(0, 0): c}}, real=False)

    @classmethod
    def polynomial(cls, data: Mapping, real: Optional[bool] = None) -> "Symbol":
        polys = {tuple(k): Poly(v) for k, v in data.items()}
        deg = max([p.degree for p in polys.values()], default=0)
        sym = cls({k: p for k, p in polys.items()}, kind="poly2" if deg <= 2 else "poly",
                  poly=polys, real=False)
        sym.real = sym.check_real() if real is None else real
        return sym

    @classmethod
    def from_field(cls, V: FourierField) -> "Symbol":
        return cls.polynomial({k: {(0, 0): c} for k, c in V.terms}, real=True)

    @classmethod
    def kinetic(cls) -> "Symbol":
        """|xi|^2 / 2."""
        return cls.polynomial({(0, 0): {(2, 0): 0.5, (0, 2): 0.5}}, real=True)

    @classmethod
    def random(cls, rng: np.random.Generator, n_modes: int = 3, max_k: int = 2,
               real: bool = True) -> "Symbol":
        """Random bounded symbol with Gaussian-bump coefficients."""
        modes: dict = {}
        while len(modes) < (2 * n_modes if real else n_modes):
            k = tuple(int(v) for v in rng.integers(-max_k, max_k + 1, size=2))
            if k in modes:
                continue
            f = Bump(complex(rng.normal(), rng.normal()), rng.normal(size=2), 0.5 + rng.random())
            if real:
                if k == (0, 0):
                    f = Bump(rng.normal(), f.center, f.width)
                    modes[k] = f
                else:
                    modes[k] = f
                    modes[(-k[0], -k[1])] = _Conj(f)
            else:
                modes[k] = f
        return cls(modes, kind="bounded", real=real)

    # properties
    @property
    def degree(self) -> Optional[int]:
        if self.poly is None:
            return None
        return max([p.degree for p in self.poly.values()], default=0)

    @property
    def max_mode(self) -> int:
        return max([max(abs(k[0]), abs(k[1])) for k in self.modes], default=0)

    def x_independent(self) -> bool:
        return all(k == (0, 0) for k in self.modes)

    def xi_independent(self) -> bool:
        return self.poly is not None and self.degree == 0

    def check_real(self, n: int = 5, tol: float = 1e-12) -> bool:
        """Spot-check a_{-k}(xi) = conj(a_k(xi)) on a test grid."""
        g = np.linspace(-2.0, 2.0, n)
        xi = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
        for k, f in self.modes.items():
            partner = self.modes.get((-k[0], -k[1]))
            a = f(xi)
            b = np.zeros_like(a) if partner is None else partner(xi)
            if np.max(np.abs(np.conj(a) - b), initial=0.0) > tol * max(1.0, float(np.max(np.abs(a), initial=0))):
                return False
        return True

    def __call__(self, x, xi) -> np.ndarray:
        """Pointwise value a(x, xi)."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        out = 0.0
        for k, f in self.modes.items():
            out = out + f(xi) * np.exp(1j * TWO_PI * (k[0] * x[..., 0] + k[1] * x[..., 1]))
        return out

    # algebra
    def __add__(self, other: "Symbol") -> "Symbol":
        modes = dict(self.modes)
        for k, f in other.modes.items():
            modes[k] = _Sum(modes[k], f) if k in modes else f
        poly = None
        if self.poly is not None and other.poly is not None:
            poly = dict(self.poly)
            for k, p in other.poly.items():
                poly[k] = poly[k] + p if k in poly else p
            modes = dict(poly)
        kind = "bounded" if poly is None else ("poly2" if max(p.degree for p in poly.values()) <= 2 else "poly")
        if poly is None and self.kind == other.kind == "compact":
            kind = "compact"
        return Symbol(modes, kind=kind, poly=poly, real=self.real and other.real)

    def times(self, c: complex) -> "Symbol":
        if self.poly is not None:
            poly = {k: p.scale(c) for k, p in self.poly.items()}
            return Symbol(dict(poly), self.kind, poly, real=self.real and complex(c).imag == 0)
        return Symbol({k: _Times(c, f) for k, f in self.modes.items()}, self.kind,
                      real=self.real and complex(c).imag == 0)

    def rescaled(self, delta: float) -> "Symbol":
        """(x, xi) -> a(x, delta xi)."""
        poly = None
        if self.poly is not None:
            poly = {k: Poly({(i, j): c * delta ** (i + j) for (i, j), c in p.coeffs.items()})
                    for k, p in self.poly.items()}
            return Symbol(dict(poly), self.kind, poly, real=self.real)
        return Symbol({k: _Scaled(f, delta) for k, f in self.modes.items()}, self.kind, real=self.real)


def h_lambda_squared(lat: PrimitiveLattice) -> Symbol:
    a, b = lat.generator
    L2 = a * a + b * b
    return Symbol.polynomial({(0, 0): {(2, 0): a * a / L2, (1, 1): 2 * a * b / L2, (0, 2): b * b / L2}},
                             real=True)


def h_lambda_perp_squared(lat: PrimitiveLattice) -> Symbol:
    a, b = lat.perp
    L2 = a * a + b * b
    return Symbol.polynomial({(0, 0): {(2, 0): a * a / L2, (1, 1): 2 * a * b / L2, (0, 2): b * b / L2}},
                             real=True)


def norm_squared() -> Symbol:
    return Symbol.polynomial({(0, 0): {(2, 0): 1.0, (0, 2): 1.0}}, real=True)


# -------------------------------------------------------------- two-micro symbols

Limit = Union[complex, Callable]


class _EtaCoef:
    """xi -> c(xi, H_L(xi)/eps), replaced by the declared limits beyond the cutoff."""

    def __init__(self, f, lat: PrimitiveLattice, eps: float, cutoff: float, limits):
        self.f, self.lat, self.eps, self.cutoff, self.limits = f, lat, eps, cutoff, limits

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        eta = h_lambda(self.lat, xi) / self.eps
        out = np.asarray(self.f(xi, eta), dtype=complex)
        out = np.broadcast_to(out, eta.shape).copy()
        far = np.abs(eta) >= self.cutoff
        if np.any(far):
            lo, hi = self.limits
            for sel, lim in ((far & (eta < 0), lo), (far & (eta > 0), hi)):
                if np.any(sel):
                    out[sel] = _limit_value(lim, xi[sel])
        return out


def _limit_value(lim: Limit, xi) -> np.ndarray:
    if callable(lim):
        return np.asarray(lim(xi), dtype=complex)
    return np.full(np.shape(xi)[:-1], complex(lim))


class _Interp:
    """Complex linear interpolation in eta on a fixed grid (constant beyond its ends)."""

    def __init__(self, grid, values):
        self.grid = np.asarray(grid, dtype=float)
        self.re = np.ascontiguousarray(np.real(values), dtype=float)
        self.im = np.ascontiguousarray(np.imag(values), dtype=float)

    def __call__(self, xi, eta):
        eta = np.asarray(eta, dtype=float)
        return np.interp(eta, self.grid, self.re) + 1j * np.interp(eta, self.grid, self.im)


class _Separable:
    """(xi, eta) -> c * g(eta)."""

    def __init__(self, c: complex, g):
        self.c, self.g = complex(c), g

    def __call__(self, xi, eta):
        return self.c * self.g(eta)


class TwoMicroSymbol:
    """Symbol a(x, xi, eta) on T*T^2 x [-inf, +inf] with finite limits at eta = +-inf.

    ``modes`` maps frequencies to callables ``f(xi, eta)``; ``limits`` maps
    frequencies to ``(value at -inf, value at +inf)``, each a constant or a
    callable of xi.  Beyond ``eta_cutoff`` the limits are used.
    """

    def __init__(self, modes: Mapping, limits: Optional[Mapping] = None, eta_cutoff: float = 1e3,
                 real: bool = False, check: bool = True):
        self.modes = {(int(k[0]), int(k[1])): f for k, f in modes.items()}
        self.eta_cutoff = float(eta_cutoff)
        self.real = real
        if limits is None:
            limits = {k: (_FrozenEnd(f, -self.eta_cutoff), _FrozenEnd(f, self.eta_cutoff))
                      for k, f in self.modes.items()}
        self.limits = {(int(k[0]), int(k[1])): v for k, v in limits.items()}
        if check:
            self._check_limits()

    def _check_limits(self, tol: float = 1e-6):
        g = np.linspace(-1.5, 1.5, 4)
        xi = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
        for k, f in self.modes.items():
            lo, hi = self.limits.get(k, (0.0, 0.0))
            for sign, lim in ((-1, lo), (1, hi)):
                ref = _limit_value(lim, xi)
                for scale in (1.0, 3.0):
                    eta = np.full(len(xi), sign * scale * self.eta_cutoff)
                    val = np.asarray(f(xi, eta), dtype=complex)
                    if np.max(np.abs(val - ref)) > tol * max(1.0, float(np.max(np.abs(ref)))):
                        raise ValueError(f"mode {k}: limit at eta={sign}inf not attained beyond the cutoff")

    @classmethod
    def from_symbol(cls, a: Symbol) -> "TwoMicroSymbol":
        modes = {k: _XiOnly(f) for k, f in a.modes.items()}
        limits = {k: (f, f) for k, f in a.modes.items()}
        return cls(modes, limits, real=a.real, check=False)

    @classmethod
    def separable(cls, lat: PrimitiveLattice, harmonics: Mapping[int, complex], g: Callable,
                  g_limits=(0.0, 0.0), real: Optional[bool] = None, eta_cutoff: float = 1e3) -> "TwoMicroSymbol":
        """sum_n c_n e^{2 i pi n <x, e>} g(eta)."""
        e = lat.generator
        modes, limits = {}, {}
        for n, c in harmonics.items():
            k = (n * e[0], n * e[1])
            modes[k] = _Separable(c, g)
            limits[k] = (complex(c) * g_limits[0], complex(c) * g_limits[1])
        if real is None:
            real = all(abs(complex(harmonics.get(-n, 0)) - complex(c).conjugate()) < 1e-14
                       for n, c in harmonics.items()) and np.isrealobj(g(np.linspace(-3, 3, 7)))
        return cls(modes, limits, eta_cutoff=eta_cutoff, real=real)

    @classmethod
    def tabulated(cls, lat: PrimitiveLattice, harmonics, eta_grid, values, real: bool = False) -> "TwoMicroSymbol":
        """Modes n e with coefficients interpolated in eta; ``values[i, j]`` is mode
        ``harmonics[i]`` at ``eta_grid[j]``."""
        e = lat.generator
        modes, limits = {}, {}
        for n, row in zip(harmonics, values):
            k = (int(n) * e[0], int(n) * e[1])
            modes[k] = _Interp(eta_grid, row)
            limits[k] = (complex(row[0]), complex(row[-1]))
        return cls(modes, limits, eta_cutoff=max(1e3, 2 * float(np.max(np.abs(eta_grid)))), real=real,
                   check=False)

    @property
    def max_mode(self) -> int:
        return max([max(abs(k[0]), abs(k[1])) for k in self.modes], default=0)

    def induced(self, lat: PrimitiveLattice, eps: float) -> Symbol:
        """Ordinary symbol a(x, xi, H_L(xi)/eps)."""
        modes = {k: _EtaCoef(f, lat, eps, self.eta_cutoff, self.limits.get(k, (0.0, 0.0)))
                 for k, f in self.modes.items()}
        return Symbol(modes, kind="bounded", real=self.real)

    def rescaled_pair(self, lat: PrimitiveLattice, eps: float) -> Symbol:
        """The symbol a(x, eps xi, H_L(x, xi)) quantized at h/eps."""
        modes = {k: _RescaledEtaCoef(f, lat, eps, self.eta_cutoff, self.limits.get(k, (0.0, 0.0)))
                 for k, f in self.modes.items()}
        return Symbol(modes, kind="bounded", real=self.real)

    def __call__(self, x, xi, eta):
        x = np.asarray(x, dtype=float)
        out = 0.0
        for k, f in self.modes.items():
            out = out + f(xi, eta) * np.exp(1j * TWO_PI * (k[0] * x[..., 0] + k[1] * x[..., 1]))
        return out


class _XiOnly:
    def __init__(self, f):
        self.f = f

    def __call__(self, xi, eta):
        return self.f(xi)


class _FrozenEnd:
    def __init__(self, f, eta: float):
        self.f, self.eta = f, eta

    def __call__(self, xi):
        return self.f(xi, np.full(np.shape(xi)[:-1], self.eta))


class _RescaledEtaCoef:
    def __init__(self, f, lat, eps, cutoff, limits):
        self.f, self.lat, self.eps, self.cutoff, self.limits = f, lat, eps, cutoff, limits

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        eta = h_lambda(self.lat, xi)
        out = np.asarray(self.f(self.eps * xi, eta), dtype=complex)
        out = np.broadcast_to(out, eta.shape).copy()
        far = np.abs(eta) >= self.cutoff
        if np.any(far):
            lo, hi = self.limits
            for sel, lim in ((far & (eta < 0), lo), (far & (eta > 0), hi)):
                if np.any(sel):
                    out[sel] = _limit_value(lim, self.eps * xi[sel])
        return out


def average_symbol(lat: PrimitiveLattice, a):
    """Average along the H_L^perp flow: keep exactly the modes in L."""
    if isinstance(a, TwoMicroSymbol):
        modes = {k: f for k, f in a.modes.items() if lat.contains(k)}
        limits = {k: v for k, v in a.limits.items() if lat.contains(k)}
        return TwoMicroSymbol(modes, limits, a.eta_cutoff, a.real, check=False)
    poly = None if a.poly is None else {k: p for k, p in a.poly.items() if lat.contains(k)}
    return Symbol({k: f for k, f in a.modes.items() if lat.contains(k)}, a.kind, poly, a.real)


# ---------------------------------------------------------------------- operators

@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    N: int
    hbar: float
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return (2 * self.N + 1) ** 2

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))


def _pairs(N: int, m):
    ks = box_modes(N)
    qs = ks + np.asarray(m)
    mask = in_box(N, qs)
    return ks[mask], qs[mask]


def _check_window(a, N: int):
    if a.max_mode > 2 * N:
        raise TruncationTooSmall(f"symbol modes up to {a.max_mode} exceed the 2N = {2 * N} window")


def quantize(a: Symbol, hbar: float, N: int) -> OperatorMatrix:
    """Dense Weyl quantization on the box |k|_inf <= N."""
    _check_window(a, N)
    dim = (2 * N + 1) ** 2
    out = np.zeros((dim, dim), dtype=complex)
    for m, f in a.modes.items():
        ks, qs = _pairs(N, m)
        if len(ks) == 0:
            continue
        vals = f(np.pi * hbar * (qs + ks))
        out[box_index(N, qs), box_index(N, ks)] += vals
    return OperatorMatrix(N, hbar, out)


def quantize_two_micro(lat: PrimitiveLattice, a: TwoMicroSymbol, hbar: float, eps: float, N: int) -> OperatorMatrix:
    if eps <= 0:
        raise ValueError("eps must be positive")
    return quantize(a.induced(lat, eps), hbar, N)


def apply_symbol(a: Symbol, hbar: float, N: int, vec: np.ndarray) -> np.ndarray:
    """Matrix-free Op_h(a) vec on the box; same truncation as :func:`quantize`."""
    _check_window(a, N)
    vec = np.asarray(vec)
    out = np.zeros(vec.shape, dtype=complex)
    for m, f in a.modes.items():
        ks, qs = _pairs(N, m)
        if len(ks) == 0:
            continue
        out[box_index(N, qs)] += f(np.pi * hbar * (qs + ks)) * vec[box_index(N, ks)]
    return out


def expectation(a: Symbol, hbar: float, N: int, vec: np.ndarray) -> complex:
    """<vec, Op_h(a) vec> without forming the matrix."""
    return complex(np.vdot(vec, apply_symbol(a, hbar, N, vec)))


def schur_norm_bound(a: Symbol, hbar: float, N: int) -> float:
    """sqrt(max row sum * max column sum) of |entries|: an upper bound on ||Op_h(a)||."""
    A = np.abs(quantize(a, hbar, N).matrix)
    return float(math.sqrt(A.sum(axis=1).max() * A.sum(axis=0).max()))


def d_lambda(lat: PrimitiveLattice, N: int) -> np.ndarray:
    """D_L = (1/i)(e/L).grad as a diagonal matrix."""
    ks = box_modes(N)
    return np.diag(TWO_PI * (ks @ lat.e) / lat.length).astype(complex)


def d_lambda_perp(lat: PrimitiveLattice, N: int) -> np.ndarray:
    ks = box_modes(N)
    return np.diag(TWO_PI * (ks @ lat.e_perp) / lat.length).astype(complex)


def minus_laplacian(N: int) -> np.ndarray:
    ks = box_modes(N)
    return np.diag(4 * math.pi ** 2 * (ks ** 2).sum(axis=1)).astype(complex)


def weinstein_average(lat: PrimitiveLattice, A: OperatorMatrix) -> OperatorMatrix:
    """(1/M) sum_j U(s_j) A U(-s_j), U(s) = e^{i s D_L^perp}, s_j = j L / M.

    M exceeds twice the largest |<k - q, e_perp>| on the box, so the discrete
    average coincides with the continuous one.
    """
    N = A.N
    ks = box_modes(N)
    phase_index = ks @ np.asarray(lat.perp)          # <k, e_perp>, integer
    n_max = 2 * N * (abs(lat.perp[0]) + abs(lat.perp[1]))
    M = 2 * n_max + 1
    diff = phase_index[:, None] - phase_index[None, :]  # <q - k, e_perp>
    j = np.arange(M)
    values = np.arange(-2 * n_max, 2 * n_max + 1)
    factors = np.exp(2j * np.pi * np.outer(values, j) / M).mean(axis=1)
    weights = factors[diff + 2 * n_max]
    return OperatorMatrix(N, A.hbar, A.matrix * weights)


def commutator(A: OperatorMatrix, B: OperatorMatrix) -> OperatorMatrix:
    if A.N != B.N:
        raise ValueError("operators live on different boxes")
    return OperatorMatrix(A.N, A.hbar, A.matrix @ B.matrix - B.matrix @ A.matrix)


def poisson_bracket(a: Symbol, b: Symbol) -> Symbol:
    """{a, b} = d_xi a . d_x b - d_x a . d_xi b, computed analytically.

    Needs polynomial data for whichever factor is differentiated in xi.
    """
    modes: dict = {}

    def add(k, f):
        modes[k] = _Sum(modes[k], f) if k in modes else f

    if a.poly is not None and b.poly is not None:
        poly: dict = {}
        for ka, pa in a.poly.items():
            for kb, pb in b.poly.items():
                k = (ka[0] + kb[0], ka[1] + kb[1])
                term = Poly({})
                for ax in (0, 1):
                    term = term + (pa.grad(ax) * pb).scale(2j * math.pi * kb[ax])
                    term = term + (pa * pb.grad(ax)).scale(-2j * math.pi * ka[ax])
                poly[k] = poly[k] + term if k in poly else term
        deg = max([p.degree for p in poly.values()], default=0)
        return Symbol(dict(poly), "poly2" if deg <= 2 else "poly", poly, real=a.real and b.real)
    if b.poly is not None and b.x_independent():
        pb = b.poly[(0, 0)]
        for ka, fa in a.modes.items():
            add(ka, _DotGrad(-2j * math.pi, ka, pb, fa))
        return Symbol(modes, "bounded", real=a.real and b.real)
    if a.poly is not None and a.x_independent():
        pa = a.poly[(0, 0)]
        for kb, fb in b.modes.items():
            add(kb, _DotGrad(2j * math.pi, kb, pa, fb))
        return Symbol(modes, "bounded", real=a.real and b.real)
    if a.xi_independent() and b.poly is not None:
        for ka, pa in a.poly.items():
            ca = pa.coeffs.get((0, 0), 0)
            for kb, pb in b.poly.items():
                k = (ka[0] + kb[0], ka[1] + kb[1])
                add(k, _DotGrad(-2j * math.pi * ca, ka, pb, Const(1.0)))
        return Symbol(modes, "bounded", real=a.real and b.real)
    raise ValueError("Poisson bracket needs xi-polynomial data for the differentiated symbol")


def moyal_leading(a: Symbol, b: Symbol, hbar: float, exact: bool = True) -> Symbol:
    """(h/i){a, b}, the symbol of [Op_h(a), Op_h(b)].

    With ``exact=True`` the pair must be one for which the identity holds with
    no remainder: b polynomial of degree <= 2 in xi, and either b independent
    of x or a independent of xi.
    """
    if exact:
        if b.poly is None or b.degree > 2:
            raise DegreeTooHigh("exact commutator needs b polynomial of degree <= 2 in xi")
        if not (b.x_independent() or a.xi_independent()):
            raise ValueError("exact commutator needs b = b(xi) or a = a(x)")
    return poisson_bracket(a, b).times(-1j * hbar)
