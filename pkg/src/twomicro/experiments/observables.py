"""Observable presets a(x, xi, eta) = sum_n c_n e^{2 i pi <n e + p e_perp, x>} f(eta).

Every preset has three faces: a two-micro symbol for the quantum side, the
per-mode eta coefficients used by :func:`twomicro.wigner.eta_moments`, and
a classical function of (theta, eta) for the references.  Presets with a
nonzero ``perp`` index p oscillate across the lattice direction; their
average I_L(a) vanishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..lattice import PrimitiveLattice
from ..weyl import TwoMicroSymbol


class EtaProfile:
    """f(eta) of a preset: ``gauss`` exp(-eta^2/2R^2), ``eta_gauss`` eta exp(...),
    ``one`` 1, ``tail`` eta^2/(R^2 + eta^2)."""

    LIMITS = {"gauss": (0.0, 0.0), "eta_gauss": (0.0, 0.0), "one": (1.0, 1.0), "tail": (1.0, 1.0)}

    def __init__(self, kind: str, width: float):
        if kind not in self.LIMITS:
            raise ValueError(f"unknown eta profile {kind!r}")
        self.kind, self.width = kind, float(width)

    def __call__(self, eta):
        eta = np.asarray(eta, dtype=float)
        R = self.width
        if self.kind == "gauss":
            return np.exp(-eta ** 2 / (2 * R * R))
        if self.kind == "eta_gauss":
            return eta * np.exp(-eta ** 2 / (2 * R * R))
        if self.kind == "one":
            return np.ones_like(eta)
        return eta ** 2 / (R * R + eta ** 2)

    @property
    def limits(self):
        return self.LIMITS[self.kind]


class _Coef:
    def __init__(self, c: complex, f: EtaProfile):
        self.c, self.f = complex(c), f

    def __call__(self, eta):
        return self.c * self.f(eta)


class _ModeCoef(_Coef):
    def __call__(self, xi, eta):
        return self.c * self.f(eta)


def _key(n) -> tuple:
    return (int(n), 0) if isinstance(n, (int, np.integer)) else (int(n[0]), int(n[1]))


@dataclass(frozen=True)
class PendulumObservable:
    """``harmonics`` pairs a key with c: the key is n (mode n e) or (n, p)
    (mode n e + p e_perp)."""

    name: str
    harmonics: tuple
    profile: str
    description: str

    @property
    def lambda_mode(self) -> bool:
        """True when a depends on x only through <x, e>, so that I_L(a) = a."""
        return all(_key(n)[1] == 0 for n, _ in self.harmonics)

    @staticmethod
    def mode(lat: PrimitiveLattice, n) -> tuple:
        i, p = _key(n)
        e, f = lat.generator, lat.perp
        return (i * e[0] + p * f[0], i * e[1] + p * f[1])

    def eta_profile(self, width: float) -> EtaProfile:
        return EtaProfile(self.profile, width)

    @property
    def real(self) -> bool:
        h = {_key(n): complex(c) for n, c in self.harmonics}
        return all(abs(h.get((-i, -p), 0) - c.conjugate()) < 1e-15 for (i, p), c in h.items())

    def symbol(self, lat: PrimitiveLattice, width: float = 3.0) -> TwoMicroSymbol:
        f = self.eta_profile(width)
        lo, hi = f.limits
        modes = {self.mode(lat, n): _ModeCoef(c, f) for n, c in self.harmonics}
        limits = {self.mode(lat, n): (complex(c) * lo, complex(c) * hi) for n, c in self.harmonics}
        # the tail profile approaches its limit only algebraically
        cutoff = 1e3 if self.profile != "tail" else 1e9
        return TwoMicroSymbol(modes, limits, eta_cutoff=cutoff, real=self.real)

    def coefficients(self, lat: PrimitiveLattice, width: float = 3.0) -> dict:
        """Mode -> c f(eta), keyed as :func:`twomicro.wigner.eta_moments` expects."""
        f = self.eta_profile(width)
        if self.lambda_mode:
            return {_key(n)[0]: _Coef(c, f) for n, c in self.harmonics}
        return {self.mode(lat, n): _Coef(c, f) for n, c in self.harmonics}

    def classical(self, theta, eta, width: float = 3.0) -> np.ndarray:
        """a as a function of (theta, eta); defined for lambda-mode presets only."""
        if not self.lambda_mode:
            raise ValueError(f"{self.name} depends on x across the lattice direction")
        f = self.eta_profile(width)
        theta = np.asarray(theta, dtype=float)
        total = 0.0
        for n, c in self.harmonics:
            total = total + complex(c) * np.exp(2j * math.pi * _key(n)[0] * theta)
        out = total * f(eta)
        return np.real(out) if self.real else out


PRESETS = {
    "cos_theta": PendulumObservable("cos_theta", ((-1, 0.5), (1, 0.5)), "gauss",
                                    "cos(2 pi theta) exp(-eta^2/2R^2)"),
    "sin_theta": PendulumObservable("sin_theta", ((-1, 0.5j), (1, -0.5j)), "gauss",
                                    "sin(2 pi theta) exp(-eta^2/2R^2)"),
    "cos_2theta": PendulumObservable("cos_2theta", ((-2, 0.5), (2, 0.5)), "gauss",
                                     "cos(4 pi theta) exp(-eta^2/2R^2)"),
    "eta": PendulumObservable("eta", ((0, 1.0),), "eta_gauss", "eta exp(-eta^2/2R^2)"),
    "eta_window": PendulumObservable("eta_window", ((0, 1.0),), "gauss", "exp(-eta^2/2R^2)"),
    "cos_perp": PendulumObservable("cos_perp", (((0, -1), 0.5), ((0, 1), 0.5)), "gauss",
                                   "cos(2 pi <x, e_perp>) exp(-eta^2/2R^2), averages to 0"),
    "unit": PendulumObservable("unit", ((0, 1.0),), "one", "1 (amplitude for Fourier-mode tests)"),
    "tail": PendulumObservable("tail", ((0, 1.0),), "tail", "eta^2/(R^2 + eta^2), limit 1 at +-inf"),
}


def get(name: str) -> PendulumObservable:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown observable {name!r}; presets: {', '.join(PRESETS)}") from None


def listing() -> str:
    return "\n".join(f"{k:12s} {v.description}" for k, v in PRESETS.items())
