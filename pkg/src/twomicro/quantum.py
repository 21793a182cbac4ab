"""States, the Hamiltonian -h^2 Lap/2 + eps^2 V, propagation and eigenpairs.

Everything lives on the frequency box |k|_inf <= N of :mod:`twomicro.weyl`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple

import numpy as np
import scipy.linalg

from .potential import FourierField
from .weyl import OperatorMatrix, TruncationTooSmall, box_index, box_modes, in_box

NORM_TOL = 1e-10
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class QuantumState:
    coefficients: np.ndarray
    hbar: float

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        side = int(round(math.sqrt(c.size)))
        if side * side != c.size or side % 2 == 0:
            raise ValueError("coefficient vector does not match a (2N+1)^2 box")
        norm = float(np.linalg.norm(c))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1 by more than {NORM_TOL}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def N(self) -> int:
        return (int(round(math.sqrt(self.coefficients.size))) - 1) // 2

    @classmethod
    def basis(cls, k, hbar: float, N: int) -> "QuantumState":
        c = np.zeros((2 * N + 1) ** 2, dtype=complex)
        c[box_index(N, np.asarray(k))] = 1.0
        return cls(c, hbar)

    def coefficient(self, k) -> complex:
        k = np.asarray(k)
        return complex(self.coefficients[box_index(self.N, k)]) if in_box(self.N, k) else 0j

    def grid_values(self, M: int) -> np.ndarray:
        """u(x) on the M x M grid x = (i, j)/M."""
        return M * M * np.fft.ifft2(embed(self.coefficients, self.N, M))

    def position_density(self, M: int) -> np.ndarray:
        return np.abs(self.grid_values(M)) ** 2

    def momentum_marginal(self) -> tuple[np.ndarray, np.ndarray]:
        """Frequencies xi = 2 pi h k of the box and their weights |u_k|^2."""
        return TWO_PI * self.hbar * box_modes(self.N), np.abs(self.coefficients) ** 2


def embed(coefficients: np.ndarray, N: int, M: int) -> np.ndarray:
    """Place box coefficients on an M x M FFT grid (M >= 2N + 1)."""
    grid = np.zeros((M, M), dtype=complex)
    ks = box_modes(N)
    grid[ks[:, 0] % M, ks[:, 1] % M] = coefficients
    return grid


def restrict(grid: np.ndarray, N: int) -> np.ndarray:
    M = grid.shape[0]
    ks = box_modes(N)
    return grid[ks[:, 0] % M, ks[:, 1] % M]


# ---------------------------------------------------------------------- hamiltonian

@dataclass(frozen=True)
class HamiltonianSpec:
    hbar: float
    eps: float
    V: FourierField
    N: int

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if not 0 <= self.eps <= 1:
            raise ValueError("eps must lie in [0, 1]")

    @classmethod
    def from_alpha(cls, hbar: float, alpha: float, V: FourierField, N: int) -> "HamiltonianSpec":
        if not 0 < alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        return cls(hbar, hbar ** alpha, V, N)

    @property
    def hbar_over_eps(self) -> float:
        return self.hbar / self.eps if self.eps > 0 else math.inf


def build_hamiltonian(spec: HamiltonianSpec) -> OperatorMatrix:
    if spec.V.support_bound > 2 * spec.N:
        raise TruncationTooSmall("potential modes exceed the box window")
    N = spec.N
    ks = box_modes(N)
    H = np.diag(2 * math.pi ** 2 * spec.hbar ** 2 * (ks ** 2).sum(axis=1)).astype(complex)
    for m, c in spec.V.terms:
        qs = ks + np.asarray(m)
        mask = in_box(N, qs)
        H[box_index(N, qs[mask]), box_index(N, ks[mask])] += spec.eps ** 2 * c
    return OperatorMatrix(N, spec.hbar, H)


def energy(spec: HamiltonianSpec, u: QuantumState) -> float:
    H = build_hamiltonian(spec).matrix
    return float(np.vdot(u.coefficients, H @ u.coefficients).real)


def _real_if_possible(H: np.ndarray) -> np.ndarray:
    return H.real.copy() if not np.any(H.imag) else H


@lru_cache(maxsize=4)
def _eigensystem(spec: HamiltonianSpec):
    H = _real_if_possible(build_hamiltonian(spec).matrix)
    w, U = np.linalg.eigh(H)
    return w, U


def _check_state(spec: HamiltonianSpec, u: QuantumState):
    if u.N != spec.N:
        raise ValueError(f"state box N={u.N} differs from the Hamiltonian box N={spec.N}")


def evolve_exact(spec: HamiltonianSpec, u: QuantumState, t: float) -> QuantumState:
    """e^{-itH/h} u through the cached eigendecomposition of H."""
    _check_state(spec, u)
    if t == 0:
        return u
    w, U = _eigensystem(spec)
    c = U.conj().T @ u.coefficients
    c = c * np.exp(-1j * t * w / spec.hbar)
    out = U @ c
    return QuantumState(out, spec.hbar)


# --------------------------------------------------------------------- split step

class StrangPropagator:
    """Kinetic-potential-kinetic splitting with exact phases in each factor.

    The potential factor acts on a collocation grid of size M >= 2(2N+1) and
    the result is projected back on the box; the projected mass is tracked and
    :class:`TruncationTooSmall` is raised once it exceeds the norm tolerance.
    """

    def __init__(self, spec: HamiltonianSpec, grid: int | None = None):
        self.spec = spec
        N = spec.N
        self.M = grid or 2 * (2 * N + 1)
        if self.M < 2 * N + 1 + spec.V.support_bound:
            raise ValueError("collocation grid too small for alias-free products")
        ks = box_modes(N)
        self._k2 = (ks ** 2).sum(axis=1).astype(float)
        x = np.arange(self.M) / self.M
        X = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
        self._Vx = spec.V.evaluate(X) if spec.V.terms else np.zeros((self.M, self.M))
        self._cache: dict = {}

    def _kinetic(self, c, tau):
        return c * np.exp(-1j * tau * 2 * math.pi ** 2 * self.spec.hbar * self._k2)

    def _potential(self, c, tau):
        key = round(tau, 15)
        phase = self._cache.get(key)
        if phase is None:
            phase = np.exp(-1j * tau * self.spec.eps ** 2 * self._Vx / self.spec.hbar)
            if len(self._cache) < 8:
                self._cache[key] = phase
        g = np.fft.ifft2(embed(c, self.spec.N, self.M))
        return restrict(np.fft.fft2(phase * g), self.spec.N)

    def advance(self, c: np.ndarray, t: float, dt: float) -> np.ndarray:
        if t == 0:
            return c
        n = int(math.floor(t / dt * (1 + 1e-12)))
        steps = [dt] * n
        rest = t - n * dt
        if rest > 1e-12 * t:
            steps.append(rest)
        c = self._kinetic(c, steps[0] / 2)
        for i, tau in enumerate(steps):
            c = self._potential(c, tau)
            half = tau / 2 + (steps[i + 1] / 2 if i + 1 < len(steps) else 0.0)
            c = self._kinetic(c, half)
        return c

    def trajectory(self, u: QuantumState, times: Iterable[float], dt: float) -> Iterator[QuantumState]:
        """States at increasing ``times`` (the first may be 0)."""
        _check_state(self.spec, u)
        c, now = u.coefficients, 0.0
        for t in times:
            if t < now:
                raise ValueError("times must be nondecreasing")
            c = self.advance(c, t - now, dt)
            now = t
            leak = abs(float(np.linalg.norm(c)) - 1.0)
            if leak > NORM_TOL:
                raise TruncationTooSmall(f"split-step state left the box (norm defect {leak:.2e})")
            yield QuantumState(c, self.spec.hbar)


def evolve_strang(spec: HamiltonianSpec, u: QuantumState, t: float, dt: float) -> QuantumState:
    return next(StrangPropagator(spec).trajectory(u, [t], dt))


# ------------------------------------------------------------------------ spectra

class Eigenpair(NamedTuple):
    energy: float
    state: QuantumState
    residual: float


def eigenpairs_near(spec: HamiltonianSpec, E: float, count: int) -> list[Eigenpair]:
    """The ``count`` eigenpairs of the dense H closest to E, sorted by |lambda - E|."""
    H = _real_if_possible(build_hamiltonian(spec).matrix)
    n = H.shape[0]
    count = min(count, n)
    w = scipy.linalg.eigvalsh(H)
    order = np.argsort(np.abs(w - E), kind="stable")[:count]
    lo, hi = int(order.min()), int(order.max())
    vals, vecs = scipy.linalg.eigh(H, subset_by_index=[lo, hi])
    out = []
    for j in range(len(vals)):
        if lo + j not in set(order.tolist()):
            continue
        v = vecs[:, j].astype(complex)
        v = v / np.linalg.norm(v)
        r = float(np.linalg.norm(H @ v - vals[j] * v))
        out.append(Eigenpair(float(vals[j]), QuantumState(v, spec.hbar), r))
    out.sort(key=lambda p: (abs(p.energy - E), p.energy))
    return out


def is_quasimode(pair: Eigenpair, spec: HamiltonianSpec, E: float = 0.5, c: float = 1.0) -> bool:
    """residual + |lambda - E| <= c h eps (threshold convention, reported)."""
    return pair.residual + abs(pair.energy - E) <= c * spec.hbar * spec.eps


# -------------------------------------------------------------------- diagnostics

class OscillationDiagnostics(NamedTuple):
    low_mass: float
    high_mass: float
    in_box_mass: float


def in_box_mass(u: QuantumState, margin: int = 0) -> float:
    """Mass on the inner box |k|_inf <= N - margin."""
    ks = box_modes(u.N)
    inner = np.max(np.abs(ks), axis=1) <= u.N - margin
    return float(np.sum(np.abs(u.coefficients[inner]) ** 2))


def oscillation_diagnostics(u: QuantumState, delta: float, R: float, margin: int = 0) -> OscillationDiagnostics:
    """Masses of 1_[0,delta](-h^2 Lap) u, 1_[R,inf)(-h^2 Lap) u and of the inner box."""
    ks = box_modes(u.N)
    lap = 4 * math.pi ** 2 * u.hbar ** 2 * (ks ** 2).sum(axis=1)
    p = np.abs(u.coefficients) ** 2
    return OscillationDiagnostics(float(p[lap <= delta].sum()), float(p[lap >= R].sum()),
                                  in_box_mass(u, margin))


def _gaussian_weights_1d(center: float, hbar: float, ks: np.ndarray) -> np.ndarray:
    return np.exp(-(TWO_PI * hbar * ks - center) ** 2 / hbar)


def gaussian_box_mass(xi0, hbar: float, N: int) -> float:
    """Fraction of the untruncated packet's mass inside the box."""
    frac = 1.0
    spread = int(math.ceil(12 * math.sqrt(hbar) / (TWO_PI * hbar))) + 2
    for c in xi0:
        centre = int(round(c / (TWO_PI * hbar)))
        wide = np.arange(min(-N, centre - spread) - 1, max(N, centre + spread) + 2)
        w = _gaussian_weights_1d(c, hbar, wide)
        frac *= float(w[np.abs(wide) <= N].sum() / w.sum())
    return frac


def wave_packet(x0, xi0, hbar: float, N: int) -> QuantumState:
    """Coefficients proportional to exp(-|2 pi h k - xi0|^2 / (2h)) e^{-2 i pi k.x0}."""
    xi0 = np.asarray(xi0, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if not np.linalg.norm(xi0) > 0:
        raise ValueError("xi0 must be nonzero")
    mass = gaussian_box_mass(xi0, hbar, N)
    if mass < 1 - 1e-8:
        raise TruncationTooSmall(f"packet mass in box {mass!r} < 1 - 1e-8")
    ks = box_modes(N)
    d = TWO_PI * hbar * ks - xi0
    logamp = -(d ** 2).sum(axis=1) / (2 * hbar)
    c = np.exp(logamp - logamp.max()) * np.exp(-1j * TWO_PI * (ks @ x0))
    return QuantumState(c / np.linalg.norm(c), hbar)


def expectation(u: QuantumState, A: OperatorMatrix) -> complex:
    return complex(np.vdot(u.coefficients, A.matrix @ u.coefficients))


# ------------------------------------------------------------------ serialization

def state_to_json(u: QuantumState) -> str:
    ks = box_modes(u.N)
    coeffs = [[int(k[0]), int(k[1]), float(c.real), float(c.imag)]
              for k, c in zip(ks, u.coefficients) if c != 0]
    return json.dumps({"hbar": u.hbar, "N": u.N, "coefficients": coeffs})


def state_from_json(text: str, max_correction: float = 1e-6) -> QuantumState:
    data = json.loads(text)
    N = int(data["N"])
    c = np.zeros((2 * N + 1) ** 2, dtype=complex)
    for k1, k2, re, im in data["coefficients"]:
        k = np.array([k1, k2])
        if not in_box(N, k):
            raise ValueError(f"frequency {(k1, k2)} outside the declared box N={N}")
        c[box_index(N, k)] += complex(re, im)
    norm = float(np.linalg.norm(c))
    if abs(norm - 1.0) > max_correction:
        raise ValueError(f"stored state has norm {norm!r}; renormalization would exceed {max_correction}")
    return QuantumState(c / norm, float(data["hbar"]))
