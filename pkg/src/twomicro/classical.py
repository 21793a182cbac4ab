"""Classical flows of H_L^perp and p_L = eta^2/2 + I_L(V), Liouville tori and caustics.

Points are written in the coordinates (x, sigma, eta): sigma is the value of
H_L^perp and eta the rescaled H_L.  The averaged potential is a 1-periodic
function W of theta = <x, e> mod 1.  Along the vector field
eta (e/L).d_x - (e/L).grad I_L(V) d_eta the pair (theta, eta) obeys

    theta' = L eta,   eta' = -L W'(theta),

a pendulum with Hamiltonian L p_L.  For L = 1 this is the usual
s' = eta, eta' = -W'(s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lattice import PrimitiveLattice
from .potential import FourierField, Profile

TWO_PI = 2.0 * math.pi
INTEGRATORS = ("verlet", "rk4")


class CriticalPoint(ValueError):
    pass


class NonperiodicOrbit(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TwoMicroPoint:
    """(x, sigma e_perp/L, eta); fields may be arrays with a common batch shape."""

    x: np.ndarray
    sigma: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        x = np.mod(np.asarray(self.x, dtype=float), 1.0)
        sigma = np.asarray(self.sigma, dtype=float)
        eta = np.asarray(self.eta, dtype=float)
        if x.shape[-1] != 2:
            raise ValueError("x needs a trailing axis of length 2")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(sigma)) and np.all(np.isfinite(eta))):
            raise ValueError("non-finite coordinates")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "eta", eta)

    def __len__(self) -> int:
        return int(np.prod(self.eta.shape)) if self.eta.shape else 1

    def xi(self, lat: PrimitiveLattice, eps: float) -> np.ndarray:
        """Momentum sigma e_perp/L + eps eta e/L."""
        return (self.sigma[..., None] * lat.e_perp + eps * self.eta[..., None] * lat.e) / lat.length


@dataclass(frozen=True)
class FlowSpec:
    lattice: PrimitiveLattice
    W: Profile
    dt: float = 0.0
    integrator: str = "verlet"

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.dt == 0.0:
            object.__setattr__(self, "dt", default_dt(self.lattice, self.W))
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @classmethod
    def from_potential(cls, lat: PrimitiveLattice, V: FourierField, dt: float = 0.0,
                       integrator: str = "verlet") -> "FlowSpec":
        return cls(lat, Profile.from_field(lat, V), dt, integrator)

    @property
    def L(self) -> float:
        return self.lattice.length


def default_dt(lat: PrimitiveLattice, W: Profile) -> float:
    w2 = W.max_abs_second_derivative()
    if w2 == 0:
        return 1e-3
    return 1e-3 * min(1.0, TWO_PI / (lat.length * math.sqrt(w2)))


def theta_of(lat: PrimitiveLattice, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.mod(x[..., 0] * lat.generator[0] + x[..., 1] * lat.generator[1], 1.0)


# ------------------------------------------------------------------ observables

def p_lambda(spec: FlowSpec, p: TwoMicroPoint) -> np.ndarray:
    return 0.5 * p.eta ** 2 + spec.W(theta_of(spec.lattice, p.x))


def moment_map(spec: FlowSpec, p: TwoMicroPoint) -> tuple[np.ndarray, np.ndarray]:
    return p.sigma, p_lambda(spec, p)


def _critical(spec: FlowSpec, theta, eta, tol: float = 1e-12):
    scale = max(1.0, float(sum(abs(c) * TWO_PI * abs(n) for n, c in spec.W.coeffs)))
    w1 = spec.W.derivative(theta, 1)
    return (np.abs(eta) <= tol) & (np.abs(w1) <= tol * scale)


def is_critical(spec: FlowSpec, p: TwoMicroPoint, tol: float = 1e-12) -> np.ndarray:
    """eta = 0 and W'(theta) = 0, i.e. a point of Crit_L(V)."""
    return _critical(spec, theta_of(spec.lattice, p.x), p.eta, tol)


# ------------------------------------------------------------------------ flows

def perp_flow(lat: PrimitiveLattice, p: TwoMicroPoint, s) -> TwoMicroPoint:
    """Translation by s e_perp / L; period L."""
    s = np.asarray(s, dtype=float)
    return TwoMicroPoint(p.x + s[..., None] * lat.e_perp / lat.length, p.sigma, p.eta)


def _force(spec: FlowSpec, theta):
    return -spec.L * spec.W.derivative(theta, 1)


def _step(spec: FlowSpec, theta, eta, h, integrator: Optional[str] = None):
    L = spec.L
    if (integrator or spec.integrator) == "verlet":
        eta = eta + 0.5 * h * _force(spec, theta)
        theta = theta + h * L * eta
        eta = eta + 0.5 * h * _force(spec, theta)
        return theta, eta

    def f(th, et):
        return L * et, _force(spec, th)

    k1 = f(theta, eta)
    k2 = f(theta + 0.5 * h * k1[0], eta + 0.5 * h * k1[1])
    k3 = f(theta + 0.5 * h * k2[0], eta + 0.5 * h * k2[1])
    k4 = f(theta + h * k3[0], eta + h * k3[1])
    return (theta + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            eta + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


def integrate_pendulum(spec: FlowSpec, theta0, eta0, t: float, dt: Optional[float] = None,
                       integrator: Optional[str] = None):
    """(theta(t), eta(t)) with theta unwrapped; n = ceil(|t|/dt) equal steps."""
    dt = dt or spec.dt
    theta, eta = np.asarray(theta0, dtype=float), np.asarray(eta0, dtype=float)
    if t == 0:
        return theta.copy(), eta.copy()
    n = max(1, int(math.ceil(abs(t) / dt - 1e-9)))
    h = t / n
    for _ in range(n):
        theta, eta = _step(spec, theta, eta, h, integrator)
    return theta, eta


def flow_p_lambda(spec: FlowSpec, p: TwoMicroPoint, t: float, dt: Optional[float] = None,
                  integrator: Optional[str] = None) -> TwoMicroPoint:
    """Time-t map of p_L; x moves along e by the change of theta (divided by L^2).

    Points of Crit_L(V) are equilibria and are returned unchanged.
    """
    lat = spec.lattice
    theta0 = theta_of(lat, p.x)
    theta, eta = integrate_pendulum(spec, theta0, p.eta, t, dt, integrator)
    fixed = _critical(spec, theta0, p.eta)
    theta = np.where(fixed, theta0, theta)
    eta = np.where(fixed, p.eta, eta)
    x = p.x + (theta - theta0)[..., None] * lat.e / lat.length ** 2
    return TwoMicroPoint(x, p.sigma, eta)


# ------------------------------------------------------------------------ tori

def _section(spec: FlowSpec, theta0: float, eta0: float):
    """Return-map function for the orbit through (theta0, eta0) and its sign."""
    if eta0 != 0.0:
        direction = math.copysign(1.0, eta0)
        # theta - theta0 crossing an integer in the direction of motion

        def g(th, et):
            return direction * (th - theta0)
        return g, "theta"
    direction = math.copysign(1.0, float(_force(spec, theta0)))

    def g(th, et):
        return direction * et
    return g, "eta"


def orbit_period(spec: FlowSpec, theta0: float, eta0: float, horizon: float = 1e3,
                 tol: float = 1e-8, dt: Optional[float] = None) -> float:
    """First return time to the starting point, located on a Poincare section.

    The orbit is integrated with RK4; the crossing is bracketed on the step
    grid and refined by bisection on the partial step.
    """
    if _critical(spec, theta0, eta0):
        raise CriticalPoint("the orbit through a critical point is an equilibrium")
    h = dt or min(spec.dt, 1e-3)
    g, kind = _section(spec, theta0, eta0)
    energy0 = 0.5 * eta0 ** 2 + float(spec.W(theta0))
    th, et, t = float(theta0), float(eta0), 0.0
    for i in range(int(math.ceil(horizon / h))):
        th1, et1 = _step(spec, th, et, h, "rk4")
        a, b = g(th, et), g(th1, et1)
        # upward crossing of an integer level (theta section) or of zero (eta section)
        level = float(math.floor(b)) if kind == "theta" else 0.0
        if i > 0 and a < level <= b:
            lo, hi = 0.0, h
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if g(*_step(spec, th, et, mid, "rk4")) < level:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-15:
                    break
            tm, em = _step(spec, th, et, 0.5 * (lo + hi), "rk4")
            dth = (tm - theta0) - round(tm - theta0)
            # accept only a genuine return to the initial point
            if abs(dth) <= tol and abs(em - eta0) <= tol * max(1.0, abs(eta0)):
                return t + 0.5 * (lo + hi)
        th, et, t = th1, et1, t + h
        if abs(0.5 * et ** 2 + float(spec.W(th)) - energy0) > 1e-6 * max(1.0, abs(energy0)):
            raise NonperiodicOrbit("energy drift during period search (step too large)")
    raise NonperiodicOrbit(f"no return within horizon {horizon}")


@dataclass(frozen=True, eq=False)
class TorusSample:
    points: TwoMicroPoint
    period: float
    n_s: int
    n_t: int


def sample_invariant_torus(spec: FlowSpec, p0: TwoMicroPoint, n_s: int, n_t: int,
                           horizon: float = 1e3) -> TorusSample:
    """Points phi_perp^{s_i} phi_{p_L}^{t_j}(p0), s_i = i L/n_s, t_j = j T/n_t."""
    lat = spec.lattice
    theta0 = float(theta_of(lat, p0.x))
    eta0 = float(p0.eta)
    if bool(is_critical(spec, p0)):
        raise CriticalPoint("base point lies in Crit_L(V)")
    T = orbit_period(spec, theta0, eta0, horizon)
    sub = max(1, int(math.ceil(T / n_t / spec.dt)))
    h = T / (n_t * sub)
    thetas, etas = np.empty(n_t), np.empty(n_t)
    th, et = theta0, eta0
    for j in range(n_t):
        thetas[j], etas[j] = th, et
        for _ in range(sub):
            th, et = _step(spec, th, et, h)
    x_t = p0.x + (thetas - theta0)[:, None] * lat.e / lat.length ** 2
    s = np.arange(n_s) * lat.length / n_s
    x = x_t[None, :, :] + s[:, None, None] * lat.e_perp / lat.length
    pts = TwoMicroPoint(x.reshape(-1, 2), np.full(n_s * n_t, float(p0.sigma)), np.tile(etas, n_s))
    return TorusSample(pts, T, n_s, n_t)


def caustic_times(spec: FlowSpec, p0: TwoMicroPoint, horizon: float,
                  dt: Optional[float] = None) -> list[float]:
    """Roots of eta(t) in [0, horizon]: sign changes on the step grid, then bisection."""
    if bool(is_critical(spec, p0)):
        raise CriticalPoint("base point lies in Crit_L(V)")
    h = dt or spec.dt
    n = int(math.ceil(horizon / h))
    h = horizon / n
    th, et = float(theta_of(spec.lattice, p0.x)), float(p0.eta)
    roots = []
    if et == 0.0:
        roots.append(0.0)
    for i in range(n):
        th1, et1 = _step(spec, th, et, h)
        if et != 0.0 and (et1 == 0.0 or et * et1 < 0):
            lo, hi = 0.0, h
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                _, em = _step(spec, th, et, mid)
                if em * et > 0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-15:
                    break
            roots.append(i * h + 0.5 * (lo + hi))
        th, et = th1, et1
    return roots


# ------------------------------------------------------------------ projections

MIN_SAMPLES = 10_000


def project_density(points: TwoMicroPoint, M: int) -> np.ndarray:
    """Cell masses of the x-coordinates on an M x M grid (sums to 1)."""
    x = points.x.reshape(-1, 2)
    if len(x) < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {len(x)}")
    H, _, _ = np.histogram2d(x[:, 0], x[:, 1], bins=M, range=[[0, 1], [0, 1]])
    return H / H.sum()


def write_trajectory_csv(path, times, points: TwoMicroPoint, meta: dict):
    with open(path, "w") as fh:
        for key, val in meta.items():
            fh.write(f"# {key}={val!r}\n")
        fh.write("t,x1,x2,sigma,eta\n")
        x = points.x.reshape(-1, 2)
        sig = np.broadcast_to(points.sigma, points.eta.shape).reshape(-1)
        for t, xi, s, e in zip(times, x, sig, points.eta.reshape(-1)):
            fh.write(f"{float(t)!r},{float(xi[0])!r},{float(xi[1])!r},{float(s)!r},{float(e)!r}\n")


def write_histogram_csv(path, hist: np.ndarray, meta: dict):
    M1, M2 = hist.shape
    with open(path, "w") as fh:
        for key, val in meta.items():
            fh.write(f"# {key}={val!r}\n")
        fh.write("i,j,x1,x2,mass\n")
        for i in range(M1):
            for j in range(M2):
                fh.write(f"{i},{j},{(i + 0.5) / M1!r},{(j + 0.5) / M2!r},{float(hist[i, j])!r}\n")
