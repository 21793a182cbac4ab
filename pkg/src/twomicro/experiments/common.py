"""Shared pieces of the experiment runners: packets, boxes, gates, parallel maps."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable

import numpy as np

from ..lattice import PrimitiveLattice
from ..potential import FourierField
from ..quantum import QuantumState, oscillation_diagnostics, wave_packet
from .report import DiagnosticsFailed

TWO_PI = 2.0 * math.pi

# gates on -h^2 Lap: no mass below DELTA or above R_HIGH, and no mass on the
# outer IN_BOX_MARGIN shells of the box
DELTA = 0.1
R_HIGH = 4.0
SPECTRAL_TOL = 1e-6
IN_BOX_MIN = 1 - 1e-8
IN_BOX_MARGIN = 2


def packet_momentum(lat: PrimitiveLattice, sigma: float, eps: float, eta0: float) -> np.ndarray:
    """xi0 = sigma e_perp/L + eps eta0 e/L."""
    return (sigma * lat.e_perp + eps * eta0 * lat.e) / lat.length


def box_size(lat: PrimitiveLattice, V: FourierField, hbar: float, eps: float, xi0,
             margin: float = 8.0) -> int:
    """Half-width N covering the packet, its pendulum excursion and ``margin`` widths.

    The packet has momentum width sqrt(h/2), i.e. 1/(2 pi sqrt(2h)) lattice
    steps; the pendulum moves eps eta by at most eps (2 sqrt(2 w) + 3), where
    w = sum |V_k| over k != 0 bounds the oscillation of every average of V.
    """
    w_max = sum(abs(c) for k, c in V.terms if tuple(k) != (0, 0))
    reach = float(np.max(np.abs(xi0))) + eps * (2 * math.sqrt(2 * w_max) + 3)
    return int(math.ceil(reach / (TWO_PI * hbar) + margin / (TWO_PI * math.sqrt(2 * hbar)) + 2))


def make_packet(lat: PrimitiveLattice, V: FourierField, x0, sigma: float, eta0: float, hbar: float,
                eps: float, margin: float = 8.0) -> QuantumState:
    xi0 = packet_momentum(lat, sigma, eps, eta0)
    N = box_size(lat, V, hbar, eps, xi0, margin)
    return wave_packet(x0, xi0, hbar, N)


def gate(u: QuantumState, label: str) -> dict:
    """Oscillation and in-box diagnostics; raises DiagnosticsFailed on a violation."""
    d = oscillation_diagnostics(u, DELTA, R_HIGH, IN_BOX_MARGIN)
    out = {"label": label, "hbar": u.hbar, "N": u.N, "low_mass": d.low_mass, "high_mass": d.high_mass,
           "in_box_mass": d.in_box_mass, "in_box_margin": IN_BOX_MARGIN, "delta": DELTA, "R": R_HIGH}
    bad = []
    if d.low_mass > SPECTRAL_TOL:
        bad.append(f"low-frequency mass {d.low_mass:.3g}")
    if d.high_mass > SPECTRAL_TOL:
        bad.append(f"high-frequency mass {d.high_mass:.3g}")
    if d.in_box_mass < IN_BOX_MIN:
        bad.append(f"in-box mass {d.in_box_mass!r}")
    if bad:
        raise DiagnosticsFailed(f"{label}: " + ", ".join(bad))
    return out


def parallel_map(fn: Callable, items: Iterable, workers: int = 1) -> list:
    """Ordered map; threads when workers > 1 (numpy releases the GIL in its kernels)."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def gauss_hermite_2d(n: int):
    """Nodes z and weights w (summing to 1) of an n x n product rule for N(0, 1)^2."""
    z, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / w.sum()
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    return Z1.ravel(), Z2.ravel(), np.outer(w, w).ravel()
