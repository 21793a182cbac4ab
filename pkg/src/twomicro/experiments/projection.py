"""Projections of Liouville tori of (H_L^perp, p_L) to the torus.

The invariant torus through a regular base point is sampled on a uniform
(s, t) grid, histogrammed at two resolutions and compared away from the
caustics, where the projected density is bounded.  The mass of shrinking
tubes around a single closed geodesic tends to zero.
"""
from __future__ import annotations

import numpy as np

from ..classical import (FlowSpec, TwoMicroPoint, caustic_times, integrate_pendulum, project_density,
                         sample_invariant_torus, theta_of)
from ..wigner import circle_distance
from .config import ExperimentConfig
from .report import ExperimentReport, Verdict, strictly_decreasing


def base_point(cfg: ExperimentConfig) -> TwoMicroPoint:
    """cfg.x0 moved along e so that <x, e> = theta0."""
    lat = cfg.lattice_obj
    x0 = np.asarray(cfg.x0, dtype=float)
    x = x0 + (cfg.theta0 - float(x0 @ lat.e)) * lat.e / lat.length ** 2
    return TwoMicroPoint(x, np.asarray(cfg.sigma, dtype=float), np.asarray(cfg.eta0, dtype=float))


def away_mask(lat, M: int, caustics, band: float) -> np.ndarray:
    """Cells whose whole theta-range keeps a distance >= band from every caustic."""
    c = (np.arange(M) + 0.5) / M
    X1, X2 = np.meshgrid(c, c, indexing="ij")
    theta = np.mod(X1 * lat.generator[0] + X2 * lat.generator[1], 1.0)
    half = 0.5 * (abs(lat.generator[0]) + abs(lat.generator[1])) / M
    mask = np.ones((M, M), dtype=bool)
    for t in caustics:
        mask &= circle_distance(theta, t) - half >= band
    return mask


def histogram_csv(hist: np.ndarray) -> str:
    M1, M2 = hist.shape
    lines = ["i,j,x1,x2,mass"]
    for i in range(M1):
        for j in range(M2):
            lines.append(f"{i},{j},{(i + 0.5) / M1!r},{(j + 0.5) / M2!r},{float(hist[i, j])!r}")
    return "\n".join(lines) + "\n"


def run_projection(cfg: ExperimentConfig) -> ExperimentReport:
    lat, V = cfg.lattice_obj, cfg.field()
    flow = FlowSpec.from_potential(lat, V)
    p0 = base_point(cfg)
    sample = sample_invariant_torus(flow, p0, cfg.n_s, cfg.n_t)
    T = sample.period
    times = caustic_times(flow, p0, T)
    theta0 = float(theta_of(lat, p0.x))
    caustics = []
    # the return near t = T repeats t = 0
    for t in times:
        c = float(integrate_pendulum(flow, theta0, float(p0.eta), t)[0]) % 1.0
        if all(float(circle_distance(c, d)) > 1e-6 for d in caustics):
            caustics.append(c)
    caustics.sort()
    report = ExperimentReport("projection", cfg.to_dict())
    report.extra.update({"period": T, "caustic_times": times, "caustic_theta": caustics})

    sups = []
    for M in cfg.grids:
        hist = project_density(sample.points, M)
        density = hist * M * M
        mask = away_mask(lat, M, caustics, cfg.caustic_band)
        sups.append(float(density[mask].max()) if mask.any() else float("nan"))
        report.extra_csv[f"projection_hist_{M}"] = histogram_csv(hist)
        report.extra[f"sup_density_{M}"] = float(density.max())
    ratios = [b / a for a, b in zip(sups, sups[1:])]
    lo, hi = cfg.refinement_band
    report.verdicts.append(Verdict(
        "density_stable", bool(ratios) and all(lo <= r <= hi for r in ratios),
        {"sup_away": sups, "ratios": ratios, "band": [lo, hi]},
        f"sup of the density at distance >= {cfg.caustic_band} from the caustics"))

    if caustics:
        M = max(cfg.grids)
        th = sample.points.x.reshape(-1, 2) @ lat.generator
        marg, _ = np.histogram(np.mod(th, 1.0), bins=M, range=(0.0, 1.0))
        peak = (np.argmax(marg) + 0.5) / M
        gap = min(float(circle_distance(peak, c)) for c in caustics)
        report.verdicts.append(Verdict(
            "caustics_located", gap <= 1.0 / M, {"peak_theta": peak, "distance": gap},
            "peak of the theta marginal sits on a caustic projection"))

    # a geodesic crossed at a quarter period
    theta_q = float(integrate_pendulum(flow, theta0, float(p0.eta), T / 4)[0]) % 1.0
    th = np.mod(sample.points.x.reshape(-1, 2) @ lat.generator, 1.0)
    masses = [float(np.mean(circle_distance(th, theta_q) < r)) for r in cfg.radii]
    report.verdicts.append(Verdict(
        "tube_mass_decreasing", list(cfg.radii) == sorted(cfg.radii, reverse=True) and strictly_decreasing(masses),
        {"geodesic_theta": theta_q, "radii": list(cfg.radii), "masses": masses},
        "mass of the tube of radius r around one closed geodesic"))
    return report
