"""Where eigenfunction quasimodes at energy E concentrate.

Eigenpairs of the dense Hamiltonian with |lambda - E| + residual <= c h eps are
kept.  Their position mass is measured in tubes of radius r around every
critical closed geodesic of V (lattices with L <= max_norm) and around
noncritical control geodesics, against the flat value 2r.
"""
from __future__ import annotations

import math

import numpy as np

from ..potential import critical_geodesics, critical_set
from ..quantum import HamiltonianSpec, eigenpairs_near, is_quasimode
from ..wigner import circle_distance, density_coefficients, mass_in_tube
from .common import gate, parallel_map
from .config import ConfigError, ExperimentConfig
from .report import ExperimentReport, Record, Verdict

PROFILE_GRID = 1024


class NoQuasimodes(RuntimeError):
    pass


def quasimode_box(hbar: float, eps: float, energy: float, V) -> int:
    """Box covering |xi|^2/2 <= E + eps^2 sum |V_k| with six spare modes."""
    w = sum(abs(c) for _, c in V.terms)
    return int(math.ceil(math.sqrt(2 * (energy + eps * eps * w)) / (2 * math.pi * hbar))) + 6


def theta_profile(u, lat, n_grid: int = PROFILE_GRID) -> np.ndarray:
    """Density of theta = <x, e> mod 1 on the grid j/n_grid (exact Fourier sum)."""
    coef, M = density_coefficients(u)
    e = np.asarray(lat.generator)
    n_max = (2 * u.N) // max(abs(e[0]), abs(e[1]))
    th = np.arange(n_grid) / n_grid
    out = np.full(n_grid, coef[0, 0].real)
    for n in range(1, n_max + 1):
        c = coef[(n * e[0]) % M, (n * e[1]) % M]
        out += 2 * (c * np.exp(2j * math.pi * n * th)).real
    return out


def _tubes(cfg: ExperimentConfig, V):
    crit = [r for r in critical_set(V, cfg.max_norm) if not r.degenerate]
    tubes = [(f"critical_{r.lattice.generator[0]}_{r.lattice.generator[1]}_{p:.6g}", r.lattice, p, True)
             for r in crit for p in r.positions]
    lat = cfg.lattice_obj
    home = critical_geodesics(lat, V, allow_degenerate=True)
    for s in cfg.controls:
        if home.positions and min(float(circle_distance(s, p)) for p in home.positions) <= cfg.radius:
            raise ConfigError(f"control position {s} lies within {cfg.radius} of a critical geodesic")
        tubes.append((f"control_{s:.6g}", lat, float(s), False))
    return crit, home, tubes


def _rung(cfg: ExperimentConfig, hbar: float, V, tubes, home):
    eps = cfg.eps(hbar)
    N = quasimode_box(hbar, eps, cfg.energy, V)
    spec = HamiltonianSpec(hbar, eps, V, N)
    pairs = [p for p in eigenpairs_near(spec, cfg.energy, cfg.count)
             if is_quasimode(p, spec, cfg.energy, cfg.c)]
    if not pairs:
        raise NoQuasimodes(f"no eigenpair within c h eps = {cfg.c * hbar * eps:.3g} of E at h={hbar!r}")
    lat = cfg.lattice_obj
    baseline = 2 * cfg.radius
    states, diag, records = [], [], []
    for j, p in enumerate(pairs):
        diag.append(gate(p.state, f"quasimode h={hbar!r} state {j}"))
        masses = {name: mass_in_tube(p.state, tl, s, cfg.radius) for name, tl, s, _ in tubes}
        records += [Record(hbar, eps, math.nan, float(j), f"tube_{name}", m, baseline)
                    for name, m in masses.items()]
        prof = theta_profile(p.state, lat)
        peak = float(np.argmax(prof)) / len(prof)
        xi, w = p.state.momentum_marginal()
        along = np.abs(xi @ lat.e) / lat.length
        near = float(w[along <= cfg.marginal_width * eps].sum())
        states.append({"index": j, "energy": p.energy, "residual": p.residual,
                       "masses": masses, "peak_theta": peak, "marginal_near_perp": near,
                       "peak_to_critical": min((float(circle_distance(peak, c)) for c in home.positions),
                                               default=math.nan)})
    return {"hbar": hbar, "eps": eps, "N": N, "threshold": cfg.c * hbar * eps, "states": states,
            "diagnostics": diag, "records": records}


def run_quasimode(cfg: ExperimentConfig) -> ExperimentReport:
    V = cfg.field()
    crit, home, tubes = _tubes(cfg, V)
    report = ExperimentReport("quasimode", cfg.to_dict())
    report.extra["critical_set"] = [{"lattice": list(r.lattice.generator), "positions": list(r.positions),
                                     "kinds": list(r.kinds)} for r in crit]
    rungs = parallel_map(lambda h: _rung(cfg, h, V, tubes, home), list(cfg.hbar), cfg.workers)
    limit = 2 * cfg.radius * (1 + cfg.margin)
    worst_control, misplaced, excess, near_perp = [], [], 0, []
    for r in rungs:
        report.records += r["records"]
        report.diagnostics += r["diagnostics"]
        report.bookkeeping.append({"hbar": r["hbar"], "eps": r["eps"], "N": r["N"],
                                   "qualifying": len(r["states"]), "window": r["threshold"]})
        ctrl = [m for st in r["states"] for name, m in st["masses"].items() if name.startswith("control_")]
        worst_control.append(max(ctrl) / (2 * cfg.radius) if ctrl else math.nan)
        for st in r["states"]:
            if max(st["masses"].values()) > limit:
                excess += 1
                near_perp.append(st["marginal_near_perp"])
                if not st["peak_to_critical"] <= cfg.radius:
                    misplaced.append((r["hbar"], st["index"], st["peak_theta"]))
        report.extra[f"states_h={r['hbar']!r}"] = r["states"]
    if not crit:
        report.extra["note"] = "every direction is degenerate for this V; no verdict"
        return report
    report.verdicts.append(Verdict(
        "controls_within_margin", all(w <= 1 + cfg.margin for w in worst_control),
        {"worst_ratio": worst_control, "allowed_ratio": 1 + cfg.margin},
        "control tube mass / 2r over qualifying states"))
    report.verdicts.append(Verdict(
        "excess_at_critical", not misplaced, {"excess_states": excess, "misplaced": misplaced},
        "states with a tube above 2r(1 + margin) peak within r of a critical geodesic"))
    report.verdicts.append(Verdict(
        "marginal_near_perp", all(v >= 0.5 for v in near_perp), {"fractions": near_perp},
        "momentum mass with |<xi, e>|/L <= width eps for concentrated states", report_only=True))
    return report
