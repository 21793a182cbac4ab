"""Fourier modes of the two-micro distribution at eta = oo.

Packets start at eta0 = eps^p with p < 0, so |eta0| -> oo along the ladder.
For k in L - {0} the time-averaged modulus of <v(t), Op_h(e^{-2 i pi k.x} a) v(t)>
is recorded at tau eps >= 1 (verdict) and at a control scale tau eps < 1.
"""
from __future__ import annotations

import numpy as np

from ..quantum import HamiltonianSpec, StrangPropagator
from ..wigner import KNotInLambda, eta_moments
from . import observables as obs_mod
from .common import gate, make_packet, parallel_map
from .config import ConfigError, ExperimentConfig
from .report import ExperimentReport, Record, Verdict, regime_bookkeeping, strictly_decreasing

DEFAULT_ETA0_POWER = -0.5


def _amplitude(cfg: ExperimentConfig, lat):
    a = obs_mod.get(cfg.amplitude)
    keys = [k for k, _ in a.harmonics]
    if keys != [0]:
        raise ConfigError(f"amplitude {cfg.amplitude!r} must not depend on x")
    return a.coefficients(lat, cfg.eta_width)[0]


def _mode_series(cfg, hbar, rule, label):
    lat, V = cfg.lattice_obj, cfg.field()
    eps = cfg.eps(hbar)
    power = DEFAULT_ETA0_POWER if cfg.eta0_power is None else cfg.eta0_power
    eta0 = eps ** power
    u = make_packet(lat, V, cfg.x0, cfg.sigma, eta0, hbar, eps, cfg.box_margin)
    diag = [gate(u, f"{label} initial h={hbar!r}")]
    spec = HamiltonianSpec(hbar, eps, V, u.N)
    tau = rule.tau(hbar, eps)
    t = (np.arange(cfg.average_samples) + 0.5) / cfg.average_samples
    k = tuple(cfg.mode)
    key = (-k[0], -k[1])
    coef = {key: _amplitude(cfg, lat)}
    vals, last = [], u
    for v in StrangPropagator(spec).trajectory(u, t * tau, cfg.dt_factor / eps):
        vals.append(eta_moments(lat, v, eps, [key]).pair(coef))
        last = v
    diag.append(gate(last, f"{label} final h={hbar!r}"))
    vals = np.asarray(vals)
    book = dict(label=label, eta0=eta0, **regime_bookkeeping(hbar, eps, tau))
    return t, vals, diag, book, eps, tau


def run_infinity(cfg: ExperimentConfig) -> ExperimentReport:
    lat = cfg.lattice_obj
    k = tuple(cfg.mode)
    if k == (0, 0) or not lat.contains(k):
        raise KNotInLambda(f"mode {k} is not a nonzero element of {lat!r}")
    for h in cfg.hbar:
        eps = cfg.eps(h)
        if cfg.tau_infinity.tau(h, eps) * eps < 1 - 1e-12:
            raise ConfigError("the main run needs tau eps >= 1")
        if cfg.control_tau.tau(h, eps) * eps >= 1:
            raise ConfigError("the control run needs tau eps < 1")
    report = ExperimentReport("infinity", cfg.to_dict())
    for label, rule, report_only in (("infinity", cfg.tau_infinity, False),
                                     ("infinity_control", cfg.control_tau, True)):
        runs = parallel_map(lambda h: _mode_series(cfg, h, rule, label), list(cfg.hbar), cfg.workers)
        means, moduli_of_mean = [], []
        for h, (t, vals, diag, book, eps, tau) in zip(cfg.hbar, runs):
            report.records += [Record(h, eps, tau, float(tj), f"{label}_abs_mode", float(abs(v)), 0.0)
                               for tj, v in zip(t, vals)]
            report.diagnostics += diag
            report.bookkeeping.append(book)
            means.append(float(np.mean(np.abs(vals))))
            moduli_of_mean.append(float(abs(np.mean(vals))))
        note = "time average of |<v, Op(e^{-2 i pi k.x} a) v>| over [0, tau]"
        if report_only:
            note += "; control scale, no decay required"
        report.verdicts.append(Verdict(f"{label}:mean_abs", strictly_decreasing(means),
                                       {"values": means}, note, report_only))
        report.verdicts.append(Verdict(f"{label}:abs_mean", strictly_decreasing(moduli_of_mean),
                                       {"values": moduli_of_mean}, "modulus of the time average", True))
    return report
