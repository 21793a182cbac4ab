"""Two-microlocal propagation at the three time-scale regimes.

Regime 1 (tau eps -> 0): the two-micro observable stays at its initial value.
Regime 2 (tau eps = c): it follows the pendulum flow of p_L started from the
initial distribution.  Regime 3 (tau eps -> oo): the time-averaged
distribution is invariant under that flow.

Pendulum observables only depend on x through theta = <x, e>, so their
quantum values are read off :func:`twomicro.wigner.eta_moments`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..classical import FlowSpec, integrate_pendulum, orbit_period
from ..quantum import HamiltonianSpec, StrangPropagator
from ..wigner import eta_moments
from . import observables as obs_mod
from .common import gate, gauss_hermite_2d, make_packet, parallel_map
from .config import ConfigError, ExperimentConfig
from .report import ExperimentReport, Record, Verdict, regime_bookkeeping, strictly_decreasing

RANGE_FRACTION = 0.1
REFERENCE_NODES = 40
# tabulation of a o phi^s for regime 3
TAB_THETA = 256
TAB_ETA_MAX = 10.0
TAB_ETA = 1601
TAB_HARMONICS = 40
TAB_DT = 4e-3


class _Interp:
    """Complex piecewise-linear interpolation in eta, constant beyond the grid."""

    def __init__(self, grid, values):
        self.grid, self.re, self.im = grid, np.ascontiguousarray(values.real), np.ascontiguousarray(values.imag)

    def __call__(self, eta):
        return np.interp(eta, self.grid, self.re) + 1j * np.interp(eta, self.grid, self.im)


def hann_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints t_j = (j + 1/2)/n of [0, 1] and weights proportional to sin^2(pi t_j)."""
    t = (np.arange(n) + 0.5) / n
    w = np.sin(math.pi * t) ** 2
    return t, w / w.sum()


def transported_coefficients(flow: FlowSpec, observables, s_values, width: float,
                             n_theta: int = TAB_THETA, eta_max: float = TAB_ETA_MAX,
                             n_eta: int = TAB_ETA, n_harm: int = TAB_HARMONICS,
                             dt: float = TAB_DT) -> dict:
    """For each observable and each s, the theta-harmonics of a o phi^s as functions of eta.

    The flow is integrated once on a (theta, eta) grid; each a o phi^s is
    Fourier transformed in theta and truncated to |n| <= n_harm.
    """
    theta = np.arange(n_theta) / n_theta
    eta = np.linspace(-eta_max, eta_max, n_eta)
    TH, ET = np.meshgrid(theta, eta, indexing="ij")
    out = {o.name: [] for o in observables}
    th, et, s_prev = TH, ET, 0.0
    for s in s_values:
        th, et = integrate_pendulum(flow, th, et, float(s) - s_prev, dt=dt)
        s_prev = float(s)
        for o in observables:
            C = np.fft.fft(o.classical(th, et, width), axis=0) / n_theta
            out[o.name].append({n: _Interp(eta, C[n % n_theta]) for n in range(-n_harm, n_harm + 1)})
    return out


@dataclass
class _Rung:
    hbar: float
    eps: float
    records: list
    diagnostics: list
    bookkeeping: list
    errors: dict


def _check_time_scales(cfg: ExperimentConfig):
    for regime in cfg.regimes:
        if regime not in (1, 2, 3):
            raise ConfigError(f"unknown regime {regime}")
        rule = getattr(cfg, f"tau{regime}")
        te = [rule.tau(h, cfg.eps(h)) * cfg.eps(h) for h in cfg.hbar]
        if regime == 1 and not (te[0] < 1 and strictly_decreasing(te)):
            raise ConfigError(f"regime 1 needs tau eps < 1 decreasing to 0, got {te}")
        if regime == 2 and max(te) - min(te) > 1e-9 * max(te):
            raise ConfigError(f"regime 2 needs tau eps constant, got {te}")
        if regime == 3 and not (te[0] > 1 and strictly_decreasing(te[::-1])):
            raise ConfigError(f"regime 3 needs tau eps > 1 increasing to infinity, got {te}")


def _setup(cfg: ExperimentConfig, hbar: float):
    lat, V = cfg.lattice_obj, cfg.field()
    eps = cfg.eps(hbar)
    u = make_packet(lat, V, cfg.x0, cfg.sigma, cfg.eta0, hbar, eps, cfg.box_margin)
    spec = HamiltonianSpec(hbar, eps, V, u.N)
    return lat, V, eps, u, spec


def _evolve_moments(spec, u, times, dt, lat, harmonics, label):
    """eta_moments at each time, plus the gate record of the final state."""
    moments, last = [], u
    for v in StrangPropagator(spec).trajectory(u, times, dt):
        moments.append(eta_moments(lat, v, spec.eps, harmonics))
        last = v
    return moments, gate(last, label)


def _harmonics_of(observables, lat) -> list:
    keys = set()
    for o in observables:
        keys.update(o.coefficients(lat).keys())
    return sorted(keys, key=lambda k: (isinstance(k, tuple), k))


def _regime1(cfg, hbar, observables):
    lat, V, eps, u, spec = _setup(cfg, hbar)
    diag = [gate(u, f"regime1 initial h={hbar!r}")]
    tau = cfg.tau1.tau(hbar, eps)
    t = np.linspace(0.0, 1.0, cfg.samples)
    coefs = {o.name: o.coefficients(lat, cfg.eta_width) for o in observables}
    harm = _harmonics_of(observables, lat)
    m0 = eta_moments(lat, u, eps, harm)
    moments, g = _evolve_moments(spec, u, t * tau, cfg.dt_factor / eps, lat, harm,
                                 f"regime1 final h={hbar!r}")
    diag.append(g)
    records, errors = [], {}
    for o in observables:
        # I_L(a) = a for lambda-mode observables and 0 otherwise
        ref = m0.pair(coefs[o.name]).real if o.lambda_mode else 0.0
        q = [m.pair(coefs[o.name]).real for m in moments]
        records += [Record(hbar, eps, tau, float(tj), f"regime1_{o.name}", qv, ref) for tj, qv in zip(t, q)]
        errors[o.name] = float(np.max(np.abs(np.asarray(q) - ref)))
    return _Rung(hbar, eps, records, diag, [dict(regime=1, **regime_bookkeeping(hbar, eps, tau))], errors)


def _reference_ensemble(cfg, lat, hbar, eps):
    """Gauss-Hermite nodes of the initial Wigner distribution in (theta, eta)."""
    z1, z2, w = gauss_hermite_2d(REFERENCE_NODES)
    theta0 = float(np.dot(cfg.x0, lat.generator))
    theta = theta0 + lat.length * math.sqrt(hbar / 2) * z1
    eta = cfg.eta0 + math.sqrt(hbar / 2) / eps * z2
    return theta, eta, w


def _regime2(cfg, hbar, observables, flow):
    lat, V, eps, u, spec = _setup(cfg, hbar)
    diag = [gate(u, f"regime2 initial h={hbar!r}")]
    tau = cfg.tau2.tau(hbar, eps)
    t = np.linspace(0.0, cfg.window, cfg.samples)
    coefs = {o.name: o.coefficients(lat, cfg.eta_width) for o in observables}
    harm = _harmonics_of(observables, lat)
    moments, g = _evolve_moments(spec, u, t * tau, cfg.dt_factor / eps, lat, harm,
                                 f"regime2 final h={hbar!r}")
    diag.append(g)
    th, et, w = _reference_ensemble(cfg, lat, hbar, eps)
    traj, t_prev = [], 0.0
    for tj in t:
        th, et = integrate_pendulum(flow, th, et, (tj - t_prev) * tau * eps)
        t_prev = tj
        traj.append((th, et))
    records, errors = [], {}
    for o in observables:
        q = np.array([m.pair(coefs[o.name]).real for m in moments])
        r = np.array([float(np.dot(w, o.classical(a, b, cfg.eta_width))) for a, b in traj])
        records += [Record(hbar, eps, tau, float(tj), f"regime2_{o.name}", qv, rv)
                    for tj, qv, rv in zip(t, q, r)]
        errors[o.name] = (float(np.max(np.abs(q - r))), float(np.ptp(r)))
    return _Rung(hbar, eps, records, diag, [dict(regime=2, **regime_bookkeeping(hbar, eps, tau))], errors)


def _regime3(cfg, hbar, observables, s_values, tables):
    lat, V, eps, u, spec = _setup(cfg, hbar)
    diag = [gate(u, f"regime3 initial h={hbar!r}")]
    tau = cfg.tau3.tau(hbar, eps)
    t, wts = hann_weights(cfg.average_samples)
    harm = list(range(-TAB_HARMONICS, TAB_HARMONICS + 1))
    acc = {(o.name, i): 0.0 for o in observables for i in range(len(s_values))}
    last = u
    for wj, v in zip(wts, StrangPropagator(spec).trajectory(u, t * tau, cfg.dt_factor / eps)):
        m = eta_moments(lat, v, eps, harm)
        for o in observables:
            for i, tab in enumerate(tables[o.name]):
                acc[(o.name, i)] += wj * m.pair(tab).real
        last = v
    diag.append(gate(last, f"regime3 final h={hbar!r}"))
    records, errors = [], {}
    for o in observables:
        ref = acc[(o.name, 0)]
        vals = [acc[(o.name, i)] for i in range(len(s_values))]
        records += [Record(hbar, eps, tau, float(s), f"regime3_{o.name}", qv, ref)
                    for s, qv in zip(s_values, vals)]
        errors[o.name] = float(max(abs(qv - ref) for qv in vals))
    return _Rung(hbar, eps, records, diag, [dict(regime=3, **regime_bookkeeping(hbar, eps, tau))], errors)


def _classical_invariance(cfg, flow, lat, hbar, eps, observables, s_values):
    """The regime-3 statistic for the transported initial ensemble (no quantum effects)."""
    th0, et0, w = _reference_ensemble(cfg, lat, hbar, eps)
    starts = [integrate_pendulum(flow, th0, et0, float(s)) for s in s_values]
    th = np.stack([a for a, _ in starts])
    et = np.stack([b for _, b in starts])
    t, wts = hann_weights(cfg.average_samples)
    time_scale = cfg.tau3.tau(hbar, eps) * eps
    acc = {o.name: np.zeros(len(s_values)) for o in observables}
    t_prev = 0.0
    for tj, wj in zip(t, wts):
        th, et = integrate_pendulum(flow, th, et, (tj - t_prev) * time_scale)
        t_prev = tj
        for o in observables:
            acc[o.name] += wj * (o.classical(th, et, cfg.eta_width) @ w)
    return {k: float(np.max(np.abs(v - v[0]))) for k, v in acc.items()}


def _trend(name, errors, report_only, note=""):
    return Verdict(name, strictly_decreasing(errors), {"errors": list(errors)}, note, report_only)


def run_regimes(cfg: ExperimentConfig) -> ExperimentReport:
    _check_time_scales(cfg)
    lat, V = cfg.lattice_obj, cfg.field()
    observables = [obs_mod.get(n) for n in cfg.observables]
    for name in cfg.verdict_observables:
        if name not in cfg.observables:
            raise ConfigError(f"verdict observable {name!r} is not among the observables")
    pendulum = [o for o in observables if o.lambda_mode]
    flow = FlowSpec.from_potential(lat, V, integrator="rk4")
    report = ExperimentReport("regimes", cfg.to_dict())
    hs = list(cfg.hbar)

    if 1 in cfg.regimes:
        rungs = parallel_map(lambda h: _regime1(cfg, h, observables), hs, cfg.workers)
        _collect(report, rungs)
        for o in observables:
            errs = [r.errors[o.name] for r in rungs]
            ro = (o.name not in cfg.verdict_observables) or not o.lambda_mode
            note = "max_t |<a>(t) - <I_L(a)>(0)|"
            if not o.lambda_mode:
                note += "; I_L(a) = 0, the observable oscillates along e_perp (control)"
            report.verdicts.append(_trend(f"regime1:{o.name}", errs, ro, note))

    if 2 in cfg.regimes:
        rungs = parallel_map(lambda h: _regime2(cfg, h, pendulum, flow), hs, cfg.workers)
        _collect(report, rungs)
        for o in pendulum:
            errs = [r.errors[o.name][0] for r in rungs]
            rng = rungs[-1].errors[o.name][1]
            ok = strictly_decreasing(errs) and errs[-1] < RANGE_FRACTION * rng
            report.verdicts.append(Verdict(
                f"regime2:{o.name}", ok,
                {"errors": errs, "final_range": rng, "final_ratio": errs[-1] / rng if rng > 0 else math.inf},
                f"strict decrease and final error < {RANGE_FRACTION} x range",
                o.name not in cfg.verdict_observables))

    if 3 in cfg.regimes:
        theta0 = float(np.dot(cfg.x0, lat.generator)) % 1.0
        S = orbit_period(flow, theta0, cfg.eta0)
        s_values = np.arange(cfg.s_points) * S / cfg.s_points
        tables = transported_coefficients(flow, pendulum, s_values, cfg.eta_width)
        rungs = parallel_map(lambda h: _regime3(cfg, h, pendulum, s_values, tables), hs, cfg.workers)
        _collect(report, rungs)
        sup = [max(r.errors[o.name] for o in pendulum) for r in rungs]
        report.verdicts.append(_trend("regime3:sup", sup, False,
                                      "max over observables and s of |<a o phi^s>_T - <a>_T|"))
        for o in pendulum:
            report.verdicts.append(_trend(f"regime3:{o.name}", [r.errors[o.name] for r in rungs], True))
        control = [_classical_invariance(cfg, flow, lat, h, cfg.eps(h), pendulum, s_values) for h in hs]
        for o in pendulum:
            report.verdicts.append(_trend(f"regime3_classical:{o.name}", [c[o.name] for c in control], True,
                                          "same statistic for the classically transported ensemble"))
        report.extra["regime3_period"] = S
        report.extra["regime3_s"] = list(map(float, s_values))
    return report


def _collect(report: ExperimentReport, rungs):
    for r in rungs:
        report.records.extend(r.records)
        report.diagnostics.extend(r.diagnostics)
        report.bookkeeping.extend(r.bookkeeping)
