"""Operator identities of the torus Weyl calculus on randomized data.

Each trial draws a lattice, h, a box and a random symbol, then checks
entrywise: the Laplacian split, the Weinstein average against the averaged
symbol, its commutation with D_L^perp, the change of scale (plain and
two-micro), and the exact commutator with a quadratic symbol.  Separate
checks cover the Schur bound against a power-iteration norm and the
Hermiticity of the Hamiltonian along the ladder.
"""
from __future__ import annotations

import math
import time

import numpy as np

from ..lattice import make_lattice
from ..quantum import HamiltonianSpec, build_hamiltonian
from ..weyl import (Symbol, TwoMicroSymbol, average_symbol, box_modes, commutator, d_lambda,
                    d_lambda_perp, h_lambda_perp_squared, h_lambda_squared, minus_laplacian, moyal_leading,
                    norm_squared, quantize, quantize_two_micro, schur_norm_bound, weinstein_average)
from .config import ExperimentConfig
from .report import ExperimentReport, Record, Verdict

IDENTITIES = ("laplacian_symbol", "laplacian_operator", "weinstein", "commute", "change_variable",
              "change_variable_two_micro", "exact_commutator", "exact_commutator_multiplication")
POWER_ITERATIONS = 300


def random_lattice(rng: np.random.Generator, max_entry: int = 3):
    while True:
        g = tuple(int(v) for v in rng.integers(-max_entry, max_entry + 1, size=2))
        if g != (0, 0) and math.gcd(*g) == 1:
            return make_lattice(g)


def random_quadratic(rng: np.random.Generator, x_modes: int = 0, max_k: int = 1) -> Symbol:
    """Random polynomial of degree <= 2 in xi; x-dependent when x_modes > 0."""
    def poly():
        return {m: complex(rng.normal(), rng.normal())
                for m in ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))}
    data = {(0, 0): poly()}
    while len(data) < 1 + x_modes:
        k = tuple(int(v) for v in rng.integers(-max_k, max_k + 1, size=2))
        data.setdefault(k, poly())
    return Symbol.polynomial(data, real=False)


def random_trig(rng: np.random.Generator, n_modes: int = 3, max_k: int = 2) -> Symbol:
    data = {}
    while len(data) < n_modes:
        k = tuple(int(v) for v in rng.integers(-max_k, max_k + 1, size=2))
        data.setdefault(k, {(0, 0): complex(rng.normal(), rng.normal())})
    return Symbol.polynomial(data, real=False)


class _TwoMicroCoef:
    def __init__(self, f, w):
        self.f, self.w = f, w

    def __call__(self, xi, eta):
        return self.f(xi) * np.exp(-(np.asarray(eta) * self.w) ** 2)


def _two_micro_from(a: Symbol, w: float) -> TwoMicroSymbol:
    modes = {k: _TwoMicroCoef(f, w) for k, f in a.modes.items()}
    return TwoMicroSymbol(modes, {k: (0.0, 0.0) for k in modes}, real=False, check=False)


def _inner(N: int, margin: int) -> np.ndarray:
    return np.max(np.abs(box_modes(N)), axis=1) <= N - margin


def _max_abs(M: np.ndarray) -> float:
    return float(np.max(np.abs(M), initial=0.0))


def trial(rng: np.random.Generator, max_box: int) -> tuple[dict, dict]:
    lat = random_lattice(rng)
    hbar = float(rng.uniform(1 / 64, 1 / 8))
    N = int(rng.integers(4, max_box + 1))
    a = Symbol.random(rng, n_modes=3, max_k=2, real=bool(rng.integers(2)))
    out = {}
    A = quantize(a, hbar, N)
    # -Delta = (D_L^perp)^2 + D_L^2, at symbol and operator level
    lhs = quantize(h_lambda_squared(lat), hbar, N).matrix + quantize(h_lambda_perp_squared(lat), hbar, N).matrix
    out["laplacian_symbol"] = _max_abs(lhs - quantize(norm_squared(), hbar, N).matrix)
    D, Dp = d_lambda(lat, N), d_lambda_perp(lat, N)
    out["laplacian_operator"] = _max_abs(D @ D + Dp @ Dp - minus_laplacian(N))
    W = weinstein_average(lat, A)
    out["weinstein"] = _max_abs(W.matrix - quantize(average_symbol(lat, a), hbar, N).matrix)
    out["commute"] = _max_abs(Dp @ W.matrix - W.matrix @ Dp)
    delta = float(rng.uniform(0.5, 2.0))
    out["change_variable"] = _max_abs(A.matrix - quantize(a.rescaled(delta), hbar / delta, N).matrix)
    eps = float(rng.uniform(0.1, 0.9))
    b2 = _two_micro_from(a, float(rng.uniform(0.2, 1.0)))
    out["change_variable_two_micro"] = _max_abs(quantize_two_micro(lat, b2, hbar, eps, N).matrix
                                                - quantize(b2.rescaled_pair(lat, eps), hbar / eps, N).matrix)
    # [Op(a), Op(b)] = Op((h/i){a, b}) for b quadratic in xi and x-independent
    b = random_quadratic(rng)
    C = commutator(A, quantize(b, hbar, N)).matrix
    out["exact_commutator"] = _max_abs(C - quantize(moyal_leading(a, b, hbar), hbar, N).matrix)
    # a = a(x) and b quadratic with x-modes: exact wherever the products stay in the box
    m = random_trig(rng)
    bx = random_quadratic(rng, x_modes=2)
    C = commutator(quantize(m, hbar, N), quantize(bx, hbar, N)).matrix
    ref = quantize(moyal_leading(m, bx, hbar), hbar, N).matrix
    inner = _inner(N, m.max_mode + bx.max_mode)
    out["exact_commutator_multiplication"] = _max_abs((C - ref)[np.ix_(inner, inner)])
    meta = {"lattice": lat.generator, "hbar": hbar, "N": N, "delta": delta, "eps": eps}
    return out, meta


def power_norm(M: np.ndarray, rng: np.random.Generator, iterations: int = POWER_ITERATIONS) -> float:
    """Spectral norm estimate by power iteration on M* M."""
    v = rng.normal(size=M.shape[1]) + 1j * rng.normal(size=M.shape[1])
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(iterations):
        w = M.conj().T @ (M @ v)
        s = float(np.linalg.norm(w))
        if s == 0:
            return 0.0
        v = w / s
    return math.sqrt(s)


def unit_facts(hbar: float = 1 / 16, N: int = 5) -> dict:
    """quantize(1) = I; e^{2 i pi m.x} shifts e_k to e_{k+m}; |xi|^2/2 is diagonal."""
    dim = (2 * N + 1) ** 2
    ks = box_modes(N)
    out = {"identity": _max_abs(quantize(Symbol.constant(1.0), hbar, N).matrix - np.eye(dim))}
    m = (1, -2)
    S = quantize(Symbol.exponential(m), hbar, N).matrix
    ref = np.zeros((dim, dim))
    for j, k in enumerate(ks):
        q = k + np.asarray(m)
        if np.max(np.abs(q)) <= N:
            ref[(q[0] + N) * (2 * N + 1) + (q[1] + N), j] = 1.0
    out["shift"] = _max_abs(S - ref)
    K = quantize(Symbol.kinetic(), hbar, N).matrix
    # diagonal: the symbol at the Weyl midpoint xi = pi h (k + k)
    xi = math.pi * hbar * (ks + ks)
    out["kinetic"] = _max_abs(K - np.diag(0.5 * xi[:, 0] ** 2 + 0.5 * xi[:, 1] ** 2))
    return out


def run_identities(cfg: ExperimentConfig) -> ExperimentReport:
    rng = np.random.default_rng(cfg.seed)
    report = ExperimentReport("identities", cfg.to_dict())
    start = time.perf_counter()
    worst = {name: 0.0 for name in IDENTITIES}
    for i in range(cfg.trials):
        res, meta = trial(rng, cfg.max_box)
        for name, r in res.items():
            worst[name] = max(worst[name], r)
            report.records.append(Record(meta["hbar"], math.nan, math.nan, float(i), name, r, 0.0))
    for name in IDENTITIES:
        report.verdicts.append(Verdict(f"identity:{name}", worst[name] <= cfg.tolerance,
                                       {"max_residual": worst[name], "tolerance": cfg.tolerance}))
    facts = unit_facts()
    report.verdicts.append(Verdict("unit_facts", all(v == 0.0 for v in facts.values()), facts,
                                   "exact equality"))
    ratios = []
    for _ in range(cfg.trials):
        N = int(rng.integers(3, min(cfg.max_box, 8) + 1))
        a = Symbol.random(rng, n_modes=3, max_k=2, real=bool(rng.integers(2)))
        hbar = float(rng.uniform(1 / 64, 1 / 8))
        est = power_norm(quantize(a, hbar, N).matrix, rng)
        ratios.append(schur_norm_bound(a, hbar, N) / est if est > 0 else math.inf)
    report.verdicts.append(Verdict("schur_dominates", min(ratios) >= 1 - 1e-12,
                                   {"min_bound_over_estimate": min(ratios)}))
    V = cfg.field()
    defects = []
    for h in cfg.hbar:
        eps = cfg.eps(h)
        N = int(math.ceil(1 / (2 * math.pi * h))) + 2
        defects.append(build_hamiltonian(HamiltonianSpec(h, eps, V, N)).hermiticity_defect())
    report.verdicts.append(Verdict("hamiltonian_hermitian", max(defects) <= 1e-12, {"defects": defects}))
    report.extra["runtime_seconds"] = time.perf_counter() - start
    return report

