"""Experiment configuration: a dataclass and its key-value file format.

Files are INI-style (read with :mod:`configparser`); a leading ``[experiment]``
header is optional.  Lists are comma separated and numbers may be written as
fractions, e.g. ``hbar = 1/32, 1/64, 1/128``.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from ..lattice import PrimitiveLattice, make_lattice
from ..potential import FourierField

EXPERIMENTS = ("regimes", "infinity", "quasimode", "projection", "identities")


class ConfigError(ValueError):
    pass


def parse_number(text: str) -> float:
    text = text.strip()
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        if text.lower() in ("inf", "+inf", "-inf", "nan"):
            return float(text)
        raise ConfigError(f"not a number: {text!r}")


def parse_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


@dataclass(frozen=True)
class TimeScale:
    """tau_h as a rule: ``inv_eps`` (c/eps), ``fixed`` (constant) or ``power`` (h^-beta)."""

    kind: str
    value: float

    @classmethod
    def parse(cls, text: str) -> "TimeScale":
        kind, _, val = text.partition(":")
        kind = kind.strip()
        if kind not in ("inv_eps", "fixed", "power"):
            raise ConfigError(f"unknown time-scale rule {text!r}")
        return cls(kind, parse_number(val) if val else 1.0)

    def tau(self, hbar: float, eps: float) -> float:
        if self.kind == "inv_eps":
            return self.value / eps
        if self.kind == "fixed":
            return self.value
        return hbar ** (-self.value)

    def __str__(self):
        return f"{self.kind}:{self.value!r}"


POTENTIALS = {
    "cos1": lambda: FourierField.cosine((1, 0)),
    "cos1+cos2": lambda: FourierField.cosine((1, 0)) + FourierField.cosine((0, 1), 0.5),
    "zero": FourierField.zero,
}


def load_potential(ref: str, base: Optional[Path] = None) -> FourierField:
    """A named preset or the path of a FourierField JSON file."""
    if ref in POTENTIALS:
        return POTENTIALS[ref]()
    path = Path(ref)
    if base is not None and not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigError(f"potential {ref!r} is neither a preset {sorted(POTENTIALS)} nor a file")
    return FourierField.from_json(path.read_text())


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    potential: str = "cos1"
    lattice: tuple = (1, 0)
    hbar: tuple = (1 / 32, 1 / 64, 1 / 128)
    alpha: float = 0.5
    seed: int = 0
    # initial packet: x0 on the torus, eta0 along e, sigma along e_perp
    x0: tuple = (0.7, 0.3)
    eta0: float = 0.0
    sigma: float = 1.0
    eta0_power: Optional[float] = None
    # regimes
    regimes: tuple = (1, 2, 3)
    tau1: TimeScale = TimeScale("fixed", 1.0)
    tau2: TimeScale = TimeScale("inv_eps", 1.0)
    tau3: TimeScale = TimeScale("power", 1.0)
    window: float = 0.5
    samples: int = 21
    average_samples: int = 200
    s_points: int = 8
    observables: tuple = ("cos_theta", "sin_theta", "eta")
    verdict_observables: tuple = ("sin_theta", "eta")
    eta_width: float = 3.0
    dt_factor: float = 0.005
    box_margin: float = 8.0
    # infinity
    mode: tuple = (1, 0)
    amplitude: str = "unit"
    tau_infinity: TimeScale = TimeScale("inv_eps", 1.0)
    control_tau: TimeScale = TimeScale("power", 0.25)
    # quasimode
    energy: float = 0.5
    count: int = 40
    c: float = 3.0
    radius: float = 0.2
    margin: float = 0.5
    controls: tuple = (0.25, 0.75)
    max_norm: float = 3.0
    marginal_width: float = 3.0
    # projection
    theta0: float = 0.6
    n_s: int = 256
    n_t: int = 4096
    grids: tuple = (64, 128)
    caustic_band: float = 0.05
    radii: tuple = (0.1, 0.05, 0.025)
    refinement_band: tuple = (0.8, 1.25)
    # identities
    trials: int = 100
    max_box: int = 10
    tolerance: float = 1e-10
    workers: int = 1
    source: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        h = list(self.hbar)
        if not h or any(x <= 0 for x in h):
            raise ConfigError("hbar ladder must be nonempty and positive")
        if any(b >= a for a, b in zip(h, h[1:])):
            raise ConfigError("hbar ladder must be strictly decreasing")
        if not 0 < self.alpha < 1:
            # h/eps -> 0 and eps -> 0 both need 0 < alpha < 1
            raise ConfigError("alpha must lie in (0, 1) so that eps -> 0 and h/eps -> 0")
        if any(x >= 1 for x in h):
            raise ConfigError("hbar must be < 1 so that eps = hbar^alpha <= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def lattice_obj(self) -> PrimitiveLattice:
        return make_lattice(self.lattice)

    def field(self) -> FourierField:
        base = Path(self.source).parent if self.source else None
        return load_potential(self.potential, base)

    def eps(self, hbar: float) -> float:
        return hbar ** self.alpha

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, TimeScale) else (list(v) if isinstance(v, tuple) else v)
        return out


def _convert(name: str, raw: str, default):
    if isinstance(default, TimeScale):
        return TimeScale.parse(raw)
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int) and not isinstance(default, bool):
        return int(parse_number(raw))
    if isinstance(default, float):
        return parse_number(raw)
    if isinstance(default, tuple):
        items = parse_list(raw)
        if default and all(isinstance(d, str) for d in default):
            return tuple(items)
        if name in ("lattice", "mode", "regimes", "grids"):
            return tuple(int(parse_number(t)) for t in items)
        return tuple(parse_number(t) for t in items)
    if name == "eta0_power":
        return None if raw.strip().lower() in ("", "none") else parse_number(raw)
    return raw.strip()


def parse_config(text: str, source: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    body = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith(("#", ";"))]
    if not body or not body[0].startswith("["):
        text = "[experiment]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string(text)
    if "experiment" not in parser:
        raise ConfigError("missing [experiment] section")
    sec = parser["experiment"]
    defaults = {f.name: f.default for f in dataclasses.fields(ExperimentConfig)}
    kwargs = {}
    for key, raw in sec.items():
        name = "experiment" if key == "id" else key
        if name not in defaults:
            raise ConfigError(f"unknown key {key!r}")
        default = defaults[name]
        if default is dataclasses.MISSING:
            kwargs[name] = raw.strip()
        else:
            kwargs[name] = _convert(name, raw, default)
    overrides = dict(overrides or {})
    if "experiment" in overrides and kwargs.get("experiment", overrides["experiment"]) != overrides["experiment"]:
        raise ConfigError(f"config is for {kwargs['experiment']!r}, not {overrides['experiment']!r}")
    kwargs.update(overrides)
    if "experiment" not in kwargs:
        raise ConfigError("config needs an 'id' (experiment) key")
    return ExperimentConfig(source=source, **kwargs)


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), source=str(path), overrides=overrides)
