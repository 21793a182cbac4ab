"""Experiment reports: records, verdicts, diagnostics and their files."""
from __future__ import annotations

import json
import platform
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from .. import __version__

CSV_HEADER = "hbar,eps,tau,t,observable,quantum,reference,abs_error"


class DiagnosticsFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class Record:
    hbar: float
    eps: float
    tau: float
    t: float
    observable: str
    quantum: float
    reference: float

    @property
    def abs_error(self) -> float:
        return abs(self.quantum - self.reference)

    def csv_row(self) -> str:
        vals = (self.hbar, self.eps, self.tau, self.t)
        nums = ",".join(repr(float(v)) for v in vals)
        return (f"{nums},{self.observable},{float(self.quantum)!r},{float(self.reference)!r},"
                f"{float(self.abs_error)!r}")


@dataclass
class Verdict:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    note: str = ""
    report_only: bool = False

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "report_only": self.report_only,
                "values": _plain(self.values), "note": self.note}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def strictly_decreasing(values) -> bool:
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:]))


def regime_bookkeeping(hbar: float, eps: float, tau: Optional[float]) -> dict:
    out = {"hbar": hbar, "eps": eps, "hbar_over_eps": hbar / eps}
    if tau is not None:
        out.update({"tau": tau, "tau_eps": tau * eps})
    return out


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    records: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    bookkeeping: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    extra_csv: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts if not v.report_only)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def metadata(self) -> dict:
        return {"package_version": __version__, "python": platform.python_version(),
                "numpy": np.__version__, "scipy": scipy.__version__}

    def as_dict(self) -> dict:
        return {"experiment": self.experiment, "passed": self.passed,
                "verdicts": [v.as_dict() for v in self.verdicts],
                "diagnostics": _plain(self.diagnostics), "bookkeeping": _plain(self.bookkeeping),
                "extra": _plain(self.extra), "config": _plain(self.config), "metadata": self.metadata()}

    def csv_bodies(self) -> dict:
        """Observable name -> CSV text, rows in record order."""
        rows: dict = {}
        for r in self.records:
            rows.setdefault(r.observable, []).append(r.csv_row())
        return {name: CSV_HEADER + "\n" + "\n".join(lines) + "\n" for name, lines in rows.items()}

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "report.json"]
        paths[0].write_text(json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n")
        for name, body in self.csv_bodies().items():
            p = out / f"{_safe(name)}.csv"
            p.write_text(body)
            paths.append(p)
        for name, body in self.extra_csv.items():
            p = out / f"{_safe(name)}.csv"
            p.write_text(body)
            paths.append(p)
        return paths


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)
