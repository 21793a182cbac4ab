"""Command line: ``lab <experiment> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import observables
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .quasimode import NoQuasimodes
from .report import DiagnosticsFailed, ExperimentReport

log = logging.getLogger("twomicro.lab")


def runner(name: str):
    if name == "regimes":
        from .regimes import run_regimes
        return run_regimes
    if name == "infinity":
        from .infinity import run_infinity
        return run_infinity
    if name == "quasimode":
        from .quasimode import run_quasimode
        return run_quasimode
    if name == "projection":
        from .projection import run_projection
        return run_projection
    if name == "identities":
        from .identities import run_identities
        return run_identities
    raise ConfigError(f"unknown experiment {name!r}")


def run(cfg: ExperimentConfig) -> ExperimentReport:
    return runner(cfg.experiment)(cfg)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description="Two-microlocal quasimode experiments on the 2-torus.")
    p.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    p.add_argument("--config", help="key-value config file (the experiment key may be omitted)")
    p.add_argument("--out", help="output directory for report.json and the CSV files")
    p.add_argument("--workers", type=int, help="threads for ladder rungs (overrides the config)")
    p.add_argument("--list-observables", action="store_true", help="print the observable presets and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.list_observables:
        print(observables.listing())
        return 0
    if not args.experiment:
        print("lab: an experiment name is required", file=sys.stderr)
        return 2
    overrides = {"experiment": args.experiment}
    if args.workers:
        overrides["workers"] = args.workers
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = ExperimentConfig(**overrides)
        report = run(cfg)
    except (ConfigError, DiagnosticsFailed, NoQuasimodes) as exc:
        print(f"lab: {exc}", file=sys.stderr)
        return 2
    if args.out:
        for path in report.write(args.out):
            log.info("wrote %s", path)
    for v in report.verdicts:
        tag = "report" if v.report_only else ("PASS" if v.passed else "FAIL")
        print(f"{tag:6s} {v.name}")
    print("passed" if report.passed else "failed")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
