"""Run every experiment config in configs/ through the lab CLI and summarise."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from twomicro.experiments.cli import main as lab

ROOT = Path(__file__).resolve().parent.parent


def run(configs: list[Path], out: Path) -> int:
    failures = 0
    for cfg in configs:
        name = cfg.stem
        start = time.perf_counter()
        code = lab([name, "--config", str(cfg), "--out", str(out / name)])
        print(f"== {name}: exit {code} in {time.perf_counter() - start:.1f} s", flush=True)
        failures += code != 0
    return 1 if failures else 0


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="out", help="output root; one subdirectory per experiment")
    p.add_argument("--only", nargs="*", help="experiment names to run (default: all configs)")
    args = p.parse_args(argv)
    configs = sorted((ROOT / "configs").glob("*.cfg"))
    if args.only:
        configs = [c for c in configs if c.stem in args.only]
    return run(configs, Path(args.out))


if __name__ == "__main__":
    sys.exit(main())
