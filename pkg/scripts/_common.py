"""Shared argument handling for the experiment scripts."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

from rbsl.config import ConfigError, load_config
from rbsl.harness import run_experiment

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def parser(description: str, default_config: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--config", default=str(CONFIGS / default_config))
    p.add_argument("--out", default=None, help="output directory (default: from the config)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--iterations", type=int, default=None, help="override experiment.iterations")
    p.add_argument("--burn-in", type=int, default=None, help="override experiment.burn_in")
    return p


def run(args) -> tuple[int, Path]:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        sys.exit(2)
    ex = cfg.experiment
    if args.iterations is not None:
        ex = dataclasses.replace(ex, iterations=args.iterations)
    if args.burn_in is not None:
        ex = dataclasses.replace(ex, burn_in=args.burn_in)
    cfg = dataclasses.replace(cfg, experiment=ex)
    out = Path(args.out or ex.output)
    status = run_experiment(cfg, out_dir=out, threads=args.threads, base_dir=str(Path(args.config).parent))
    return status, out


def print_table(path: Path, columns: list[str]) -> None:
    if not path.exists():
        return
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    cols = [c for c in columns if rows and c in rows[0]]
    print("  ".join(f"{c:>16}" for c in cols))
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            try:
                cells.append(f"{float(v):>16.4f}")
            except ValueError:
                cells.append(f"{v:>16}")
        print("  ".join(cells))
