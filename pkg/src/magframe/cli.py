"""Command line runner: ``magframe <experiment> --config <path> [--out <dir>] [--seed <u64>]``."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, parse_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (complex, np.complexfloating)):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    return obj


def write_report(out: Path, name: str, cfg: ExperimentConfig, result) -> None:
    out.mkdir(parents=True, exist_ok=True)
    tables = {}
    for tname, (header, rows) in sorted(result.tables.items()):
        fname = f"{tname}.csv"
        write_csv(out / fname, header, rows)
        tables[tname] = fname
    report = {
        "experiment": name,
        "passed": result.passed,
        "config": cfg.to_dict(),
        "checks": [
            {"name": c.name, "value": c.value, "threshold": c.threshold, "passed": c.passed, "detail": c.detail}
            for c in result.checks
        ],
        "tables": tables,
        "info": result.info,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(_json_safe(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def worker_count(cfg_threads: int) -> int:
    env = os.environ.get("MAGFRAME_THREADS")
    if env is None:
        return cfg_threads
    try:
        cap = int(env)
    except ValueError as exc:
        raise ConfigError(f"MAGFRAME_THREADS must be a positive integer, got {env!r}") from exc
    if cap < 1:
        raise ConfigError("MAGFRAME_THREADS must be >= 1")
    return min(cfg_threads, cap)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magframe", description="Run a magnetic frame verification experiment.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, help="TOML experiment configuration")
    p.add_argument("--out", default=None, help="output directory (default: out/<experiment>)")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed, overrides the config")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = parse_config(args.config)
        if cfg.experiment is not None and cfg.experiment != args.experiment:
            raise ConfigError(f"config is for experiment {cfg.experiment!r}, not {args.experiment!r}")
        cfg.experiment = args.experiment
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.threads = worker_count(cfg.threads)
        cfg.validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .experiments import run_experiment

    try:
        result = run_experiment(args.experiment, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path("out") / args.experiment
    write_report(out, args.experiment, cfg, result)
    for c in result.checks:
        print(c.line())
    print(("PASS" if result.passed else "FAIL") + f" {args.experiment}")
    return EXIT_OK if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
