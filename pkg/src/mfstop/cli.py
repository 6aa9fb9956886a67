"""Command-line runner: one subcommand per experiment kind.

    mfstop <kind> [--config FILE] [--seed U64] [--out DIR] [--threads K]

Writes a bundle to DIR: ``manifest.json``, the experiment's CSV tables and
``summary.txt``. Exit status is 0 iff every built-in assertion passes.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, MfstopError
from .experiments import KINDS, make_config, run

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

MANIFEST_VERSION = 1
# fields that legitimately differ between otherwise identical runs
EXCLUDED_FIELDS = ["wall_time_s", "started_at", "threads", "versions"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ERROR = 0, 1, 2, 3


def load_config_file(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"--config: cannot read {path}: {exc}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"--config: {path} is not valid TOML: {exc}")


def _versions():
    return {"python": platform.python_version(), "numpy": np.__version__, "mfstop": __version__}


def summary_text(cfg, outcome, errors):
    lines = [f"experiment: {cfg.kind}", f"seed: {cfg.seed}", ""]
    for name, ok, detail in outcome.assertions if outcome else []:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    for note in outcome.notes if outcome else []:
        lines.append(f"note: {note}")
    for err in errors:
        lines.append(f"ERROR  {err}")
    passed = outcome is not None and outcome.passed and not errors
    lines += ["", f"overall: {'PASS' if passed else 'FAIL'}"]
    return "\n".join(lines) + "\n"


def run_experiment(cfg, out_dir=None):
    """Run ``cfg`` and write its bundle. Returns (exit_code, Outcome or None)."""
    out = Path(out_dir or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    errors, outcome = [], None
    try:
        outcome = run(cfg)
    except MfstopError as exc:
        errors.append(f"{type(exc).__name__}: {exc}")
    for name, text in (outcome.tables.items() if outcome else []):
        (out / name).write_text(text)
    (out / "summary.txt").write_text(summary_text(cfg, outcome, errors))
    passed = outcome is not None and outcome.passed and not errors
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "config": cfg.echo(),
        "seed": cfg.seed,
        "threads": cfg.threads,
        "versions": _versions(),
        "started_at": started,
        "wall_time_s": time.time() - started,
        "excluded_fields": EXCLUDED_FIELDS,
        "files": sorted(outcome.tables) + ["summary.txt"] if outcome else ["summary.txt"],
        "assertions": [{"name": n, "passed": p, "detail": d} for n, p, d in (outcome.assertions if outcome else [])],
        "errors": errors,
        "status": "pass" if passed else ("error" if errors else "fail"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if errors:
        return EXIT_ERROR, outcome
    return (EXIT_OK if passed else EXIT_FAIL), outcome


def build_parser():
    parser = argparse.ArgumentParser(prog="mfstop", description="Mean-field optimal stopping experiments")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--seed", type=int, help="master seed (unsigned 64-bit), overrides the config")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (speed only)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = load_config_file(args.config) if args.config else {}
        cfg = make_config(args.kind, raw, seed=args.seed, out=args.out, threads=args.threads)
    except ConfigurationError as exc:
        print(f"mfstop {args.kind}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code, _ = run_experiment(cfg)
    print((Path(cfg.out) / "summary.txt").read_text(), end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
