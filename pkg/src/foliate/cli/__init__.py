"""Command-line front end: run scenario manifests and render reports.

Usage::

    foliate run MANIFEST.json [--out REPORT.json] [--seed N] [--points N]
                              [--tol-abs X] [--tol-rel X] [--format text|json|both]
    foliate render REPORT.json

Exit codes: 0 all checks PASS, 2 some check FAILs, 3 inconclusive,
1 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from ..errors import ConfigError
from ..verify import FAIL, INCONCLUSIVE, PASS
from .geometry import parse_field, parse_geometry
from .manifest import Manifest, build_manifest, load_manifest
from .report import build_report, render_text, task_entry, to_json
from .tasks import make_state, run_task

EXIT_CODES = {PASS: 0, FAIL: 2, INCONCLUSIVE: 3}
EXIT_CONFIG = 1

__all__ = ["main", "run_manifest", "parse_geometry", "parse_field", "load_manifest",
           "build_manifest", "render_text"]


def run_manifest(manifest: Manifest, timing: bool = False) -> dict:
    """Execute every task of ``manifest`` in order and return the report dictionary."""
    start = time.perf_counter()
    state = make_state(manifest)
    entries = []
    for index, task in enumerate(manifest.tasks):
        entries.append(task_entry(index, task["task"], run_task(state, task)))
    elapsed = int(round((time.perf_counter() - start) * 1000)) if timing else None
    return build_report(manifest.path, manifest.digest, manifest.sampling, entries, elapsed)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foliate", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario manifest")
    run.add_argument("manifest")
    run.add_argument("--out", help="write the JSON report to this path")
    run.add_argument("--seed", type=int)
    run.add_argument("--points", type=int)
    run.add_argument("--tol-abs", type=float)
    run.add_argument("--tol-rel", type=float)
    run.add_argument("--format", choices=("text", "json", "both"), default="both")
    run.add_argument("--timing", action="store_true",
                     help="record wall-clock time (makes reports non-reproducible)")
    render = sub.add_parser("render", help="render a saved JSON report as text")
    render.add_argument("report")
    return parser


def _apply_overrides(manifest: Manifest, args) -> None:
    s = manifest.sampling
    updates = {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative", "--seed")
        updates["seed"] = args.seed
    if args.points is not None:
        if args.points < 1:
            raise ConfigError("points must be positive", "--points")
        updates["points"] = args.points
    if args.tol_abs is not None:
        updates["tol_abs"] = args.tol_abs
    if args.tol_rel is not None:
        updates["tol_rel"] = args.tol_rel
    manifest.sampling = dataclasses.replace(s, **updates)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "render":
        try:
            doc = json.loads(Path(args.report).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: cannot read report: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sys.stdout.write(render_text(doc))
        return EXIT_CODES.get(doc.get("overall"), EXIT_CONFIG)
    try:
        manifest = load_manifest(args.manifest)
        _apply_overrides(manifest, args)
        doc = run_manifest(manifest, timing=args.timing)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.format in ("text", "both"):
        sys.stdout.write(render_text(doc))
    if args.out:
        Path(args.out).write_text(to_json(doc))
    elif args.format == "json":
        sys.stdout.write(to_json(doc))
    return EXIT_CODES[doc["overall"]]
