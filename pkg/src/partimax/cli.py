"""Command-line front end: ``bench``, ``verify`` and ``select`` modes.

Exit codes: 0 success, 1 failed verification, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .coverage import pcf
from .select import SelectorParams, run_selector
from .simulate import COLUMNS, result_row, run_benchmark
from .tiling import build
from .verify import run_suites

log = logging.getLogger("partimax")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="partimax", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="INI run configuration")
    p.add_argument("--mode", choices=cfgmod.MODES)
    p.add_argument("--seed", type=int, help="overrides every seed in the config")
    p.add_argument("--out", help="CSV output path (bench)")
    p.add_argument("--suite", action="append", help="verification suite to run; repeatable")
    p.add_argument("--jobs", type=int, help="worker processes (bench)")
    p.add_argument("--belief", help="particle CSV (select)")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def effective_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    run = {}
    for key in ("mode", "out", "jobs", "belief"):
        if getattr(args, key) is not None:
            run[key] = getattr(args, key)
    if args.suite:
        run["suites"] = tuple(args.suite)
    if run:
        cfg = cfg.replace("run", **run)
    if args.seed is not None:
        cfg = cfg.replace("sweep", seeds=(args.seed,))
        cfg = cfg.replace("select", seed=args.seed)
        cfg = cfg.replace("verify", seed=args.seed)
    return cfg


def cmd_bench(cfg: cfgmod.RunConfig, out=None) -> int:
    bench = cfg.benchmark()
    n = build(bench.tiling).n
    if bench.k_values and max(bench.k_values) > n:
        raise UsageError(f"[sweep] k_values exceed the number of boxes n={n}")
    path = Path(cfg.run.out)
    try:
        fh = open(path, "w", newline="", encoding="utf-8") if out is None else out
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc
    failures = 0
    try:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        fh.flush()
        for cell, res, err in run_benchmark(bench, jobs=cfg.run.jobs):
            if err is not None:
                failures += 1
                print(f"cell {cell} failed: {err}", file=sys.stderr)
                continue
            writer.writerow(result_row(cell, res, timing=cfg.run.timing))
            fh.flush()
    finally:
        if out is None:
            fh.close()
    if failures:
        print(f"{failures} cell(s) failed; see messages above", file=sys.stderr)
    return EXIT_OK


def cmd_verify(cfg: cfgmod.RunConfig, uniform_boxes=False) -> int:
    results = run_suites(cfg.run.suites or None, cfg.verify, uniform_boxes=uniform_boxes)
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def read_particles(path) -> np.ndarray:
    """Rows of ``x, y, vx, vy``; a non-numeric first row is taken as a header."""
    rows = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read belief file {path}: {exc}") from exc
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                if lineno == 1 and not rows:
                    continue
                raise UsageError(f"{path}:{lineno}: non-numeric particle row") from None
            if len(vals) != 4:
                raise UsageError(f"{path}:{lineno}: expected 4 columns (x, y, vx, vy), got {len(vals)}")
            if not np.all(np.isfinite(vals)):
                raise UsageError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise UsageError(f"{path}: belief must contain at least one particle")
    return np.array(rows)


def cmd_select(cfg: cfgmod.RunConfig, out=None) -> int:
    out = out or sys.stdout
    if not cfg.run.belief:
        raise UsageError("select mode needs a belief file (--belief or [run] belief)")
    particles = read_particles(cfg.run.belief)
    coder = build(cfg.tiling)
    s = cfg.select
    params = SelectorParams(k=s.k, r=s.r, seed=s.seed, max_rejects=s.max_rejects)
    try:
        params.validate(coder.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    sel = run_selector(s.algorithm, particles, coder, params, np.random.default_rng(s.seed))
    print(" ".join(map(str, sel.boxes)), file=out)
    print(f"pcf {pcf(particles, sel.boxes, coder)}", file=out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = effective_config(args)
        if args.dump_config:
            print(cfgmod.dumps(cfg), end="")
            return EXIT_OK
        mode = cfg.run.mode
        if mode == "bench":
            return cmd_bench(cfg)
        if mode == "verify":
            return cmd_verify(cfg)
        return cmd_select(cfg)
    except (cfgmod.ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
