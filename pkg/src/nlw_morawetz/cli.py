"""Command-line front end: ``nlw-morawetz --experiment NAME [--set key=value ...]``.

Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 usage or config
error, 3 I/O error.
"""
import argparse
import csv
import json
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import (SCHEMA_VERSION, ConfigError, RunConfig, assign, parse_text, parse_value,
                     serialize, validate)
from .experiments import REGISTRY, run

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
CSV_HEADER = ("x", "value")

log = logging.getLogger("nlw_morawetz")


class UsageError(Exception):
    pass


def build_parser():
    p = argparse.ArgumentParser(
        prog="nlw-morawetz",
        description="Run identity and asymptotics experiments for the radial critical wave equation.")
    p.add_argument("--config", metavar="PATH", help="key = value config file")
    p.add_argument("--experiment", metavar="NAME", help="registered experiment (see --list)")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                   help="override one config key; repeatable")
    p.add_argument("--out", metavar="DIR", help="output directory (default: config out_dir)")
    p.add_argument("--sweep", metavar="PATH", help="file listing config paths, one per line")
    p.add_argument("--list", action="store_true", help="print the experiment registry and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def parse(args, text=None):
    """RunConfig from parsed flags; ``text`` is the config file body if any."""
    cfg = parse_text(text) if text is not None else RunConfig()
    if args.experiment:
        cfg.experiment = args.experiment
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        assign(cfg, key.strip(), parse_value(value))
    if args.out:
        cfg.out_dir = args.out
    if not cfg.experiment:
        raise ConfigError("experiment: no experiment given (use --experiment or a config file)")
    return validate(cfg, REGISTRY)


def _slug(label):
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", label).strip("_")


def report_stem(cfg):
    return f"{cfg.experiment}-{cfg.digest()}"


def write_outputs(cfg, report):
    """Write the JSON report and one CSV per metric; returns the written paths."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report_stem(cfg)
    paths = []
    for label, series in report.metrics.items():
        path = out / f"{stem}.{_slug(label)}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# nlw-morawetz {cfg.experiment} {cfg.digest()}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for x, y in series:
                w.writerow([repr(float(x)), repr(float(y))])
        paths.append(path)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "hash": cfg.digest(),
        "config": cfg.to_flat(),
        "csv": {label: f"{stem}.{_slug(label)}.csv" for label in report.metrics},
        "report": report.as_dict(),
    }
    path = out / f"{stem}.report.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")
    paths.append(path)
    return paths


def execute(cfg, stream=None):
    """Run one validated config and write its outputs; returns the exit code."""
    stream = stream or sys.stdout
    report = run(cfg.experiment, cfg)
    try:
        write_outputs(cfg, report)
    except OSError as exc:
        print(f"error: cannot write outputs to {cfg.out_dir}: {exc}", file=sys.stderr)
        return EXIT_IO
    for v in report.verdicts:
        mark = "PASS" if v.passed else "FAIL"
        print(f"{mark}  {v.label}  (value {v.value:.6g}, tolerance {v.tolerance:.3g})", file=stream)
    print(f"{cfg.experiment}: {'PASS' if report.passed else 'FAIL'} in {report.runtime:.1f}s "
          f"-> {Path(cfg.out_dir) / report_stem(cfg)}.report.json", file=stream)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _execute_file(path_and_out):
    path, out = path_and_out
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_text(text)
        if out:
            cfg.out_dir = out
        validate(cfg, REGISTRY)
    except ConfigError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return execute(cfg)


def sweep(path, out=None):
    """Run every config listed in ``path`` in a process pool capped by NLW_THREADS."""
    base = Path(path).parent
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    items = [str(base / ln.strip()) for ln in lines if ln.strip() and not ln.strip().startswith("#")]
    if not items:
        return EXIT_PASS
    cap = int(os.environ.get("NLW_THREADS", "0") or 0) or os.cpu_count() or 1
    workers = max(1, min(cap, len(items)))
    jobs = [(p, out) for p in items]
    if workers == 1:
        codes = [_execute_file(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(_execute_file, jobs))
    for code in (EXIT_IO, EXIT_USAGE, EXIT_FAIL):
        if code in codes:
            return code
    return EXIT_PASS


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.list:
        for name, recipe in REGISTRY.items():
            print(f"{name:24s} {recipe.anchor}")
        return EXIT_PASS
    if args.sweep:
        try:
            return sweep(args.sweep, args.out)
        except OSError as exc:
            print(f"error: cannot read sweep file: {exc}", file=sys.stderr)
            return EXIT_IO
    text = None
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return EXIT_IO
    try:
        cfg = parse(args, text)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return execute(cfg)


__all__ = ["main", "parse", "execute", "serialize", "sweep", "write_outputs", "EXIT_PASS",
           "EXIT_FAIL", "EXIT_USAGE", "EXIT_IO"]

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
