"""Command line entry point: ``wavecross run`` and ``wavecross report``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .experiment import (ConfigError, ReportError, bundled_configs, format_report, load_config,
                         merge_summaries, report_rows, run_config)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _error(kind: str, message: str, key=None, out_dir=None) -> None:
    payload = {"error": kind, "message": message}
    if key is not None:
        payload["key"] = key
    text = json.dumps(payload, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(text + "\n")
        except OSError:
            pass


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _error("config", exc.message, exc.key, args.out_dir)
        return EXIT_CONFIG
    try:
        res = run_config(cfg, args.out_dir, threads=args.threads, seed=args.seed)
    except ConfigError as exc:
        _error("config", exc.message, exc.key, args.out_dir)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, ValueError, NotImplementedError) as exc:
        _error("numerical", f"{type(exc).__name__}: {exc}", out_dir=args.out_dir)
        return EXIT_FAIL
    print(format_report([res.summary]))
    print(f"artifacts written to {res.out_dir}")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_report(args) -> int:
    try:
        studies = merge_summaries(args.files)
    except (ReportError, OSError, json.JSONDecodeError) as exc:
        _error("report", str(exc), out_dir=args.out_dir)
        return EXIT_CONFIG
    text = format_report(studies)
    print(text)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(text + "\n")
    with open(out / "report.csv", "w", newline="") as fh:
        csv.writer(fh).writerows(report_rows(studies))
    return EXIT_OK if all(s.get("passed") for s in studies) else EXIT_FAIL


def cmd_list(args) -> int:
    for name in bundled_configs():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavecross", description="Semiclassical wave packets through avoided and"
                                 " exact eigenvalue crossings, with grid and Herman-Kluk comparisons.")
    ap.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a study from a JSON config or a bundled config name")
    run.add_argument("config", help="path to a config file or a bundled config name (see 'list')")
    run.add_argument("--out-dir", default="results", help="output directory (default: results)")
    run.add_argument("--threads", type=int, default=1, help="worker threads for the eps sweep")
    run.add_argument("--seed", type=int, default=None, help="seed for randomised criteria")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="merge summary.json files into a text and CSV report")
    rep.add_argument("files", nargs="+", help="summary files")
    rep.add_argument("--out-dir", default="results", help="where report.txt and report.csv go")
    rep.set_defaults(func=cmd_report)

    lst = sub.add_parser("list", help="list the bundled configs")
    lst.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
