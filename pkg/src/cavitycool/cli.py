"""Command-line entry point: ``cavitycool run|report|presets``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import sweep
from .errors import ConfigInvalid, OutputUnwritable

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavitycool",
        description="Cavity cooling of trapped-atom arrays: parameter sweeps and reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep from a TOML config or a preset name")
    run.add_argument("config", help="config path or preset name (see 'presets list')")
    run.add_argument("--workers", type=int, default=None, help="process pool size")
    run.add_argument("--out", default=None, help="output directory (overrides [output])")
    run.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                     help="override a config entry; VALUE is parsed as TOML")
    run.add_argument("--quiet", action="store_true", help="do not print the summary")

    rep = sub.add_parser("report", help="summarize a result CSV")
    rep.add_argument("csv", help="result table written by 'run'")
    rep.add_argument("--figures", action="store_true",
                     help="also render PNG figures next to the CSV")

    pre = sub.add_parser("presets", help="bundled configurations")
    pre.add_argument("action", choices=["list", "show"])
    pre.add_argument("name", nargs="?")
    return parser


def _cmd_run(args) -> int:
    cfg = sweep.load_config(args.config)
    cfg = sweep.apply_overrides(cfg, args.override)
    if args.workers is not None and args.workers < 1:
        raise ConfigInvalid("--workers must be >= 1")
    rows, paths = sweep.run_sweep(cfg, workers=args.workers, out_dir=args.out)
    if not args.quiet:
        print(paths["summary"].read_text(), end="")
    print(f"wrote {paths['results']}")
    failed = sum(r["status"] != "ok" for r in rows)
    return EXIT_NUMERICAL if failed else EXIT_OK


def _cmd_report(args) -> int:
    path = Path(args.csv)
    try:
        rows = sweep.read_results(path)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from exc
    meta = path.with_name(path.stem + "_meta.json")
    feas = None
    if meta.exists():
        import json

        feas = json.loads(meta.read_text()).get("config", {}).get("feasibility")
    print(sweep.emit_report(rows, feasibility=feas), end="")
    if args.figures:
        from .plotting import render_figures

        try:
            for p in render_figures(rows, path.parent, path.stem):
                print(f"wrote {p}")
        except OSError as exc:
            raise OutputUnwritable(str(exc)) from exc
    return EXIT_NUMERICAL if any(r["status"] != "ok" for r in rows) else EXIT_OK


def _cmd_presets(args) -> int:
    if args.action == "list":
        for name in sweep.list_presets():
            print(name)
        return EXIT_OK
    path = sweep.preset_path(args.name or "")
    if path is None:
        raise ConfigInvalid(f"unknown preset {args.name!r}")
    print(path.read_text(), end="")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "report": _cmd_report, "presets": _cmd_presets}[args.command]
    try:
        return handler(args)
    except (ConfigInvalid, OutputUnwritable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
