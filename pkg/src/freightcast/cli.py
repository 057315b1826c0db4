"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure, 1 anything else.
"""
from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from .config import load_config
from .errors import ConfigError, FreightcastError
from .ingest import fetch_indicator_csv

log = logging.getLogger("freightcast")

STAGE_COMMANDS = {
    "run": ("diagnose", "select", "fit", "scenario", "recovery-pace"),
    "fit": ("fit",),
    "select": ("select",),
    "scenario": ("scenario",),
    "recovery-pace": ("recovery-pace",),
    "diagnose": ("diagnose",),
}


def demo_config_path() -> Path:
    return Path(str(resources.files("freightcast") / "data" / "demo.yaml"))


def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    # defaults are suppressed on subparsers so flags given before the
    # subcommand are not overwritten by the subparser's defaults
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="run configuration (YAML)")
    parser.add_argument("--seed", type=int, default=default,
                        help="seed recorded in the manifest; the pipeline draws no random "
                             "numbers, so outputs depend only on config and data")
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--jobs", type=int, default=default, help="parallel workers")
    parser.add_argument("--allow-network", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="permit downloads of url datasets")
    parser.add_argument("-v", "--verbose", action="count",
                        default=argparse.SUPPRESS if suppress else 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freightcast",
        description="Counterfactual SARIMA/SARIMAX baselines for freight disruptions.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "all stages",
        "fit": "fit configured model orders and write model files",
        "select": "grid search over candidate models",
        "scenario": "build counterfactual baselines and impact series",
        "recovery-pace": "recovery-pace points and best-fit line",
        "diagnose": "stationarity, autocorrelation and decomposition summaries",
        "fetch": "download url datasets into the cache",
        "demo": "run the bundled synthetic demo",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _global_flags(p, suppress=True)
    return parser


def _fetch(config, allow_network: bool) -> int:
    cache = Path(config.cache_dir or ".freightcast-cache")
    if not cache.is_absolute():
        cache = config.base_dir / cache
    fetched = 0
    for name, ds in config.datasets.items():
        if ds.url is None:
            continue
        s = fetch_indicator_csv(ds.url, ds, cache, allow_network=allow_network)
        print(f"{name}: {len(s)} observations {s.start}..{s.end}")
        fetched += 1
    if not fetched:
        print("no url datasets in config")
    return 0


def _run(args) -> int:
    from .pipeline import run_pipeline

    if args.command == "demo":
        config_path = args.config or demo_config_path()
        out = args.out or "freightcast-demo"
    else:
        if not args.config:
            raise ConfigError("--config is required")
        config_path, out = args.config, args.out
    config = load_config(config_path)
    if args.command == "fetch":
        return _fetch(config, args.allow_network)
    stages = STAGE_COMMANDS.get(args.command, STAGE_COMMANDS["run"])
    result = run_pipeline(config, out_dir=out, stages=stages, jobs=args.jobs,
                          seed=args.seed, allow_network=args.allow_network)
    print(f"wrote {len(result.files)} files to {result.out_dir}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except FreightcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
