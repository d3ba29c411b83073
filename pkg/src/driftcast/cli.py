"""Command-line front door: ingest, generate, run, compare.

Runs are driven by a JSON config with a single global seed; every random
consumer (generator, learner) draws a named sub-seed from it, so a run is
reproducible from its config alone and each report embeds the config
verbatim for provenance. Validation errors name the offending field with
a JSON-pointer path.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime
from pathlib import Path

from . import __version__
from .detectors import DETECTOR_INPUTS, write_verdict_log
from .evaluate import (compare_strategies, prequential_run, write_dm_csv,
                       write_report_json, write_rolling_csv, write_summary_csv)
from .ingest import ColumnMap, IngestError, aggregate_trips
from .learners import LearnerSpec, MlpConfig
from .strategies import StrategyConfig, write_action_log
from .stream import read_stream_csv, write_stream_csv
from .synth import SyntheticSpec, derive_seed, generate_synthetic
from .timegrid import DEFAULT_EPOCH

log = logging.getLogger(__name__)

OUT_DIR_ENV = "DRIFTCAST_OUT_DIR"


class ConfigError(ValueError):
    """Invalid run configuration; the message carries a JSON-pointer path."""


def _fail(pointer: str, message: str) -> None:
    raise ConfigError(f"{pointer}: {message}")


def _expect(mapping, key, pointer, types, required=True, default=None):
    if key not in mapping:
        if required:
            _fail(f"{pointer}/{key}", "required field is missing")
        return default
    value = mapping[key]
    if not isinstance(value, types):
        names = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
        _fail(f"{pointer}/{key}", f"expected {names}, got {type(value).__name__}")
    return value


def _parse_epoch(config: dict) -> datetime:
    raw = config.get("epoch")
    if raw is None:
        return DEFAULT_EPOCH
    try:
        return datetime.strptime(raw.replace(" ", "T")[:13], "%Y-%m-%dT%H")
    except (ValueError, AttributeError):
        _fail("/epoch", f"unparseable epoch {raw!r}")


def _parse_learner(config: dict, seed: int) -> LearnerSpec:
    raw = _expect(config, "learner", "", dict, required=False, default={"kind": "mlp"})
    kind = _expect(raw, "kind", "/learner", str, required=False, default="mlp")
    if kind in ("naive", "seasonal_naive"):
        return LearnerSpec(kind=kind)
    if kind != "mlp":
        _fail("/learner/kind", f"unknown learner kind {kind!r}")
    fields = {k: v for k, v in raw.items() if k != "kind"}
    fields.setdefault("seed", derive_seed(seed, "learner") % (2 ** 31))
    try:
        spec = LearnerSpec(kind="mlp", mlp=MlpConfig(**fields))
        spec.validate()
    except (TypeError, ValueError) as exc:
        _fail("/learner", str(exc))
    return spec


def _parse_strategies(config: dict) -> list[StrategyConfig]:
    raw = _expect(config, "strategies", "", list)
    if not raw:
        _fail("/strategies", "at least one strategy is required")
    strategies = []
    for i, item in enumerate(raw):
        pointer = f"/strategies/{i}"
        if not isinstance(item, dict):
            _fail(pointer, "strategy entries must be objects")
        try:
            strategy = StrategyConfig(**item)
            strategy.validate()
        except (TypeError, ValueError) as exc:
            _fail(pointer, str(exc))
        strategies.append(strategy)
    labels = [s.label for s in strategies]
    dupes = {name for name in labels if labels.count(name) > 1}
    if dupes:
        _fail("/strategies", f"duplicate strategy labels {sorted(dupes)}; set 'name' to disambiguate")
    return strategies


def _parse_detector_params(config: dict) -> dict:
    raw = _expect(config, "detectors", "", dict, required=False, default={})
    for key, value in raw.items():
        if key not in DETECTOR_INPUTS:
            _fail(f"/detectors/{key}", f"unknown detector {key!r}")
        if not isinstance(value, dict):
            _fail(f"/detectors/{key}", "detector parameters must be an object")
    return raw


def _load_stream(config: dict, seed: int, epoch: datetime):
    raw = _expect(config, "stream", "", dict)
    if ("path" in raw) == ("synthetic" in raw):
        _fail("/stream", "provide exactly one of 'path' or 'synthetic'")
    if "path" in raw:
        path = Path(raw["path"])
        if not path.exists():
            _fail("/stream/path", f"no such file: {path}")
        return read_stream_csv(path, epoch)
    fields = dict(raw["synthetic"])
    fields.setdefault("seed", derive_seed(seed, "generator"))
    for tuple_field in ("weekly_profile", "base_level"):
        if isinstance(fields.get(tuple_field), list):
            fields[tuple_field] = tuple(fields[tuple_field])
    try:
        spec = SyntheticSpec(**fields)
        spec.validate()
    except (TypeError, ValueError) as exc:
        _fail("/stream/synthetic", str(exc))
    return generate_synthetic(spec, epoch)


def load_config(path) -> dict:
    path = Path(path)
    try:
        config = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(config, dict):
        raise ConfigError("/: config must be a JSON object")
    return config


def _resolve_out_dir(args, config: dict) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    if config.get("output_dir"):
        return Path(config["output_dir"])
    return Path(os.environ.get(OUT_DIR_ENV, "."))


def _print_plan(stream, learner, strategies, out_dir) -> None:
    print(f"stream: {stream.n_hours} hours x {stream.n_zones} zones "
          f"[{stream.start}, {stream.end})")
    print(f"learner: {learner.kind}")
    print(f"output: {out_dir}")
    print("planned runs:")
    for s in strategies:
        parts = [s.kind]
        if s.period:
            parts.append(f"period={s.period}")
        if s.detector:
            parts.append(f"detector={s.detector}")
        print(f"  - {s.label}: {', '.join(parts)}")


def _write_run_logs(report, out_dir: Path) -> None:
    for run in report.runs:
        write_action_log(out_dir / f"actions_{run.name}.csv", run.actions, report.epoch)
        write_verdict_log(out_dir / f"verdicts_{run.name}.csv", run.verdicts, report.epoch)


# -- subcommands --------------------------------------------------------------


def cmd_ingest(args) -> int:
    columns = ColumnMap(pickup_datetime=args.col_pickup, zone_id=args.col_zone,
                        trip_distance=args.col_distance)
    zones = range(args.zone_min, args.zone_max + 1)
    time_range = None
    if args.start or args.end:
        if not (args.start and args.end):
            print("error: --start and --end must be given together", file=sys.stderr)
            return 1
        time_range = (datetime.fromisoformat(args.start), datetime.fromisoformat(args.end))
    try:
        stream, report = aggregate_trips(args.inputs, columns=columns,
                                         known_zones=zones, time_range=time_range,
                                         top_k=args.top_k)
    except (IngestError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_stream_csv(stream, args.out)
    print(f"accepted rows: {report.accepted}")
    for reason in sorted(report.rejected):
        print(f"rejected [{reason}]: {report.rejected[reason]}")
    print(f"stream: {stream.n_hours} hours x {stream.n_zones} zones -> {args.out}")
    return 0


def cmd_generate(args) -> int:
    try:
        payload = json.loads(Path(args.spec).read_text())
        for tuple_field in ("weekly_profile", "base_level"):
            if isinstance(payload.get(tuple_field), list):
                payload[tuple_field] = tuple(payload[tuple_field])
        spec = SyntheticSpec(**payload)
        stream = generate_synthetic(spec)
    except (OSError, TypeError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_stream_csv(stream, args.out)
    truth = {
        "drift_kind": spec.drift_kind,
        "drift_start": spec.drift_start,
        "drift_magnitude": spec.drift_magnitude,
        "seed": spec.seed,
    }
    truth_path = Path(str(args.out) + ".truth.json")
    truth_path.write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    print(f"stream: {stream.n_hours} hours x {stream.n_zones} zones -> {args.out}")
    print(f"ground truth -> {truth_path}")
    return 0


def _prepare(args, minimum_strategies: int):
    config = load_config(args.config)
    seed = _expect(config, "seed", "", int, required=False, default=0)
    epoch = _parse_epoch(config)
    strategies = _parse_strategies(config)
    if len(strategies) < minimum_strategies:
        _fail("/strategies", f"need at least {minimum_strategies} strategies "
                             f"for this command, got {len(strategies)}")
    learner = _parse_learner(config, seed)
    detector_params = _parse_detector_params(config)
    metric_mode = _expect(config, "metric_mode", "", str, required=False,
                          default="pooled")
    if metric_mode not in ("pooled", "zone_mean"):
        _fail("/metric_mode", "must be 'pooled' or 'zone_mean'")
    stream = _load_stream(config, seed, epoch)
    return config, seed, stream, learner, strategies, detector_params, metric_mode


def cmd_run(args) -> int:
    try:
        (config, seed, stream, learner, strategies,
         detector_params, metric_mode) = _prepare(args, minimum_strategies=1)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out_dir = _resolve_out_dir(args, config)
    if args.dry_run:
        _print_plan(stream, learner, strategies, out_dir)
        return 0
    out_dir.mkdir(parents=True, exist_ok=True)
    strategy = strategies[0]
    result = prequential_run(stream, learner, strategy,
                             detector_params=detector_params.get(strategy.detector or "", {}))
    from .evaluate import overall_metrics
    overall_smape, overall_rmse = overall_metrics(result.log, metric_mode)
    payload = {
        "artifact": {"name": "driftcast", "version": __version__},
        "config": config,
        "seed": seed,
        "strategy": result.name,
        "smape": overall_smape,
        "rmse": overall_rmse,
        "actions": {"updates": result.updates, "retrains": result.retrains},
    }
    (out_dir / "run.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    write_action_log(out_dir / f"actions_{result.name}.csv", result.actions, stream.epoch)
    write_verdict_log(out_dir / f"verdicts_{result.name}.csv", result.verdicts, stream.epoch)
    print(f"{result.name}: sMAPE {overall_smape:.4f}, RMSE {overall_rmse:.4f}, "
          f"actions ({result.updates}/{result.retrains})")
    print(f"report -> {out_dir / 'run.json'}")
    return 0


def cmd_compare(args) -> int:
    try:
        (config, seed, stream, learner, strategies,
         detector_params, metric_mode) = _prepare(args, minimum_strategies=2)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out_dir = _resolve_out_dir(args, config)
    if args.dry_run:
        _print_plan(stream, learner, strategies, out_dir)
        return 0
    out_dir.mkdir(parents=True, exist_ok=True)
    report = compare_strategies(stream, learner, strategies,
                                detector_params=detector_params,
                                metric_mode=metric_mode, jobs=args.jobs)
    write_report_json(report, out_dir / "report.json",
                      extra={"config": config, "seed": seed})
    write_summary_csv(report, out_dir / "summary.csv")
    write_rolling_csv(report, out_dir / "rolling.csv")
    write_dm_csv(report, out_dir / "dm.csv")
    _write_run_logs(report, out_dir)
    if not args.no_plots:
        from .report import render_report_figures
        render_report_figures(report, out_dir)
    for s in report.summaries:
        print(f"{s.name}: sMAPE {s.smape:.4f}, RMSE {s.rmse:.4f}, "
              f"actions ({s.updates}/{s.retrains})")
    print(f"report -> {out_dir / 'report.json'}")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftcast",
        description="Streaming demand forecasting with drift-adaptive models")
    parser.add_argument("--version", action="version", version=f"driftcast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="aggregate trip-record CSVs to a demand stream")
    p_ingest.add_argument("inputs", nargs="+", help="trip-record CSV files")
    p_ingest.add_argument("--out", required=True, help="output stream CSV")
    p_ingest.add_argument("--top-k", type=int, default=None,
                          help="keep only the K zones with the largest total demand")
    p_ingest.add_argument("--col-pickup", default="pickup_datetime")
    p_ingest.add_argument("--col-zone", default="zone_id")
    p_ingest.add_argument("--col-distance", default="trip_distance")
    p_ingest.add_argument("--zone-min", type=int, default=1)
    p_ingest.add_argument("--zone-max", type=int, default=263)
    p_ingest.add_argument("--start", default=None, help="accept pickups from this ISO time")
    p_ingest.add_argument("--end", default=None, help="accept pickups before this ISO time")
    p_ingest.set_defaults(func=cmd_ingest)

    p_gen = sub.add_parser("generate", help="generate a seeded synthetic stream")
    p_gen.add_argument("--spec", required=True, help="synthetic spec JSON file")
    p_gen.add_argument("--out", required=True, help="output stream CSV")
    p_gen.set_defaults(func=cmd_generate)

    p_run = sub.add_parser("run", help="run one strategy prequentially")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-dir", default=None)
    p_run.add_argument("--dry-run", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="compare strategies on one stream")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out-dir", default=None)
    p_cmp.add_argument("--jobs", type=int, default=1,
                       help="parallel strategy runs (default 1, deterministic logs)")
    p_cmp.add_argument("--dry-run", action="store_true")
    p_cmp.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
