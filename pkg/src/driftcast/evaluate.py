"""Prequential evaluation: the test-then-adapt driver, forecast metrics,
rolling curves, Diebold-Mariano comparison and report assembly.

Every strategy is evaluated on the identical forecast timestamps of the
same stream, so the per-record loss series are paired and the pairwise
Diebold-Mariano tests are well defined. The driver predicts each hour
before its actuals are observed; only data strictly before the anchored
adaptation hour ever reaches a model.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import __version__ as _version
from .detectors import (BINARY_INPUT, DETECTOR_INPUTS, DRIFT, STABLE,
                        binarize_array, make_detector)
from .features import (HISTORY_HOURS, FeatureTable, build_feature_table,
                       differenced_matrix)
from .learners import LearnerSpec, make_forecaster
from .normal import normal_two_sided_p
from .stream import DemandStream, PredictionRecord
from .strategies import (AdaptationAction, AdaptationPolicy, StrategyConfig,
                         apply_action)
from .timegrid import calendar_columns, format_hour, period_start_hour, shift_years

log = logging.getLogger(__name__)


# -- metrics ------------------------------------------------------------------


def smape(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Symmetric MAPE in percent: (100/n) * sum |F-A| / ((|A|+|F|)/2).

    This is the variant with the averaged denominator (upper bound 200);
    terms with |A| + |F| = 0 contribute zero instead of NaN.
    """
    a = np.asarray(actual, dtype=float)
    f = np.asarray(predicted, dtype=float)
    if a.size == 0:
        raise ValueError("smape of zero records")
    denom = (np.abs(a) + np.abs(f)) / 2.0
    terms = np.zeros_like(denom)
    nonzero = denom > 0
    terms[nonzero] = np.abs(f - a)[nonzero] / denom[nonzero]
    return float(100.0 * terms.mean())


def rmse(actual: Sequence[float], predicted: Sequence[float]) -> float:
    a = np.asarray(actual, dtype=float)
    f = np.asarray(predicted, dtype=float)
    if a.size == 0:
        raise ValueError("rmse of zero records")
    return float(np.sqrt(np.mean((f - a) ** 2)))


def diebold_mariano(loss_a: Sequence[float], loss_b: Sequence[float]) -> tuple[float, float]:
    """Diebold-Mariano test for equal predictive accuracy of two paired
    one-step-ahead loss series.

    d_t = lossA_t - lossB_t; DM = mean(d) / sqrt(gamma0 / n) with gamma0
    the lag-0 autocovariance of d (no higher autocovariance terms at
    horizon 1); two-sided p-value from the standard normal. Identical
    series report (0, 1): indistinguishable.
    """
    a = np.asarray(loss_a, dtype=float)
    b = np.asarray(loss_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("loss series must be paired (equal length)")
    n = a.size
    if n < 30:
        raise ValueError(f"Diebold-Mariano needs n >= 30, got {n}")
    d = a - b
    if not d.any():
        return 0.0, 1.0
    mean_d = d.mean()
    gamma0 = float(np.mean((d - mean_d) ** 2))
    if gamma0 == 0.0:
        return math.copysign(math.inf, mean_d), 0.0
    statistic = float(mean_d / math.sqrt(gamma0 / n))
    return statistic, normal_two_sided_p(statistic)


# -- prediction logs ----------------------------------------------------------


@dataclass
class PredictionLog:
    """Column-wise store of the per-(hour, zone) forecast records."""

    times: np.ndarray
    zones: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray
    correct: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def records(self) -> Iterator[PredictionRecord]:
        for i in range(len(self.times)):
            yield PredictionRecord(int(self.times[i]), int(self.zones[i]),
                                   float(self.actual[i]), float(self.predicted[i]),
                                   bool(self.correct[i]))

    def squared_errors(self) -> np.ndarray:
        return (self.predicted - self.actual) ** 2


def rolling_metric(log: PredictionLog, metric: str, window: str,
                   epoch) -> list[tuple[int, float, int]]:
    """Metric evaluated per calendar window; returns (window_start_hour,
    value, record_count) tuples ordered in time."""
    metric_fn = {"smape": smape, "rmse": rmse}[metric]
    cal = calendar_columns(log.times, epoch)
    if window == "quarter":
        keys = cal["year"] * 4 + (cal["quarter"] - 1)
    elif window == "year":
        keys = cal["year"]
    else:
        raise ValueError(f"unknown rolling window {window!r}")
    out = []
    for key in np.unique(keys):
        mask = keys == key
        if window == "quarter":
            start = period_start_hour(int(key) // 4, int(key) % 4 + 1, epoch)
        else:
            start = period_start_hour(int(key), 1, epoch)
        out.append((start, metric_fn(log.actual[mask], log.predicted[mask]),
                    int(mask.sum())))
    return out


def overall_metrics(log: PredictionLog, mode: str = "pooled") -> tuple[float, float]:
    """(sMAPE, RMSE) either pooled over all records or as the unweighted
    mean of per-zone metrics."""
    if mode == "pooled":
        return smape(log.actual, log.predicted), rmse(log.actual, log.predicted)
    if mode != "zone_mean":
        raise ValueError(f"unknown metric mode {mode!r}")
    smapes, rmses = [], []
    for zone in np.unique(log.zones):
        mask = log.zones == zone
        smapes.append(smape(log.actual[mask], log.predicted[mask]))
        rmses.append(rmse(log.actual[mask], log.predicted[mask]))
    return float(np.mean(smapes)), float(np.mean(rmses))


# -- prequential driver -------------------------------------------------------


@dataclass
class RunResult:
    name: str
    strategy: StrategyConfig
    log: PredictionLog
    actions: list[tuple[int, AdaptationAction]]
    verdicts: list[tuple[int, str, str]]

    @property
    def updates(self) -> int:
        return sum(1 for _, a in self.actions if a.kind == "update")

    @property
    def retrains(self) -> int:
        return sum(1 for _, a in self.actions if a.kind == "retrain")


def prequential_run(stream: DemandStream, learner: LearnerSpec,
                    strategy: StrategyConfig, *,
                    detector_params: dict | None = None,
                    table: FeatureTable | None = None,
                    rel_tol: float = 0.10, eps_zero: float = 1.0) -> RunResult:
    """Run one strategy prequentially over the stream.

    The model initially trains on the first ``lambda_years`` of the stream
    and then produces one-step-ahead forecasts for every zone and every
    remaining hour; after each hour is observed the detector is fed (in
    zone order), the strategy decides, and any action is applied before
    the next hour is forecast.
    """
    strategy.validate()
    learner.validate()
    epoch = stream.epoch
    forecast_start = shift_years(stream.start, strategy.lambda_years, epoch)
    forecast_end = stream.end
    first_scorable = max(forecast_start, stream.start + HISTORY_HOURS)
    if first_scorable >= forecast_end:
        raise ValueError(
            f"stream too short: forecasts would start at hour {first_scorable} "
            f"but the stream ends at {forecast_end}")

    if table is None:
        table = build_feature_table(stream)
    layout = table.layout
    forecaster = make_forecaster(learner, layout)
    X0, y0 = table.window(stream.start, forecast_start)
    if len(X0) == 0:
        raise ValueError("initial training window holds no scorable rows")
    forecaster.train(X0, y0)

    detector = None
    detector_kind = strategy.detector
    diff_first = diff = None
    if strategy.needs_detector:
        detector = make_detector(detector_kind, **(detector_params or {}))
        if DETECTOR_INPUTS[detector_kind] != BINARY_INPUT:
            diff_first, diff = differenced_matrix(stream)

    policy = AdaptationPolicy(strategy, initial_anchor=forecast_start, epoch=epoch)

    hours = np.arange(first_scorable, forecast_end, dtype=np.int64)
    n_hours, k = len(hours), stream.n_zones
    actual = stream.demand[first_scorable - stream.start:].astype(float)
    predicted = np.empty((n_hours, k))
    correct = np.empty((n_hours, k), dtype=bool)

    # Predictions between two adaptations depend only on the frozen model
    # and precomputed past-only features, so they are computed in chunks and
    # invalidated from the hour after each applied action onward.
    chunk = 4096
    valid_until = 0

    def refresh(from_index: int) -> int:
        upto = min(from_index + chunk, n_hours)
        lo, _ = table.row_range(hours[from_index], forecast_end)
        hi = lo + (upto - from_index) * k
        block = forecaster.predict(table.X[lo:hi]).reshape(-1, k)
        predicted[from_index:upto] = block
        correct[from_index:upto] = binarize_array(actual[from_index:upto], block,
                                                  rel_tol, eps_zero)
        return upto

    actions: list[tuple[int, AdaptationAction]] = []
    verdicts: list[tuple[int, str, str]] = []
    binary_fed = detector is not None and DETECTOR_INPUTS[detector_kind] == BINARY_INPUT

    for i in range(n_hours):
        if i >= valid_until:
            valid_until = refresh(i)
        t = int(hours[i])
        drift = False
        if detector is not None:
            if binary_fed:
                row = correct[i]
                for j in range(k):
                    verdict = detector.step(1.0 if row[j] else 0.0)
                    if verdict != STABLE:
                        verdicts.append((t, detector_kind, verdict))
                        drift = drift or verdict == DRIFT
            else:
                row = diff[t - diff_first]
                for j in range(k):
                    verdict = detector.step(float(row[j]))
                    if verdict != STABLE:
                        verdicts.append((t, detector_kind, verdict))
                        drift = drift or verdict == DRIFT
        action = policy.decide(t + 1, drift)
        if action.kind != "none":
            if apply_action(action, forecaster, table):
                actions.append((t + 1, action))
                valid_until = i + 1

    times = np.repeat(hours, k)
    zones = np.tile(np.asarray(stream.zones, dtype=np.int64), n_hours)
    result_log = PredictionLog(times, zones, actual.ravel(), predicted.ravel(),
                               correct.ravel())
    return RunResult(strategy.label, strategy, result_log, actions, verdicts)


# -- strategy comparison ------------------------------------------------------


@dataclass
class StrategySummary:
    name: str
    kind: str
    detector: str | None
    period: str | None
    smape: float
    rmse: float
    updates: int
    retrains: int
    rolling: dict[str, list[tuple[int, float, int]]]


@dataclass
class EvaluationReport:
    summaries: list[StrategySummary]
    dm_pairs: list[tuple[str, str, float, float]]
    metric_mode: str
    forecast_start: int
    forecast_end: int
    epoch: object
    runs: list[RunResult] = field(repr=False, default_factory=list)

    def summary_by_name(self, name: str) -> StrategySummary:
        for summary in self.summaries:
            if summary.name == name:
                return summary
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        return {
            "artifact": {"name": "driftcast", "version": _version},
            "metric_mode": self.metric_mode,
            "forecast_span": {
                "start": format_hour(self.forecast_start, self.epoch),
                "end": format_hour(self.forecast_end, self.epoch),
            },
            "strategies": [
                {
                    "name": s.name,
                    "kind": s.kind,
                    "detector": s.detector,
                    "period": s.period,
                    "smape": s.smape,
                    "rmse": s.rmse,
                    "actions": {"updates": s.updates, "retrains": s.retrains},
                    "rolling": {
                        series: [
                            {"window_start": format_hour(h, self.epoch),
                             "value": v, "n": n}
                            for h, v, n in rows
                        ]
                        for series, rows in s.rolling.items()
                    },
                }
                for s in self.summaries
            ],
            "diebold_mariano": [
                {"a": a, "b": b, "statistic": stat, "p_value": p}
                for a, b, stat, p in self.dm_pairs
            ],
        }


# Shared payload for parallel runs: workers are forked after this is set, so
# the stream and the precomputed feature table are inherited copy-on-write
# instead of being pickled once per task.
_POOL_PAYLOAD: dict = {}


def _run_indexed(index: int) -> RunResult:
    payload = _POOL_PAYLOAD
    strategy = payload["strategies"][index]
    return prequential_run(payload["stream"], payload["learner"], strategy,
                           detector_params=payload["params"].get(strategy.detector or "", {}),
                           table=payload["table"])


def compare_strategies(stream: DemandStream, learner: LearnerSpec,
                       strategies: Sequence[StrategyConfig], *,
                       detector_params: dict[str, dict] | None = None,
                       metric_mode: str = "pooled", jobs: int = 1) -> EvaluationReport:
    """Evaluate every strategy on the identical stream and assemble the
    comparison report (summary metrics, rolling curves, pairwise DM)."""
    if len(strategies) < 2:
        raise ValueError("compare_strategies needs at least two strategies")
    names = [s.label for s in strategies]
    if len(set(names)) != len(names):
        raise ValueError(f"strategy labels must be unique, got {names}")
    detector_params = detector_params or {}
    table = build_feature_table(stream)
    _POOL_PAYLOAD.update(stream=stream, learner=learner, strategies=list(strategies),
                         params=detector_params, table=table)
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                runs = list(pool.map(_run_indexed, range(len(strategies))))
        else:
            runs = [_run_indexed(i) for i in range(len(strategies))]
    finally:
        _POOL_PAYLOAD.clear()

    base = runs[0].log
    for run in runs[1:]:
        if not (np.array_equal(run.log.times, base.times)
                and np.array_equal(run.log.zones, base.zones)):
            raise RuntimeError("strategy runs produced unpaired forecasts")

    epoch = stream.epoch
    summaries = []
    for run in runs:
        overall_smape, overall_rmse = overall_metrics(run.log, metric_mode)
        summaries.append(StrategySummary(
            name=run.name,
            kind=run.strategy.kind,
            detector=run.strategy.detector,
            period=run.strategy.period,
            smape=overall_smape,
            rmse=overall_rmse,
            updates=run.updates,
            retrains=run.retrains,
            rolling={
                "quarterly_rmse": rolling_metric(run.log, "rmse", "quarter", epoch),
                "quarterly_smape": rolling_metric(run.log, "smape", "quarter", epoch),
                "yearly_smape": rolling_metric(run.log, "smape", "year", epoch),
            },
        ))

    dm_pairs = []
    losses = [run.log.squared_errors() for run in runs]
    for i in range(len(runs)):
        for j in range(i + 1, len(runs)):
            stat, p = diebold_mariano(losses[i], losses[j])
            dm_pairs.append((runs[i].name, runs[j].name, stat, p))

    forecast_start = int(base.times.min())
    forecast_end = int(base.times.max()) + 1
    return EvaluationReport(summaries, dm_pairs, metric_mode,
                            forecast_start, forecast_end, epoch, runs)


# -- report writers -----------------------------------------------------------


def write_report_json(report: EvaluationReport, path, extra: dict | None = None) -> None:
    payload = report.to_json_dict()
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_summary_csv(report: EvaluationReport, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("strategy", "kind", "detector", "period", "smape",
                         "rmse", "updates", "retrains"))
        for s in report.summaries:
            writer.writerow((s.name, s.kind, s.detector or "", s.period or "",
                             repr(s.smape), repr(s.rmse), s.updates, s.retrains))


def write_rolling_csv(report: EvaluationReport, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("strategy", "series", "window_start", "value", "n"))
        for s in report.summaries:
            for series, rows in s.rolling.items():
                for hour, value, n in rows:
                    writer.writerow((s.name, series,
                                     format_hour(hour, report.epoch), repr(value), n))


def write_dm_csv(report: EvaluationReport, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("strategy_a", "strategy_b", "dm_statistic", "p_value"))
        for a, b, stat, p in report.dm_pairs:
            writer.writerow((a, b, repr(stat), repr(p)))
