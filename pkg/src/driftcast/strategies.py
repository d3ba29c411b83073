"""The adaptation layer: when to do nothing, update, or retrain.

Six strategy kinds cover the grid of adaptation trigger (periodic clock
vs. drift detector) and learning mode (incremental update vs. full
retrain), plus two degenerate-free extremes: ``static`` never adapts, and
``switching`` picks per drift signal: update while the last retrain is
younger than the lockout tau, retrain (and reset the lockout clock) once
it is older.

Decisions are anchored at the hour about to be forecast, so an action at
anchor a may use every observation strictly before a: a retrain fits the
sliding lambda-year window [a - lambda, a), an update fits everything
since the previous adaptive action.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence

from .features import FeatureTable
from .timegrid import (DEFAULT_EPOCH, SlidingWindow, format_hour,
                       is_quarter_boundary, is_year_boundary)

log = logging.getLogger(__name__)

STRATEGY_KINDS = ("static", "periodic_update", "periodic_retrain",
                  "triggered_update", "triggered_retrain", "switching")
PERIODS = ("quarterly", "yearly")

HOURS_PER_TAU_YEAR = 8760  # lockout clock runs on flat 365-day years


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "static"
    period: str | None = None          # periodic_* only
    detector: str | None = None        # triggered_* and switching only
    lambda_years: int = 2              # sliding training-window length
    tau_years: float = 1.0             # switching retrain lockout
    update_window_hours: int | None = None  # None: batch since the last action
    name: str | None = None

    def validate(self) -> None:
        problems = []
        if self.kind not in STRATEGY_KINDS:
            problems.append(f"kind must be one of {STRATEGY_KINDS}")
        if self.kind.startswith("periodic"):
            if self.period not in PERIODS:
                problems.append(f"periodic strategies need period in {PERIODS}")
        if self.kind.startswith("triggered") or self.kind == "switching":
            if not self.detector:
                problems.append(f"strategy kind {self.kind!r} requires a detector")
        if self.lambda_years <= 0:
            problems.append("lambda_years must be positive")
        if self.kind == "switching" and (math.isnan(self.tau_years) or self.tau_years < 0):
            problems.append("tau_years must be non-negative")
        if self.update_window_hours is not None and self.update_window_hours <= 0:
            problems.append("update_window_hours must be positive when set")
        if problems:
            raise ValueError("invalid strategy config: " + "; ".join(problems))

    @property
    def needs_detector(self) -> bool:
        return self.kind.startswith("triggered") or self.kind == "switching"

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "static":
            return "static"
        if self.kind.startswith("periodic"):
            return f"{self.period}_{self.kind.split('_')[1]}"
        return f"{self.detector}_{self.kind.removeprefix('triggered_')}"


@dataclass
class StrategyState:
    last_retrain: int
    last_action: int
    updates: int = 0
    retrains: int = 0


@dataclass(frozen=True)
class AdaptationAction:
    """One commanded adaptation; ``window`` is half-open in hours."""

    kind: str  # "none" | "update" | "retrain"
    window_start: int = 0
    window_end: int = 0


NO_ACTION = AdaptationAction("none")


class AdaptationPolicy:
    """Stateful decision machine for one prequential run."""

    def __init__(self, config: StrategyConfig, initial_anchor: int,
                 epoch: datetime = DEFAULT_EPOCH):
        config.validate()
        self.config = config
        self.epoch = epoch
        self.state = StrategyState(last_retrain=initial_anchor, last_action=initial_anchor)
        tau = config.tau_years
        self._tau_hours = math.inf if math.isinf(tau) else round(tau * HOURS_PER_TAU_YEAR)

    def _retrain_action(self, anchor: int) -> AdaptationAction:
        window = SlidingWindow(self.config.lambda_years, "year", anchor)
        return AdaptationAction("retrain", window.start(self.epoch), anchor)

    def _update_action(self, anchor: int) -> AdaptationAction:
        if self.config.update_window_hours is not None:
            return AdaptationAction("update", anchor - self.config.update_window_hours, anchor)
        return AdaptationAction("update", self.state.last_action, anchor)

    def _is_boundary(self, anchor: int) -> bool:
        if self.config.period == "yearly":
            return is_year_boundary(anchor, self.epoch)
        return is_quarter_boundary(anchor, self.epoch)

    def decide(self, anchor: int, drift: bool) -> AdaptationAction:
        """Decide the action anchored at ``anchor`` (the next forecast hour).

        ``drift`` is the collapsed detector verdict of the hour just
        observed; periodic and static strategies ignore it.
        """
        kind = self.config.kind
        if kind == "static":
            return NO_ACTION
        if kind in ("periodic_update", "periodic_retrain"):
            if not self._is_boundary(anchor):
                return NO_ACTION
            action = (self._retrain_action(anchor) if kind == "periodic_retrain"
                      else self._update_action(anchor))
        else:
            if not drift:
                return NO_ACTION
            if kind == "triggered_update":
                action = self._update_action(anchor)
            elif kind == "triggered_retrain":
                action = self._retrain_action(anchor)
            else:  # switching: update inside the lockout, retrain past it
                if anchor - self.state.last_retrain < self._tau_hours:
                    action = self._update_action(anchor)
                else:
                    action = self._retrain_action(anchor)
        if action.kind == "retrain":
            self.state.last_retrain = anchor
            self.state.retrains += 1
        else:
            self.state.updates += 1
        self.state.last_action = anchor
        return action


def apply_action(action: AdaptationAction, forecaster, table: FeatureTable) -> bool:
    """Execute an action against the forecaster; returns True when applied.

    An action whose window holds no scorable rows (stream head, or an empty
    since-last-action batch) downgrades to a logged no-op.
    """
    if action.kind == "none":
        return False
    X, y = table.window(action.window_start, action.window_end)
    if len(X) == 0:
        log.warning("%s action over empty window [%s, %s) downgraded to none",
                    action.kind, action.window_start, action.window_end)
        return False
    if action.kind == "retrain":
        forecaster.train(X, y)
    else:
        forecaster.update(X, y)
    return True


def write_action_log(path, events: Sequence[tuple[int, AdaptationAction]],
                     epoch: datetime = DEFAULT_EPOCH) -> None:
    """Action trace CSV: time_hour,action,window_start,window_end."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("time_hour", "action", "window_start", "window_end"))
        for anchor, action in events:
            writer.writerow((format_hour(anchor, epoch), action.kind,
                             format_hour(action.window_start, epoch),
                             format_hour(action.window_end, epoch)))
