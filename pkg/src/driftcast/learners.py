"""Prediction models behind the dual train/update contract.

Every forecaster exposes the two learning modes the adaptation layer
composes: ``train`` fits a fresh model on a window (all prior learned
state discarded) and ``update`` continues fitting the existing parameters
on a recent batch. ``predict`` is side-effect free.

The workhorse is a single-hidden-layer rectifier network trained by plain
seeded mini-batch gradient descent on squared error, with inverted
dropout during fitting only. Feature standardization statistics freeze at
train time and are reused across updates until the next retrain.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .features import FeatureLayout, Standardizer
from .stream import DemandStream

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpConfig:
    hidden_units: int = 128
    activation: str = "relu"
    dropout_rate: float = 0.5
    learning_rate: float = 1e-3
    lr_decay: float = 0.99  # multiplicative per-epoch decay
    epochs_train: int = 30
    epochs_update: int = 5
    batch_size: int = 128
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.hidden_units <= 0:
            problems.append("hidden_units must be positive")
        if self.activation != "relu":
            problems.append("only the rectifier activation is supported")
        if not 0.0 <= self.dropout_rate < 1.0:
            problems.append("dropout_rate must lie in [0, 1)")
        if self.learning_rate < 0:
            problems.append("learning_rate must be non-negative")
        if not 0.0 < self.lr_decay <= 1.0:
            problems.append("lr_decay must lie in (0, 1]")
        if self.epochs_train < 0 or self.epochs_update < 0:
            problems.append("epoch counts must be non-negative")
        if self.batch_size <= 0:
            problems.append("batch_size must be positive")
        if problems:
            raise ValueError("invalid MLP config: " + "; ".join(problems))


class MlpRegressor:
    """input -> hidden rectifier -> linear scalar output, squared error loss.

    Arithmetic runs in the parameter dtype: float32 by default (the
    network is small, targets are standardized, and single precision
    roughly halves the cost of the prequential retrain loops); pass
    float64 when verifying gradients against finite differences.
    """

    def __init__(self, config: MlpConfig, input_dim: int, dtype=np.float32):
        config.validate()
        self.config = config
        self.input_dim = input_dim
        self.dtype = np.dtype(dtype)
        self._rng = np.random.default_rng(config.seed)
        self._init_params()

    def _init_params(self) -> None:
        h = self.config.hidden_units
        rng = np.random.default_rng(self.config.seed)
        self.W1 = rng.normal(0.0, np.sqrt(2.0 / self.input_dim),
                             (self.input_dim, h)).astype(self.dtype)
        self.b1 = np.zeros(h, dtype=self.dtype)
        self.W2 = rng.normal(0.0, np.sqrt(1.0 / h), (h, 1)).astype(self.dtype)
        self.b2 = np.zeros(1, dtype=self.dtype)

    # -- forward / backward ----------------------------------------------

    def forward(self, X: np.ndarray) -> np.ndarray:
        """Raw forward pass (dropout disabled); no clamping."""
        X = np.asarray(X, dtype=self.dtype)
        hidden = np.maximum(X @ self.W1 + self.b1, 0.0)
        return (hidden @ self.W2 + self.b2).ravel().astype(np.float64)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Deterministic forward pass clamped at zero (demand is count data)."""
        return np.maximum(self.forward(np.atleast_2d(X)), 0.0)

    def loss_and_gradients(self, X: np.ndarray, y: np.ndarray,
                           dropout_mask: np.ndarray | None = None):
        """Mean squared error and its gradients w.r.t. all parameters.

        ``dropout_mask`` is the pre-scaled inverted-dropout mask applied to
        the hidden activations (training passes only).
        """
        n = len(X)
        X = np.asarray(X, dtype=self.dtype)
        y = np.asarray(y, dtype=self.dtype)
        pre = X @ self.W1 + self.b1
        hidden = np.maximum(pre, 0.0)
        if dropout_mask is not None:
            hidden = hidden * dropout_mask
        pred = (hidden @ self.W2 + self.b2).ravel()
        err = pred - y
        loss = float(err @ err) / n

        grad_pred = err * self.dtype.type(2.0 / n)
        grad_W2 = hidden.T @ grad_pred[:, None]
        grad_b2 = grad_pred.sum(keepdims=True)
        grad_hidden = grad_pred[:, None] @ self.W2.T
        if dropout_mask is not None:
            grad_hidden = grad_hidden * dropout_mask
        grad_hidden[pre <= 0.0] = 0.0
        grad_W1 = X.T @ grad_hidden
        grad_b1 = grad_hidden.sum(axis=0)
        return loss, {"W1": grad_W1, "b1": grad_b1, "W2": grad_W2, "b2": grad_b2}

    # -- fitting -----------------------------------------------------------

    def _sgd_step(self, X: np.ndarray, y: np.ndarray, lr: float,
                  dropout_mask: np.ndarray | None) -> None:
        """One gradient-descent step; same math as loss_and_gradients with
        the loss scalar skipped (training never reads it)."""
        pre = X @ self.W1 + self.b1
        hidden = np.maximum(pre, 0.0)
        if dropout_mask is not None:
            hidden *= dropout_mask
        err = (hidden @ self.W2 + self.b2).ravel()
        err -= y
        grad_pred = err * self.dtype.type(2.0 * lr / len(X))
        grad_hidden = grad_pred[:, None] @ self.W2.T
        if dropout_mask is not None:
            grad_hidden *= dropout_mask
        grad_hidden[pre <= 0.0] = 0.0
        self.W2 -= hidden.T @ grad_pred[:, None]
        self.b2 -= grad_pred.sum()
        self.W1 -= X.T @ grad_hidden
        self.b1 -= grad_hidden.sum(axis=0)

    def _run_epochs(self, X: np.ndarray, y: np.ndarray, epochs: int) -> None:
        # one seeded shuffle per call; epochs then cycle the fixed mini-batch
        # partition (cheaper than reshuffling and just as good at this scale)
        cfg = self.config
        n = len(X)
        order = self._rng.permutation(n)
        X = np.ascontiguousarray(X[order], dtype=self.dtype)
        y = np.ascontiguousarray(y[order], dtype=self.dtype)
        lr = cfg.learning_rate
        keep = 1.0 - cfg.dropout_rate
        for _ in range(epochs):
            for lo in range(0, n, cfg.batch_size):
                batch_X = X[lo:lo + cfg.batch_size]
                batch_y = y[lo:lo + cfg.batch_size]
                mask = None
                if cfg.dropout_rate > 0.0:
                    mask = ((self._rng.random((len(batch_X), cfg.hidden_units))
                             < keep) / keep).astype(self.dtype)
                self._sgd_step(batch_X, batch_y, lr, mask)
            lr *= cfg.lr_decay

    def fit(self, X: np.ndarray, y: np.ndarray) -> "MlpRegressor":
        """Fresh training: reinitializes all parameters, then runs
        ``epochs_train`` epochs of mini-batch gradient descent."""
        if len(X) == 0:
            raise ValueError("cannot train on an empty window")
        self._rng = np.random.default_rng(self.config.seed)
        self._init_params()
        self._run_epochs(X, y, self.config.epochs_train)
        return self

    def update(self, X: np.ndarray, y: np.ndarray) -> "MlpRegressor":
        """Incremental learning: ``epochs_update`` passes over the batch,
        mutating the existing parameters without reinitialization."""
        if len(X) == 0:
            log.warning("update called with an empty batch; no-op")
            return self
        self._run_epochs(X, y, self.config.epochs_update)
        return self

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": MODEL_FORMAT_VERSION,
            "config": asdict(self.config),
            "input_dim": self.input_dim,
            "params": {
                "W1": self.W1.ravel().tolist(),
                "b1": self.b1.tolist(),
                "W2": self.W2.ravel().tolist(),
                "b2": self.b2.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MlpRegressor":
        if payload.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {payload.get('version')}")
        config = MlpConfig(**payload["config"])
        model = cls(config, payload["input_dim"])
        params = payload["params"]
        h = config.hidden_units
        model.W1 = np.asarray(params["W1"], dtype=model.dtype).reshape(model.input_dim, h)
        model.b1 = np.asarray(params["b1"], dtype=model.dtype)
        model.W2 = np.asarray(params["W2"], dtype=model.dtype).reshape(h, 1)
        model.b2 = np.asarray(params["b2"], dtype=model.dtype)
        return model


# -- stream-level baselines --------------------------------------------------


def naive_predict(stream: DemandStream, t: int, zone: int) -> float:
    """Persistence forecast: demand one hour earlier."""
    return float(stream.value(t - 1, zone))


def seasonal_naive_predict(stream: DemandStream, t: int, zone: int) -> float:
    """Seasonal persistence: demand one week earlier."""
    return float(stream.value(t - 168, zone))


# -- forecasters over feature rows -------------------------------------------


@dataclass(frozen=True)
class LearnerSpec:
    kind: str = "mlp"  # mlp | naive | seasonal_naive
    mlp: MlpConfig = field(default_factory=MlpConfig)

    def validate(self) -> None:
        if self.kind not in ("mlp", "naive", "seasonal_naive"):
            raise ValueError(f"unknown learner kind: {self.kind!r}")
        if self.kind == "mlp":
            self.mlp.validate()


class NaiveForecaster:
    """Reads the t-1 lag column; train/update carry no state."""

    def __init__(self, layout: FeatureLayout):
        self._column = layout.lag_1h_column

    def train(self, X: np.ndarray, y: np.ndarray) -> None:
        pass

    def update(self, X: np.ndarray, y: np.ndarray) -> None:
        pass

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.atleast_2d(X)[:, self._column].copy()


class SeasonalNaiveForecaster(NaiveForecaster):
    """Reads the t-168 lag column."""

    def __init__(self, layout: FeatureLayout):
        self._column = layout.lag_168h_column


class MlpForecaster:
    """MLP regressor plus the frozen-at-train-time standardization.

    Both the feature columns and the target are scaled with statistics of
    the current training window; the statistics freeze at train time and
    are reused for updates and prediction until the next retrain, so the
    network always works on roughly unit-scale numbers without leaking
    test-period statistics.
    """

    def __init__(self, config: MlpConfig, layout: FeatureLayout):
        self.config = config
        self.layout = layout
        self.model = MlpRegressor(config, layout.dim)
        self.scaler = Standardizer()
        self._y_mean = 0.0
        self._y_scale = 1.0
        self._trained = False

    def train(self, X: np.ndarray, y: np.ndarray) -> None:
        if len(X) == 0:
            raise ValueError("training window is empty")
        self.scaler = Standardizer().fit(X)
        self._y_mean = float(np.mean(y))
        scale = float(np.std(y))
        self._y_scale = scale if scale > 0 else 1.0
        self.model.fit(self.scaler.transform(X), (y - self._y_mean) / self._y_scale)
        self._trained = True

    def update(self, X: np.ndarray, y: np.ndarray) -> None:
        if not self._trained:
            raise RuntimeError("update before initial training")
        if len(X) == 0:
            log.warning("update called with an empty batch; no-op")
            return
        self.model.update(self.scaler.transform(X), (y - self._y_mean) / self._y_scale)

    def predict(self, X: np.ndarray) -> np.ndarray:
        if not self._trained:
            raise RuntimeError("predict before initial training")
        X = np.atleast_2d(X)
        if X.shape[1] != self.layout.dim:
            raise ValueError(f"feature dimension {X.shape[1]} != expected {self.layout.dim}")
        raw = self.model.forward(self.scaler.transform(X))
        return np.maximum(raw * self._y_scale + self._y_mean, 0.0)

    # -- checkpointing ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": MODEL_FORMAT_VERSION,
            "kind": "mlp",
            "n_zones": self.layout.n_zones,
            "model": self.model.to_dict(),
            "scaler": {
                "mean": None if self.scaler.mean_ is None else self.scaler.mean_.tolist(),
                "scale": None if self.scaler.scale_ is None else self.scaler.scale_.tolist(),
                "y_mean": self._y_mean,
                "y_scale": self._y_scale,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MlpForecaster":
        model = MlpRegressor.from_dict(payload["model"])
        forecaster = cls(model.config, FeatureLayout(payload["n_zones"]))
        forecaster.model = model
        mean = payload["scaler"]["mean"]
        if mean is not None:
            forecaster.scaler.mean_ = np.asarray(mean)
            forecaster.scaler.scale_ = np.asarray(payload["scaler"]["scale"])
            forecaster._y_mean = payload["scaler"]["y_mean"]
            forecaster._y_scale = payload["scaler"]["y_scale"]
            forecaster._trained = True
        return forecaster

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "MlpForecaster":
        return cls.from_dict(json.loads(Path(path).read_text()))


def make_forecaster(spec: LearnerSpec, layout: FeatureLayout):
    spec.validate()
    if spec.kind == "naive":
        return NaiveForecaster(layout)
    if spec.kind == "seasonal_naive":
        return SeasonalNaiveForecaster(layout)
    return MlpForecaster(spec.mlp, layout)
