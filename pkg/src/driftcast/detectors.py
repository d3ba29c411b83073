"""Streaming drift detectors.

ADWIN and STEPD monitor the binary correctness stream derived from the
predictions (a forecast counts as correct when it lands within 10% of the
actual value). HDDDM and the streaming Mann-Kendall test monitor the
seasonally differenced raw demand instead, so they react to distribution
and trend changes without being distracted by daily or weekly cycles.

Every detector is a deterministic state machine: ``step`` consumes one
element and returns one of the verdicts below. A drift verdict always
resets the detector's internal reference state.
"""

from __future__ import annotations

import bisect
import csv
import math
from collections import deque
from pathlib import Path
from typing import Sequence

import numpy as np

from .normal import normal_two_sided_p
from .timegrid import DEFAULT_EPOCH, format_hour

STABLE = "stable"
WARNING = "warning"
DRIFT = "drift"

BINARY_INPUT = "binary"
DIFFERENCED_INPUT = "differenced"


def binarize(actual: float, predicted: float, rel_tol: float = 0.10,
             eps_zero: float = 1.0) -> bool:
    """Correctness flag of one prediction: within ``rel_tol`` of the actual
    value (boundary inclusive). ``eps_zero`` guards zero-demand hours."""
    if actual < 0:
        raise ValueError("actual demand must be non-negative")
    return abs(predicted - actual) <= rel_tol * max(actual, eps_zero)


def binarize_array(actual: np.ndarray, predicted: np.ndarray,
                   rel_tol: float = 0.10, eps_zero: float = 1.0) -> np.ndarray:
    return np.abs(predicted - actual) <= rel_tol * np.maximum(actual, eps_zero)


class Adwin:
    """Adaptive windowing over a [0, 1] stream (Bifet & Gavalda style).

    The window is kept as an exponential histogram: at most ``max_buckets``
    buckets per level, bucket sizes are powers of two and merging always
    takes the two oldest buckets of a level. After each insertion every
    bucket-boundary split of the window is tested; the older part is
    dropped whenever the two sub-window means differ by at least

        eps_cut = sqrt((1/2) * (1/n0 + 1/n1) * ln(4 * n / delta))

    which uses delta' = delta / n as the per-window confidence correction.
    """

    def __init__(self, delta: float = 0.002, max_buckets: int = 5):
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.delta = delta
        self.max_buckets = max_buckets
        self._levels: list[list[float]] = [[]]  # per level: bucket sums, oldest first
        self._total_count = 0
        self._total_sum = 0.0

    @property
    def width(self) -> int:
        return self._total_count

    @property
    def mean(self) -> float:
        if self._total_count == 0:
            raise ValueError("empty window has no mean")
        return self._total_sum / self._total_count

    def _insert(self, x: float) -> None:
        self._levels[0].append(x)
        self._total_count += 1
        self._total_sum += x
        level = 0
        while len(self._levels[level]) > self.max_buckets:
            if level + 1 == len(self._levels):
                self._levels.append([])
            merged = self._levels[level].pop(0) + self._levels[level].pop(0)
            self._levels[level + 1].append(merged)
            level += 1

    def _flatten(self) -> tuple[np.ndarray, np.ndarray]:
        """Buckets oldest to newest as (sizes, sums) arrays."""
        sizes: list[int] = []
        sums: list[float] = []
        for level in range(len(self._levels) - 1, -1, -1):
            row = self._levels[level]
            if row:
                sizes.extend([1 << level] * len(row))
                sums.extend(row)
        return np.asarray(sizes, dtype=float), np.asarray(sums)

    def _drop_oldest_bucket(self) -> None:
        for level in range(len(self._levels) - 1, -1, -1):
            row = self._levels[level]
            if row:
                dropped = row.pop(0)
                self._total_count -= 1 << level
                self._total_sum -= dropped
                return
        raise RuntimeError("drop on empty window")

    def largest_bucket_size(self) -> int:
        for level in range(len(self._levels) - 1, -1, -1):
            if self._levels[level]:
                return 1 << level
        return 0

    def step(self, x: float) -> str:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"ADWIN input must lie in [0, 1], got {x}")
        self._insert(x)
        dropped = False
        while self._total_count > 1:
            sizes, sums = self._flatten()
            if len(sizes) < 2:
                break
            n = self._total_count
            ln_term = math.log(4.0 * n / self.delta)
            n0 = np.cumsum(sizes[:-1])
            s0 = np.cumsum(sums[:-1])
            n1 = n - n0
            s1 = self._total_sum - s0
            diff = s0 / n0 - s1 / n1
            eps_sq = 0.5 * (1.0 / n0 + 1.0 / n1) * ln_term
            if not (diff * diff >= eps_sq).any():
                break
            self._drop_oldest_bucket()
            dropped = True
        return DRIFT if dropped else STABLE


class Stepd:
    """Statistical test of equal proportions (Nishida & Yamauchi) between
    the recent window and the overall history since the last reset.

    With overall counts (r_o, n_o) excluding the recent window and recent
    counts (r_r, n_r = w), the continuity-corrected statistic

        T = (|r_o/n_o - r_r/n_r| - 0.5 (1/n_o + 1/n_r))
            / sqrt(p (1 - p) (1/n_o + 1/n_r)),   p = (r_o + r_r)/(n_o + n_r)

    is compared to the standard normal (two-sided). A non-positive T means
    the proportions agree up to the correction and is always stable.
    """

    def __init__(self, window: int = 30, alpha_drift: float = 0.003,
                 alpha_warning: float = 0.05):
        if window < 1:
            raise ValueError("window must be positive")
        self.window = window
        self.alpha_drift = alpha_drift
        self.alpha_warning = alpha_warning
        self._reset()

    def _reset(self) -> None:
        self._recent: deque[int] = deque()
        self._recent_correct = 0
        self._overall_correct = 0
        self._overall_n = 0

    def step(self, correct: bool) -> str:
        value = 1 if correct else 0
        self._recent.append(value)
        self._recent_correct += value
        if len(self._recent) > self.window:
            oldest = self._recent.popleft()
            self._recent_correct -= oldest
            self._overall_correct += oldest
            self._overall_n += 1
        if self._overall_n < self.window:
            return STABLE

        n_o, n_r = self._overall_n, len(self._recent)
        r_o, r_r = self._overall_correct, self._recent_correct
        p_hat = (r_o + r_r) / (n_o + n_r)
        if p_hat <= 0.0 or p_hat >= 1.0:
            return STABLE
        inv = 1.0 / n_o + 1.0 / n_r
        t = (abs(r_o / n_o - r_r / n_r) - 0.5 * inv) / math.sqrt(p_hat * (1.0 - p_hat) * inv)
        if t <= 0.0:
            return STABLE
        p_value = normal_two_sided_p(t)
        if p_value < self.alpha_drift:
            self._reset()
            return DRIFT
        if p_value < self.alpha_warning:
            return WARNING
        return STABLE


def hellinger_distance(p: Sequence[float], q: Sequence[float]) -> float:
    """Hellinger distance between two histograms over identical bin edges.

    sqrt(sum_k (sqrt(p_k / N_p) - sqrt(q_k / N_q))^2), bounded by sqrt(2).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"histograms must share binning, got {p.shape} vs {q.shape}")
    n_p, n_q = p.sum(), q.sum()
    if n_p <= 0 or n_q <= 0:
        raise ValueError("histograms need at least one count each")
    return float(np.sqrt(np.sum((np.sqrt(p / n_p) - np.sqrt(q / n_q)) ** 2)))


class Hdddm:
    """Hellinger-distance drift detection over batches of raw observations
    (Ditzler & Polikar's increment-thresholding scheme).

    Each full batch is histogrammed against the baseline using shared bin
    edges spanning both samples; the step change in distance eps(t) = d(t)
    - d(t-1) is compared with mean(|eps|) + gamma * std(|eps|) over the
    increments seen since the last drift. On drift the batch becomes the
    new baseline and the increment history is cleared; otherwise the batch
    merges into the baseline. Fewer than two batches since a reset can
    never signal (insufficient increment history).
    """

    def __init__(self, batch_size: int = 168, gamma: float = 1.0,
                 n_bins: int | None = None):
        if batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        self.batch_size = batch_size
        self.gamma = gamma
        self.n_bins = n_bins if n_bins is not None else int(math.floor(math.sqrt(batch_size)))
        self._buffer: list[float] = []
        self._baseline: np.ndarray | None = None
        self._prev_distance: float | None = None
        self._eps_history: list[float] = []

    def _distance(self, batch: np.ndarray) -> float:
        combined_lo = min(self._baseline.min(), batch.min())
        combined_hi = max(self._baseline.max(), batch.max())
        if combined_lo == combined_hi:
            return 0.0
        edges = np.linspace(combined_lo, combined_hi, self.n_bins + 1)
        hist_base, _ = np.histogram(self._baseline, bins=edges)
        hist_batch, _ = np.histogram(batch, bins=edges)
        return hellinger_distance(hist_base, hist_batch)

    def step_batch(self, batch: Sequence[float]) -> str:
        batch = np.asarray(batch, dtype=float)
        if len(batch) != self.batch_size:
            raise ValueError(f"expected a complete batch of {self.batch_size} values")
        if self._baseline is None:
            self._baseline = batch
            return STABLE
        distance = self._distance(batch)
        eps = distance - (self._prev_distance if self._prev_distance is not None else 0.0)
        history = self._eps_history
        can_signal = bool(history) and math.isfinite(self.gamma)
        if can_signal:
            magnitudes = np.abs(history)
            threshold = magnitudes.mean() + self.gamma * magnitudes.std()
            if abs(eps) > threshold:
                self._baseline = batch
                self._prev_distance = None
                self._eps_history = []
                return DRIFT
        self._eps_history.append(eps)
        self._prev_distance = distance
        self._baseline = np.concatenate([self._baseline, batch])
        return STABLE

    def step(self, x: float) -> str:
        """Element-wise feed; emits a verdict once per completed batch."""
        self._buffer.append(float(x))
        if len(self._buffer) < self.batch_size:
            return STABLE
        batch, self._buffer = self._buffer, []
        return self.step_batch(batch)


def mk_statistic(values: Sequence[float]) -> tuple[int, float, float]:
    """Mann-Kendall trend statistic for a series of n >= 4 observations.

    Returns (S, var_S, Z) with S = sum_{i<j} sgn(x_j - x_i), the
    tie-corrected variance

        var_S = [n(n-1)(2n+5) - sum_k t_k (t_k - 1)(2 t_k + 5)] / 18

    and the normal approximation Z with the +/-1 continuity correction.
    Pair counting runs in O(n log n) via a Fenwick tree over value ranks.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 4:
        raise ValueError(f"Mann-Kendall needs at least 4 observations, got {n}")
    uniq, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    m = uniq.size
    tree = [0] * (m + 1)
    s = 0
    for seen, rank in enumerate(inverse + 1):
        rank = int(rank)
        i, less = rank - 1, 0
        while i > 0:
            less += tree[i]
            i -= i & -i
        i, less_or_equal = rank, 0
        while i > 0:
            less_or_equal += tree[i]
            i -= i & -i
        greater = seen - less_or_equal
        s += less - greater
        i = rank
        while i <= m:
            tree[i] += 1
            i += i & -i
    ties = counts * (counts - 1) * (2 * counts + 5)
    var_s = (n * (n - 1) * (2 * n + 5) - int(ties.sum())) / 18.0
    if s > 0:
        z = (s - 1) / math.sqrt(var_s)
    elif s < 0:
        z = (s + 1) / math.sqrt(var_s)
    else:
        z = 0.0
    return int(s), float(var_s), float(z)


class MannKendallStream:
    """Streaming Mann-Kendall drift detection on blocks of n observations.

    The test runs whenever the buffer reaches a multiple of ``block_size``,
    always over the whole buffer; a significant monotone trend (two-sided
    at ``alpha``) signals drift and resets the buffer, otherwise the next
    block accumulates on top.

    S and the tie correction are maintained incrementally (each arriving
    element contributes #smaller - #larger against the existing buffer), so
    an evaluation costs O(1) on top of the per-element O(log n) insertion;
    the result is bit-identical to running :func:`mk_statistic` on the
    whole buffer.
    """

    def __init__(self, block_size: int = 168, alpha: float = 0.05):
        if block_size < 4:
            raise ValueError("block_size must be at least 4")
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        self.block_size = block_size
        self.alpha = alpha
        self.evaluations = 0
        self._reset()

    def _reset(self) -> None:
        self._n = 0
        self._sorted: list[float] = []
        self._s = 0
        self._tie_counts: dict[float, int] = {}
        self._tie_term = 0  # sum over groups of t (t - 1) (2 t + 5)

    @property
    def buffer_length(self) -> int:
        return self._n

    def current_statistic(self) -> tuple[int, float, float]:
        """(S, var_S, Z) of the buffer as accumulated so far."""
        n = self._n
        var_s = (n * (n - 1) * (2 * n + 5) - self._tie_term) / 18.0
        s = self._s
        if s > 0:
            z = (s - 1) / math.sqrt(var_s)
        elif s < 0:
            z = (s + 1) / math.sqrt(var_s)
        else:
            z = 0.0
        return s, var_s, z

    def step(self, x: float) -> str:
        x = float(x)
        less = bisect.bisect_left(self._sorted, x)
        greater = self._n - bisect.bisect_right(self._sorted, x)
        self._s += less - greater
        bisect.insort(self._sorted, x)
        self._n += 1
        count = self._tie_counts.get(x, 0) + 1
        self._tie_counts[x] = count
        if count > 1:
            self._tie_term += (count * (count - 1) * (2 * count + 5)
                               - (count - 1) * (count - 2) * (2 * count + 3))
        if self._n % self.block_size != 0:
            return STABLE
        self.evaluations += 1
        _, _, z = self.current_statistic()
        if normal_two_sided_p(z) < self.alpha:
            self._reset()
            return DRIFT
        return STABLE


DETECTOR_INPUTS = {
    "adwin": BINARY_INPUT,
    "stepd": BINARY_INPUT,
    "hdddm": DIFFERENCED_INPUT,
    "mk": DIFFERENCED_INPUT,
}


def make_detector(kind: str, **params):
    """Factory over the four detector families by id."""
    builders = {
        "adwin": Adwin,
        "stepd": Stepd,
        "hdddm": Hdddm,
        "mk": MannKendallStream,
    }
    if kind not in builders:
        raise ValueError(f"unknown detector {kind!r}; expected one of {sorted(builders)}")
    return builders[kind](**params)


def write_verdict_log(path, events: Sequence[tuple[int, str, str]],
                      epoch=DEFAULT_EPOCH) -> None:
    """Audit log of non-stable detector verdicts: time_hour,detector,status."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("time_hour", "detector", "status"))
        for hour, detector, status in events:
            writer.writerow((format_hour(hour, epoch), detector, status))
