"""Adaptive anomaly thresholds.

Each output section owns a small convolutional forecaster over its own
prediction-error series. Per detection interval the recent error series is
median-filtered, every unit-shifted window is pushed through the forecaster,
and the threshold becomes a constant offset plus the largest forecast. The
offset (validation mean + std of the error) never changes after deployment;
the forecaster itself keeps learning with one SGD epoch per interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from plantguard.errors import ConfigError, DimensionError, TrainingDivergenceError
from plantguard.nn.layers import Conv1d, Dense, Flatten, LeakyReLU, MaxPool1d, Reshape, Sequential
from plantguard.nn.optim import SgdConfig, SgdOptimizer


def median_filter(series, kernel: int) -> np.ndarray:
    """Same-length median filter; centered windows shrink at the boundaries."""
    if kernel < 1 or kernel % 2 == 0:
        raise ConfigError(f"median kernel must be odd and positive, got {kernel}")
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"median_filter expects a 1-d series, got shape {x.shape}")
    if kernel == 1 or x.size == 0:
        return x.copy()
    half = kernel // 2
    n = x.size
    out = np.empty(n)
    if n >= kernel:
        windows = np.lib.stride_tricks.sliding_window_view(x, kernel)
        out[half : n - half] = np.median(windows, axis=1)
    for i in range(min(half, n)):
        out[i] = np.median(x[: i + half + 1])
    for i in range(max(n - half, 0), n):
        out[i] = np.median(x[max(0, i - half) :])
    return out


def compute_t_base(validation_errors) -> float:
    """Mean plus population standard deviation of the validation errors."""
    e = np.asarray(validation_errors, dtype=np.float64)
    if e.size == 0:
        raise DimensionError("t_base needs a non-empty error series")
    return float(e.mean() + e.std())


def build_ttnn(w_in: int, w_out: int = 4, seed: int = 0) -> Sequential:
    """Error forecaster: two conv/pool stages and a single output neuron.

    Input is a length-w_in error window; output is one scalar.
    """
    rng = np.random.default_rng(seed)
    t = w_in
    for _ in range(2):
        if t < 2:
            raise ConfigError(f"w_in {w_in} too short for two conv/pool stages")
        t = -(-(t - 1) // 2)
    net = Sequential([
        Reshape(1, w_in),
        Conv1d(1, 2, 2, rng),
        LeakyReLU(),
        MaxPool1d(2),
        Conv1d(2, w_out, 2, rng),
        LeakyReLU(),
        MaxPool1d(2),
        Flatten(),
    ])
    probe = net.forward(np.zeros((1, w_in)))
    net.layers.append(Dense(probe.shape[1], 1, rng))
    net.layers.append(LeakyReLU())
    net._caches = None
    return net


def ttnn_forward(ttnn: Sequential, windows: np.ndarray) -> np.ndarray:
    """Batch of windows (n x w_in) -> scalar estimate per window."""
    return ttnn.forward(np.asarray(windows, dtype=np.float64))[:, 0]


@dataclass
class ErrorWindowBatch:
    """s overlapping error windows as unit-shifted views over one series.

    The underlying series has length w_in + s and starts at the detection
    interval's look-back origin (interval start minus horizon minus w_in).
    """

    series: np.ndarray
    w_in: int
    start_time: int = 0

    def __post_init__(self):
        self.series = np.asarray(self.series, dtype=np.float64)
        if self.series.ndim != 1 or self.series.size <= self.w_in:
            raise DimensionError(
                f"need a 1-d series longer than w_in={self.w_in}, got shape {self.series.shape}"
            )

    @property
    def s(self) -> int:
        return self.series.size - self.w_in

    def windows(self, filtered: np.ndarray | None = None) -> np.ndarray:
        src = self.series if filtered is None else filtered
        return np.lib.stride_tricks.sliding_window_view(src, self.w_in)[: self.s]


@dataclass
class ThresholdState:
    """Per-section threshold bookkeeping across tuning rounds."""

    t_base: float
    med_kernel: int
    t_g: float = 0.0
    t_est: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if self.med_kernel < 1 or self.med_kernel % 2 == 0:
            raise ConfigError(f"median kernel must be odd, got {self.med_kernel}")
        if self.t_base < 0:
            raise ConfigError("t_base must be non-negative")


def tune_threshold(
    ttnn: Sequential,
    batch: ErrorWindowBatch,
    t_base: float,
    med_kernel: int,
) -> tuple:
    """One tuning round: filter, forecast each window, offset by the base.

    Forecasts are floored at zero before the max: the forecast target is a
    mean squared error, which cannot be negative, and the floor guarantees
    the returned threshold never drops below t_base.
    Returns (t_g, estimates).
    """
    filtered = median_filter(batch.series, med_kernel)
    estimates = np.maximum(ttnn_forward(ttnn, batch.windows(filtered)), 0.0)
    return t_base + float(estimates.max()), estimates


def _forecast_instances(series: np.ndarray, w_in: int, horizon: int):
    """Windows of the error series paired with the value horizon steps past
    each window's end -- the same input/target geometry the main forecaster uses."""
    n = series.size - w_in - horizon
    if n < 1:
        raise DimensionError(
            f"series of length {series.size} too short for w_in={w_in}, horizon={horizon}"
        )
    x = np.lib.stride_tricks.sliding_window_view(series, w_in)[:n]
    y = series[w_in + horizon : w_in + horizon + n]
    return x, y


def train_ttnn(
    ttnn: Sequential,
    series,
    cfg: SgdConfig,
    epochs: int,
    w_in: int,
    horizon: int,
    seed: int = 0,
) -> list:
    """Fits the forecaster to the validation error series; returns the loss trace."""
    series = np.asarray(series, dtype=np.float64)
    x, y = _forecast_instances(series, w_in, horizon)
    params = ttnn.params()
    opt = SgdOptimizer(cfg)
    order_rng = np.random.default_rng(seed)
    trace = []
    for epoch in range(epochs):
        order = order_rng.permutation(x.shape[0])
        epoch_loss = 0.0
        batches = 0
        for lo in range(0, x.shape[0], cfg.batch_size):
            sel = order[lo : lo + cfg.batch_size]
            pred = ttnn_forward(ttnn, x[sel])
            err = pred - y[sel]
            loss = float(np.mean(err**2))
            if not np.isfinite(loss):
                raise TrainingDivergenceError(f"ttnn loss diverged at epoch {epoch}", epoch=epoch)
            _, grads = ttnn.backward((2.0 * err / err.size)[:, None])
            opt.step(params, grads)
            epoch_loss += loss
            batches += 1
        trace.append(epoch_loss / batches)
    return trace


def online_update(
    ttnn: Sequential,
    batch: ErrorWindowBatch,
    targets,
    cfg: SgdConfig,
    velocity: dict | None = None,
) -> dict:
    """One self-supervised SGD epoch on the interval's raw error windows.

    ``targets`` are the errors observed at the forecast horizon of each
    window, i.e. the current interval's values. Returns the velocity dict so
    a caller can keep momentum across intervals.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != (batch.s,):
        raise DimensionError(f"expected {batch.s} targets, got shape {targets.shape}")
    pred = ttnn_forward(ttnn, batch.windows())
    err = pred - targets
    loss = float(np.mean(err**2))
    if not np.isfinite(loss):
        raise TrainingDivergenceError("ttnn online update diverged")
    _, grads = ttnn.backward((2.0 * err / err.size)[:, None])
    opt = SgdOptimizer(cfg)
    if velocity is not None:
        opt.velocity = velocity
    opt.step(ttnn.params(), grads)
    return opt.velocity
