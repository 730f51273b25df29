"""Online anomaly decision logic.

A time point is anomalous when the current actuator combination was never
seen in training, or when some section's prediction error has exceeded its
threshold at every point of the trailing waiting window (the current point
plus w_anom previous ones). Sensor alarms are additionally gated by a grace
time before they reach the technician; actuator alarms are reported at once
by default, since an illegal combination is unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from plantguard.errors import ConfigError, DimensionError, PipelineOrderError, WarmupError
from plantguard.nn.functional import mse

ACTUATOR_SOURCE = "actuator"
SECTION_SOURCE = "section"


@dataclass
class DetectorConfig:
    w_anom: int
    w_grace: int
    interval_s: int
    horizon: int
    w_in: int
    grace_gates_actuators: bool = False

    def __post_init__(self):
        if self.w_anom < 1:
            raise ConfigError(f"w_anom must be >= 1, got {self.w_anom}")
        if self.w_grace < 0:
            raise ConfigError(f"w_grace must be >= 0, got {self.w_grace}")
        if self.interval_s < 1:
            raise ConfigError(f"interval length must be >= 1, got {self.interval_s}")

    @property
    def warmup(self) -> int:
        return self.horizon + self.w_in


@dataclass
class DetectorState:
    """Consecutive-exceedance counters and the current interval bounds."""

    cnt: np.ndarray
    interval_start: int = 0

    @classmethod
    def fresh(cls, n_sections: int) -> "DetectorState":
        return cls(cnt=np.zeros(n_sections, dtype=np.int64))


@dataclass
class AlarmEvent:
    t: int
    source: str                  # "actuator" or "section"
    section: int | None
    mse: float
    threshold: float
    label: int = 1


@dataclass
class StepResult:
    t: int
    label: int
    mse: np.ndarray
    exceeded: np.ndarray
    actuator_known: bool
    alarms: list = field(default_factory=list)


def mse_section(observed, predicted) -> float:
    """Prediction error for one sensor group at one time point."""
    return mse(predicted, observed)


def input_window_for(t: int, horizon: int, w_in: int) -> tuple:
    """Bounds [start, end) of the input window whose prediction lands on t."""
    start = t - horizon - w_in
    if start < 0:
        raise WarmupError(
            f"t={t} is inside the warm-up period of {horizon + w_in} samples"
        )
    return start, start + w_in


def step(
    t: int,
    sensors_by_section: list,
    predictions: list,
    thresholds: np.ndarray,
    actuator_states,
    db,
    cfg: DetectorConfig,
    state: DetectorState,
) -> StepResult:
    """Evaluates the anomaly condition at time t and updates the counters.

    ``sensors_by_section`` and ``predictions`` hold, per section, the observed
    and predicted sensor vectors for t (first predicted step only).
    """
    n = state.cnt.size
    if len(predictions) != n or len(sensors_by_section) != n:
        raise PipelineOrderError(
            f"expected {n} section predictions, got {len(predictions)}"
        )
    errors = np.empty(n)
    for g in range(n):
        if predictions[g] is None:
            raise PipelineOrderError(f"missing prediction for section {g} at t={t}")
        errors[g] = mse_section(sensors_by_section[g], predictions[g])
    exceeded = errors > thresholds
    state.cnt = np.where(exceeded, state.cnt + 1, 0)

    actuator_known = db.contains(actuator_states)
    alarms = []
    if not actuator_known:
        alarms.append(AlarmEvent(t, ACTUATOR_SOURCE, None, float("nan"), float("nan")))
    tripped = np.flatnonzero((state.cnt >= cfg.w_anom + 1) & exceeded)
    if tripped.size:
        # argmax offending section by exceedance ratio, for display only
        denom = np.maximum(thresholds[tripped], 1e-300)
        g = int(tripped[np.argmax(errors[tripped] / denom)])
        alarms.append(AlarmEvent(t, SECTION_SOURCE, g, float(errors[g]), float(thresholds[g])))
    return StepResult(
        t=t,
        label=int(bool(alarms)),
        mse=errors,
        exceeded=exceeded,
        actuator_known=actuator_known,
        alarms=alarms,
    )


def label_from_exceedances(exceeded: np.ndarray, w_anom: int) -> np.ndarray:
    """Sensor-branch labels from per-section exceedance booleans (T x G).

    A point is positive when some section has exceeded at every point of
    [t - w_anom, t], i.e. its consecutive-exceedance run has reached
    w_anom + 1 points.
    """
    exceeded = np.asarray(exceeded, dtype=bool)
    if exceeded.size == 0:
        return np.zeros(0, dtype=bool)
    exceeded = np.atleast_2d(exceeded)
    if exceeded.ndim != 2:
        raise DimensionError(f"expected T x G booleans, got shape {exceeded.shape}")
    t_len, n = exceeded.shape
    labels = np.zeros(t_len, dtype=bool)
    run = np.zeros(n, dtype=np.int64)
    for t in range(t_len):
        run = np.where(exceeded[t], run + 1, 0)
        labels[t] = bool(np.any(run >= w_anom + 1))
    return labels


def apply_grace(alarm_flags, w_grace: int) -> np.ndarray:
    """Suppresses contiguous alarm runs shorter than w_grace points.

    Input and output are boolean streams over consecutive time points;
    w_grace = 0 is the identity.
    """
    flags = np.asarray(alarm_flags, dtype=bool)
    if flags.ndim != 1:
        raise DimensionError(f"expected a 1-d alarm stream, got shape {flags.shape}")
    if w_grace <= 1 or flags.size == 0:
        return flags.copy()
    out = flags.copy()
    run_start = None
    for t in range(flags.size + 1):
        on = t < flags.size and flags[t]
        if on and run_start is None:
            run_start = t
        elif not on and run_start is not None:
            if t - run_start < w_grace:
                out[run_start:t] = False
            run_start = None
    return out


def alarm_episodes(flags) -> list:
    """Maximal runs of consecutive positives as (start, end_exclusive) pairs."""
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        return []
    edges = np.flatnonzero(np.diff(np.concatenate([[False], flags, [False]])))
    return [(int(edges[i]), int(edges[i + 1])) for i in range(0, edges.size, 2)]
