"""Streaming detection pipeline.

Consumes one record per second, processes them in fixed-length intervals
(a trailing partial interval at stream end is never evaluated),
and for each interval: predicts the sensor states, extends the per-section
error series, tunes the adaptive thresholds from the recent error history,
evaluates the anomaly condition per tick, tracks grace-time reporting, and
finally gives each section's threshold forecaster one self-supervised SGD
epoch. Technician feedback is applied between intervals through the same
writer that owns the model, so batch replay and live replay produce
identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from plantguard.errors import ConfigError, PipelineOrderError
from plantguard.actuators import ActuatorDb
from plantguard.adapt import AdaptationReport, FeedbackDecision, InstanceBatch, TuningConfig, handle_feedback
from plantguard.data.normalize import Normalizer
from plantguard.data.records import RecordSet
from plantguard.detector import (
    ACTUATOR_SOURCE,
    SECTION_SOURCE,
    apply_grace,
    label_from_exceedances,
)
from plantguard.nn.optim import SgdConfig
from plantguard.thresholds import ErrorWindowBatch, online_update, tune_threshold
from plantguard.wdnn import WdnnModel


@dataclass
class PipelineConfig:
    w_in: int
    horizon: int
    interval_s: int
    w_anom: int
    w_grace: int
    med_kernel: int
    grace_gates_actuators: bool = False
    adaptive_thresholds: bool = True
    ttnn_learning_rate: float = 0.01
    ttnn_momentum: float = 0.9

    def __post_init__(self):
        if self.w_anom < 1 or self.w_grace < 0 or self.interval_s < 1:
            raise ConfigError("w_anom >= 1, w_grace >= 0, interval_s >= 1 required")

    @property
    def warmup(self) -> int:
        return self.horizon + self.w_in


@dataclass
class Alarm:
    """One reported alarm episode, the unit a technician triages."""

    id: int
    t_start: int
    t_reported: int
    source: str
    section: int | None
    mse: float
    threshold: float
    model_version: int
    batch: InstanceBatch
    t_last: int = 0
    status: str = "open"        # open -> confirmed | dismissed

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "t_start": self.t_start,
            "t_reported": self.t_reported,
            "t_last": self.t_last,
            "source": self.source,
            "section": self.section,
            "mse": None if np.isnan(self.mse) else self.mse,
            "threshold": None if np.isnan(self.threshold) else self.threshold,
            "model_version": self.model_version,
            "status": self.status,
        }


@dataclass
class IntervalResult:
    t_start: int
    t_end: int
    ticks: np.ndarray
    mse: np.ndarray             # ticks x G
    thresholds: np.ndarray      # G
    labels_raw: np.ndarray
    new_alarms: list
    model_version: int


@dataclass
class DetectionTrace:
    """Per-tick history of everything the detector saw and decided."""

    t: np.ndarray
    mse: np.ndarray
    thresholds: np.ndarray
    exceeded: np.ndarray
    actuator_known: np.ndarray
    sensor_raw: np.ndarray
    reported: np.ndarray
    offending: np.ndarray        # argmax section when the sensor branch fired, else -1
    w_anom: int
    w_grace: int
    grace_gates_actuators: bool

    def alarm_log_entries(self):
        """Point-level alarm records: one JSON-able dict per positive point
        and branch, with the grace-reporting outcome."""
        out = []
        for i in range(self.t.size):
            if not self.actuator_known[i]:
                out.append({
                    "t": int(self.t[i]), "source": "actuator", "g": None,
                    "mse": None, "threshold": None, "label": 1,
                    "reported": bool(self.reported[i]),
                })
            if self.sensor_raw[i]:
                g = int(self.offending[i])
                out.append({
                    "t": int(self.t[i]), "source": "section", "g": g,
                    "mse": float(self.mse[i, g]), "threshold": float(self.thresholds[i, g]),
                    "label": 1, "reported": bool(self.reported[i]),
                })
        return out

    def relabel(self, w_anom: int, w_grace: int) -> tuple:
        """Raw and reported alarm points under different waiting/grace windows.

        Exceedances and actuator membership do not depend on either knob, so
        sweeps re-label the same trace instead of replaying the stream.
        """
        sensor_raw = label_from_exceedances(self.exceeded, w_anom)
        actuator_raw = ~self.actuator_known
        sensor_rep = apply_grace(sensor_raw, w_grace)
        actuator_rep = apply_grace(actuator_raw, w_grace) if self.grace_gates_actuators else actuator_raw
        return sensor_raw | actuator_raw, sensor_rep | actuator_rep


class _RunTracker:
    """Grace-time bookkeeping for one alarm branch."""

    def __init__(self, min_len: int):
        self.min_len = max(1, min_len)
        self.pending: list = []
        self.reported = False
        self.active = False

    def push(self, on: bool, idx: int) -> tuple:
        """Returns (newly_reported_indices, report_now, continuing)."""
        if not on:
            self.pending = []
            self.reported = False
            self.active = False
            return [], False, False
        if not self.active:
            self.active = True
            self.pending = []
            self.reported = False
        if self.reported:
            return [idx], False, True
        self.pending.append(idx)
        if len(self.pending) >= self.min_len:
            self.reported = True
            out = self.pending
            self.pending = []
            return out, True, False
        return [], False, False


class DetectionEngine:
    def __init__(
        self,
        model: WdnnModel,
        normalizer: Normalizer,
        db: ActuatorDb,
        ttnns: list,
        t_bases: list,
        cfg: PipelineConfig,
        first_timestamp: int = 0,
    ):
        g = model.cfg.layout.n_sections
        if len(ttnns) != g or len(t_bases) != g:
            raise ConfigError(f"need one forecaster and one base offset per section ({g})")
        self.model = model
        self.normalizer = normalizer
        self.db = db
        self.ttnns = ttnns
        self.t_bases = np.asarray(t_bases, dtype=np.float64)
        self.cfg = cfg
        self.model_version = 1
        self.first_timestamp = first_timestamp

        self.n_sections = g
        self._groups = [np.asarray(idx, dtype=np.intp) for idx in model.cfg.layout.groups]
        self._tick = 0
        self._feat_base = 0
        self._feat_rows: list = []
        self._mse_start: int | None = None
        self._mse_rows: list = []
        self._cnt = np.zeros(g, dtype=np.int64)
        self._thresholds = self.t_bases.copy()
        self._ttnn_velocity = [None] * g

        self._interval_raw: list = []
        self._sensor_tracker = _RunTracker(max(1, cfg.w_grace))
        self._actuator_tracker = _RunTracker(max(1, cfg.w_grace) if cfg.grace_gates_actuators else 1)
        self._sensor_run_alarm: Alarm | None = None
        self._actuator_run_alarm: Alarm | None = None

        self.alarms: list = []
        self._next_alarm_id = 1

        # per-tick trace, from the first post-warm-up tick on
        self._tr_t: list = []
        self._tr_mse: list = []
        self._tr_thr: list = []
        self._tr_exc: list = []
        self._tr_known: list = []
        self._tr_sensor_raw: list = []
        self._tr_reported: list = []
        self._tr_offending: list = []

    # -- feeding ---------------------------------------------------------------

    def feed(self, sensors_raw, actuators) -> IntervalResult | None:
        """Adds one record; returns an IntervalResult at interval boundaries."""
        self._interval_raw.append((np.asarray(sensors_raw, dtype=np.float64),
                                   np.asarray(actuators, dtype=np.int64)))
        self._tick += 1
        if len(self._interval_raw) < self.cfg.interval_s:
            return None
        return self._process_interval()

    def feed_set(self, records: RecordSet) -> list:
        results = []
        for i in range(len(records)):
            out = self.feed(records.sensors[i], records.actuators[i])
            if out is not None:
                results.append(out)
        return results

    # -- interval machinery ------------------------------------------------------

    def _feat(self, lo: int, hi: int) -> np.ndarray:
        return np.asarray(self._feat_rows[lo - self._feat_base : hi - self._feat_base])

    def _mse_slice(self, lo: int, hi: int) -> np.ndarray:
        if self._mse_start is None or lo < self._mse_start:
            raise PipelineOrderError("error series does not reach back that far")
        base = self._mse_start
        if hi - base > len(self._mse_rows):
            raise PipelineOrderError("error series does not extend that far yet")
        return np.asarray(self._mse_rows[lo - base : hi - base])

    def _process_interval(self) -> IntervalResult:
        cfg = self.cfg
        s = cfg.interval_s
        t_start = self._tick - s
        raw = self._interval_raw
        self._interval_raw = []

        sens_raw = np.stack([r[0] for r in raw])
        acts = np.stack([r[1] for r in raw])
        sens_norm = self.normalizer.sensors(sens_raw)
        feats = np.concatenate(
            [sens_norm, self._scale_actuators(acts)], axis=1
        )
        self._feat_rows.extend(feats)

        # 1. predictions and per-tick errors for warmed-up ticks
        first_valid = max(t_start, cfg.warmup)
        ticks = np.arange(first_valid, t_start + s)
        batch = self._build_instances(ticks, sens_norm[first_valid - t_start :], acts[first_valid - t_start :])
        mse_rows = np.empty((ticks.size, self.n_sections))
        if ticks.size:
            preds = self.model.forward_batch(batch.inputs)
            for g in range(self.n_sections):
                m_g = self._groups[g].size
                diff = preds[g][:, :m_g] - batch.sensor_targets[:, self._groups[g]]
                mse_rows[:, g] = np.mean(diff**2, axis=1)
            if self._mse_start is None:
                self._mse_start = first_valid
            self._mse_rows.extend(mse_rows)

        # 2. thresholds for this interval from the trailing error history
        t0 = t_start - cfg.horizon - cfg.w_in
        window_ready = (
            self._mse_start is not None
            and t0 >= self._mse_start
            and ticks.size == s
        )
        err_batches = None
        if cfg.adaptive_thresholds and window_ready:
            series = self._mse_slice(t0, t0 + cfg.w_in + s)
            err_batches = [
                ErrorWindowBatch(series[:, g], cfg.w_in, start_time=t0)
                for g in range(self.n_sections)
            ]
            for g in range(self.n_sections):
                t_g, _ = tune_threshold(self.ttnns[g], err_batches[g], float(self.t_bases[g]), cfg.med_kernel)
                self._thresholds[g] = t_g
        elif not cfg.adaptive_thresholds:
            self._thresholds = self.t_bases.copy()

        # 3. anomaly condition per tick
        labels_raw = np.zeros(ticks.size, dtype=bool)
        new_alarms: list = []
        for i, t in enumerate(ticks):
            exceeded = mse_rows[i] > self._thresholds
            self._cnt = np.where(exceeded, self._cnt + 1, 0)
            known = self.db.contains(acts[t - t_start])
            sensor_on = bool(np.any(self._cnt >= cfg.w_anom + 1))
            labels_raw[i] = sensor_on or not known

            trace_idx = len(self._tr_t)
            offending = None
            if sensor_on:
                tripped = np.flatnonzero(self._cnt >= cfg.w_anom + 1)
                ratios = mse_rows[i][tripped] / np.maximum(self._thresholds[tripped], 1e-300)
                offending = int(tripped[np.argmax(ratios)])

            self._tr_t.append(t)
            self._tr_mse.append(mse_rows[i])
            self._tr_thr.append(self._thresholds.copy())
            self._tr_exc.append(exceeded)
            self._tr_known.append(known)
            self._tr_sensor_raw.append(sensor_on)
            self._tr_reported.append(False)
            self._tr_offending.append(-1 if offending is None else offending)
            self._track_run(
                self._sensor_tracker, "_sensor_run_alarm", sensor_on, trace_idx, t,
                SECTION_SOURCE, offending,
                float(mse_rows[i][offending]) if offending is not None else float("nan"),
                float(self._thresholds[offending]) if offending is not None else float("nan"),
                batch, new_alarms,
            )
            self._track_run(
                self._actuator_tracker, "_actuator_run_alarm", not known, trace_idx, t,
                ACTUATOR_SOURCE, None, float("nan"), float("nan"),
                batch, new_alarms,
            )

        # 4. one self-supervised epoch for each threshold forecaster
        if err_batches is not None:
            sgd = SgdConfig(cfg.ttnn_learning_rate, cfg.ttnn_momentum, batch_size=s)
            targets = self._mse_slice(t_start, t_start + s)
            for g in range(self.n_sections):
                self._ttnn_velocity[g] = online_update(
                    self.ttnns[g], err_batches[g], targets[:, g], sgd, self._ttnn_velocity[g]
                )

        self._trim_history(t_start + s)
        return IntervalResult(
            t_start=t_start,
            t_end=t_start + s,
            ticks=ticks,
            mse=mse_rows,
            thresholds=self._thresholds.copy(),
            labels_raw=labels_raw,
            new_alarms=new_alarms,
            model_version=self.model_version,
        )

    def _scale_actuators(self, acts: np.ndarray) -> np.ndarray:
        return self.normalizer.actuators(acts)

    def _build_instances(self, ticks: np.ndarray, sens_norm: np.ndarray, acts: np.ndarray) -> InstanceBatch:
        cfg = self.cfg
        m = self.model.cfg.n_features
        inputs = np.empty((ticks.size, m, cfg.w_in))
        for i, t in enumerate(ticks):
            lo = t - cfg.horizon - cfg.w_in
            inputs[i] = self._feat(lo, lo + cfg.w_in).T
        return InstanceBatch(
            times=ticks.copy(),
            inputs=inputs,
            sensor_targets=sens_norm,
            actuator_states=acts,
        )

    def _track_run(self, tracker, alarm_attr, on, trace_idx, t, source, section,
                   mse_val, thr_val, batch, new_alarms):
        indices, report_now, continuing = tracker.push(on, trace_idx)
        for idx in indices:
            self._tr_reported[idx] = True
        if report_now:
            alarm = Alarm(
                id=self._next_alarm_id,
                t_start=int(self._tr_t[indices[0]]),
                t_reported=int(t),
                source=source,
                section=section,
                mse=mse_val,
                threshold=thr_val,
                model_version=self.model_version,
                batch=batch,
                t_last=int(t),
            )
            self._next_alarm_id += 1
            self.alarms.append(alarm)
            setattr(self, alarm_attr, alarm)
            new_alarms.append(alarm)
        elif continuing:
            alarm = getattr(self, alarm_attr)
            if alarm is not None:
                alarm.t_last = int(t)
        elif not on:
            setattr(self, alarm_attr, None)

    def _trim_history(self, now: int) -> None:
        keep_from = max(0, now - (self.cfg.warmup + 2 * self.cfg.interval_s + 4))
        if keep_from > self._feat_base:
            del self._feat_rows[: keep_from - self._feat_base]
            self._feat_base = keep_from
        if self._mse_start is not None and keep_from > self._mse_start:
            del self._mse_rows[: keep_from - self._mse_start]
            self._mse_start = keep_from

    # -- feedback ------------------------------------------------------------------

    def find_alarm(self, alarm_id: int) -> Alarm | None:
        for alarm in self.alarms:
            if alarm.id == alarm_id:
                return alarm
        return None

    def apply_feedback(
        self,
        alarm_id: int,
        fa_actuator: bool,
        fa_sections,
        tuning: TuningConfig | None = None,
    ) -> AdaptationReport:
        """False-alarm verdict: update the database / fine-tune flagged sections."""
        alarm = self.find_alarm(alarm_id)
        if alarm is None:
            raise KeyError(f"no alarm with id {alarm_id}")
        if alarm.status != "open":
            raise PipelineOrderError(f"alarm {alarm_id} already {alarm.status}")
        fa = [bool(fa_actuator)] + [False] * self.n_sections
        for g in fa_sections:
            fa[int(g) + 1] = True
        decision = FeedbackDecision(t=alarm.t_reported, fa=fa, batch=alarm.batch)
        report = handle_feedback(decision, self.model, self.db, tuning or TuningConfig())
        alarm.status = "dismissed"
        self.model_version += 1
        return report

    def mark_true_anomaly(self, alarm_id: int) -> None:
        alarm = self.find_alarm(alarm_id)
        if alarm is None:
            raise KeyError(f"no alarm with id {alarm_id}")
        if alarm.status != "open":
            raise PipelineOrderError(f"alarm {alarm_id} already {alarm.status}")
        alarm.status = "confirmed"

    def dismiss_alarm(self, alarm_id: int) -> None:
        """Dismiss without adaptation (operator attributes the alarm elsewhere)."""
        alarm = self.find_alarm(alarm_id)
        if alarm is None:
            raise KeyError(f"no alarm with id {alarm_id}")
        if alarm.status != "open":
            raise PipelineOrderError(f"alarm {alarm_id} already {alarm.status}")
        alarm.status = "dismissed"

    # -- results ----------------------------------------------------------------------

    def trace(self) -> DetectionTrace:
        return DetectionTrace(
            t=np.asarray(self._tr_t, dtype=np.int64),
            mse=np.asarray(self._tr_mse),
            thresholds=np.asarray(self._tr_thr),
            exceeded=np.asarray(self._tr_exc, dtype=bool),
            actuator_known=np.asarray(self._tr_known, dtype=bool),
            sensor_raw=np.asarray(self._tr_sensor_raw, dtype=bool),
            reported=np.asarray(self._tr_reported, dtype=bool),
            offending=np.asarray(self._tr_offending, dtype=np.int64),
            w_anom=self.cfg.w_anom,
            w_grace=self.cfg.w_grace,
            grace_gates_actuators=self.cfg.grace_gates_actuators,
        )
