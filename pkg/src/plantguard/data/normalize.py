"""Min-max normalization with training-set constants.

Sensor readings map to [0, 1] on the training range; values outside that
range at test time are deliberately left unclamped, since clamping would
hide exactly the distribution drift the detector must notice. Actuator
states pass through the same scaling over their observed state range so
all model inputs share one magnitude.
"""

from __future__ import annotations

import numpy as np

from plantguard.errors import DimensionError
from plantguard.data.records import RecordSet


class Normalizer:
    def __init__(self, sensor_min, sensor_max, actuator_min, actuator_max):
        self.sensor_min = np.asarray(sensor_min, dtype=np.float64)
        self.sensor_max = np.asarray(sensor_max, dtype=np.float64)
        self.actuator_min = np.asarray(actuator_min, dtype=np.float64)
        self.actuator_max = np.asarray(actuator_max, dtype=np.float64)

    @staticmethod
    def _scale_sensors(x, lo, hi):
        # sensors constant in training carry no signal and map to 0, even when
        # the live value differs
        span = hi - lo
        gain = np.where(span > 0, 1.0 / np.where(span > 0, span, 1.0), 0.0)
        return (x - lo) * gain

    @staticmethod
    def _scale_actuators(x, lo, hi):
        # actuators scale by their observed state range; a state the training
        # set never varied keeps unit gain so novel states stay visible to the
        # model the technician may fine-tune
        span = hi - lo
        return (x - lo) / np.where(span > 0, span, 1.0)

    @staticmethod
    def _unscale(x, lo, hi):
        span = hi - lo
        return x * np.where(span > 0, span, 1.0) + lo

    def sensors(self, raw: np.ndarray) -> np.ndarray:
        return self._scale_sensors(raw, self.sensor_min, self.sensor_max)

    def sensors_inverse(self, normalized: np.ndarray) -> np.ndarray:
        return self._unscale(normalized, self.sensor_min, self.sensor_max)

    def actuators(self, raw: np.ndarray) -> np.ndarray:
        return self._scale_actuators(
            np.asarray(raw, dtype=np.float64), self.actuator_min, self.actuator_max
        )

    def features(self, records: RecordSet) -> np.ndarray:
        """Normalized feature matrix (N x m), sensors first then actuators."""
        sens = self.sensors(records.sensors)
        acts = self.actuators(records.actuators)
        return np.concatenate([sens, acts], axis=1)

    def to_dict(self) -> dict:
        return {
            "sensor_min": self.sensor_min.tolist(),
            "sensor_max": self.sensor_max.tolist(),
            "actuator_min": self.actuator_min.tolist(),
            "actuator_max": self.actuator_max.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(d["sensor_min"], d["sensor_max"], d["actuator_min"], d["actuator_max"])


def fit_normalizer(train: RecordSet) -> Normalizer:
    if len(train) == 0:
        raise DimensionError("cannot fit a normalizer on an empty training set")
    return Normalizer(
        train.sensors.min(axis=0),
        train.sensors.max(axis=0),
        train.actuators.min(axis=0).astype(np.float64),
        train.actuators.max(axis=0).astype(np.float64),
    )
