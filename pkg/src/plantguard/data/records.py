"""Plant telemetry records and CSV ingestion.

A dataset is a sequence of one-per-second snapshots: continuous sensor
readings, integer-coded actuator states, and an optional normal/attack
label. Columns are declared by a DatasetProfile; files are rejected with
the offending row index on any gap, missing value, or non-numeric cell.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from plantguard.errors import DimensionError, IngestionError, SchemaError

LABEL_NORMAL = 0
LABEL_ATTACK = 1


@dataclass
class SampleRecord:
    timestamp: int
    sensors: np.ndarray
    actuators: np.ndarray
    label: int | None = None


@dataclass
class DatasetProfile:
    """Column schema plus the windowing geometry tuned for the dataset."""

    name: str
    sensor_columns: list
    actuator_columns: list
    w_in: int
    w_out: int
    horizon: int
    interval_s: int
    w_anom: int
    w_grace: int
    med_kernel: int
    learning_rate: float
    batch_size: int
    tuning_epochs: int
    groups: list                     # per-section sensor index lists
    momentum: float = 0.9
    dl2_base: int | None = None
    cl1: tuple = (64, 2)
    cl2: tuple = (128, 2)
    validation_fraction: float = 0.2

    @property
    def m_se(self) -> int:
        return len(self.sensor_columns)

    @property
    def m_ac(self) -> int:
        return len(self.actuator_columns)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["cl1"] = list(self.cl1)
        d["cl2"] = list(self.cl2)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetProfile":
        d = dict(d)
        d["cl1"] = tuple(d.get("cl1", (64, 2)))
        d["cl2"] = tuple(d.get("cl2", (128, 2)))
        return cls(**d)


class RecordSet:
    """Column-oriented store of consecutive records."""

    def __init__(self, timestamps, sensors, actuators, labels=None):
        self.timestamps = np.asarray(timestamps, dtype=np.int64)
        self.sensors = np.asarray(sensors, dtype=np.float64)
        self.actuators = np.asarray(actuators, dtype=np.int64)
        self.labels = None if labels is None else np.asarray(labels, dtype=np.int8)
        n = self.timestamps.size
        if self.sensors.shape[0] != n or self.actuators.shape[0] != n:
            raise DimensionError("timestamps, sensors and actuators must align")
        if self.labels is not None and self.labels.size != n:
            raise DimensionError("labels must align with records")
        if n > 1 and not np.all(np.diff(self.timestamps) == 1):
            raise SchemaError("timestamps must advance by exactly one second")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @property
    def m_se(self) -> int:
        return self.sensors.shape[1]

    @property
    def m_ac(self) -> int:
        return self.actuators.shape[1]

    def row(self, i: int) -> SampleRecord:
        return SampleRecord(
            timestamp=int(self.timestamps[i]),
            sensors=self.sensors[i],
            actuators=self.actuators[i],
            label=None if self.labels is None else int(self.labels[i]),
        )

    def slice(self, lo: int, hi: int) -> "RecordSet":
        return RecordSet(
            self.timestamps[lo:hi],
            self.sensors[lo:hi],
            self.actuators[lo:hi],
            None if self.labels is None else self.labels[lo:hi],
        )

    def features(self) -> np.ndarray:
        """Raw feature matrix, sensors first then actuators (N x m)."""
        return np.concatenate([self.sensors, self.actuators.astype(np.float64)], axis=1)


def load_csv(path: str | os.PathLike, profile: DatasetProfile) -> RecordSet:
    """Reads a profile-shaped CSV; any malformed row aborts with its index."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError("empty file", row=0) from None
        header = [h.strip() for h in header]
        required = ["timestamp"] + profile.sensor_columns + profile.actuator_columns
        for col in required:
            if col not in header:
                raise IngestionError(f"missing column {col!r}", row=0)
        col_idx = {c: header.index(c) for c in header}
        has_label = "label" in header

        timestamps, sensors, actuators, labels = [], [], [], []
        prev_ts = None
        for row_no, row in enumerate(reader, start=1):
            try:
                ts = int(float(row[col_idx["timestamp"]]))
                sens = [float(row[col_idx[c]]) for c in profile.sensor_columns]
                acts = [row[col_idx[c]] for c in profile.actuator_columns]
            except (ValueError, IndexError) as exc:
                raise IngestionError(f"malformed row: {exc}", row=row_no) from None
            if any(not np.isfinite(v) for v in sens):
                raise IngestionError("non-finite sensor reading", row=row_no)
            act_states = []
            for c, raw in zip(profile.actuator_columns, acts):
                try:
                    v = float(raw)
                except ValueError:
                    raise IngestionError(f"non-numeric actuator state in {c!r}", row=row_no) from None
                if v != int(v):
                    raise IngestionError(f"fractional actuator state in {c!r}", row=row_no)
                act_states.append(int(v))
            if prev_ts is not None and ts != prev_ts + 1:
                raise IngestionError(f"timestamp gap: {prev_ts} -> {ts}", row=row_no)
            prev_ts = ts
            timestamps.append(ts)
            sensors.append(sens)
            actuators.append(act_states)
            if has_label:
                try:
                    labels.append(int(float(row[col_idx["label"]])))
                except ValueError:
                    raise IngestionError("non-numeric label", row=row_no) from None
        if not timestamps:
            raise IngestionError("no data rows", row=1)
    return RecordSet(timestamps, sensors, actuators, labels if has_label else None)


def save_csv(path: str | os.PathLike, records: RecordSet, profile: DatasetProfile) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["timestamp"] + profile.sensor_columns + profile.actuator_columns
        if records.labels is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(len(records)):
            row = [int(records.timestamps[i])]
            row += [f"{v:.6f}" for v in records.sensors[i]]
            row += [int(v) for v in records.actuators[i]]
            if records.labels is not None:
                row.append(int(records.labels[i]))
            writer.writerow(row)


def save_manifest(path: str | os.PathLike, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path: str | os.PathLike) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
