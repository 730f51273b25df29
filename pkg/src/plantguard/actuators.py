"""Database of actuator-state combinations seen during normal operation.

Membership is exact: a combination observed at test time that never occurred
in training is an anomaly in its own right, with no waiting window. The store
is a plain set of integer tuples; snapshots serialize to a sorted, header-led
text file so diffs stay readable.
"""

from __future__ import annotations

import os

import numpy as np

from plantguard.errors import SchemaError


def _as_tuple(states, m_ac: int) -> tuple:
    arr = np.asarray(states)
    if arr.shape != (m_ac,):
        raise SchemaError(f"actuator tuple length {arr.shape} != ({m_ac},)")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise SchemaError("actuator states must be integer-coded, got fractional values")
        arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise SchemaError("actuator states must be non-negative")
    return tuple(int(v) for v in arr)


class ActuatorDb:
    def __init__(self, m_ac: int, names: list | None = None):
        if m_ac < 1:
            raise SchemaError("actuator database needs at least one actuator")
        self.m_ac = m_ac
        self.names = list(names) if names else [f"A{i}" for i in range(m_ac)]
        if len(self.names) != m_ac:
            raise SchemaError(f"{len(self.names)} names for {m_ac} actuators")
        self._tuples: set = set()

    def __len__(self) -> int:
        return len(self._tuples)

    def __contains__(self, states) -> bool:
        return self.contains(states)

    def contains(self, states) -> bool:
        return _as_tuple(states, self.m_ac) in self._tuples

    def insert(self, states) -> bool:
        """Idempotent union; returns True when the tuple is new."""
        t = _as_tuple(states, self.m_ac)
        if t in self._tuples:
            return False
        self._tuples.add(t)
        return True

    def tuples(self) -> list:
        return sorted(self._tuples)

    def copy(self) -> "ActuatorDb":
        dup = ActuatorDb(self.m_ac, self.names)
        dup._tuples = set(self._tuples)
        return dup

    # -- snapshot format: header "m_ac,name,name,..." then one sorted CSV tuple per line

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join([str(self.m_ac)] + self.names) + "\n")
            for t in sorted(self._tuples):
                fh.write(",".join(str(v) for v in t) + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ActuatorDb":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split(",")
            m_ac = int(header[0])
            db = cls(m_ac, header[1:] or None)
            for line in fh:
                line = line.strip()
                if line:
                    db.insert([int(v) for v in line.split(",")])
        return db


def build_db(actuator_rows: np.ndarray, names: list | None = None) -> ActuatorDb:
    """Collects the distinct actuator combinations from training rows (N x m_ac)."""
    rows = np.asarray(actuator_rows)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise SchemaError(f"expected a non-empty N x m_ac array, got shape {rows.shape}")
    db = ActuatorDb(rows.shape[1], names)
    for row in rows:
        db.insert(row)
    return db
