"""Replay session: drives the detection engine over a dataset at a chosen pace."""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass

from plantguard.data.records import RecordSet
from plantguard.engine import DetectionEngine

IDLE = "idle"
RUNNING = "running"
PAUSED = "paused"
FINISHED = "finished"


@dataclass
class SessionError(Exception):
    message: str
    status_code: int = 409

    def __str__(self) -> str:
        return self.message


class EventBuffer:
    """Bounded, monotonically numbered event store with oldest-drop.

    Consumers poll with a ``since`` cursor; if their cursor has been dropped
    they receive a gap marker first so they can surface the discontinuity.
    """

    def __init__(self, capacity: int = 4096):
        self.capacity = capacity
        self._events: deque = deque()
        self._next_seq = 1
        self._dropped_through = 0
        self._lock = threading.Lock()
        self._wakeup = threading.Condition(self._lock)

    def append(self, kind: str, payload: dict) -> dict:
        with self._wakeup:
            event = {"seq": self._next_seq, "type": kind, **payload}
            self._next_seq += 1
            self._events.append(event)
            while len(self._events) > self.capacity:
                dropped = self._events.popleft()
                self._dropped_through = dropped["seq"]
            self._wakeup.notify_all()
            return event

    def since(self, seq: int, limit: int = 1000) -> list:
        with self._lock:
            out = []
            if seq < self._dropped_through:
                out.append({
                    "seq": seq,
                    "type": "gap",
                    "dropped_through": self._dropped_through,
                })
            for event in self._events:
                if event["seq"] > seq:
                    out.append(event)
                    if len(out) >= limit:
                        break
            return out

    def wait_for(self, seq: int, timeout: float) -> list:
        deadline = time.monotonic() + timeout
        with self._wakeup:
            while True:
                stale = self._next_seq - 1 <= seq and seq >= self._dropped_through
                if not stale:
                    break
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                self._wakeup.wait(remaining)
        return self.since(seq)

    @property
    def last_seq(self) -> int:
        with self._lock:
            return self._next_seq - 1


class ReplaySession:
    """One dataset replayed through one engine, with speed control.

    ``speed`` is records per wall second; 0 means as fast as possible.
    The worker owns the engine; feedback handlers borrow it under the same
    lock between intervals, so detection results never interleave with
    adaptation.
    """

    def __init__(self, engine: DetectionEngine, records: RecordSet,
                 events: EventBuffer, on_interval=None):
        self.engine = engine
        self.records = records
        self.events = events
        self.on_interval = on_interval
        self.state = IDLE
        self.cursor = 0
        self.speed = 0.0
        self.lock = threading.RLock()
        self._resume = threading.Event()
        self._stop = False
        self._thread: threading.Thread | None = None

    def start(self, speed: float = 0.0) -> None:
        with self.lock:
            if self.state == RUNNING:
                raise SessionError("session already running")
            if self.state == FINISHED:
                raise SessionError("session finished; start a new one")
            self.speed = max(0.0, float(speed))
            self.state = RUNNING
        self._resume.set()
        if self._thread is None:
            self._thread = threading.Thread(target=self._run, daemon=True)
            self._thread.start()

    def pause(self) -> None:
        with self.lock:
            if self.state != RUNNING:
                raise SessionError(f"cannot pause a {self.state} session")
            self.state = PAUSED
        self._resume.clear()

    def resume(self) -> None:
        with self.lock:
            if self.state != PAUSED:
                raise SessionError(f"cannot resume a {self.state} session")
            self.state = RUNNING
        self._resume.set()

    def seek(self, target: int) -> None:
        """Fast-forwards to ``target`` (processing every record on the way)."""
        with self.lock:
            if target < self.cursor:
                raise SessionError(f"seek target {target} is behind cursor {self.cursor}")
            self._seek_target = target

    def set_speed(self, speed: float) -> None:
        with self.lock:
            self.speed = max(0.0, float(speed))

    def stop(self) -> None:
        self._stop = True
        self._resume.set()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def join(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    def _run(self) -> None:
        n = len(self.records)
        while not self._stop:
            self._resume.wait()
            if self._stop:
                break
            with self.lock:
                if self.cursor >= n:
                    break
                i = self.cursor
                speed = self.speed
                seeking = getattr(self, "_seek_target", None)
                if seeking is not None and i >= seeking:
                    self._seek_target = None
                    seeking = None
                result = self.engine.feed(self.records.sensors[i], self.records.actuators[i])
                self.cursor = i + 1
                if result is not None and self.on_interval is not None:
                    self.on_interval(result)
            if speed > 0 and seeking is None:
                time.sleep(1.0 / speed)
        with self.lock:
            self.state = FINISHED
        self.events.append("status", {"state": FINISHED, "cursor": self.cursor})

    def snapshot(self) -> dict:
        with self.lock:
            return {
                "state": self.state,
                "cursor": self.cursor,
                "speed": self.speed,
                "records": len(self.records),
            }
