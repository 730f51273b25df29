"""Point-based detection metrics and attack-level accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from plantguard.errors import DimensionError
from plantguard.detector import alarm_episodes


@dataclass
class PointMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def point_metrics(labels, predictions) -> PointMetrics:
    """Confusion counts and ratios over per-point binary labels.

    Zero-denominator conventions: precision is 0 when nothing was predicted
    positive, recall is 0 when nothing is positive, F1 is 0 when both vanish.
    """
    y = np.asarray(labels, dtype=bool)
    p = np.asarray(predictions, dtype=bool)
    if y.shape != p.shape or y.ndim != 1:
        raise DimensionError(f"labels {y.shape} and predictions {p.shape} must be aligned 1-d")
    tp = int(np.sum(y & p))
    fp = int(np.sum(~y & p))
    fn = int(np.sum(y & ~p))
    tn = int(np.sum(~y & ~p))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PointMetrics(tp, fp, fn, tn, precision, recall, f1)


@dataclass
class AttackOutcome:
    start: int
    end: int
    detected_during: bool
    detected_after: bool
    time_to_detect: int | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def attack_outcomes(alarm_times, attack_intervals, delta_after: int = 60) -> list:
    """Per-attack detection outcomes from reported alarm time points.

    An attack [start, end) is detected during execution if some alarm falls
    inside it, and detected after its end if the first alarm past the
    interval lands within delta_after seconds.
    """
    times = np.asarray(sorted(alarm_times), dtype=np.int64)
    spans = sorted((int(s), int(e)) for s, e in attack_intervals)
    for (s1, e1), (s2, _) in zip(spans, spans[1:]):
        if s2 < e1:
            raise DimensionError(f"overlapping attack intervals at {s2}")
    out = []
    for start, end in spans:
        inside = times[(times >= start) & (times < end)]
        if inside.size:
            out.append(AttackOutcome(start, end, True, False, int(inside[0] - start)))
            continue
        after = times[(times >= end) & (times <= end + delta_after)]
        if after.size:
            out.append(AttackOutcome(start, end, False, True, int(after[0] - start)))
        else:
            out.append(AttackOutcome(start, end, False, False, None))
    return out


def detected_count(outcomes) -> tuple:
    """(total detected, of which only after the attack ended)."""
    during = sum(1 for o in outcomes if o.detected_during)
    after = sum(1 for o in outcomes if o.detected_after)
    return during + after, after


def interventions_rate(false_alarm_episodes: int, duration_s: float) -> float:
    """Technician interventions per hour; one merged alarm episode = one visit."""
    if duration_s <= 0:
        raise DimensionError("duration must be positive")
    return false_alarm_episodes * 3600.0 / duration_s


def false_alarm_episodes(reported, labels) -> int:
    """Counts reported episodes that begin on a normal-labelled point."""
    reported = np.asarray(reported, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    if reported.shape != labels.shape:
        raise DimensionError("reported flags and labels must be aligned")
    return sum(1 for start, _ in alarm_episodes(reported) if not labels[start])
