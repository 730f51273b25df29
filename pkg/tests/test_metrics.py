import numpy as np
import pytest

from plantguard.errors import DimensionError
from plantguard.evaluation.metrics import (
    attack_outcomes,
    detected_count,
    false_alarm_episodes,
    interventions_rate,
    point_metrics,
)


def test_perfect_predictions():
    pm = point_metrics([1, 1, 0, 0], [1, 1, 0, 0])
    assert pm.precision == pm.recall == pm.f1 == 1.0


def test_all_negative_predictions():
    pm = point_metrics([1, 0, 1, 0], [0, 0, 0, 0])
    assert pm.recall == 0.0 and pm.f1 == 0.0 and pm.precision == 0.0


def test_hand_confusion_matrix():
    pm = point_metrics([1, 1, 0, 0], [1, 0, 1, 0])
    assert pm.tp == 1 and pm.fp == 1 and pm.fn == 1 and pm.tn == 1
    assert pm.precision == pytest.approx(0.5)
    assert pm.recall == pytest.approx(0.5)
    assert pm.f1 == pytest.approx(0.5)


def test_zero_denominator_conventions():
    no_positives = point_metrics([0, 0], [0, 0])
    assert no_positives.precision == 0.0
    assert no_positives.recall == 0.0
    assert no_positives.f1 == 0.0


def test_point_metrics_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 80))
        labels = rng.random(n) < 0.4
        preds = rng.random(n) < 0.5
        pm = point_metrics(labels, preds)
        tp = sum(1 for a, b in zip(labels, preds) if a and b)
        fp = sum(1 for a, b in zip(labels, preds) if not a and b)
        fn = sum(1 for a, b in zip(labels, preds) if a and not b)
        tn = sum(1 for a, b in zip(labels, preds) if not a and not b)
        assert (pm.tp, pm.fp, pm.fn, pm.tn) == (tp, fp, fn, tn)
        want_p = tp / (tp + fp) if tp + fp else 0.0
        want_r = tp / (tp + fn) if tp + fn else 0.0
        want_f = 2 * want_p * want_r / (want_p + want_r) if want_p + want_r else 0.0
        assert pm.precision == want_p and pm.recall == want_r and pm.f1 == want_f


def test_point_metrics_length_mismatch():
    with pytest.raises(DimensionError):
        point_metrics([1, 0], [1])


def test_attack_detected_during():
    outcomes = attack_outcomes([150], [(100, 200)])
    assert outcomes[0].detected_during and not outcomes[0].detected_after
    assert outcomes[0].time_to_detect == 50
    assert detected_count(outcomes) == (1, 0)


def test_attack_no_alarms():
    outcomes = attack_outcomes([], [(100, 200)])
    assert detected_count(outcomes) == (0, 0)


def test_attack_detected_after_end():
    outcomes = attack_outcomes([230], [(100, 200)], delta_after=60)
    assert not outcomes[0].detected_during and outcomes[0].detected_after
    assert detected_count(outcomes) == (1, 1)
    # outside the after-window it does not count
    outcomes = attack_outcomes([300], [(100, 200)], delta_after=60)
    assert detected_count(outcomes) == (0, 0)


def test_attacks_match_overlap_oracle():
    rng = np.random.default_rng(1)
    for _ in range(300):
        times = np.unique(rng.integers(0, 500, size=rng.integers(0, 40)))
        start = int(rng.integers(0, 400))
        end = start + int(rng.integers(1, 80))
        delta = int(rng.integers(0, 60))
        out = attack_outcomes(times, [(start, end)], delta_after=delta)[0]
        inside = [t for t in times if start <= t < end]
        after = [t for t in times if end <= t <= end + delta]
        assert out.detected_during == bool(inside)
        assert out.detected_after == (not inside and bool(after))


def test_attack_intervals_must_not_overlap():
    with pytest.raises(DimensionError):
        attack_outcomes([1], [(0, 10), (5, 20)])


def test_interventions_rate_examples():
    assert interventions_rate(0, 3600) == 0.0
    assert interventions_rate(10, 2 * 3600) == pytest.approx(5.0)
    # the published false-alarm count over a four-day window lands close to
    # the published hourly rate
    assert interventions_rate(645, 4 * 24 * 3600) == pytest.approx(6.6, abs=0.15)
    with pytest.raises(DimensionError):
        interventions_rate(1, 0)


def test_false_alarm_episodes_counts_runs_starting_on_normal_points():
    labels = np.array([0, 0, 1, 1, 0, 0, 0], dtype=bool)
    reported = np.array([1, 1, 1, 0, 0, 1, 1], dtype=bool)
    # first run starts at a normal point, second run is entirely normal
    assert false_alarm_episodes(reported, labels) == 2
    reported = np.array([0, 0, 1, 1, 1, 0, 0], dtype=bool)
    # run starts inside the attack: not an intervention
    assert false_alarm_episodes(reported, labels) == 0
