"""Training-instance construction.

An instance pairs the feature window [t', t' + w_in) with the sensor values
at targets starting t' + w_in + horizon; the gap stops the forecaster from
copying its most recent inputs forward.
"""

from __future__ import annotations

import numpy as np

from plantguard.errors import DimensionError
from plantguard.data.normalize import Normalizer
from plantguard.data.records import RecordSet


def make_windows(
    records: RecordSet,
    normalizer: Normalizer,
    w_in: int,
    horizon: int,
    w_out: int,
    predict_steps: int = 1,
):
    """Returns (inputs, targets, target_times).

    inputs:  B x m x w_in normalized features, time along the last axis.
    targets: B x predict_steps x m_se normalized sensor values.
    target_times: timestamp of each instance's first predicted step.
    """
    if not 1 <= predict_steps <= w_out:
        raise DimensionError(f"predict_steps must lie in [1, {w_out}]")
    n = len(records)
    count = n - w_in - horizon - predict_steps + 1
    if count < 1:
        raise DimensionError(
            f"{n} records cannot fit w_in={w_in}, horizon={horizon}, steps={predict_steps}"
        )
    feats = normalizer.features(records)          # N x m
    sens = normalizer.sensors(records.sensors)    # N x m_se

    win = np.lib.stride_tricks.sliding_window_view(feats, w_in, axis=0)  # (N-w_in+1, m, w_in)
    inputs = win[:count]
    tgt = np.lib.stride_tricks.sliding_window_view(sens, predict_steps, axis=0)
    targets = tgt[w_in + horizon : w_in + horizon + count].transpose(0, 2, 1)
    target_times = records.timestamps[w_in + horizon : w_in + horizon + count]
    return np.ascontiguousarray(inputs), np.ascontiguousarray(targets), target_times
