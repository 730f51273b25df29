"""Additive Gaussian measurement noise for robustness studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from plantguard.errors import ConfigError
from plantguard.data.records import RecordSet


@dataclass
class NoiseConfig:
    sigma: float
    mean: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")


def add_gaussian_noise(records: RecordSet, cfg: NoiseConfig) -> RecordSet:
    """Perturbs sensor readings only; actuators and labels pass through."""
    if cfg.sigma == 0.0 and cfg.mean == 0.0:
        return records
    rng = np.random.default_rng(cfg.seed)
    noisy = records.sensors + rng.normal(cfg.mean, cfg.sigma, size=records.sensors.shape)
    return RecordSet(records.timestamps, noisy, records.actuators, records.labels)
