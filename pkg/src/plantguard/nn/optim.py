"""Stochastic gradient descent with classical momentum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from plantguard.errors import ConfigError, TrainingDivergenceError


@dataclass
class SgdConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")


def sgd_step(params: dict, grads: dict, cfg: SgdConfig, velocity: dict | None = None) -> dict:
    """One update step, in place: v <- momentum*v + g; p <- p - lr*v.

    With momentum 0 this is vanilla SGD. Returns the velocity dict so the
    caller can thread it through subsequent steps.
    """
    if velocity is None:
        velocity = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise TrainingDivergenceError(f"non-finite gradient for parameter {name!r}")
        v = velocity.get(name)
        v = g if v is None or cfg.momentum == 0.0 else cfg.momentum * v + g
        velocity[name] = v
        p -= cfg.learning_rate * v
    return velocity


class SgdOptimizer:
    """Holds velocity state across steps for one parameter set."""

    def __init__(self, cfg: SgdConfig):
        self.cfg = cfg
        self.velocity: dict = {}

    def step(self, params: dict, grads: dict) -> None:
        sgd_step(params, grads, self.cfg, self.velocity)
