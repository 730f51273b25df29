"""Technician-feedback fine-tuning.

When an operator marks an alarm as false, the flagged sources are brought up
to date in place: an unknown-but-legitimate actuator combination joins the
database, and each flagged output section is fine-tuned for a few epochs on
the small record batch around the alarm. Only that section's three head
layers move; the shared feature extractor and every other section stay
bit-identical, which is what keeps the update fast enough to run between
detection intervals.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from plantguard.errors import (
    AdaptationError,
    ComparisonError,
    ConfigError,
    NumericInputError,
    TrainingDivergenceError,
)
from plantguard.actuators import ActuatorDb
from plantguard.nn.optim import SgdConfig, SgdOptimizer
from plantguard.wdnn import WdnnModel, section_cost, section_cost_grad


@dataclass
class InstanceBatch:
    """The prediction instances of one detection interval.

    ``inputs`` are the already-normalized feature windows whose first
    predicted step lands on ``times``; ``sensor_targets`` are the observed
    normalized sensor vectors at those times.
    """

    times: np.ndarray
    inputs: np.ndarray            # s x m x w_in
    sensor_targets: np.ndarray    # s x m_se
    actuator_states: np.ndarray   # s x m_ac

    def __len__(self) -> int:
        return int(self.times.size)

    def tuple_at(self, t: int) -> np.ndarray:
        idx = int(np.flatnonzero(self.times == t)[0])
        return self.actuator_states[idx]


@dataclass
class FeedbackDecision:
    """A technician's false-alarm verdict for the alarm at time t.

    ``fa`` has one flag per source: index 0 is the actuator database, index
    g >= 1 is output section g-1.
    """

    t: int
    fa: list
    batch: InstanceBatch

    def __post_init__(self):
        if not any(self.fa):
            raise ConfigError("feedback carries no flagged source")


@dataclass
class TuningConfig:
    epochs: int = 100
    learning_rate: float = 0.01
    momentum: float = 0.9

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"tuning epochs must be >= 1, got {self.epochs}")


@dataclass
class AdaptationReport:
    t: int
    fa: list
    db_inserted: bool
    epochs: int
    pre_cost: dict = field(default_factory=dict)
    post_cost: dict = field(default_factory=dict)
    wall_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "fa": list(self.fa),
            "db_inserted": self.db_inserted,
            "epochs": self.epochs,
            "pre_cost": dict(self.pre_cost),
            "post_cost": dict(self.post_cost),
            "wall_ms": self.wall_ms,
        }


def _section_slice(targets: np.ndarray, model: WdnnModel, g: int) -> np.ndarray:
    idx = model.cfg.layout.groups[g]
    return targets[:, idx]


def _tune_section(model: WdnnModel, g: int, features: np.ndarray,
                  targets: np.ndarray, cfg: TuningConfig) -> tuple:
    """Fine-tunes head g on cached extractor features; returns (pre, post) cost."""
    head = model.heads[g]
    params = head.params()
    snapshot = {name: arr.copy() for name, arr in params.items()}
    opt = SgdOptimizer(SgdConfig(cfg.learning_rate, cfg.momentum, batch_size=len(targets)))
    pre = None
    try:
        for _ in range(cfg.epochs):
            pred = head.forward(features)
            cost = section_cost(pred, targets)
            if pre is None:
                pre = cost
            if not np.isfinite(cost):
                raise AdaptationError(f"section {g} cost diverged during tuning")
            _, grads = head.backward(section_cost_grad(pred, targets))
            opt.step(params, grads)
        post = section_cost(head.forward(features), targets)
        head._caches = None
        if not np.isfinite(post):
            raise AdaptationError(f"section {g} cost non-finite after tuning")
    except (AdaptationError, TrainingDivergenceError, NumericInputError) as exc:
        for name, arr in params.items():
            arr[...] = snapshot[name]
        head._caches = None
        if not isinstance(exc, AdaptationError):
            raise AdaptationError(f"section {g} diverged during tuning") from exc
        raise
    return pre, post


def handle_feedback(
    decision: FeedbackDecision,
    model: WdnnModel,
    db: ActuatorDb,
    cfg: TuningConfig,
) -> AdaptationReport:
    """Applies one false-alarm verdict; model and db are updated in place.

    Caller must hold exclusive write access. On divergence the touched
    section is restored and AdaptationError propagates.
    """
    started = time.perf_counter()
    n_sections = model.cfg.layout.n_sections
    if len(decision.fa) != n_sections + 1:
        raise ConfigError(f"fa vector must have {n_sections + 1} flags, got {len(decision.fa)}")

    inserted = False
    if decision.fa[0]:
        nu = decision.batch.tuple_at(decision.t)
        inserted = db.insert(nu)

    report = AdaptationReport(
        t=decision.t, fa=list(decision.fa), db_inserted=inserted, epochs=cfg.epochs
    )
    flagged = [g for g in range(n_sections) if decision.fa[g + 1]]
    if flagged:
        if model.cfg.predict_steps != 1:
            raise ConfigError(
                "feedback tuning targets observed values at the alarm times; "
                "multi-step prediction heads are not supported here"
            )
        if decision.batch.inputs.shape[0] == 0:
            raise ConfigError("feedback batch is empty")
        features = model.forward_features(decision.batch.inputs)
        for g in flagged:
            targets = _section_slice(decision.batch.sensor_targets, model, g)
            pre, post = _tune_section(model, g, features, targets, cfg)
            report.pre_cost[g] = pre
            report.post_cost[g] = post
    report.wall_ms = (time.perf_counter() - started) * 1e3
    return report


def frozen_parameter_check(before: dict, after: dict, section_names) -> bool:
    """True iff every parameter outside ``section_names`` is bit-identical.

    ``before``/``after`` map registry names to arrays (e.g. saved copies of
    model.params()); ``section_names`` lists the parameters allowed to move.
    """
    if set(before) != set(after):
        raise ComparisonError("parameter registries differ; models are not comparable")
    allowed = set(section_names)
    for name, arr in before.items():
        if name in allowed:
            continue
        if arr.shape != after[name].shape:
            raise ComparisonError(f"shape changed for {name!r}")
        if not np.array_equal(arr, after[name]):
            return False
    return True
