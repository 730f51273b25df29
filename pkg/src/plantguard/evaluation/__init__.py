from plantguard.evaluation.metrics import (
    AttackOutcome,
    PointMetrics,
    attack_outcomes,
    detected_count,
    false_alarm_episodes,
    interventions_rate,
    point_metrics,
)
from plantguard.evaluation.experiment import (
    OracleTechnician,
    ReplayOutcome,
    TrainedSystem,
    domain_shift_scenario,
    evaluate_outcome,
    fit_system,
    generate_scenario,
    noise_scenario,
    noise_sweep,
    replay,
    run_experiment,
    sweep_grace,
    sweep_waiting_window,
    validation_error_series,
    wdnn_config_for,
)

__all__ = [
    "PointMetrics", "AttackOutcome", "point_metrics", "attack_outcomes",
    "detected_count", "interventions_rate", "false_alarm_episodes",
    "TrainedSystem", "OracleTechnician", "ReplayOutcome", "fit_system",
    "validation_error_series", "replay", "evaluate_outcome",
    "sweep_waiting_window", "sweep_grace", "noise_sweep",
    "domain_shift_scenario", "noise_scenario", "generate_scenario",
    "run_experiment", "wdnn_config_for",
]
