"""Built-in dataset profiles.

The two water-testbed profiles mirror the published column layout and the
tuned hyperparameters for those datasets; the data itself is license-gated
and must be supplied by the user. The synthetic profile matches the bundled
two-tank plant generator and is scaled down so the full pipeline runs on a
desk in minutes.
"""

from __future__ import annotations

from plantguard.data.records import DatasetProfile

_SWAT_SENSORS = [
    "FIT101", "LIT101",
    "AIT201", "AIT202", "AIT203", "FIT201",
    "DPIT301", "FIT301", "LIT301",
    "AIT401", "AIT402", "FIT401", "LIT401",
    "AIT501", "AIT502", "AIT503", "AIT504",
    "FIT501", "FIT502", "FIT503", "FIT504",
    "PIT501", "PIT502", "PIT503",
    "FIT601",
]
_SWAT_ACTUATORS = [
    "MV101", "P101", "P102",
    "MV201", "P201", "P202", "P203", "P204", "P205", "P206",
    "MV301", "MV302", "MV303", "MV304", "P301", "P302",
    "P401", "P402", "P403", "P404", "UV401",
    "P501", "P502",
    "P601", "P602", "P603",
]
# sensor groups per PLC stage
_SWAT_GROUPS = [
    [0, 1],
    [2, 3, 4, 5],
    [6, 7, 8],
    [9, 10, 11, 12],
    [13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23],
    [24],
]


def swat_profile() -> DatasetProfile:
    return DatasetProfile(
        name="swat",
        sensor_columns=list(_SWAT_SENSORS),
        actuator_columns=list(_SWAT_ACTUATORS),
        w_in=60,
        w_out=4,
        horizon=50,
        interval_s=32,
        w_anom=30,
        w_grace=0,
        med_kernel=59,
        learning_rate=0.01,
        batch_size=32,
        tuning_epochs=100,
        groups=[list(g) for g in _SWAT_GROUPS],
        dl2_base=60,          # 3 x w_in enrichment
        cl1=(64, 2),
        cl2=(128, 2),
        validation_fraction=0.2,
    )


def wadi_profile() -> DatasetProfile:
    # generic column names; adapt to the local export's headers via a profile
    # JSON if they differ
    sensors = [f"S{i:03d}" for i in range(1, 70)]
    actuators = [f"A{i:03d}" for i in range(1, 55)]
    groups = [list(range(0, 23)), list(range(23, 46)), list(range(46, 69))]
    return DatasetProfile(
        name="wadi",
        sensor_columns=sensors,
        actuator_columns=actuators,
        w_in=50,
        w_out=4,
        horizon=20,
        interval_s=32,
        w_anom=30,
        w_grace=0,
        med_kernel=59,
        learning_rate=0.001,
        batch_size=32,
        tuning_epochs=100,
        groups=groups,
        dl2_base=123,         # 3 x (m_se + m_ac) enrichment
        cl1=(64, 5),
        cl2=(128, 5),
        validation_fraction=0.05,
    )


def synthetic_profile() -> DatasetProfile:
    return DatasetProfile(
        name="synthetic-two-tank",
        sensor_columns=["LIT1", "FIT1", "LIT2", "FIT2"],
        actuator_columns=["MV1", "P1", "P2"],
        w_in=12,
        w_out=4,
        horizon=4,
        interval_s=32,
        w_anom=4,
        w_grace=0,
        med_kernel=11,
        learning_rate=0.05,
        batch_size=32,
        tuning_epochs=100,
        groups=[[0, 1], [2, 3]],
        momentum=0.8,
        dl2_base=12,
        cl1=(64, 2),
        cl2=(128, 2),
        validation_fraction=0.2,
    )


_BUILTIN = {
    "swat": swat_profile,
    "wadi": wadi_profile,
    "synthetic-two-tank": synthetic_profile,
}


def builtin_profile(name: str) -> DatasetProfile:
    try:
        return _BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown profile {name!r}; built-ins: {sorted(_BUILTIN)}") from None
