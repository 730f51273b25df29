"""Deterministic two-tank water plant for desk-scale validation.

Raw water flows through a motorised inlet valve into tank 1, a primary pump
(with a redundant hot standby) transfers it to tank 2, and a slowly varying
consumer demand drains tank 2. Simple hysteresis rules play the PLC role.
Actuation takes effect a few seconds after the command, like a real valve or
pump spin-up, which also makes the plant's next state a function of the
telemetry a forecaster is allowed to see.

Attack scripts spoof sensor readings (the PLC acts on the spoofed value) or
force actuator states; domain-shift scripts activate the redundant pump as
a legitimate operation or recalibrate a sensor with a permanent offset.
Ground-truth labels mark attack intervals only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from plantguard.errors import ConfigError, ScriptError
from plantguard.data.records import RecordSet

SENSORS = ["LIT1", "FIT1", "LIT2", "FIT2"]
ACTUATORS = ["MV1", "P1", "P2"]
STATE_OFF = 1
STATE_ON = 2

SPOOF_RAMP = "spoof-ramp"
SPOOF_CONSTANT = "spoof-constant"
ACTUATOR_FORCE = "actuator-force"


@dataclass
class AttackAction:
    start: int
    end: int
    device: str
    kind: str
    magnitude: float

    def __post_init__(self):
        if self.end <= self.start:
            raise ScriptError(f"attack on {self.device} has empty interval [{self.start}, {self.end})")
        if self.kind in (SPOOF_RAMP, SPOOF_CONSTANT):
            if self.device not in SENSORS:
                raise ScriptError(f"{self.kind} targets a sensor, got {self.device!r}")
        elif self.kind == ACTUATOR_FORCE:
            if self.device not in ACTUATORS:
                raise ScriptError(f"{self.kind} targets an actuator, got {self.device!r}")
            if self.magnitude not in (STATE_OFF, STATE_ON):
                raise ScriptError(f"forced state must be {STATE_OFF} or {STATE_ON}")
        else:
            raise ScriptError(f"unknown attack kind {self.kind!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ShiftSpec:
    """Normal-behaviour evolution applied to the test split only."""

    redundant_pump_episodes: list = field(default_factory=list)   # [(start, end)]
    sensor_offsets: list = field(default_factory=list)            # [(sensor, amount, from_t)]

    def to_dict(self) -> dict:
        return {
            "redundant_pump_episodes": [list(e) for e in self.redundant_pump_episodes],
            "sensor_offsets": [list(o) for o in self.sensor_offsets],
        }


@dataclass
class PlantConfig:
    seed: int = 7
    tank_capacity: float = 1100.0
    inflow_rate: float = 6.0           # mm/s into tank 1 while the valve is open
    pump_rate: float = 5.0             # mm/s tank 1 -> tank 2 while a pump runs
    valve_open_below: float = 250.0
    valve_close_above: float = 800.0
    pump_on_below: float = 300.0
    pump_off_above: float = 750.0
    demand_base: float = 2.0
    demand_swing: float = 1.2
    demand_period: float = 900.0
    demand_noise: float = 0.25         # process noise, mm/s
    level_noise: float = 1.0           # measurement noise, mm
    flow_noise: float = 0.06           # measurement noise, reported flow units
    flow_gain: float = 1.2             # reported flow units per mm/s of flow
    actuation_delay: int = 5           # seconds from command to effect
    flow_slew_s: float = 6.0           # seconds for a flow to ramp to full rate


def _check_scripts(actions: list, duration: int) -> None:
    by_device: dict = {}
    for a in actions:
        if a.start < 0 or a.end > duration:
            raise ScriptError(f"attack on {a.device} falls outside the stream [0, {duration})")
        by_device.setdefault(a.device, []).append((a.start, a.end))
    for device, spans in by_device.items():
        spans.sort()
        for (s1, e1), (s2, _) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ScriptError(f"overlapping scripts on {device}")


class _Plant:
    """One stepping instance of the plant with its own RNG."""

    def __init__(self, cfg: PlantConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.level1 = 500.0
        self.level2 = 500.0
        self.cmd_valve = STATE_ON
        self.cmd_pump = STATE_ON
        delay = max(1, cfg.actuation_delay)
        self.valve_queue = [self.cmd_valve] * delay
        self.pump_queue = [self.cmd_pump] * delay
        self.inflow = cfg.inflow_rate
        self.transfer = cfg.pump_rate

    def step(self, t: int, seen_l1: float, seen_l2: float,
             redundant: bool, forced: dict) -> tuple:
        """Advances one second; returns (sensors, actuators) as recorded."""
        cfg = self.cfg
        # PLC decisions on the readings it can see (possibly spoofed)
        if seen_l1 <= cfg.valve_open_below:
            self.cmd_valve = STATE_ON
        elif seen_l1 >= cfg.valve_close_above:
            self.cmd_valve = STATE_OFF
        if seen_l2 <= cfg.pump_on_below:
            self.cmd_pump = STATE_ON
        elif seen_l2 >= cfg.pump_off_above:
            self.cmd_pump = STATE_OFF

        self.valve_queue.append(self.cmd_valve)
        self.pump_queue.append(self.cmd_pump)
        valve = self.valve_queue.pop(0)
        pump = self.pump_queue.pop(0)

        # redundant episode: primary is out for maintenance, standby takes over
        p1, p2 = (STATE_OFF, pump) if redundant else (pump, STATE_OFF)
        if "MV1" in forced:
            valve = forced["MV1"]
        if "P1" in forced:
            p1 = forced["P1"]
        if "P2" in forced:
            p2 = forced["P2"]

        # flows slew toward their target instead of stepping
        slew_in = cfg.inflow_rate / max(1.0, cfg.flow_slew_s)
        slew_tr = cfg.pump_rate / max(1.0, cfg.flow_slew_s)
        inflow_target = cfg.inflow_rate if valve == STATE_ON else 0.0
        rate_target = cfg.pump_rate * ((p1 == STATE_ON) + (p2 == STATE_ON))
        if self.level1 <= 5.0:
            rate_target = 0.0
        self.inflow += float(np.clip(inflow_target - self.inflow, -slew_in, slew_in))
        self.transfer += float(np.clip(rate_target - self.transfer, -slew_tr, slew_tr))

        demand = (
            cfg.demand_base
            + cfg.demand_swing * np.sin(2 * np.pi * t / cfg.demand_period)
            + self.rng.normal(0.0, cfg.demand_noise)
        )
        demand = max(0.0, demand) if self.level2 > 1.0 else 0.0

        self.level1 = float(np.clip(self.level1 + self.inflow - self.transfer, 0.0, cfg.tank_capacity))
        self.level2 = float(np.clip(self.level2 + self.transfer - demand, 0.0, cfg.tank_capacity))

        sensors = np.array([
            self.level1 + self.rng.normal(0.0, cfg.level_noise),
            self.inflow * cfg.flow_gain + self.rng.normal(0.0, cfg.flow_noise),
            self.level2 + self.rng.normal(0.0, cfg.level_noise),
            self.transfer * cfg.flow_gain + self.rng.normal(0.0, cfg.flow_noise),
        ])
        actuators = np.array([valve, p1, p2], dtype=np.int64)
        return sensors, actuators


def _run(cfg: PlantConfig, duration: int, rng: np.random.Generator,
         attacks: list | None = None, shift: ShiftSpec | None = None,
         t0: int = 0) -> RecordSet:
    attacks = attacks or []
    _check_scripts(attacks, duration)
    shift = shift or ShiftSpec()
    plant = _Plant(cfg, rng)

    offsets = []
    for name, amount, from_t in shift.sensor_offsets:
        if name not in SENSORS:
            raise ScriptError(f"unknown sensor {name!r} in shift spec")
        offsets.append((SENSORS.index(name), float(amount), int(from_t)))

    sensors_out = np.empty((duration, len(SENSORS)))
    actuators_out = np.empty((duration, len(ACTUATORS)), dtype=np.int64)
    labels = np.zeros(duration, dtype=np.int8)

    # readings the PLC saw last second, seeded from the initial state
    seen = {"LIT1": plant.level1, "LIT2": plant.level2}
    for t in range(duration):
        redundant = any(s <= t < e for s, e in shift.redundant_pump_episodes)
        forced: dict = {}
        active_spoofs: list = []
        for a in attacks:
            if a.start <= t < a.end:
                labels[t] = 1
                if a.kind == ACTUATOR_FORCE:
                    forced[a.device] = int(a.magnitude)
                else:
                    active_spoofs.append(a)

        sensors, actuators = plant.step(t, seen["LIT1"], seen["LIT2"], redundant, forced)

        for idx, amount, from_t in offsets:
            if t >= from_t:
                sensors[idx] += amount
        for a in active_spoofs:
            i = SENSORS.index(a.device)
            if a.kind == SPOOF_RAMP:
                sensors[i] += a.magnitude * (t - a.start + 1)
            else:
                sensors[i] += a.magnitude

        # the PLC acts on what the transmitters report, spoofed or not
        seen = {"LIT1": sensors[0], "LIT2": sensors[2]}
        sensors_out[t] = sensors
        actuators_out[t] = actuators

    timestamps = np.arange(t0, t0 + duration, dtype=np.int64)
    return RecordSet(timestamps, sensors_out, actuators_out, labels)


def generate_synthetic_plant(
    cfg: PlantConfig,
    train_duration: int,
    test_duration: int,
    attacks: list | None = None,
    shift: ShiftSpec | None = None,
    validation_fraction: float = 0.2,
) -> tuple:
    """Returns (train, validation, test) record sets.

    Training and validation are attack- and shift-free; validation is the
    contiguous tail of the normal run. Attacks and shifts apply to the test
    split only, with script times relative to the test stream.
    """
    if not 0.0 < validation_fraction < 1.0:
        raise ConfigError("validation fraction must lie in (0, 1)")
    rng = np.random.default_rng(cfg.seed)
    normal = _run(cfg, train_duration, rng)
    split = int(train_duration * (1.0 - validation_fraction))
    if split < 1 or split >= train_duration:
        raise ConfigError("training too short for the requested validation fraction")
    test_rng = np.random.default_rng(cfg.seed + 1)
    test = _run(cfg, test_duration, test_rng, attacks=attacks, shift=shift, t0=0)
    return normal.slice(0, split), normal.slice(split, train_duration), test
