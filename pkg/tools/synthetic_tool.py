# synthetic_tool.py
"""Synthetic smart-home traces with a known user routine.

A routine is a cyclic schedule of mode tuples (one mode per device), each
held for `dwell` readings. Every reading step emits one reading per device
at the same timestamp, so aligned frames equal routine steps one-to-one.
"""

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from tools.trace_tool import FrameSet, Reading
from utils.errors import ConfigError

DEFAULT_START = 1451606400.0  # 2016-01-01T00:00:00Z
DEFAULT_CADENCE = 15.0


class DeviceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    device_id: str
    mode_powers: List[float] = Field(min_length=1)
    jitter: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_powers(self):
        if min(self.mode_powers) < 0:
            raise ValueError(f"{self.device_id}: mode powers must be non-negative")
        return self


class RoutineStep(BaseModel):
    model_config = ConfigDict(extra="forbid")

    modes: List[int]
    dwell: int = Field(1, ge=1)


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    devices: List[DeviceSpec] = Field(min_length=1)
    routine: List[RoutineStep] = Field(min_length=1)
    preference_noise: float = Field(0.0, ge=0.0, le=1.0)
    length: int = Field(1000, ge=2)
    seed: int = 0
    start: float = DEFAULT_START
    cadence: float = Field(DEFAULT_CADENCE, gt=0.0)

    @model_validator(mode="after")
    def _check_routine(self):
        for position, step in enumerate(self.routine):
            if len(step.modes) != len(self.devices):
                raise ValueError(f"routine[{position}] names {len(step.modes)} modes for {len(self.devices)} devices")
            for device, mode in zip(self.devices, step.modes):
                if not 0 <= mode < len(device.mode_powers):
                    raise ValueError(f"routine[{position}]: {device.device_id} has no mode {mode}")
        return self

    @property
    def device_ids(self) -> List[str]:
        return [d.device_id for d in self.devices]


@dataclass
class SyntheticTrace:
    timestamps: np.ndarray
    power: np.ndarray
    mode_labels: np.ndarray
    device_ids: tuple

    @property
    def readings(self) -> List[Reading]:
        return [
            Reading(float(t), device_id, float(self.power[i, j]))
            for i, t in enumerate(self.timestamps)
            for j, device_id in enumerate(self.device_ids)
        ]

    def frames(self) -> FrameSet:
        return FrameSet(self.timestamps, self.power, self.device_ids)

    def write_labels(self, destination: Union[str, Path]) -> Path:
        frame = pd.DataFrame(self.mode_labels, columns=list(self.device_ids))
        frame.insert(0, "timestamp", self.timestamps.astype(np.int64) if np.all(self.timestamps % 1 == 0) else self.timestamps)
        path = Path(destination)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
        return path


def validate_spec(data) -> SyntheticSpec:
    if isinstance(data, SyntheticSpec):
        return data
    try:
        return SyntheticSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid synthetic spec: {e}") from e


def _routine_schedule(spec: SyntheticSpec) -> np.ndarray:
    cycle = np.array([step.modes for step in spec.routine for _ in range(step.dwell)], dtype=int)
    reps = -(-spec.length // len(cycle))
    return np.tile(cycle, (reps, 1))[:spec.length]


def generate_synthetic_trace(spec) -> SyntheticTrace:
    spec = validate_spec(spec)
    rng = np.random.default_rng(spec.seed)
    labels = _routine_schedule(spec)

    if spec.preference_noise > 0:
        noisy = rng.random(spec.length) < spec.preference_noise
        for j, device in enumerate(spec.devices):
            labels[noisy, j] = rng.integers(0, len(device.mode_powers), size=int(noisy.sum()))

    power = np.empty(labels.shape, dtype=float)
    for j, device in enumerate(spec.devices):
        power[:, j] = np.asarray(device.mode_powers, dtype=float)[labels[:, j]]
        if device.jitter > 0:
            power[:, j] = np.clip(power[:, j] + rng.normal(0.0, device.jitter, size=spec.length), 0.0, None)

    timestamps = spec.start + spec.cadence * np.arange(spec.length, dtype=float)
    return SyntheticTrace(timestamps, power, labels, tuple(spec.device_ids))


# ============================ SCENARIOS ============================

def preference_scenario(length: int = 30000, seed: int = 0, preference_noise: float = 0.0) -> SyntheticSpec:
    """Twelve cheap tuples, each followed by its own expensive tuple, one reading apiece.

    Holding a cheap tuple is the best plan the history shows, while the user
    always moves on; moves into strict tuples are what the planner must learn.
    """
    devices = [
        DeviceSpec(device_id="fridge", mode_powers=[0.0, 20.0]),
        DeviceSpec(device_id="lights", mode_powers=[0.0, 10.0, 30.0]),
        DeviceSpec(device_id="tv", mode_powers=[0.0, 15.0]),
        DeviceSpec(device_id="heater", mode_powers=[0.0, 1000.0]),
        DeviceSpec(device_id="oven", mode_powers=[0.0, 800.0]),
    ]
    routine = []
    for i, small in enumerate(itertools.product(range(2), range(3), range(2))):
        heavy = [1, 0] if i % 2 == 0 else [0, 1]
        routine.append(RoutineStep(modes=[*small, 0, 0]))
        routine.append(RoutineStep(modes=[*small, *heavy]))
    return SyntheticSpec(devices=devices, routine=routine, preference_noise=preference_noise, length=length, seed=seed)


def savings_scenario(length: int = 30000, seed: int = 0, preference_noise: float = 0.0) -> SyntheticSpec:
    """A cheap base tuple alternating with nine wasteful excursion tuples held much longer."""
    devices = [
        DeviceSpec(device_id="heater", mode_powers=[0.0, 400.0]),
        DeviceSpec(device_id="lights", mode_powers=[10.0, 60.0, 120.0]),
        DeviceSpec(device_id="tv", mode_powers=[0.0, 150.0]),
    ]
    base = (0, 0, 0)
    excursions = [modes for modes in itertools.product(range(2), range(3), range(2)) if modes != base][:9]
    routine = []
    for modes in excursions:
        routine.append(RoutineStep(modes=list(base), dwell=6))
        routine.append(RoutineStep(modes=list(modes), dwell=14))
    return SyntheticSpec(devices=devices, routine=routine, preference_noise=preference_noise, length=length, seed=seed)


SCENARIOS = {"preference": preference_scenario, "savings": savings_scenario}
