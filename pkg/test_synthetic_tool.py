#!/usr/bin/env python3
"""Tests for synthetic trace generation and the built-in scenarios."""

import sys

import numpy as np
import pandas as pd
import pytest

from tools.synthetic_tool import (
    DeviceSpec,
    RoutineStep,
    SyntheticSpec,
    generate_synthetic_trace,
    preference_scenario,
    savings_scenario,
    validate_spec,
)
from tools.trace_tool import parse_trace, write_trace
from utils.errors import ConfigError


def square_wave(length=20, noise=0.0, seed=0) -> SyntheticSpec:
    return SyntheticSpec(
        devices=[DeviceSpec(device_id="kettle", mode_powers=[0.0, 100.0])],
        routine=[RoutineStep(modes=[0], dwell=5), RoutineStep(modes=[1], dwell=5)],
        length=length,
        preference_noise=noise,
        seed=seed,
    )


def test_square_wave():
    trace = generate_synthetic_trace(square_wave())
    assert trace.power[:, 0].tolist() == ([0.0] * 5 + [100.0] * 5) * 2
    assert np.diff(trace.timestamps).tolist() == [15.0] * 19
    assert trace.timestamps[0] == 1451606400.0


def test_noise_free_trace_follows_the_routine():
    spec = preference_scenario(length=48)
    trace = generate_synthetic_trace(spec)
    cycle = np.array([step.modes for step in spec.routine])
    np.testing.assert_array_equal(trace.mode_labels, np.vstack([cycle] * 2))


def test_preference_noise_is_seeded_and_valid():
    first = generate_synthetic_trace(square_wave(length=2000, noise=0.5, seed=4))
    second = generate_synthetic_trace(square_wave(length=2000, noise=0.5, seed=4))
    clean = generate_synthetic_trace(square_wave(length=2000))
    np.testing.assert_array_equal(first.mode_labels, second.mode_labels)
    assert (first.mode_labels != clean.mode_labels).any()
    assert set(np.unique(first.mode_labels)) <= {0, 1}


def test_scenarios_have_distinct_tuples():
    preference = generate_synthetic_trace(preference_scenario(length=240))
    assert len({tuple(row) for row in preference.mode_labels}) == 24
    # Cheap and expensive readings alternate.
    totals = preference.power.sum(axis=1)
    assert totals[0::2].max() <= 65.0 and totals[1::2].min() >= 800.0
    savings = generate_synthetic_trace(savings_scenario(length=1800))
    tuples = [tuple(row) for row in savings.mode_labels]
    assert len(set(tuples)) == 10
    assert tuples.count((0, 0, 0)) / len(tuples) == pytest.approx(0.3)


def test_readings_and_labels_line_up(tmp_path):
    trace = generate_synthetic_trace(preference_scenario(length=16))
    readings = trace.readings
    assert len(readings) == 16 * 5
    assert {r.device_id for r in readings[:5]} == {"fridge", "lights", "tv", "heater", "oven"}
    parsed, _ = parse_trace(write_trace(readings, tmp_path / "t.csv"))
    assert len(parsed) == 80

    labels = pd.read_csv(trace.write_labels(tmp_path / "t.labels.csv"))
    assert labels.columns.tolist() == ["timestamp", "fridge", "lights", "tv", "heater", "oven"]
    assert labels["timestamp"].iloc[0] == 1451606400


@pytest.mark.parametrize("data", [
    {"devices": [{"device_id": "a", "mode_powers": [0, 10]}], "routine": [{"modes": [2]}]},
    {"devices": [{"device_id": "a", "mode_powers": [-5]}], "routine": [{"modes": [0]}]},
    {"devices": [{"device_id": "a", "mode_powers": [1]}], "routine": [{"modes": [0, 0]}]},
    {"devices": [], "routine": [{"modes": []}]},
])
def test_invalid_specs_raise_config_error(data):
    with pytest.raises(ConfigError):
        validate_spec(data)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
