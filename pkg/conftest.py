# conftest.py
"""Shared fixtures: desk-scale configs small enough for the test suite."""

import pytest

from config import build_config


def desk_gng(start_nodes: int, max_nodes: int, max_edge_age: int, alpha: float, error_decay: float,
             epochs: int = 2) -> dict:
    return {
        "max_nodes": max_nodes,
        "max_edge_age": max_edge_age,
        "alpha": alpha,
        "error_decay": error_decay,
        "epochs": epochs,
        "start_nodes": start_nodes,
    }


def desk_config_data(tmp_path, seed: int = 7) -> dict:
    # Synthetic powers are exact levels, so the calendar columns are switched off
    # and every distinct point gets several start neurons.
    return {
        "seed": seed,
        "paths": {
            "trace": str(tmp_path / "trace.csv"),
            "bundle": str(tmp_path / "bundle"),
            "report": str(tmp_path / "report"),
        },
        "clustering": {
            "device_modes": desk_gng(12, 40, 100, 0.5, 0.995),
            "domain_states": desk_gng(60, 100, 50, 0.3, 0.9),
            "time_weight": 0.0,
            "max_train_samples": 2000,
        },
    }


@pytest.fixture
def desk_config(tmp_path):
    """Factory: desk_config(**section_updates) -> RunConfig rooted in tmp_path."""

    def _make(seed: int = 7, **sections):
        data = desk_config_data(tmp_path, seed)
        for section, values in sections.items():
            if isinstance(values, dict):
                data.setdefault(section, {}).update(values)
            else:
                data[section] = values
        return build_config(data)

    return _make
