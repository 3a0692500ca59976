# config.py
"""Run configuration: pydantic models, file/env loading and dotted overrides.

Defaults: device-mode GNG (10000 nodes, age 100, alpha 0.5, decay 0.995),
domain-state GNG (20000 nodes, age 50, alpha 0.3, decay 0.9), epochs=150,
start_nodes=1000, insertion every 20 presentations, k=3, top=22%, fix=30%,
gamma=0.9, e=0.1, 1000-reading slots and 30% actuation flips.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from utils.errors import ConfigError
from utils.seeding import derive_seed


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SchemaConfig(_Section):
    timestamp_col: str = "timestamp"
    device_col: str = "device_id"
    power_col: str = "power"
    # Column positions (timestamp, device, power) used when there is no header.
    order: List[int] = Field(default_factory=lambda: [0, 1, 2])
    has_header: Optional[bool] = None
    strict: bool = False
    delimiter: str = ","

    @model_validator(mode="after")
    def _check_order(self):
        if len(self.order) != 3 or len(set(self.order)) != 3 or min(self.order) < 0:
            raise ValueError("schema.order must name three distinct non-negative column positions")
        return self


class SplitConfig(_Section):
    train_fraction: float = 2.0 / 3.0


class GngSettings(_Section):
    """GNG hyper-parameters as configured; each fit derives its own seed."""

    max_nodes: int = Field(10000, gt=0)
    max_edge_age: int = Field(100, gt=0)
    alpha: float = Field(0.5, gt=0.0, lt=1.0)
    error_decay: float = Field(0.995, gt=0.0, lt=1.0)
    eps_winner: float = Field(0.05, gt=0.0, lt=1.0)
    eps_neighbor: float = Field(0.006, gt=0.0, lt=1.0)
    insertion_interval: int = Field(20, gt=0)
    epochs: int = Field(150, gt=0)
    start_nodes: int = Field(1000, gt=0)
    metric: Literal["euclidean", "cityblock"] = "euclidean"
    prune_dead_units: bool = True

    @model_validator(mode="after")
    def _check_rates(self):
        if not self.eps_neighbor < self.eps_winner:
            raise ValueError("eps_neighbor must be smaller than eps_winner")
        if self.start_nodes > self.max_nodes:
            raise ValueError("start_nodes must not exceed max_nodes")
        return self

    def seeded(self, seed: int) -> "GngParams":
        return GngParams(**self.model_dump(exclude={"seed"}), seed=seed)


class GngParams(GngSettings):
    seed: int = 0


def _device_mode_params() -> GngSettings:
    return GngSettings(max_nodes=10000, max_edge_age=100, alpha=0.5, error_decay=0.995)


def _domain_state_params() -> GngSettings:
    return GngSettings(max_nodes=20000, max_edge_age=50, alpha=0.3, error_decay=0.9)


class ClusteringConfig(_Section):
    device_modes: GngSettings = Field(default_factory=_device_mode_params)
    domain_states: GngSettings = Field(default_factory=_domain_state_params)
    k: int = Field(3, gt=0)
    time_weight: float = Field(0.1, ge=0.0)
    domain_encoding: Literal["power", "onehot"] = "power"
    max_train_samples: Optional[int] = Field(5000, gt=0)
    devices: Optional[List[str]] = None


class ClassificationConfig(_Section):
    top: float = Field(0.22, gt=0.0, le=1.0)
    fix_hd: float = Field(0.30, ge=0.0, le=1.0)
    fix_ld: float = Field(0.30, ge=0.0, le=1.0)
    flip_fraction: float = Field(0.30, ge=0.0, le=1.0)


class PlannerConfig(_Section):
    gamma: float = Field(0.9, ge=0.0, lt=1.0)
    update_factor: float = Field(0.1, ge=0.0, le=1.0)
    smoothing: float = Field(1e-6, ge=0.0)
    replan_interval: int = Field(1000, gt=0)
    support_floor: float = Field(1e-4, ge=0.0)
    solver: Literal["policy_iteration", "value_iteration"] = "policy_iteration"
    transition_basis: Literal["action", "actuation"] = "action"


class SimulationConfig(_Section):
    slot_size: int = Field(1000, gt=0)


class SynthConfig(_Section):
    scenario: Literal["preference", "savings"] = "preference"
    length: int = Field(30000, ge=2)
    preference_noise: float = Field(0.0, ge=0.0, le=1.0)


class PathsConfig(_Section):
    trace: Optional[str] = None
    test_trace: Optional[str] = None
    bundle: str = "model_bundle"
    report: str = "report"


class RunConfig(_Section):
    seed: int = 0
    paths: PathsConfig = Field(default_factory=PathsConfig)
    trace_schema: SchemaConfig = Field(default_factory=SchemaConfig, alias="schema")
    split: SplitConfig = Field(default_factory=SplitConfig)
    clustering: ClusteringConfig = Field(default_factory=ClusteringConfig)
    classification: ClassificationConfig = Field(default_factory=ClassificationConfig)
    planner: PlannerConfig = Field(default_factory=PlannerConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    def module_seed(self, *names) -> int:
        return derive_seed(self.seed, *names)

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except (TypeError, ValueError):
        return raw


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """Return a copy of `config` with dotted keys (`planner.gamma`) replaced."""
    data = config.to_dict()
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = data
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"Unknown config key: {dotted}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"Unknown config key: {dotted}")
        node[parts[-1]] = _parse_value(value) if isinstance(value, str) else value
    return build_config(data)


def build_config(data: Optional[Mapping[str, Any]] = None) -> RunConfig:
    try:
        return RunConfig.model_validate(dict(data or {}))
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None,
                seed: Optional[int] = None) -> RunConfig:
    """Assemble the run config: defaults < JSON file < HITL_SEED < seed < overrides."""
    load_dotenv()
    path = path or os.getenv("HITL_CONFIG")
    data: Dict[str, Any] = {}
    if path:
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigError(f"Config file not found: {config_path}")
        try:
            data = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {config_path} is not valid JSON: {e}") from e

    env_seed = os.getenv("HITL_SEED")
    if env_seed:
        try:
            data["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"HITL_SEED must be an integer, got {env_seed!r}")
    if seed is not None:
        data["seed"] = seed

    config = build_config(data)
    if overrides:
        config = apply_overrides(config, overrides)
    return config
