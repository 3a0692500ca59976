# simulation_tool.py
"""Replay a test stream as the live user and score the planner against it."""

from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Protocol, Sequence

import numpy as np

from tools.behavior_tool import ClashKind, StateClassification, StateKind
from tools.state_model_tool import HomeModel
from tools.trace_tool import FrameSet
from utils.errors import EmptyTrace, InvalidState
from utils.logger import log_debug
from utils.seeding import round_half_up


@dataclass
class SlotMetrics:
    slot_index: int
    readings_in_slot: int = 0
    predictions: int = 0
    strict_clashes: int = 0
    ld_clashes: int = 0
    total_clashes: int = 0
    actual_power: float = 0.0
    planned_power: float = 0.0
    updates_applied: int = 0
    substitutions: int = 0
    strict_substitutions: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class Recommender(Protocol):
    replan_interval: int

    def recommend(self, s: int) -> int: ...

    def observe(self, s: int, recommended: int, actual: int) -> bool: ...

    def replan(self): ...


def clash_kind(recommended: int, actual: int, classification: StateClassification) -> ClashKind:
    if recommended == actual:
        return ClashKind.NONE
    kind = classification.kind_of(actual)
    if kind in (StateKind.SHD, StateKind.SLD):
        return ClashKind.STRICT
    if kind is StateKind.LLD:
        return ClashKind.LOOSE_LOW
    return ClashKind.LOOSE_HIGH


def planner_adjusted_power(actual: int, recommended: int, classification: StateClassification,
                           state_powers: Sequence[float]) -> float:
    """Power after substitution: strict states are kept, others take the cheaper of the two."""
    if classification.is_strict(actual):
        return float(state_powers[actual])
    return float(min(state_powers[actual], state_powers[recommended]))


def simulate_states(states: Sequence[int], classification: StateClassification, planner: Recommender,
                    state_powers: Sequence[float], slot_size: int = 1000) -> List[SlotMetrics]:
    """Score the prediction made at reading t against the state observed at t + 1."""
    states = np.asarray(states, dtype=int)
    if len(states) == 0:
        raise EmptyTrace("Cannot simulate an empty test stream")
    powers = np.asarray(state_powers, dtype=float)
    if states.min() < 0 or states.max() >= len(powers):
        raise InvalidState(f"Test states must lie in 0..{len(powers) - 1}")

    slots = [SlotMetrics(i) for i in range(-(-len(states) // slot_size))]
    interval = getattr(planner, "replan_interval", 0) or 0
    pending: Optional[int] = None
    for t, actual in enumerate(states):
        actual = int(actual)
        slot = slots[t // slot_size]
        slot.readings_in_slot += 1
        slot.actual_power += powers[actual]

        if pending is None:
            slot.planned_power += powers[actual]
        else:
            slot.predictions += 1
            kind = clash_kind(pending, actual, classification)
            if kind is not ClashKind.NONE:
                slot.total_clashes += 1
                if kind is ClashKind.STRICT:
                    slot.strict_clashes += 1
                    if planner.observe(int(states[t - 1]), pending, actual):
                        slot.updates_applied += 1
                elif kind is ClashKind.LOOSE_LOW:
                    slot.ld_clashes += 1
            planned = planner_adjusted_power(actual, pending, classification, powers)
            slot.planned_power += planned
            if planned < powers[actual]:
                slot.substitutions += 1
                if classification.is_strict(actual):
                    slot.strict_substitutions += 1

        if interval and t > 0 and t % interval == 0:
            planner.replan()
        pending = planner.recommend(actual) if t + 1 < len(states) else None

    log_debug(f"Simulated {len(states)} readings over {len(slots)} slots")
    return slots


def run_simulation(home: HomeModel, classification: StateClassification, planner: Recommender,
                   frames: FrameSet, slot_size: int = 1000) -> List[SlotMetrics]:
    if len(frames) == 0:
        raise EmptyTrace("Cannot simulate an empty test stream")
    return simulate_states(home.assign_states(frames), classification, planner, home.state_powers, slot_size)


def summarize(metrics: Sequence[SlotMetrics]) -> Dict[str, float]:
    if not metrics:
        return {"slots": 0}
    decile = max(1, round_half_up(len(metrics) / 10))
    strict = np.array([m.strict_clashes for m in metrics], dtype=float)
    actual = float(sum(m.actual_power for m in metrics))
    planned = float(sum(m.planned_power for m in metrics))
    return {
        "slots": len(metrics),
        "readings": int(sum(m.readings_in_slot for m in metrics)),
        "first_decile_strict_mean": float(strict[:decile].mean()),
        "last_decile_strict_mean": float(strict[-decile:].mean()),
        "strict_clashes": int(strict.sum()),
        "ld_clashes": int(sum(m.ld_clashes for m in metrics)),
        "total_clashes": int(sum(m.total_clashes for m in metrics)),
        "updates_applied": int(sum(m.updates_applied for m in metrics)),
        "actual_power": actual,
        "planned_power": planned,
        "percent_saved": 100.0 * (1.0 - planned / actual) if actual > 0 else 0.0,
    }
