# behavior_tool.py
"""User behaviour labelling over a domain-state sequence.

Actions (STAY/MOVE) are read off consecutive states; actuations are the
same labels with a seeded fraction flipped, standing in for the gap
between what a device was told to do and what the user did. States are
split into high/low demand and a random strict subset of each, which the
planner must never override.
"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Sequence, Tuple

import numpy as np

from utils.errors import DataError, InsufficientData, InvalidState
from utils.seeding import round_half_up


class ActionLabel(IntEnum):
    STAY = 0
    MOVE = 1

    @property
    def symbol(self) -> str:
        return "S" if self is ActionLabel.STAY else "M"


class ActuationLabel(IntEnum):
    stay = 0
    move = 1

    @property
    def symbol(self) -> str:
        return "s" if self is ActuationLabel.stay else "m"


class StateKind(str, Enum):
    SHD = "SHD"
    LHD = "LHD"
    SLD = "SLD"
    LLD = "LLD"


class ClashKind(str, Enum):
    NONE = "none"
    STRICT = "strict"
    LOOSE_LOW = "loose_low"
    LOOSE_HIGH = "loose_high"


def label_actions(states: Sequence) -> np.ndarray:
    """STAY (0) where the next state equals the current one, else MOVE (1).

    Accepts state ids (1-D) or mode tuples (2-D, one row per step).
    """
    states = np.asarray(states)
    if len(states) < 2:
        raise InsufficientData(f"Need at least 2 states to label actions, got {len(states)}")
    changed = states[1:] != states[:-1]
    if changed.ndim > 1:
        changed = changed.any(axis=tuple(range(1, changed.ndim)))
    return changed.astype(np.int8)


def simulate_actuations(actions: Sequence[int], flip_fraction: float = 0.3, seed: int = 0) -> np.ndarray:
    """Copy of `actions` with exactly round(flip_fraction * N) seeded positions inverted."""
    actions = np.asarray(actions, dtype=np.int8)
    if not 0.0 <= flip_fraction <= 1.0:
        raise DataError(f"flip_fraction must lie in [0, 1], got {flip_fraction}")
    flips = min(len(actions), round_half_up(flip_fraction * len(actions)))
    actuations = actions.copy()
    if flips:
        positions = np.random.default_rng(seed).choice(len(actions), size=flips, replace=False)
        actuations[positions] = 1 - actuations[positions]
    return actuations


def visit_counts(states: Sequence[int], m: int) -> np.ndarray:
    return np.bincount(np.asarray(states, dtype=int), minlength=m)[:m]


@dataclass
class StateClassification:
    shd: Tuple[int, ...]
    lhd: Tuple[int, ...]
    sld: Tuple[int, ...]
    lld: Tuple[int, ...]
    counts: np.ndarray
    top: float = 0.22
    fix_hd: float = 0.3
    fix_ld: float = 0.3
    _kinds: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for kind, ids in ((StateKind.SHD, self.shd), (StateKind.LHD, self.lhd),
                          (StateKind.SLD, self.sld), (StateKind.LLD, self.lld)):
            for s in ids:
                self._kinds[int(s)] = kind

    @property
    def strict(self) -> Tuple[int, ...]:
        return tuple(sorted(self.shd + self.sld))

    @property
    def high_demand(self) -> Tuple[int, ...]:
        return tuple(sorted(self.shd + self.lhd))

    @property
    def low_demand(self) -> Tuple[int, ...]:
        return tuple(sorted(self.sld + self.lld))

    @property
    def visited(self) -> Tuple[int, ...]:
        return tuple(sorted(self._kinds))

    def kind_of(self, state: int) -> StateKind:
        # Never-visited states rank below every visited one.
        return self._kinds.get(int(state), StateKind.LLD)

    def is_strict(self, state: int) -> bool:
        return self.kind_of(state) in (StateKind.SHD, StateKind.SLD)

    def to_dict(self) -> dict:
        return {
            "shd": list(self.shd), "lhd": list(self.lhd), "sld": list(self.sld), "lld": list(self.lld),
            "counts": [int(c) for c in self.counts],
            "top": self.top, "fix_hd": self.fix_hd, "fix_ld": self.fix_ld,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StateClassification":
        return cls(
            tuple(int(s) for s in data["shd"]), tuple(int(s) for s in data["lhd"]),
            tuple(int(s) for s in data["sld"]), tuple(int(s) for s in data["lld"]),
            np.asarray(data["counts"], dtype=int),
            float(data["top"]), float(data["fix_hd"]), float(data["fix_ld"]),
        )


def _strict_subset(group: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    if len(group) == 0:
        return group
    size = min(len(group), max(1, round_half_up(fraction * len(group))))
    return np.sort(rng.choice(group, size=size, replace=False))


def classify_states(counts: Sequence[int], top: float = 0.22, fix_hd: float = 0.3, fix_ld: float = 0.3,
                    seed: int = 0) -> StateClassification:
    """Split visited states into high/low demand by visit frequency, then pick strict subsets."""
    counts = np.asarray(counts, dtype=int)
    visited = np.flatnonzero(counts > 0)
    if len(visited) == 0:
        raise InsufficientData("Cannot classify states without any visits")

    # Descending count, ascending id on ties.
    ranked = visited[np.lexsort((visited, -counts[visited]))]
    hd_size = min(len(ranked), max(1, round_half_up(top * len(ranked))))
    hd, ld = ranked[:hd_size], ranked[hd_size:]

    rng = np.random.default_rng(seed)
    shd = _strict_subset(hd, fix_hd, rng)
    sld = _strict_subset(ld, fix_ld, rng)
    lhd = np.setdiff1d(hd, shd)
    lld = np.setdiff1d(ld, sld)

    as_ids = lambda ids: tuple(int(s) for s in np.sort(ids))
    return StateClassification(as_ids(shd), as_ids(lhd), as_ids(sld), as_ids(lld), counts, top, fix_hd, fix_ld)


def joint_transition_counts(states: Sequence[int], actions: Sequence[int], actuations: Sequence[int],
                            m: int) -> np.ndarray:
    """Dense count[d, d', actuation, action] over consecutive state pairs."""
    states = np.asarray(states, dtype=int)
    actions = np.asarray(actions, dtype=int)
    actuations = np.asarray(actuations, dtype=int)
    if len(actions) != len(states) - 1 or len(actuations) != len(actions):
        raise DataError(
            f"Length mismatch: {len(states)} states need {len(states) - 1} actions/actuations, "
            f"got {len(actions)}/{len(actuations)}"
        )
    if len(states) and (states.min() < 0 or states.max() >= m):
        raise InvalidState(f"State ids must lie in 0..{m - 1}")
    counts = np.zeros((m, m, 2, 2), dtype=np.int64)
    np.add.at(counts, (states[:-1], states[1:], actuations, actions), 1)
    return counts


def sparse_counts(counts: np.ndarray) -> list:
    """Non-zero cells as [d, d', actuation, action, count] rows."""
    return [[*map(int, idx), int(counts[idx])] for idx in zip(*np.nonzero(counts))]


def dense_counts(rows: Sequence[Sequence[int]], m: int) -> np.ndarray:
    counts = np.zeros((m, m, 2, 2), dtype=np.int64)
    for d, d2, actuation, action, count in rows:
        counts[d, d2, actuation, action] = count
    return counts
