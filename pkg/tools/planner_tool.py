# planner_tool.py
"""Markov decision process over domain states.

T[s, a, s'] is estimated from training transitions, R[s] is the negated
state power, and the policy is solved by policy iteration. While the user
is being observed, clashes on strict states shift probability mass in the
affected row toward the states the user insists on.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from config import PlannerConfig
from tools.behavior_tool import ActionLabel
from utils.errors import DataError, InternalError, InvalidState, NonStochasticModel
from utils.logger import log_debug, log_warn

STAY, MOVE = int(ActionLabel.STAY), int(ActionLabel.MOVE)
ROW_TOLERANCE = 1e-9
MAX_POLICY_ITERATIONS = 1000


@dataclass
class TransitionModel:
    """probs[s, a, s'] with a in (STAY, MOVE); every row sums to 1."""

    probs: np.ndarray
    smoothing: float = 0.0

    @property
    def m(self) -> int:
        return self.probs.shape[0]

    def row(self, s: int, action: int) -> np.ndarray:
        return self.probs[s, action]

    def copy(self) -> "TransitionModel":
        return TransitionModel(self.probs.copy(), self.smoothing)

    def max_row_error(self) -> float:
        return float(np.abs(self.probs.sum(axis=2) - 1.0).max()) if self.m else 0.0

    def to_dict(self) -> dict:
        rows = []
        for s, a in np.ndindex(self.m, 2):
            nz = np.flatnonzero(self.probs[s, a])
            rows.append({"s": int(s), "a": int(a), "to": nz.tolist(), "p": self.probs[s, a, nz].tolist()})
        return {"m": self.m, "smoothing": self.smoothing, "rows": rows}

    @classmethod
    def from_dict(cls, data: dict) -> "TransitionModel":
        m = int(data["m"])
        probs = np.zeros((m, 2, m))
        for row in data["rows"]:
            probs[row["s"], row["a"], row["to"]] = row["p"]
        return cls(probs, float(data.get("smoothing", 0.0)))


@dataclass
class PolicySolution:
    policy: np.ndarray
    utilities: np.ndarray
    gamma: float = 0.9
    iterations: int = 0

    def to_dict(self) -> dict:
        return {"policy": self.policy.astype(int).tolist(), "utilities": self.utilities.tolist(),
                "gamma": self.gamma, "iterations": self.iterations}

    @classmethod
    def from_dict(cls, data: dict) -> "PolicySolution":
        return cls(np.asarray(data["policy"], dtype=np.int8), np.asarray(data["utilities"], dtype=float),
                   float(data["gamma"]), int(data["iterations"]))


def estimate_transition_model(counts: np.ndarray, m: int, smoothing: float = 1e-6,
                              basis: str = "action") -> TransitionModel:
    """Smoothed frequencies from count[d, d', actuation, action].

    Rows with no observations default to a STAY self-loop and a uniform MOVE
    over the other states.
    """
    if m < 1:
        raise DataError("A transition model needs at least one state")
    counts = np.asarray(counts, dtype=float)
    # (d, d', action) marginalized over actuations, or the other way round.
    by_action = counts.sum(axis=2) if basis == "action" else counts.sum(axis=3)
    raw = np.transpose(by_action, (0, 2, 1))
    totals = raw.sum(axis=2, keepdims=True)

    probs = (raw + smoothing) / np.where(totals + m * smoothing > 0, totals + m * smoothing, 1.0)
    empty = totals[:, :, 0] == 0
    for s in range(m):
        if empty[s, STAY]:
            probs[s, STAY] = 0.0
            probs[s, STAY, s] = 1.0
        if empty[s, MOVE]:
            if m == 1:
                probs[s, MOVE] = 1.0
            else:
                probs[s, MOVE] = 1.0 / (m - 1)
                probs[s, MOVE, s] = 0.0
    probs /= probs.sum(axis=2, keepdims=True)
    return TransitionModel(probs, smoothing)


def build_reward_vector(state_powers: Sequence[float]) -> np.ndarray:
    return -np.asarray(state_powers, dtype=float)


def _validate(model: TransitionModel, rewards: np.ndarray, gamma: float):
    if not 0.0 <= gamma < 1.0:
        raise DataError(f"gamma must satisfy 0 <= gamma < 1, got {gamma}")
    if len(rewards) != model.m:
        raise DataError(f"Reward vector length {len(rewards)} != state count {model.m}")
    if (model.probs < -ROW_TOLERANCE).any() or model.max_row_error() > ROW_TOLERANCE:
        raise NonStochasticModel(f"Transition rows must be non-negative and sum to 1 (max error {model.max_row_error():.3g})")


def _evaluate(model: TransitionModel, rewards: np.ndarray, gamma: float, policy: np.ndarray) -> np.ndarray:
    m = model.m
    t_pi = model.probs[np.arange(m), policy]
    return np.linalg.solve(np.eye(m) - gamma * t_pi, rewards)


def _action_values(model: TransitionModel, rewards: np.ndarray, gamma: float, utilities: np.ndarray) -> np.ndarray:
    return rewards[:, None] + gamma * (model.probs @ utilities)


def _greedy(q: np.ndarray, tolerance: float) -> np.ndarray:
    # Ties favour STAY.
    return np.where(q[:, MOVE] > q[:, STAY] + tolerance, MOVE, STAY).astype(np.int8)


def policy_iteration(model: TransitionModel, rewards: Sequence[float], gamma: float = 0.9,
                     initial_policy: Optional[np.ndarray] = None, tolerance: float = 1e-12) -> PolicySolution:
    rewards = np.asarray(rewards, dtype=float)
    _validate(model, rewards, gamma)
    policy = np.full(model.m, STAY, dtype=np.int8) if initial_policy is None else np.asarray(initial_policy, dtype=np.int8).copy()

    for iteration in range(1, MAX_POLICY_ITERATIONS + 1):
        utilities = _evaluate(model, rewards, gamma, policy)
        q = _action_values(model, rewards, gamma, utilities)
        improved = _greedy(q, tolerance)
        # Only switch where the new action is strictly better than the current one.
        current = q[np.arange(model.m), policy]
        best = q[np.arange(model.m), improved]
        improved = np.where(best > current + tolerance, improved, policy).astype(np.int8)
        if np.array_equal(improved, policy):
            log_debug(f"Policy iteration converged after {iteration} iterations")
            return PolicySolution(policy, utilities, gamma, iteration)
        policy = improved
    raise InternalError(f"Policy iteration did not converge within {MAX_POLICY_ITERATIONS} iterations")


def value_iteration(model: TransitionModel, rewards: Sequence[float], gamma: float = 0.9,
                    tolerance: float = 1e-10, max_iterations: int = 100000) -> PolicySolution:
    rewards = np.asarray(rewards, dtype=float)
    _validate(model, rewards, gamma)
    utilities = np.zeros(model.m)
    for iteration in range(1, max_iterations + 1):
        updated = _action_values(model, rewards, gamma, utilities).max(axis=1)
        delta = np.abs(updated - utilities).max() if model.m else 0.0
        utilities = updated
        if delta < tolerance * (1 - gamma) / max(gamma, 1e-12) or delta == 0.0:
            break
    policy = _greedy(_action_values(model, rewards, gamma, utilities), 1e-9)
    return PolicySolution(policy, utilities, gamma, iteration)


def solve(model: TransitionModel, rewards: Sequence[float], gamma: float = 0.9, solver: str = "policy_iteration",
          previous: Optional[PolicySolution] = None) -> PolicySolution:
    if solver == "value_iteration":
        return value_iteration(model, rewards, gamma)
    initial = previous.policy if previous is not None and len(previous.policy) == model.m else None
    return policy_iteration(model, rewards, gamma, initial_policy=initial)


def replan(model: TransitionModel, rewards: Sequence[float], gamma: float = 0.9,
           previous: Optional[PolicySolution] = None) -> PolicySolution:
    """Re-solve, warm-started from the previous policy."""
    return solve(model, rewards, gamma, previous=previous)


def bellman_residual(model: TransitionModel, rewards: Sequence[float], gamma: float, utilities: np.ndarray) -> float:
    rewards = np.asarray(rewards, dtype=float)
    backed_up = _action_values(model, rewards, gamma, np.asarray(utilities, dtype=float)).max(axis=1)
    return float(np.abs(backed_up - utilities).max()) if model.m else 0.0


def _check_state(model: TransitionModel, s: int):
    if not 0 <= int(s) < model.m:
        raise InvalidState(f"State id {s} outside 0..{model.m - 1}")


def recommend(model: TransitionModel, solution: PolicySolution, s: int,
              state_powers: Optional[Sequence[float]] = None) -> int:
    """Most likely next state under the policy; ties go to lower power, then lower id."""
    _check_state(model, s)
    row = model.probs[s, solution.policy[s]]
    candidates = np.flatnonzero(row >= row.max() - ROW_TOLERANCE)
    if len(candidates) > 1 and state_powers is not None:
        powers = np.asarray(state_powers, dtype=float)[candidates]
        candidates = candidates[powers == powers.min()]
    return int(candidates[0])


def online_update(model: TransitionModel, s: int, action: int, recommended: int, actual: int,
                  strict: Iterable[int], e: float = 0.1, support_floor: float = 1e-4) -> bool:
    """Move an e-fraction of the recommended entry's mass to strict states in row T[s, action].

    Targets are the strict states already reachable in that row plus the
    actual state; the recommended state itself never receives mass. Returns
    whether the row changed.
    """
    _check_state(model, s)
    strict = {int(x) for x in strict}
    if not strict:
        log_warn(f"Online update at state {s} skipped: strict set is empty")
        return False

    row = model.probs[s, action]
    delta = e * row[recommended]
    if delta <= 0.0:
        return False
    targets = {x for x in strict if row[x] > support_floor}
    if actual in strict:
        targets.add(int(actual))
    targets.discard(int(recommended))
    if not targets:
        return False

    row[recommended] -= delta
    idx = np.fromiter(sorted(targets), dtype=int)
    row[idx] += delta / len(idx)
    np.clip(row, 0.0, None, out=row)
    row /= row.sum()
    return True


@dataclass
class OnlinePlanner:
    """Planner state carried through a live replay."""

    model: TransitionModel
    rewards: np.ndarray
    state_powers: np.ndarray
    strict: frozenset
    config: PlannerConfig = field(default_factory=PlannerConfig)
    solution: Optional[PolicySolution] = None

    def __post_init__(self):
        if self.solution is None:
            self.solution = solve(self.model, self.rewards, self.config.gamma, self.config.solver)

    @property
    def replan_interval(self) -> int:
        return self.config.replan_interval

    def recommend(self, s: int) -> int:
        return recommend(self.model, self.solution, s, self.state_powers)

    def observe(self, s: int, recommended: int, actual: int) -> bool:
        """Apply the online update for a strict clash; returns whether T changed."""
        if recommended == actual or actual not in self.strict:
            return False
        return online_update(self.model, s, int(self.solution.policy[s]), recommended, actual, self.strict,
                             self.config.update_factor, self.config.support_floor)

    def replan(self) -> PolicySolution:
        self.solution = solve(self.model, self.rewards, self.config.gamma, self.config.solver, previous=self.solution)
        return self.solution
