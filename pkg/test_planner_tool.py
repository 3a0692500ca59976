#!/usr/bin/env python3
"""Tests for transition estimation, policy solving, recommendations and online updates."""

import sys

import numpy as np
import pytest

from config import PlannerConfig
from tools.behavior_tool import ActionLabel, ActuationLabel
from tools.planner_tool import (
    OnlinePlanner,
    PolicySolution,
    TransitionModel,
    bellman_residual,
    build_reward_vector,
    estimate_transition_model,
    online_update,
    policy_iteration,
    recommend,
    replan,
    value_iteration,
)
from utils.errors import DataError, InvalidState, NonStochasticModel

STAY, MOVE = int(ActionLabel.STAY), int(ActionLabel.MOVE)
s_, m_ = int(ActuationLabel.stay), int(ActuationLabel.move)


def switch_model() -> TransitionModel:
    """STAY is a self-loop, MOVE swaps the two states."""
    probs = np.zeros((2, 2, 2))
    probs[0, STAY, 0] = probs[1, STAY, 1] = 1.0
    probs[0, MOVE, 1] = probs[1, MOVE, 0] = 1.0
    return TransitionModel(probs)


def random_model(m: int, rng: np.random.Generator) -> TransitionModel:
    probs = rng.random((m, 2, m)) ** 3
    return TransitionModel(probs / probs.sum(axis=2, keepdims=True))


def test_frequency_estimate_without_smoothing():
    counts = np.zeros((2, 2, 2, 2), dtype=int)
    counts[0, 0, s_, STAY] = 9
    counts[0, 1, m_, STAY] = 1
    model = estimate_transition_model(counts, 2, smoothing=0.0)
    np.testing.assert_allclose(model.row(0, STAY), [0.9, 0.1])


def test_unseen_rows_take_defaults():
    model = estimate_transition_model(np.zeros((4, 4, 2, 2), dtype=int), 4, smoothing=1e-6)
    np.testing.assert_allclose(model.row(0, MOVE), [0, 1 / 3, 1 / 3, 1 / 3])
    np.testing.assert_allclose(model.row(2, STAY), [0, 0, 1, 0])
    single = estimate_transition_model(np.zeros((1, 1, 2, 2), dtype=int), 1)
    np.testing.assert_allclose(single.probs, np.ones((1, 2, 1)))


def test_estimated_rows_are_stochastic():
    counts = np.random.default_rng(0).integers(0, 4, size=(6, 6, 2, 2))
    model = estimate_transition_model(counts, 6, smoothing=1e-6)
    assert model.max_row_error() < 1e-9
    assert (model.probs >= 0).all()


def test_actuation_basis_indexes_by_recorded_actuation():
    counts = np.zeros((2, 2, 2, 2), dtype=int)
    # A MOVE action recorded as a stay actuation.
    counts[0, 1, s_, MOVE] = 4
    by_action = estimate_transition_model(counts, 2, smoothing=0.0, basis="action")
    by_actuation = estimate_transition_model(counts, 2, smoothing=0.0, basis="actuation")
    np.testing.assert_allclose(by_action.row(0, MOVE), [0, 1])
    np.testing.assert_allclose(by_actuation.row(0, STAY), [0, 1])


def test_reward_is_negated_power():
    rewards = build_reward_vector([150.0, 0.0, 40.0])
    assert rewards.tolist() == [-150.0, 0.0, -40.0]
    assert (rewards <= 0).all()


def test_hand_solved_two_state_policy():
    solution = policy_iteration(switch_model(), [-10.0, -1.0], gamma=0.9)
    assert solution.policy.tolist() == [MOVE, STAY]
    np.testing.assert_allclose(solution.utilities, [-19.0, -10.0], atol=1e-9)


def test_single_state_policy():
    model = TransitionModel(np.ones((1, 2, 1)))
    solution = policy_iteration(model, [-5.0], gamma=0.9)
    assert solution.policy.tolist() == [STAY]
    assert solution.utilities[0] == pytest.approx(-50.0)


def test_policy_iteration_rejects_bad_inputs():
    with pytest.raises(DataError):
        policy_iteration(switch_model(), [-1.0, -1.0], gamma=1.0)
    broken = switch_model()
    broken.probs[0, STAY, 1] = 0.5
    with pytest.raises(NonStochasticModel):
        policy_iteration(broken, [-1.0, -1.0])


@pytest.mark.parametrize("seed", range(10))
def test_policy_iteration_agrees_with_value_iteration(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 11))
    model = random_model(m, rng)
    rewards = -rng.random(m) * 100
    pi = policy_iteration(model, rewards, 0.9)
    vi = value_iteration(model, rewards, 0.9, tolerance=1e-10)
    np.testing.assert_allclose(pi.utilities, vi.utilities, atol=1e-6)
    assert bellman_residual(model, rewards, 0.9, pi.utilities) <= 1e-6


@pytest.mark.parametrize("m", [50, 150, 300])
def test_policy_iteration_stays_within_iteration_budget(m):
    rng = np.random.default_rng(m)
    probs = rng.random((m, 2, m)) ** 8
    probs[rng.random((m, 2, m)) < 0.9] = 0.0
    probs[np.arange(m), :, np.arange(m)] += 1e-3
    model = TransitionModel(probs / probs.sum(axis=2, keepdims=True))
    rewards = -rng.random(m) * 100
    solution = policy_iteration(model, rewards, 0.9)
    assert solution.iterations <= 50
    assert bellman_residual(model, rewards, 0.9, solution.utilities) < 1e-6


def test_reward_scaling_keeps_policy():
    rng = np.random.default_rng(11)
    model = random_model(8, rng)
    powers = rng.random(8) * 300
    base = policy_iteration(model, build_reward_vector(powers))
    scaled = policy_iteration(model, build_reward_vector(powers * 7.5))
    np.testing.assert_array_equal(base.policy, scaled.policy)
    np.testing.assert_allclose(scaled.utilities, base.utilities * 7.5, rtol=1e-9)


def test_recommend_argmax_and_ties():
    probs = np.zeros((3, 2, 3))
    probs[:, STAY] = np.eye(3)
    probs[0, MOVE] = [0.0, 0.7, 0.3]
    probs[1, MOVE] = [0.0, 0.5, 0.5]
    probs[2, MOVE] = [0.5, 0.5, 0.0]
    model = TransitionModel(probs)
    solution = PolicySolution(np.array([MOVE, MOVE, STAY], dtype=np.int8), np.zeros(3))
    powers = [10.0, 100.0, 40.0]
    assert recommend(model, solution, 0, powers) == 1
    # 0.5/0.5 between the 100 W and the 40 W state.
    assert recommend(model, solution, 1, powers) == 2
    assert recommend(model, solution, 2, powers) == 2
    with pytest.raises(InvalidState):
        recommend(model, solution, 3, powers)


def test_recommend_tie_on_equal_power_takes_lower_id():
    probs = np.zeros((3, 2, 3))
    probs[:, STAY] = [0.0, 0.5, 0.5]
    probs[:, MOVE] = [0.0, 0.5, 0.5]
    solution = PolicySolution(np.zeros(3, dtype=np.int8), np.zeros(3))
    assert recommend(TransitionModel(probs), solution, 0, [1.0, 20.0, 20.0]) == 1


def test_online_update_arithmetic():
    probs = np.zeros((2, 2, 2))
    probs[:, STAY] = [0.5, 0.5]
    probs[:, MOVE] = [0.5, 0.5]
    model = TransitionModel(probs)
    untouched = model.probs[1].copy()
    assert online_update(model, 0, STAY, recommended=0, actual=1, strict={1}, e=0.1)
    np.testing.assert_allclose(model.row(0, STAY), [0.45, 0.55])
    np.testing.assert_allclose(model.row(0, MOVE), [0.5, 0.5])
    np.testing.assert_array_equal(model.probs[1], untouched)


def test_online_update_with_zero_recommended_mass():
    model = switch_model()
    before = model.probs.copy()
    assert not online_update(model, 0, MOVE, recommended=0, actual=1, strict={1}, e=0.1)
    np.testing.assert_array_equal(model.probs, before)


def test_online_update_with_empty_strict_set_warns(capsys):
    model = switch_model()
    assert not online_update(model, 0, STAY, recommended=0, actual=1, strict=set(), e=0.1)
    assert "[WARN]" in capsys.readouterr().err


def test_online_update_shares_mass_with_supported_strict_states():
    probs = np.zeros((4, 2, 4))
    probs[:, STAY] = [0.4, 0.3, 0.3, 0.0]
    probs[:, MOVE] = np.eye(4)
    model = TransitionModel(probs)
    online_update(model, 0, STAY, recommended=0, actual=1, strict={1, 2, 3}, e=0.1)
    # State 3 has no support in the row; 1 and 2 split 0.04.
    np.testing.assert_allclose(model.row(0, STAY), [0.36, 0.32, 0.32, 0.0])


def test_repeated_updates_shift_the_recommendation():
    probs = np.zeros((3, 2, 3))
    probs[:, STAY] = np.eye(3)
    probs[:, MOVE] = np.eye(3)[[1, 2, 0]]
    model = TransitionModel(probs)
    solution = PolicySolution(np.zeros(3, dtype=np.int8), np.zeros(3))
    assert recommend(model, solution, 0) == 0
    for _ in range(7):
        online_update(model, 0, STAY, recommended=recommend(model, solution, 0), actual=2, strict={2}, e=0.1)
    assert recommend(model, solution, 0) == 2


def test_replan_warm_start_matches_cold_start():
    rng = np.random.default_rng(5)
    model = random_model(12, rng)
    rewards = -rng.random(12) * 50
    cold = policy_iteration(model, rewards)
    warm = replan(model, rewards, 0.9, previous=cold)
    np.testing.assert_array_equal(cold.policy, warm.policy)
    np.testing.assert_allclose(cold.utilities, warm.utilities, atol=1e-9)
    flipped = PolicySolution(1 - cold.policy, cold.utilities)
    np.testing.assert_array_equal(replan(model, rewards, 0.9, previous=flipped).policy, cold.policy)


def test_online_planner_updates_only_on_strict_clashes():
    probs = np.zeros((3, 2, 3))
    probs[:, STAY] = np.eye(3)
    probs[:, MOVE] = np.eye(3)[[1, 2, 0]]
    planner = OnlinePlanner(TransitionModel(probs), build_reward_vector([1.0, 5.0, 9.0]),
                            np.array([1.0, 5.0, 9.0]), frozenset({2}), PlannerConfig())
    assert planner.recommend(0) == 0
    assert not planner.observe(0, 0, 1)
    assert planner.observe(0, 0, 2)
    assert planner.model.row(0, STAY)[2] == pytest.approx(0.1)
    assert planner.replan_interval == 1000


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
