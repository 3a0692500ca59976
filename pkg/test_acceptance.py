#!/usr/bin/env python3
"""
Scenario-level checks: the planner learns strict preferences online, saves power
on loose states, and the solvers and clustering hold up across many seeds.
"""

import sys

import numpy as np
import pytest

from config import GngParams
from tools.gng_tool import gng_train, knn_assign_many
from tools.planner_tool import (
    OnlinePlanner,
    TransitionModel,
    online_update,
    policy_iteration,
)
from tools.simulation_tool import run_simulation, summarize
from tools.state_model_tool import fit_home_model
from tools.synthetic_tool import generate_synthetic_trace, preference_scenario, savings_scenario
from tools.trace_tool import split_train_test
from tools.training_tool import train_planner

BLOB_CENTERS = np.array([[0.2, 0.2], [0.8, 0.2], [0.5, 0.8]])


def replay(config, spec):
    """Fit, train and replay the test third of a synthetic trace."""
    trace = generate_synthetic_trace(spec)
    train, test = split_train_test(trace.frames(), config.split.train_fraction)
    home = fit_home_model(train, trace.device_ids, config.clustering, config.module_seed("clustering"))
    training = train_planner(home, train, config)
    planner = OnlinePlanner(training.transitions.copy(), training.rewards, home.state_powers,
                            frozenset(training.classification.strict), config.planner, training.solution)
    metrics = run_simulation(home, training.classification, planner, test, config.simulation.slot_size)
    return metrics, summarize(metrics)


def test_strict_clashes_decline_as_the_planner_learns(desk_config):
    config = desk_config(split={"train_fraction": 1 / 3})
    assert (config.classification.fix_hd, config.classification.fix_ld) == (0.3, 0.3)
    metrics, summary = replay(config, preference_scenario(length=150000, seed=2))
    assert summary["slots"] == 100 and summary["readings"] == 100000
    assert summary["first_decile_strict_mean"] > 0
    assert summary["last_decile_strict_mean"] <= 0.5 * summary["first_decile_strict_mean"]
    assert summary["updates_applied"] > 0
    # User authority on strict states is never overridden.
    assert sum(m.strict_substitutions for m in metrics) == 0


def test_planner_saves_power_without_touching_strict_states(desk_config):
    metrics, summary = replay(desk_config(), savings_scenario(length=30000, seed=3))
    assert summary["planned_power"] <= 0.8 * summary["actual_power"]
    assert all(m.planned_power <= m.actual_power + 1e-9 for m in metrics)
    assert sum(m.strict_substitutions for m in metrics) == 0


def blobs_recovered(seed: int) -> bool:
    rng = np.random.default_rng(100 + seed)
    data = np.vstack([c + rng.normal(0.0, 0.02, size=(300, 2)) for c in BLOB_CENTERS])
    params = GngParams(max_nodes=30, max_edge_age=50, alpha=0.5, error_decay=0.995, epochs=5,
                       start_nodes=6, seed=seed)
    graph = gng_train(data, params)
    labels, _ = knn_assign_many(graph, data, 3)
    per_blob = [set(labels[i * 300:(i + 1) * 300].tolist()) for i in range(3)]
    return (graph.component_count == 3 and all(len(s) == 1 for s in per_blob)
            and len(set.union(*per_blob)) == 3)


def test_three_blobs_across_seeds():
    recovered = [seed for seed in range(20) if blobs_recovered(seed)]
    assert len(recovered) >= 19


def bellman_oracle(probs: np.ndarray, rewards: np.ndarray, gamma: float) -> np.ndarray:
    utilities = np.zeros(len(rewards))
    for _ in range(20000):
        updated = rewards + gamma * (probs @ utilities).max(axis=1)
        if np.abs(updated - utilities).max() < 1e-12:
            break
        utilities = updated
    return updated


@pytest.mark.parametrize("seed", range(100))
def test_policy_iteration_matches_bellman_oracle(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 11))
    probs = rng.random((m, 2, m))
    probs[rng.random((m, 2, m)) < 0.5] = 0.0
    probs[np.arange(m), :, np.arange(m)] += 1e-3
    probs /= probs.sum(axis=2, keepdims=True)
    rewards = -rng.random(m) * 100
    solution = policy_iteration(TransitionModel(probs), rewards, 0.9)
    oracle = bellman_oracle(probs, rewards, 0.9)
    np.testing.assert_allclose(solution.utilities, oracle, atol=1e-6)

    q = rewards[:, None] + 0.9 * (probs @ oracle)
    decided = np.abs(q[:, 1] - q[:, 0]) > 1e-6
    np.testing.assert_array_equal(solution.policy[decided], q.argmax(axis=1)[decided])


def test_rows_stay_stochastic_under_many_updates():
    rng = np.random.default_rng(0)
    m = 50
    probs = rng.random((m, 2, m)) ** 4
    model = TransitionModel(probs / probs.sum(axis=2, keepdims=True))
    for _ in range(10000):
        s, action = int(rng.integers(m)), int(rng.integers(2))
        strict = set(rng.choice(m, size=int(rng.integers(0, 6)), replace=False).tolist())
        online_update(model, s, action, int(rng.integers(m)), int(rng.integers(m)), strict, e=0.1)
        row = model.probs[s, action]
        assert abs(row.sum() - 1.0) <= 1e-9
        assert (row >= 0).all()
    assert model.max_row_error() <= 1e-9


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
