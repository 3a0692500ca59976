#!/usr/bin/env python3
"""Tests for action labelling, actuation flips, state classification and transition counts."""

import sys

import numpy as np
import pytest

from tools.behavior_tool import (
    ActionLabel,
    ActuationLabel,
    StateKind,
    classify_states,
    joint_transition_counts,
    label_actions,
    simulate_actuations,
    visit_counts,
)
from utils.errors import DataError, InsufficientData

S, M = int(ActionLabel.STAY), int(ActionLabel.MOVE)
s, m = int(ActuationLabel.stay), int(ActuationLabel.move)


def test_labels_on_mode_tuples():
    tuples = [(1, 1, 0, 3, 2), (1, 1, 0, 3, 2), (1, 1, 0, 2, 0)]
    assert label_actions(tuples).tolist() == [S, M]


def test_constant_sequence_is_all_stay():
    actions = label_actions([4] * 100)
    assert len(actions) == 99 and (actions == S).all()


def test_label_symbols():
    assert ActionLabel.STAY.symbol == "S" and ActionLabel.MOVE.symbol == "M"
    assert ActuationLabel.stay.symbol == "s" and ActuationLabel.move.symbol == "m"


def test_labelling_needs_two_states():
    with pytest.raises(InsufficientData):
        label_actions([3])


def test_zero_flip_fraction_mirrors_actions():
    actions = label_actions(np.random.default_rng(0).integers(0, 3, 200))
    np.testing.assert_array_equal(simulate_actuations(actions, 0.0, seed=1), actions)


def test_flip_count_is_exact_and_reproducible():
    actions = np.random.default_rng(1).integers(0, 2, 1000).astype(np.int8)
    first = simulate_actuations(actions, 0.3, seed=9)
    assert int((first != actions).sum()) == 300
    np.testing.assert_array_equal(first, simulate_actuations(actions, 0.3, seed=9))


def test_full_flip_inverts_everything():
    actions = np.array([S, M, M, S], dtype=np.int8)
    assert simulate_actuations(actions, 1.0, seed=0).tolist() == [m, s, s, m]


def test_flip_fraction_out_of_range():
    with pytest.raises(DataError):
        simulate_actuations([S, M], 1.5)


def test_uniform_counts_size_rules():
    result = classify_states(np.full(10, 5), top=0.22, fix_hd=0.3, fix_ld=0.3, seed=0)
    assert result.high_demand == (0, 1)
    assert len(result.shd) == 1 and len(result.lhd) == 1
    assert len(result.sld) == 2 and len(result.lld) == 6


def test_high_demand_states_are_the_most_visited():
    counts = np.array([1, 50, 3, 40, 2, 0, 7, 9, 4, 30])
    result = classify_states(counts, top=0.22, seed=4)
    assert result.high_demand == (1, 3)
    assert min(counts[list(result.high_demand)]) >= max(counts[list(result.low_demand)])


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_classification_partitions_visited_states(seed):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 20, size=40)
    result = classify_states(counts, seed=seed)
    groups = [set(result.shd), set(result.lhd), set(result.sld), set(result.lld)]
    assert set().union(*groups) == set(np.flatnonzero(counts).tolist())
    assert sum(len(g) for g in groups) == len(set().union(*groups))
    assert set(result.strict) == groups[0] | groups[2]


def test_single_visited_state():
    result = classify_states([0, 0, 12])
    assert result.shd == (2,) and result.lhd == ()
    assert result.sld == () and result.lld == ()
    assert result.kind_of(0) is StateKind.LLD


def test_classification_needs_visits():
    with pytest.raises(InsufficientData):
        classify_states([0, 0, 0])


def test_classification_is_seeded():
    counts = np.arange(1, 31)
    assert classify_states(counts, seed=5).strict == classify_states(counts, seed=5).strict


def test_joint_counts_examples():
    counts = joint_transition_counts([3, 3], [S], [s], m=6)
    assert counts[3, 3, s, S] == 1 and counts.sum() == 1
    flipped = joint_transition_counts([3, 5], [M], [s], m=6)
    assert flipped[3, 5, s, M] == 1


def test_joint_counts_conserve_pairs():
    states = np.random.default_rng(2).integers(0, 5, 300)
    actions = label_actions(states)
    actuations = simulate_actuations(actions, 0.3, seed=0)
    counts = joint_transition_counts(states, actions, actuations, m=5)
    assert counts.sum() == 299
    assert visit_counts(states, 5).sum() == 300


def test_joint_counts_length_mismatch():
    with pytest.raises(DataError):
        joint_transition_counts([0, 1, 2], [S], [s], m=3)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
