# training_tool.py
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import RunConfig
from tools.behavior_tool import (
    StateClassification,
    classify_states,
    joint_transition_counts,
    label_actions,
    simulate_actuations,
    visit_counts,
)
from tools.planner_tool import PolicySolution, TransitionModel, build_reward_vector, estimate_transition_model, solve
from tools.state_model_tool import HomeModel
from tools.trace_tool import FrameSet
from utils.logger import log_debug


@dataclass
class TrainingArtifacts:
    classification: StateClassification
    counts: np.ndarray
    transitions: TransitionModel
    rewards: np.ndarray
    solution: PolicySolution
    # Present only right after training; bundles keep the aggregates above.
    states: Optional[np.ndarray] = None
    actions: Optional[np.ndarray] = None
    actuations: Optional[np.ndarray] = None


def train_planner(home: HomeModel, frames: FrameSet, config: RunConfig) -> TrainingArtifacts:
    """Label behaviour on the training frames and solve the initial policy."""
    m = home.state_count
    states = home.assign_states(frames)
    actions = label_actions(states)
    cls_cfg = config.classification
    actuations = simulate_actuations(actions, cls_cfg.flip_fraction, config.module_seed("behavior", "actuations"))
    classification = classify_states(visit_counts(states, m), cls_cfg.top, cls_cfg.fix_hd, cls_cfg.fix_ld,
                                     config.module_seed("behavior", "classification"))
    counts = joint_transition_counts(states, actions, actuations, m)

    planner_cfg = config.planner
    transitions = estimate_transition_model(counts, m, planner_cfg.smoothing, planner_cfg.transition_basis)
    rewards = build_reward_vector(home.state_powers)
    solution = solve(transitions, rewards, planner_cfg.gamma, planner_cfg.solver)
    log_debug(
        f"Trained planner: {m} states, strict={list(classification.strict)}, "
        f"{int((solution.policy == 1).sum())} MOVE states, {solution.iterations} iterations"
    )
    return TrainingArtifacts(classification, counts, transitions, rewards, solution, states, actions, actuations)
