# nodes.py
from pathlib import Path

import numpy as np

from state import PipelineState
from tools.bundle_tool import load_home_model, load_training, save_home_model, save_training
from tools.planner_tool import OnlinePlanner
from tools.report_tool import emit_report, load_report
from tools.simulation_tool import run_simulation, summarize
from tools.state_model_tool import fit_home_model
from tools.synthetic_tool import SCENARIOS, generate_synthetic_trace
from tools.trace_tool import (
    device_registry,
    frames_from_readings,
    parse_trace,
    split_train_test,
    write_trace,
)
from tools.training_tool import train_planner
from utils.errors import ConfigError
from utils.logger import log_debug, log_result


def _require_trace_path(path, key: str) -> str:
    if not path:
        raise ConfigError(f"{key} is not set; pass --{key} <file>")
    return path


# ============================ INGEST NODES START HERE ============================
def load_bundle_node(state: PipelineState) -> PipelineState:
    """Load the clustered home model the later stages build on."""
    bundle = state.config.paths.bundle
    log_debug(f"Loading model bundle from {bundle}")
    state.home, _ = load_home_model(bundle)
    state.registry = state.home.registry
    state.add_message("load_bundle", f"{len(state.registry)} devices, {state.home.state_count} domain states")
    state.advance()
    return state


def ingest_node(state: PipelineState) -> PipelineState:
    """Parse the trace, align it into frames and split off the test stream."""
    config = state.config
    paths = config.paths
    use_test_trace = state.command == "simulate" and paths.test_trace
    source = paths.test_trace if use_test_trace else _require_trace_path(paths.trace, "paths.trace")
    log_debug(f"Ingesting {source}")

    readings, report = parse_trace(source, config.trace_schema)
    state.parse_report = report
    registry = state.registry or device_registry(readings, config.clustering.devices)
    frames = frames_from_readings(readings, registry)

    if use_test_trace:
        state.test_frames = frames
    else:
        state.train_frames, state.test_frames = split_train_test(frames, config.split.train_fraction)
    state.registry = tuple(registry)

    message = (
        f"{report.parsed} readings ({report.skipped} skipped) -> {len(frames)} frames over "
        f"{len(registry)} devices"
    )
    log_debug(message)
    state.add_message("ingest", message)
    state.advance()
    return state
# ============================ INGEST NODES END HERE ============================


# ============================ MODEL NODES START HERE ============================
def cluster_node(state: PipelineState) -> PipelineState:
    config = state.config
    home = fit_home_model(state.train_frames, state.registry, config.clustering, config.module_seed("clustering"))
    save_home_model(home, config.paths.bundle, config.to_dict())
    state.home = home

    for model in home.mode_models:
        log_result(f"{model.device_id}: {model.mode_count} modes")
    log_result(f"Domain states: {home.state_count}")
    state.add_message("cluster", f"{home.state_count} domain states written to {config.paths.bundle}")
    state.advance()
    return state


def train_node(state: PipelineState) -> PipelineState:
    config = state.config
    training = train_planner(state.home, state.train_frames, config)
    save_training(training, config.paths.bundle)
    state.training = training

    cls = training.classification
    log_result(
        f"Classified {len(cls.visited)} visited states: SHD={len(cls.shd)} LHD={len(cls.lhd)} "
        f"SLD={len(cls.sld)} LLD={len(cls.lld)}"
    )
    log_result(
        f"Policy solved in {training.solution.iterations} iterations "
        f"({int(np.sum(training.solution.policy == 1))} MOVE states)"
    )
    state.add_message("train", f"training artifacts added to {config.paths.bundle}")
    state.advance()
    return state


def simulate_node(state: PipelineState) -> PipelineState:
    config = state.config
    training = state.training or load_training(config.paths.bundle)
    planner = OnlinePlanner(
        model=training.transitions.copy(),
        rewards=training.rewards,
        state_powers=state.home.state_powers,
        strict=frozenset(training.classification.strict),
        config=config.planner,
        solution=training.solution,
    )
    state.metrics = run_simulation(state.home, training.classification, planner, state.test_frames,
                                   config.simulation.slot_size)
    state.summary = summarize(state.metrics)
    state.add_message("simulate", f"{state.summary['readings']} readings over {state.summary['slots']} slots")
    state.advance()
    return state
# ============================ MODEL NODES END HERE ============================


# ============================ OUTPUT NODES START HERE ============================
def report_node(state: PipelineState) -> PipelineState:
    """Write the report for fresh metrics, or re-emit a saved one."""
    config = state.config
    destination = config.paths.report
    if state.metrics is None:
        state.metrics, run_config = load_report(destination)
        state.summary = summarize(state.metrics)
    else:
        run_config = config.to_dict()
    paths = emit_report(state.metrics, destination, "both", run_config)
    state.report_paths = [str(p) for p in paths]

    summary = state.summary
    log_result(
        f"Strict clashes: first-decile mean {summary['first_decile_strict_mean']:.2f}, "
        f"last-decile mean {summary['last_decile_strict_mean']:.2f}"
    )
    log_result(
        f"Power: actual {summary['actual_power']:.1f}, planned {summary['planned_power']:.1f}, "
        f"saved {summary['percent_saved']:.1f}%"
    )
    log_result(f"Report: {', '.join(state.report_paths)}")
    state.add_message("report", ", ".join(state.report_paths))
    state.advance()
    return state


def synth_node(state: PipelineState) -> PipelineState:
    config = state.config
    destination = Path(_require_trace_path(config.paths.trace, "paths.trace"))
    synth = config.synth
    spec = SCENARIOS[synth.scenario](synth.length, config.module_seed("synth"), synth.preference_noise)
    trace = generate_synthetic_trace(spec)

    write_trace(trace.readings, destination)
    labels = trace.write_labels(destination.with_name(destination.stem + ".labels.csv"))
    state.trace_path = str(destination)
    log_result(f"Synthetic {synth.scenario} trace: {len(trace.timestamps)} frames x {len(trace.device_ids)} devices")
    log_result(f"Trace: {destination}  labels: {labels}")
    state.add_message("synth", str(destination))
    state.advance()
    return state
# ============================ OUTPUT NODES END HERE ============================
