# graph.py
from typing import Literal

from langgraph.graph import END, StateGraph

from nodes import cluster_node, ingest_node, load_bundle_node, report_node, simulate_node, synth_node, train_node
from state import PipelineState
from utils.logger import log_pipeline

STAGE_NODES = {
    "ingest": ingest_node,
    "load_bundle": load_bundle_node,
    "cluster": cluster_node,
    "train": train_node,
    "simulate": simulate_node,
    "report": report_node,
    "synth": synth_node,
}


def entry_node(state: PipelineState) -> PipelineState:
    state.begin()
    return state


def router(state: PipelineState) -> Literal["ingest", "load_bundle", "cluster", "train", "simulate", "report", "synth", "__end__"]:
    """Pick the next node from the stage cursor."""
    if state.pipeline_complete:
        log_pipeline("Pipeline complete")
        return "__end__"

    log_pipeline(f"Next action: {state.next_action}")
    if state.next_action in STAGE_NODES:
        return state.next_action
    # Unknown action: fall back to the cursor.
    return state.current_stage or "__end__"


def create_pipeline_graph():
    """Create and compile the pipeline workflow."""
    workflow = StateGraph(PipelineState)

    workflow.add_node("entry_router", entry_node)
    for name, node in STAGE_NODES.items():
        workflow.add_node(name, node)

    workflow.set_entry_point("entry_router")

    targets = {name: name for name in STAGE_NODES}
    targets["__end__"] = END
    workflow.add_conditional_edges("entry_router", router, targets)
    for name in STAGE_NODES:
        workflow.add_conditional_edges(name, router, targets)

    return workflow.compile()
