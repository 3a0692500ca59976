# state.py
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from config import RunConfig

# Stages each command walks through, in order.
COMMAND_STAGES: Dict[str, List[str]] = {
    "cluster": ["ingest", "cluster"],
    "train": ["load_bundle", "ingest", "train"],
    "simulate": ["load_bundle", "ingest", "simulate", "report"],
    "synth": ["synth"],
    "report": ["report"],
}


@dataclass
class PipelineState:
    """Central state object threaded through the pipeline graph."""

    config: RunConfig = field(default_factory=RunConfig)
    command: str = "cluster"

    # Stage cursor
    stages: List[str] = field(default_factory=list)
    stage_index: int = 0

    # Ingested data
    parse_report: Optional[Any] = None
    registry: Optional[tuple] = None
    train_frames: Optional[Any] = None
    test_frames: Optional[Any] = None

    # Models
    home: Optional[Any] = None
    training: Optional[Any] = None

    # Evaluation
    metrics: Optional[List[Any]] = None
    summary: Optional[Dict[str, Any]] = None
    report_paths: List[str] = field(default_factory=list)
    trace_path: Optional[str] = None

    # Run log and flow control
    messages: List[Dict[str, str]] = field(default_factory=list)
    next_action: str = "start"
    pipeline_complete: bool = False

    def add_message(self, stage: str, content: str):
        """Record what a stage did."""
        self.messages.append({"stage": stage, "content": content})

    @property
    def current_stage(self) -> Optional[str]:
        return self.stages[self.stage_index] if self.stage_index < len(self.stages) else None

    def begin(self):
        self.stage_index = 0
        self.pipeline_complete = not self.stages
        self.next_action = self.current_stage or "done"

    def advance(self):
        """Move the cursor to the next stage, or finish."""
        self.stage_index += 1
        if self.current_stage is None:
            self.pipeline_complete = True
            self.next_action = "done"
        else:
            self.next_action = self.current_stage
