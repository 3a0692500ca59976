# report_tool.py
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from tools.simulation_tool import SlotMetrics, summarize
from utils.errors import ReportError
from utils.logger import log_debug

REPORT_COLUMNS = ["slot", "strict_clashes", "ld_clashes", "total_clashes", "actual_power", "planned_power", "updates"]
REPORT_VERSION = 1


def _validate(metrics: Sequence[SlotMetrics]):
    if not metrics:
        raise ReportError("Cannot emit a report without slot metrics")
    for m in metrics:
        counts = (m.strict_clashes, m.ld_clashes, m.total_clashes, m.updates_applied)
        if min(counts) < 0 or m.actual_power < 0 or m.planned_power < 0:
            raise ReportError(f"Slot {m.slot_index}: negative count or power")
        if m.total_clashes < m.strict_clashes + m.ld_clashes:
            raise ReportError(
                f"Slot {m.slot_index}: total_clashes {m.total_clashes} < strict {m.strict_clashes} + ld {m.ld_clashes}"
            )


def metrics_frame(metrics: Sequence[SlotMetrics]) -> pd.DataFrame:
    return pd.DataFrame(
        [[m.slot_index, m.strict_clashes, m.ld_clashes, m.total_clashes, m.actual_power, m.planned_power,
          m.updates_applied] for m in metrics],
        columns=REPORT_COLUMNS,
    )


def emit_report(metrics: Sequence[SlotMetrics], destination: Union[str, Path], fmt: str = "both",
                run_config: Optional[Dict[str, Any]] = None) -> List[Path]:
    """Write `<destination>.csv` and/or `<destination>.json`; returns the paths written."""
    _validate(metrics)
    base = Path(destination)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    written = []
    try:
        base.parent.mkdir(parents=True, exist_ok=True)
        if fmt in ("csv", "both"):
            csv_path = base.with_suffix(".csv")
            metrics_frame(metrics).to_csv(csv_path, index=False, lineterminator="\n")
            written.append(csv_path)
        if fmt in ("json", "both"):
            json_path = base.with_suffix(".json")
            document = {
                "version": REPORT_VERSION,
                "config": run_config or {},
                "summary": summarize(metrics),
                "slots": [m.to_dict() for m in metrics],
            }
            json_path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            written.append(json_path)
    except OSError as e:
        raise ReportError(f"Cannot write report to {base}: {e}") from e
    if not written:
        raise ReportError(f"Unknown report format {fmt!r}")
    log_debug(f"Report written: {', '.join(str(p) for p in written)}")
    return written


def load_report(path: Union[str, Path]) -> Tuple[List[SlotMetrics], Dict[str, Any]]:
    """Read a JSON report back into SlotMetrics and the embedded run config."""
    path = Path(path)
    if path.suffix != ".json":
        path = path.with_suffix(".json")
    if not path.exists():
        raise ReportError(f"Report not found: {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
        metrics = [SlotMetrics(**slot) for slot in document["slots"]]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ReportError(f"Corrupted report {path}: {e}") from e
    if document.get("version", 0) > REPORT_VERSION:
        raise ReportError(f"{path}: unsupported report version {document['version']}")
    _validate(metrics)
    return metrics, document.get("config", {})
