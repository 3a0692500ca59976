# trace_tool.py
"""Smart-meter trace ingestion: parse, normalize, align and split.

A trace is CSV text with one row per (timestamp, device, power) reading.
Readings are aligned into frames (one per distinct timestamp) holding every
registered device's last observed power, which is what the domain-state
level of the clustering needs.
"""

import io
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import SchemaConfig
from utils.errors import (
    ConfigError,
    DeviceNeverSeen,
    EmptyTrace,
    InvalidSplit,
    MalformedRow,
    NegativePower,
    TimestampError,
    TraceNotFound,
)
from utils.logger import log_debug
from utils.seeding import round_half_up

FEATURE_NAMES = ("hour", "month", "year", "power")
HOUR, MONTH, YEAR, POWER = range(4)


@dataclass(frozen=True)
class Reading:
    timestamp: float
    device_id: str
    power: float


@dataclass(frozen=True)
class ParseReport:
    rows: int = 0
    parsed: int = 0
    skipped: int = 0
    header: bool = False


@dataclass(frozen=True)
class FeatureVector:
    hour: int
    month: int
    year: int
    power: float
    normalized: Tuple[float, float, float, float]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.normalized, dtype=float)


@dataclass(frozen=True)
class NormStats:
    """Per-feature minimum and maximum, in FEATURE_NAMES order."""

    minimum: Tuple[float, float, float, float]
    maximum: Tuple[float, float, float, float]

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        lo = np.asarray(self.minimum, dtype=float)
        span = np.asarray(self.maximum, dtype=float) - lo
        safe = np.where(span > 0, span, 1.0)
        scaled = np.where(span > 0, (raw - lo) / safe, 0.0)
        return np.clip(scaled, 0.0, 1.0)

    def denormalize_power(self, value):
        lo, hi = self.minimum[POWER], self.maximum[POWER]
        return lo + np.asarray(value, dtype=float) * (hi - lo)

    def to_dict(self) -> dict:
        return {"minimum": list(self.minimum), "maximum": list(self.maximum)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "NormStats":
        return cls(tuple(float(v) for v in data["minimum"]), tuple(float(v) for v in data["maximum"]))


@dataclass(frozen=True)
class AlignedFrame:
    timestamp: float
    power: Tuple[float, ...]


class FrameSet:
    """Time-ordered aligned frames stored column-wise.

    `power[i, j]` is device `devices[j]`'s power at `timestamps[i]`.
    """

    def __init__(self, timestamps: np.ndarray, power: np.ndarray, devices: Sequence[str]):
        self.timestamps = np.asarray(timestamps, dtype=float)
        self.power = np.asarray(power, dtype=float).reshape(len(self.timestamps), len(devices))
        self.devices = tuple(devices)

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return FrameSet(self.timestamps[item], self.power[item], self.devices)
        return AlignedFrame(float(self.timestamps[item]), tuple(float(p) for p in self.power[item]))

    def __iter__(self) -> Iterator[AlignedFrame]:
        for i in range(len(self)):
            yield self[i]

    def device_column(self, device_id: str) -> np.ndarray:
        return self.power[:, self.devices.index(device_id)]


# ============================ PARSING ============================

def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise TraceNotFound(f"Trace file not found: {path}")
        return path.read_text(encoding="utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data


# Epoch seconds pandas can represent as a datetime.
EPOCH_RANGE = (float(pd.Timestamp.min.ceil("s").value // 10**9), float(pd.Timestamp.max.floor("s").value // 10**9))


def _to_float(raw: pd.Series) -> np.ndarray:
    """Correctly rounded float conversion; unparseable entries become NaN."""
    valid = pd.to_numeric(raw, errors="coerce").notna().to_numpy()
    values = np.full(len(raw), np.nan)
    values[valid] = [float(text) for text in raw.to_numpy()[valid]]
    return values


def _parse_timestamps(raw: pd.Series, row_numbers: np.ndarray) -> np.ndarray:
    values = _to_float(raw)
    pending = np.isnan(values)
    numeric = ~pending
    out_of_range = numeric & ~((values >= EPOCH_RANGE[0]) & (values <= EPOCH_RANGE[1]))
    if out_of_range.any():
        position = int(np.flatnonzero(out_of_range)[0])
        raise TimestampError(int(row_numbers[position]), str(raw.iloc[position]))
    if pending.any():
        parsed = pd.to_datetime(raw[pending], utc=True, errors="coerce", format="ISO8601")
        if parsed.isna().any():
            first = int(np.flatnonzero(parsed.isna().to_numpy())[0])
            position = np.flatnonzero(pending)[first]
            raise TimestampError(int(row_numbers[position]), str(raw.iloc[position]))
        epoch = pd.Timestamp("1970-01-01", tz="UTC")
        values[pending] = ((parsed - epoch) / pd.Timedelta(seconds=1)).to_numpy(dtype=float)
    return values


def parse_trace(source: Union[str, Path, bytes, io.IOBase],
                schema: Optional[SchemaConfig] = None) -> Tuple[List[Reading], ParseReport]:
    """Parse CSV trace text into Readings, in file order.

    Malformed rows (missing fields, extra fields, non-numeric power) are
    skipped and counted unless `schema.strict` is set, in which case the
    first one aborts with its row number. Negative power and unparseable
    timestamps are always errors.
    """
    schema = schema or SchemaConfig()
    text = _read_text(source)
    if not text.strip():
        return [], ParseReport()

    bad_lines: List[List[str]] = []

    def _collect_bad_line(fields):
        bad_lines.append(fields)
        return None

    try:
        frame = pd.read_csv(
            io.StringIO(text),
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            skipinitialspace=True,
            sep=schema.delimiter,
            engine="python",
            on_bad_lines="error" if schema.strict else _collect_bad_line,
        )
    except pd.errors.ParserError as e:
        line = re.search(r"line (\d+)", str(e))
        raise MalformedRow(int(line.group(1)) if line else -1, "wrong number of fields") from e
    except pd.errors.EmptyDataError:
        return [], ParseReport()

    first_row = [str(v).strip() for v in frame.iloc[0]] if len(frame) else []
    has_header = schema.has_header
    if has_header is None:
        has_header = schema.timestamp_col in first_row or schema.power_col in first_row

    if has_header:
        try:
            columns = [first_row.index(name) for name in (schema.timestamp_col, schema.device_col, schema.power_col)]
        except ValueError:
            raise ConfigError(
                f"Trace header {first_row} lacks one of "
                f"{schema.timestamp_col!r}, {schema.device_col!r}, {schema.power_col!r}"
            )
        frame = frame.iloc[1:]
    else:
        columns = list(schema.order)
        if max(columns) >= frame.shape[1]:
            raise ConfigError(f"schema.order {columns} does not fit a {frame.shape[1]}-column trace")

    first_data_row = 2 if has_header else 1
    row_numbers = np.arange(len(frame)) + first_data_row

    ts_raw = frame.iloc[:, columns[0]].fillna("").astype(str).str.strip()
    dev_raw = frame.iloc[:, columns[1]].fillna("").astype(str).str.strip()
    pw_raw = frame.iloc[:, columns[2]].fillna("").astype(str).str.strip()
    power = _to_float(pw_raw)

    malformed = (ts_raw.to_numpy() == "") | (dev_raw.to_numpy() == "") | ~np.isfinite(power)
    if schema.strict and malformed.any():
        position = int(np.flatnonzero(malformed)[0])
        raise MalformedRow(int(row_numbers[position]), "missing or non-numeric field")

    keep = ~malformed
    ts_raw, dev_raw, power, row_numbers = ts_raw[keep], dev_raw[keep], power[keep], row_numbers[keep]

    negative = power < 0
    if negative.any():
        position = int(np.flatnonzero(negative)[0])
        raise NegativePower(int(row_numbers[position]), float(power[position]))

    timestamps = _parse_timestamps(ts_raw, row_numbers)
    readings = [Reading(float(t), d, float(p)) for t, d, p in zip(timestamps, dev_raw.tolist(), power)]

    skipped = int(malformed.sum()) + len(bad_lines)
    report = ParseReport(rows=len(frame) + len(bad_lines), parsed=len(readings), skipped=skipped, header=bool(has_header))
    log_debug(f"Parsed {report.parsed} readings ({report.skipped} skipped, header={report.header})")
    return readings, report


def _format_number(value: float) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def write_trace(readings: Iterable[Reading], destination: Union[str, Path]) -> Path:
    """Write readings in the `timestamp,device_id,power` schema."""
    rows = [(_format_number(r.timestamp), r.device_id, _format_number(r.power)) for r in readings]
    frame = pd.DataFrame(rows, columns=["timestamp", "device_id", "power"])
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


# ============================ FEATURES ============================

def _calendar(timestamps: np.ndarray) -> np.ndarray:
    stamps = pd.to_datetime(np.asarray(timestamps, dtype=float), unit="s", utc=True)
    return np.column_stack([stamps.hour, stamps.month, stamps.year]).astype(float)


def raw_feature_matrix(timestamps: np.ndarray, powers: np.ndarray) -> np.ndarray:
    """Un-normalized (hour, month, year, power) rows."""
    timestamps = np.asarray(timestamps, dtype=float)
    if len(timestamps) == 0:
        return np.empty((0, len(FEATURE_NAMES)))
    return np.column_stack([_calendar(timestamps), np.asarray(powers, dtype=float)])


def norm_stats_from_arrays(timestamps: np.ndarray, powers: np.ndarray) -> NormStats:
    raw = raw_feature_matrix(timestamps, powers)
    if len(raw) == 0:
        raise EmptyTrace("Cannot compute normalization statistics of an empty trace")
    return NormStats(tuple(float(v) for v in raw.min(axis=0)), tuple(float(v) for v in raw.max(axis=0)))


def compute_norm_stats(readings: Sequence[Reading]) -> NormStats:
    if not readings:
        raise EmptyTrace("Cannot compute normalization statistics of an empty trace")
    timestamps = np.fromiter((r.timestamp for r in readings), dtype=float, count=len(readings))
    powers = np.fromiter((r.power for r in readings), dtype=float, count=len(readings))
    return norm_stats_from_arrays(timestamps, powers)


def feature_matrix(timestamps: np.ndarray, powers: np.ndarray, stats: NormStats) -> np.ndarray:
    return stats.normalize(raw_feature_matrix(timestamps, powers))


def extract_features(reading: Reading, stats: NormStats) -> FeatureVector:
    moment = datetime.fromtimestamp(reading.timestamp, tz=timezone.utc)
    raw = np.array([moment.hour, moment.month, moment.year, reading.power], dtype=float)
    normalized = stats.normalize(raw)
    return FeatureVector(moment.hour, moment.month, moment.year, float(reading.power),
                         tuple(float(v) for v in normalized))


# ============================ ALIGNMENT ============================

def group_by_device(readings: Iterable[Reading]) -> Dict[str, List[Reading]]:
    grouped: Dict[str, List[Reading]] = {}
    for reading in readings:
        grouped.setdefault(reading.device_id, []).append(reading)
    for device_id, stream in grouped.items():
        stream.sort(key=lambda r: r.timestamp)
    return grouped


def device_registry(readings: Iterable[Reading], explicit: Optional[Sequence[str]] = None) -> Tuple[str, ...]:
    if explicit:
        return tuple(explicit)
    return tuple(sorted({r.device_id for r in readings}))


def align_frames(per_device: Mapping[str, Sequence[Reading]], registry: Sequence[str]) -> FrameSet:
    """One frame per distinct timestamp, each device carrying its last observation.

    Frames before a device's first reading use that first reading's value.
    """
    series = []
    for device_id in registry:
        stream = per_device.get(device_id) or []
        if not stream:
            raise DeviceNeverSeen(device_id)
        ts = np.fromiter((r.timestamp for r in stream), dtype=float, count=len(stream))
        pw = np.fromiter((r.power for r in stream), dtype=float, count=len(stream))
        series.append((ts, pw))

    if not series:
        return FrameSet(np.empty(0), np.empty((0, 0)), ())

    union = np.unique(np.concatenate([ts for ts, _ in series]))
    power = np.empty((len(union), len(series)))
    for j, (ts, pw) in enumerate(series):
        idx = np.searchsorted(ts, union, side="right") - 1
        power[:, j] = pw[np.clip(idx, 0, None)]
    log_debug(f"Aligned {len(union)} frames over {len(registry)} devices")
    return FrameSet(union, power, registry)


def frames_from_readings(readings: Sequence[Reading], registry: Optional[Sequence[str]] = None) -> FrameSet:
    registry = registry or device_registry(readings)
    return align_frames(group_by_device(readings), registry)


def split_train_test(frames: FrameSet, train_fraction: float) -> Tuple[FrameSet, FrameSet]:
    """Chronological split: the historical prefix trains, the rest is replayed live."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidSplit(f"train_fraction must lie strictly between 0 and 1, got {train_fraction}")
    cut = round_half_up(train_fraction * len(frames))
    return frames[:cut], frames[cut:]
