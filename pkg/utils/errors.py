# errors.py
"""Exception hierarchy shared by the tools and the CLI.

Every error carries the process exit code the CLI returns for it:
1 = configuration, 2 = data, 3 = internal.
"""


class PipelineError(Exception):
    """Base class for every error the pipeline raises on purpose."""

    exit_code = 3


class ConfigError(PipelineError):
    exit_code = 1


class DataError(PipelineError):
    exit_code = 2


class InternalError(PipelineError):
    exit_code = 3


# --- trace ingest ---
class TraceNotFound(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, row: int, detail: str = ""):
        self.row = row
        super().__init__(f"Malformed row {row}" + (f": {detail}" if detail else ""))


class NegativePower(DataError):
    def __init__(self, row: int, power: float):
        self.row = row
        self.power = power
        super().__init__(f"Negative power {power} at row {row}")


class TimestampError(DataError):
    def __init__(self, row: int, value: str):
        self.row = row
        super().__init__(f"Unparseable timestamp {value!r} at row {row}")


class EmptyTrace(DataError):
    pass


class DeviceNeverSeen(DataError):
    def __init__(self, device_id: str):
        self.device_id = device_id
        super().__init__(f"Device {device_id!r} is registered but has no readings")


class InvalidSplit(DataError):
    pass


# --- clustering ---
class InsufficientData(DataError):
    pass


class DimensionMismatch(DataError):
    pass


# --- planning / simulation ---
class InvalidState(DataError):
    pass


class NonStochasticModel(DataError):
    pass


# --- persistence ---
class BundleError(DataError):
    def __init__(self, path, detail: str):
        self.path = str(path)
        super().__init__(f"{self.path}: {detail}")


class ReportError(DataError):
    pass
