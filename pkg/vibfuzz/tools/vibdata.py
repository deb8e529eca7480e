from __future__ import annotations

import datetime as dt
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class MachineState(Enum):
    """Machine state classes, ordered by severity level."""

    NORMAL = ("Nr", 0, "Normal", "Normal")
    IMBALANCE = ("Im", 1, "Imbalance", "Rotor")
    STRUCTURAL = ("St", 2, "Structural fault", "Frame")
    MISALIGNMENT = ("Mi", 3, "Misalignment", "Link")
    LOOSENESS = ("Ml", 4, "Mechanical looseness", "Looseness")
    LUBRICATION = ("Bl", 5, "Bearing lubrication", "Lubrication fault")
    GEAR = ("Gf", 6, "Gear fault", "Gear")

    def __init__(self, code: str, severity: int, title: str, cause: str) -> None:
        self.code = code
        self.severity = severity
        self.title = title
        self.cause = cause

    @classmethod
    def from_code(cls, code: str) -> "MachineState":
        for state in cls:
            if state.code.lower() == code.strip().lower():
                return state
        raise ValueError(f"Unknown machine state '{code}'")

    @classmethod
    def from_severity(cls, severity: int) -> "MachineState":
        for state in cls:
            if state.severity == severity:
                return state
        raise ValueError(f"No machine state with severity {severity}")


class FrameValidationError(ValueError):
    def __init__(self, row: int, message: str) -> None:
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"Interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"Interval cannot go backwards: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return (self.lo + self.hi) / 2.0

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def as_list(self) -> List[float]:
        return [self.lo, self.hi]


@dataclass(frozen=True)
class SensorFrame:
    position: str
    window_start: dt.datetime
    g: np.ndarray
    fft_v: np.ndarray
    fft_g: np.ndarray
    state_label: MachineState


@dataclass(frozen=True)
class StateIntervals:
    state: MachineState
    iv: Interval
    ig: Interval


@dataclass(frozen=True)
class StateIntervalTable:
    rows: Tuple[StateIntervals, ...]
    position: Optional[str] = None

    @property
    def states(self) -> List[MachineState]:
        return [row.state for row in self.rows]

    def row(self, state: MachineState) -> StateIntervals:
        for row in self.rows:
            if row.state is state:
                return row
        raise KeyError(state)

    def __len__(self) -> int:
        return len(self.rows)


def rms(samples: Sequence[float]) -> float:
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise ValueError("rms of an empty sequence is undefined")
    if not np.all(np.isfinite(values)):
        raise ValueError("rms requires finite samples")
    return float(np.sqrt(np.mean(np.square(values))))


def summarize_frame(frame: SensorFrame) -> Tuple[float, float]:
    return rms(frame.fft_v), rms(frame.fft_g)


@dataclass
class IntervalAccumulator:
    """
    Streaming per-state min/max of (v_rms, g_rms). Merging two accumulators is associative,
    so frame shards can be summarized independently and combined.
    """

    bounds: Dict[MachineState, List[float]] = field(default_factory=dict)

    def add(self, state: MachineState, v_rms: float, g_rms: float) -> None:
        current = self.bounds.get(state)
        if current is None:
            self.bounds[state] = [v_rms, v_rms, g_rms, g_rms]
            return
        current[0] = min(current[0], v_rms)
        current[1] = max(current[1], v_rms)
        current[2] = min(current[2], g_rms)
        current[3] = max(current[3], g_rms)

    def add_frame(self, frame: SensorFrame) -> None:
        v_rms, g_rms = summarize_frame(frame)
        self.add(frame.state_label, v_rms, g_rms)

    def merge(self, other: "IntervalAccumulator") -> "IntervalAccumulator":
        merged = IntervalAccumulator({state: list(b) for state, b in self.bounds.items()})
        for state, (v_lo, v_hi, g_lo, g_hi) in other.bounds.items():
            merged.add(state, v_lo, g_lo)
            merged.add(state, v_hi, g_hi)
        return merged

    def table(self, position: Optional[str] = None) -> StateIntervalTable:
        if not self.bounds:
            raise ValueError("no frames were accumulated")
        rows = tuple(
            StateIntervals(state=state, iv=Interval(b[0], b[1]), ig=Interval(b[2], b[3]))
            for state, b in sorted(self.bounds.items(), key=lambda item: item[0].severity)
        )
        return StateIntervalTable(rows=rows, position=position)


def extract_intervals(frames: Iterable[SensorFrame]) -> StateIntervalTable:
    accumulator = IntervalAccumulator()
    count = 0
    for frame in frames:
        accumulator.add_frame(frame)
        count += 1
    if count == 0:
        raise ValueError("extract_intervals needs at least one frame")
    table = accumulator.table()
    logger.info("extracted %d state intervals from %d frames", len(table), count)
    return table


def extract_intervals_by_position(frames: Iterable[SensorFrame]) -> Dict[str, StateIntervalTable]:
    accumulators: Dict[str, IntervalAccumulator] = {}
    for frame in frames:
        accumulators.setdefault(frame.position, IntervalAccumulator()).add_frame(frame)
    if not accumulators:
        raise ValueError("extract_intervals_by_position needs at least one frame")
    return {position: acc.table(position=position) for position, acc in sorted(accumulators.items())}


def class_distribution(frames: Iterable[SensorFrame]) -> Dict[MachineState, float]:
    return _shares(Counter(frame.state_label for frame in frames))


@dataclass
class ExtractionSummary:
    table: StateIntervalTable
    by_position: Dict[str, StateIntervalTable]
    distribution: Dict[MachineState, float]
    frames: int


def summarize_frames(frames: Iterable[SensorFrame]) -> ExtractionSummary:
    """
    One pass over `frames` that keeps only running min/max per state and position plus label counts,
    so a file of long spectra never has to fit in memory.
    """
    pooled = IntervalAccumulator()
    positions: Dict[str, IntervalAccumulator] = {}
    counts: Counter = Counter()
    for frame in frames:
        v_rms, g_rms = summarize_frame(frame)
        pooled.add(frame.state_label, v_rms, g_rms)
        positions.setdefault(frame.position, IntervalAccumulator()).add(frame.state_label, v_rms, g_rms)
        counts[frame.state_label] += 1
    if not counts:
        raise ValueError("summarize_frames needs at least one frame")
    total = sum(counts.values())
    logger.info("summarized %d frames over %d positions", total, len(positions))
    return ExtractionSummary(
        table=pooled.table(),
        by_position={position: acc.table(position=position) for position, acc in sorted(positions.items())},
        distribution=_shares(counts),
        frames=total,
    )


def _shares(counts: Counter) -> Dict[MachineState, float]:
    total = sum(counts.values())
    if total == 0:
        raise ValueError("class_distribution needs at least one frame")
    return {state: counts[state] / total for state in sorted(counts, key=lambda s: s.severity)}


# --------------------------------------------------------------------- #
# Ingestion
# --------------------------------------------------------------------- #
def build_frame(record: Dict, row: int) -> SensorFrame:
    """
    Validate one raw record and turn it into a SensorFrame. Rejections carry the row number.
    """
    try:
        position = str(record["position"])
        state = MachineState.from_code(str(record["state"]))
        window_start = _parse_timestamp(record["window_start"])
    except KeyError as exc:
        raise FrameValidationError(row, f"missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise FrameValidationError(row, str(exc)) from exc

    arrays = {}
    for name in ("g", "fft_v", "fft_g"):
        if name not in record:
            raise FrameValidationError(row, f"missing field {name!r}")
        try:
            values = np.asarray(record[name], dtype=float)
        except (TypeError, ValueError) as exc:
            raise FrameValidationError(row, f"{name} is not a numeric sequence") from exc
        if values.ndim != 1 or values.size == 0:
            raise FrameValidationError(row, f"{name} must be a non-empty sequence")
        if not np.all(np.isfinite(values)):
            raise FrameValidationError(row, f"{name} contains NaN or infinite samples")
        if name != "g" and np.any(values < 0):
            raise FrameValidationError(row, f"{name} contains negative magnitudes")
        arrays[name] = values

    return SensorFrame(
        position=position,
        window_start=window_start,
        g=arrays["g"],
        fft_v=arrays["fft_v"],
        fft_g=arrays["fft_g"],
        state_label=state,
    )


def iter_ndjson(path: Path) -> Iterator[SensorFrame]:
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FrameValidationError(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise FrameValidationError(line_no, "expected a JSON object")
            yield build_frame(record, line_no)


def iter_csv(path: Path) -> Iterator[SensorFrame]:
    """
    CSV rows hold the sample lists packed with ';' separators. Row numbers count the header as row 1.
    """
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = {"position", "window_start", "g", "fft_v", "fft_g", "state"} - set(df.columns)
    if missing:
        raise FrameValidationError(1, f"missing columns {sorted(missing)}")
    for idx, raw in enumerate(df.to_dict(orient="records")):
        row = idx + 2
        record = dict(raw)
        for name in ("g", "fft_v", "fft_g"):
            try:
                record[name] = [float(part) for part in raw[name].split(";") if part.strip()]
            except ValueError as exc:
                raise FrameValidationError(row, f"{name} holds a non-numeric sample") from exc
        yield build_frame(record, row)


LOADERS = {
    ".ndjson": iter_ndjson,
    ".jsonl": iter_ndjson,
    ".json": iter_ndjson,
    ".csv": iter_csv,
}


def iter_frames(path: Path) -> Iterator[SensorFrame]:
    path = Path(path).expanduser()
    if not path.exists():
        raise FileNotFoundError(path)
    loader = LOADERS.get(path.suffix.lower())
    if not loader:
        raise ValueError(f"Unsupported extension {path.suffix}")
    return loader(path)


def load_frames(path: Path) -> List[SensorFrame]:
    frames = list(iter_frames(path))
    logger.info("loaded %d frames from %s", len(frames), path)
    return frames


def frame_to_record(frame: SensorFrame) -> Dict:
    return {
        "position": frame.position,
        "window_start": frame.window_start.isoformat(),
        "g": frame.g.tolist(),
        "fft_v": frame.fft_v.tolist(),
        "fft_g": frame.fft_g.tolist(),
        "state": frame.state_label.code,
    }


def _parse_timestamp(value) -> dt.datetime:
    if isinstance(value, dt.datetime):
        return value
    text = str(value).strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        return dt.datetime.fromisoformat(text)
    except ValueError as exc:
        raise ValueError(f"window_start is not ISO-8601: {value!r}") from exc
