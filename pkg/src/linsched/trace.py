"""Carbon-intensity traces: ingestion, path combination, slot expansion and noise.

Per-zone traces are hourly series in gCO2/kWh. A transfer's path trace is the
weighted sum of its zones' series, held piecewise-constant over the slot grid.
Slot-level traces are plain ``float64`` arrays.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

HOUR = 3600.0
CSV_HEADER = ("zone", "timestamp", "intensity_gco2_kwh")


class TraceError(ValueError):
    """Raised for unreadable, misaligned or invalid trace data."""


def _frozen(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CarbonTrace:
    zone: str
    start: datetime
    values: np.ndarray
    step_seconds: float = HOUR

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1 or values.size == 0:
            raise TraceError(f"trace for zone {self.zone!r} is empty")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise TraceError(f"invalid trace value in zone {self.zone!r}")
        if self.step_seconds <= 0:
            raise TraceError("trace step must be positive")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> datetime:
        return self.start + timedelta(seconds=self.step_seconds * len(self))


@dataclass(frozen=True)
class PathSpec:
    """Ordered (zone, weight) nodes of a transfer path, source first."""

    nodes: tuple[tuple[str, float], ...]

    def __post_init__(self):
        nodes = tuple((str(z), float(w)) for z, w in self.nodes)
        if not nodes:
            raise TraceError("path needs at least one node")
        for zone, weight in nodes:
            if not math.isfinite(weight) or weight < 0:
                raise TraceError(f"path weight for {zone!r} must be non-negative")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def equal(cls, zones: Sequence[str]) -> "PathSpec":
        """Equal weights of 1 per node, so the combined trace is the plain sum."""
        return cls(tuple((z, 1.0) for z in zones))

    @property
    def zones(self) -> tuple[str, ...]:
        return tuple(z for z, _ in self.nodes)

    def normalized(self) -> "PathSpec":
        total = sum(w for _, w in self.nodes)
        if total <= 0:
            raise TraceError("path weights sum to zero")
        return PathSpec(tuple((z, w / total) for z, w in self.nodes))

    def key(self) -> str:
        return "|".join(f"{z}:{w!r}" for z, w in self.nodes)


@dataclass(frozen=True)
class SlotGrid:
    slot_seconds: float
    horizon_slots: int

    def __post_init__(self):
        if not self.slot_seconds > 0:
            raise TraceError("slot_seconds must be positive")
        if int(self.horizon_slots) != self.horizon_slots or self.horizon_slots <= 0:
            raise TraceError("horizon_slots must be a positive integer")
        object.__setattr__(self, "horizon_slots", int(self.horizon_slots))

    @classmethod
    def from_minutes(cls, slot_minutes: float, horizon_slots: int) -> "SlotGrid":
        return cls(slot_minutes * 60.0, horizon_slots)

    def expansion_factor(self, step_seconds: float = HOUR) -> int:
        ratio = step_seconds / self.slot_seconds
        factor = round(ratio)
        if factor < 1 or abs(ratio - factor) > 1e-9 * ratio:
            raise TraceError(
                f"trace step {step_seconds}s is not an integer multiple of the "
                f"{self.slot_seconds}s slot"
            )
        return factor


def _parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise TraceError(f"bad timestamp {text!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def load_traces(source: str | Path, zones: Sequence[str] | None = None) -> dict[str, CarbonTrace]:
    """Read a ``zone,timestamp,intensity_gco2_kwh`` CSV into per-zone traces.

    Only ``zones`` are returned (all zones in the file when None). Every returned
    trace must start at the same timestamp and have the same length.
    """
    with open(source, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise TraceError(f"trace file missing columns: {sorted(missing)}")
        return traces_from_rows(reader, zones)


def traces_from_rows(rows: Iterable[Mapping], zones: Sequence[str] | None = None) -> dict[str, CarbonTrace]:
    """Build traces from CSV-shaped records (``zone``, ``timestamp``, ``intensity_gco2_kwh``)."""
    series: dict[str, list[tuple[datetime, float]]] = {}
    for line in rows:
        try:
            zone, stamp, raw = line["zone"], line["timestamp"], line["intensity_gco2_kwh"]
        except (KeyError, TypeError):
            raise TraceError(f"trace record missing fields: {line!r}") from None
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise TraceError(f"invalid trace value {raw!r}") from None
        if not math.isfinite(value) or value < 0:
            raise TraceError(f"invalid trace value {value} for zone {zone!r}")
        series.setdefault(str(zone), []).append((_parse_timestamp(str(stamp)), value))

    wanted = list(series) if zones is None else list(dict.fromkeys(zones))
    traces = {}
    for zone in wanted:
        if zone not in series:
            raise TraceError(f"zone not found: {zone!r}")
        points = series[zone]
        for (t0, _), (t1, _) in zip(points, points[1:]):
            if (t1 - t0).total_seconds() != HOUR:
                raise TraceError(f"trace alignment error: zone {zone!r} is not strictly hourly at {t1}")
        traces[zone] = CarbonTrace(zone, points[0][0], [v for _, v in points])

    check_aligned(traces.values())
    return traces


def check_aligned(traces: Iterable[CarbonTrace]) -> None:
    traces = list(traces)
    if not traces:
        return
    first = traces[0]
    for tr in traces[1:]:
        if tr.start != first.start or len(tr) != len(first) or tr.step_seconds != first.step_seconds:
            raise TraceError(
                f"trace alignment error: {tr.zone!r} ({tr.start}, {len(tr)} steps) vs "
                f"{first.zone!r} ({first.start}, {len(first)} steps)"
            )


def write_traces(path: str | Path, traces: Iterable[CarbonTrace]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for tr in traces:
            for k, value in enumerate(tr.values):
                ts = tr.start + timedelta(seconds=tr.step_seconds * k)
                writer.writerow([tr.zone, _format_timestamp(ts), repr(float(value))])


def combine_path(traces: Mapping[str, CarbonTrace], path: PathSpec) -> np.ndarray:
    """Weighted elementwise sum of the path's zone traces (hourly)."""
    try:
        members = [(traces[zone], weight) for zone, weight in path.nodes]
    except KeyError as exc:
        raise TraceError(f"zone not found: {exc.args[0]!r}") from None
    check_aligned(tr for tr, _ in members)
    combined = np.zeros(len(members[0][0]))
    for tr, weight in members:
        combined += weight * tr.values
    return combined


def expand_to_slots(series: Sequence[float], grid: SlotGrid, step_seconds: float = HOUR) -> np.ndarray:
    """Hold each hourly value over the slots it covers.

    The result is truncated to the grid horizon; a series that does not reach
    the horizon is rejected rather than extrapolated.
    """
    factor = grid.expansion_factor(step_seconds)
    expanded = np.repeat(np.asarray(series, dtype=float), factor)
    if expanded.size < grid.horizon_slots:
        raise TraceError(
            f"trace covers {expanded.size} slots, grid horizon needs {grid.horizon_slots}"
        )
    return expanded[: grid.horizon_slots]


def path_trace(traces: Mapping[str, CarbonTrace], path: PathSpec, grid: SlotGrid) -> np.ndarray:
    hourly = combine_path(traces, path)
    return expand_to_slots(hourly, grid, traces[path.zones[0]].step_seconds)


def add_noise(trace: Sequence[float], epsilon: float, seed: int) -> np.ndarray:
    """Multiply each slot by ``1 + u``, ``u ~ U[-epsilon, epsilon]``, clamped at zero."""
    if not 0 <= epsilon < 1:
        raise TraceError(f"noise epsilon must lie in [0, 1), got {epsilon}")
    trace = np.asarray(trace, dtype=float)
    if epsilon == 0:
        return trace.copy()
    rng = np.random.default_rng(seed)
    u = rng.uniform(-epsilon, epsilon, size=trace.shape)
    return np.maximum(trace * (1.0 + u), 0.0)


def synth_trace(
    mean: float,
    amplitude: float,
    period_hours: float = 24.0,
    hours: int = 72,
    seed: int = 0,
    zone: str = "SYNTH",
    phase_hours: float = 0.0,
    start: datetime = datetime(2024, 1, 1, tzinfo=timezone.utc),
) -> CarbonTrace:
    """Diurnal sinusoid with seeded jitter of up to 5% of the mean."""
    if amplitude < 0 or mean < amplitude:
        raise TraceError("synthetic trace needs mean >= amplitude >= 0")
    if period_hours <= 0 or hours <= 0:
        raise TraceError("period and length must be positive")
    rng = np.random.default_rng(seed)
    t = np.arange(hours, dtype=float)
    wave = mean + amplitude * np.sin(2 * np.pi * (t - phase_hours) / period_hours)
    jitter = rng.uniform(-0.05 * mean, 0.05 * mean, size=hours)
    return CarbonTrace(zone, start, np.maximum(wave + jitter, 0.0))


@dataclass
class TraceClient:
    """Pluggable fetch client returning traces under the same contract as files.

    ``fetch`` receives ``(zone, start, hours)`` and returns hourly values; the
    default implementation serves from an in-memory table, which is what tests
    and offline runs use.
    """

    table: dict[str, CarbonTrace] = field(default_factory=dict)

    def fetch(self, zone: str, start: datetime, hours: int) -> list[float]:
        if zone not in self.table:
            raise TraceError(f"zone not found: {zone!r}")
        tr = self.table[zone]
        offset = (start - tr.start).total_seconds() / tr.step_seconds
        if offset != int(offset) or offset < 0 or offset + hours > len(tr):
            raise TraceError(f"trace alignment error: window outside {zone!r} coverage")
        return tr.values[int(offset) : int(offset) + hours].tolist()

    def traces(self, zones: Sequence[str], start: datetime, hours: int) -> dict[str, CarbonTrace]:
        return {z: CarbonTrace(z, start, self.fetch(z, start, hours)) for z in zones}
