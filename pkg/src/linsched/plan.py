"""Transfer requests and per-slot schedule plans shared by every scheduler."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from linsched.trace import CarbonTrace, PathSpec, SlotGrid, TraceError, path_trace


class UnschedulableError(RuntimeError):
    """No feasible plan exists (or the heuristic could not find one)."""

    def __init__(self, message: str, request_ids: Sequence[str] = (), plan: "SchedulePlan | None" = None):
        super().__init__(message)
        self.request_ids = list(request_ids)
        self.plan = plan

    def to_dict(self) -> dict:
        return {"error": "unschedulable", "message": str(self), "requests": self.request_ids}


def gigabits(size_bytes: float) -> float:
    return 8.0 * size_bytes * 1e-9


@dataclass(frozen=True)
class TransferRequest:
    id: str
    size_bytes: float
    deadline_slots: int
    path: PathSpec
    arrival: float = 0.0

    def __post_init__(self):
        if not self.size_bytes > 0:
            raise ValueError(f"request {self.id!r}: size_bytes must be positive")
        if int(self.deadline_slots) != self.deadline_slots or self.deadline_slots < 1:
            raise ValueError(f"request {self.id!r}: deadline_slots must be a positive integer")
        object.__setattr__(self, "deadline_slots", int(self.deadline_slots))

    @property
    def gigabits(self) -> float:
        return gigabits(self.size_bytes)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "size_bytes": self.size_bytes,
            "deadline_slots": self.deadline_slots,
            "path": [{"zone": z, "weight": w} for z, w in self.path.nodes],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TransferRequest":
        try:
            path = PathSpec(tuple((p["zone"], p.get("weight", 1.0)) for p in doc["path"]))
            size = doc["size_bytes"]
            if isinstance(size, bool) or not isinstance(size, (int, float)):
                raise ValueError("size_bytes must be a number")
            deadline = doc["deadline_slots"]
            if isinstance(deadline, bool) or not isinstance(deadline, int):
                raise ValueError("deadline_slots must be an integer")
            return cls(str(doc["id"]), size, deadline, path, float(doc.get("arrival", 0.0)))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed request {doc!r}: {exc}") from None


def check_requests(requests: Sequence[TransferRequest], grid: SlotGrid) -> None:
    if not requests:
        raise ValueError("empty request set")
    ids = [r.id for r in requests]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate request ids")
    for r in requests:
        if r.deadline_slots > grid.horizon_slots:
            raise TraceError(
                f"request {r.id!r}: deadline {r.deadline_slots} exceeds trace coverage "
                f"of {grid.horizon_slots} slots"
            )


def request_traces(
    requests: Sequence[TransferRequest], traces: Mapping[str, CarbonTrace], grid: SlotGrid
) -> dict[str, np.ndarray]:
    """Slot-level path trace for every request, computed once per distinct path."""
    by_path: dict[str, np.ndarray] = {}
    out = {}
    for r in requests:
        key = r.path.key()
        if key not in by_path:
            by_path[key] = path_trace(traces, r.path, grid)
        out[r.id] = by_path[key]
    return out


@dataclass
class SchedulePlan:
    """Per-request throughput (Gbps) and thread counts for slots ``0 .. D_i - 1``."""

    algorithm: str
    limit_gbps: float
    grid: SlotGrid
    throughput: dict[str, np.ndarray] = field(default_factory=dict)
    threads: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def ids(self) -> list[str]:
        return list(self.throughput)

    def slot_load(self) -> np.ndarray:
        """Aggregate throughput per slot across all requests."""
        load = np.zeros(self.grid.horizon_slots)
        for rho in self.throughput.values():
            load[: rho.size] += rho
        return load

    def delivered_gigabits(self, request_id: str) -> float:
        return float(self.grid.slot_seconds * np.sum(self.throughput[request_id]))

    def active_slots(self, request_id: str) -> np.ndarray:
        return np.flatnonzero(self.threads[request_id] > 0)

    def linear_cost(self, path_traces: Mapping[str, np.ndarray]) -> float:
        """Carbon-weighted throughput sum, the quantity the LP minimises."""
        return float(
            sum(np.dot(path_traces[i][: rho.size], rho) for i, rho in self.throughput.items())
        )
