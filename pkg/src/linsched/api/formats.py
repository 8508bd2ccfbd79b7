"""On-disk and wire formats: request lists, plan documents and emissions reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from linsched.model import Models, throughput_of_threads
from linsched.plan import SchedulePlan, TransferRequest
from linsched.sim import EmissionsReport
from linsched.trace import SlotGrid

PLAN_VERSION = 1
REPORT_FIELDS = ("algorithm", "limit_gbps", "noise", "seed", "total_emissions_g", "total_energy_kwh", "verified")


class FormatError(ValueError):
    pass


def parse_requests(doc: Any) -> list[TransferRequest]:
    if not isinstance(doc, list):
        raise FormatError("requests document must be a JSON array")
    try:
        return [TransferRequest.from_dict(item) for item in doc]
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_requests(path: str | Path) -> list[TransferRequest]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from None
    return parse_requests(doc)


def dump_requests(requests: Sequence[TransferRequest], path: str | Path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in requests], indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class SlotRecord:
    index: int
    throughput_gbps: float
    threads_real: float
    threads_int: int


@dataclass(frozen=True)
class RequestRecord:
    id: str
    deadline_slots: int
    size_bytes: float
    path: tuple[tuple[str, float], ...]
    slots: tuple[SlotRecord, ...]


@dataclass(frozen=True)
class PlanDocument:
    algorithm: str
    slot_seconds: float
    horizon_slots: int
    limit_gbps: float
    requests: tuple[RequestRecord, ...]
    version: int = PLAN_VERSION

    @classmethod
    def from_plan(cls, plan: SchedulePlan, requests: Sequence[TransferRequest]) -> "PlanDocument":
        by_id = {r.id: r for r in requests}
        records = []
        for rid, rho in plan.throughput.items():
            r = by_id[rid]
            theta = plan.threads[rid]
            slots = tuple(
                SlotRecord(int(j), float(rho[j]), float(theta[j]), int(math.ceil(theta[j])))
                for j in np.flatnonzero((rho > 0) | (theta > 0))
            )
            records.append(RequestRecord(rid, r.deadline_slots, r.size_bytes, r.path.nodes, slots))
        return cls(plan.algorithm, plan.grid.slot_seconds, plan.grid.horizon_slots, plan.limit_gbps, tuple(records))

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "algorithm": self.algorithm,
            "grid": {"slot_seconds": self.slot_seconds, "horizon_slots": self.horizon_slots},
            "limit_gbps": self.limit_gbps,
            "requests": [
                {
                    "id": rec.id,
                    "deadline_slots": rec.deadline_slots,
                    "size_bytes": rec.size_bytes,
                    "path": [{"zone": z, "weight": w} for z, w in rec.path],
                    "slots": [
                        {
                            "index": s.index,
                            "throughput_gbps": s.throughput_gbps,
                            "threads_real": s.threads_real,
                            "threads_int": s.threads_int,
                        }
                        for s in rec.slots
                    ],
                }
                for rec in self.requests
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PlanDocument":
        try:
            if doc["version"] != PLAN_VERSION:
                raise FormatError(f"unsupported plan version {doc['version']!r}")
            records = []
            for rec in doc["requests"]:
                slots = tuple(
                    SlotRecord(int(s["index"]), float(s["throughput_gbps"]), float(s["threads_real"]), int(s["threads_int"]))
                    for s in rec["slots"]
                )
                for s in slots:
                    if not 0 <= s.index < rec["deadline_slots"]:
                        raise FormatError(f"request {rec['id']!r}: slot {s.index} outside its deadline")
                path = tuple((p["zone"], float(p["weight"])) for p in rec["path"])
                records.append(RequestRecord(rec["id"], int(rec["deadline_slots"]), rec["size_bytes"], path, slots))
            return cls(
                doc["algorithm"],
                float(doc["grid"]["slot_seconds"]),
                int(doc["grid"]["horizon_slots"]),
                float(doc["limit_gbps"]),
                tuple(records),
                doc["version"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"malformed plan document: {exc!r}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "PlanDocument":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise FormatError(f"plan is not valid JSON: {exc}") from None

    @property
    def grid(self) -> SlotGrid:
        return SlotGrid(self.slot_seconds, self.horizon_slots)

    def transfer_requests(self) -> list[TransferRequest]:
        from linsched.trace import PathSpec

        return [TransferRequest(r.id, r.size_bytes, r.deadline_slots, PathSpec(r.path)) for r in self.requests]

    def to_plan(self) -> SchedulePlan:
        plan = SchedulePlan(self.algorithm, self.limit_gbps, self.grid)
        for rec in self.requests:
            rho = np.zeros(rec.deadline_slots)
            theta = np.zeros(rec.deadline_slots)
            for s in rec.slots:
                rho[s.index] = s.throughput_gbps
                theta[s.index] = s.threads_real
            plan.throughput[rec.id] = rho
            plan.threads[rec.id] = theta
        return plan

    def integer_overloads(self, models: Models, atol: float = 1e-9) -> list[int]:
        """Slots whose aggregate throughput at the rounded-up thread counts exceeds the limit."""
        load = np.zeros(self.horizon_slots)
        for rec in self.requests:
            for s in rec.slots:
                load[s.index] += throughput_of_threads(models.throughput, s.threads_int)
        return [int(j) for j in np.flatnonzero(load > self.limit_gbps + atol)]


def report_csv(report: EmissionsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    writer.writerow(
        [
            report.algorithm,
            repr(float(report.limit_gbps)),
            repr(float(report.noise)),
            "" if report.seed is None else str(report.seed),
            repr(report.total_emissions_g),
            repr(report.total_energy_kwh),
            "true" if report.verified else "false",
        ]
    )
    return buf.getvalue()


def report_json(report: EmissionsReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"
