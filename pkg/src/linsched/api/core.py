"""Request handling shared by the CLI and the HTTP service."""

from __future__ import annotations

from typing import Mapping, Sequence

from linsched.api.formats import PlanDocument
from linsched.harness import ALGORITHM_NAMES, noisy_traces, schedule
from linsched.heuristics import HeuristicConfig
from linsched.model import Models
from linsched.plan import TransferRequest, request_traces
from linsched.sim import EmissionsReport, evaluate
from linsched.trace import CarbonTrace, SlotGrid, TraceError, check_aligned


def grid_for(traces: Mapping[str, CarbonTrace], slot_minutes: float) -> SlotGrid:
    """Slot grid spanning the full (aligned) trace window."""
    if not traces:
        raise TraceError("no traces supplied")
    check_aligned(traces.values())
    first = next(iter(traces.values()))
    probe = SlotGrid.from_minutes(slot_minutes, 1)
    return SlotGrid(probe.slot_seconds, len(first) * probe.expansion_factor(first.step_seconds))


def plan_document(
    requests: Sequence[TransferRequest],
    traces: Mapping[str, CarbonTrace],
    limit_gbps: float,
    slot_minutes: float,
    algorithm: str,
    seed: int = 0,
) -> PlanDocument:
    if algorithm not in ALGORITHM_NAMES:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    grid = grid_for(traces, slot_minutes)
    models = Models.default(limit_gbps)
    clean = request_traces(requests, traces, grid)
    plan = schedule(algorithm, requests, clean, grid, models, HeuristicConfig(seed=seed))
    return PlanDocument.from_plan(plan, requests)


def simulate_document(
    doc: PlanDocument, traces: Mapping[str, CarbonTrace], noise: float, seed: int
) -> EmissionsReport:
    requests = doc.transfer_requests()
    grid = doc.grid
    clean = request_traces(requests, traces, grid)
    noisy = noisy_traces(requests, clean, noise, seed)
    return evaluate(doc.to_plan(), noisy, Models.default(doc.limit_gbps), requests, noise, seed)
