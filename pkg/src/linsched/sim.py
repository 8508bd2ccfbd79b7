"""Plan verification and energy/emissions accounting.

Each active (request, slot) pair draws the CPU power of its thread count for
the whole slot; emissions weight that energy by the request's path intensity in
the slot. Slots with no threads draw nothing.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from linsched.model import Models, power_of_threads
from linsched.plan import SchedulePlan, TransferRequest

J_PER_KWH = 3.6e6
BYTE_RTOL = 1e-9
CAP_ATOL = 1e-9


@dataclass
class Verdict:
    violations: list[str] = field(default_factory=list)
    failed_requests: set[str] = field(default_factory=set)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def verify(plan: SchedulePlan, requests: Sequence[TransferRequest]) -> Verdict:
    """Re-check byte sufficiency, deadlines and the shared per-slot limit."""
    by_id = {r.id: r for r in requests}
    if set(by_id) != set(plan.throughput):
        missing = sorted(set(by_id) - set(plan.throughput))
        extra = sorted(set(plan.throughput) - set(by_id))
        raise ValueError(f"plan/request id mismatch: missing {missing}, unknown {extra}")

    verdict = Verdict()
    L = plan.limit_gbps
    for rid, r in by_id.items():
        rho = np.asarray(plan.throughput[rid], dtype=float)
        late = rho[r.deadline_slots :]
        if np.any(late != 0):
            verdict.violations.append(f"deadline: {rid} allocated at or after slot {r.deadline_slots}")
            verdict.failed_requests.add(rid)
        if np.any(rho < -CAP_ATOL) or np.any(rho > L + CAP_ATOL):
            verdict.violations.append(f"bounds: {rid} throughput outside [0, {L}]")
            verdict.failed_requests.add(rid)
        delivered = plan.grid.slot_seconds * float(np.sum(rho[: r.deadline_slots]))
        if delivered < r.gigabits * (1 - BYTE_RTOL):
            verdict.violations.append(f"bytes: {rid} delivers {delivered:.6g} of {r.gigabits:.6g} Gbit")
            verdict.failed_requests.add(rid)

    load = plan.slot_load()
    for j in np.flatnonzero(load > L + CAP_ATOL):
        verdict.violations.append(f"bandwidth: slot {j} carries {load[j]:.9g} Gbps > {L}")
    return verdict


@dataclass
class RequestEmissions:
    id: str
    energy_kwh: float
    emissions_g: float
    slots_used: int
    deadline_met: bool = True


@dataclass
class EmissionsReport:
    algorithm: str
    limit_gbps: float
    requests: list[RequestEmissions]
    noise: float = 0.0
    seed: int | None = None
    verified: bool = False

    @property
    def total_energy_kwh(self) -> float:
        return float(sum(r.energy_kwh for r in self.requests))

    @property
    def total_emissions_g(self) -> float:
        return float(sum(r.emissions_g for r in self.requests))

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "limit_gbps": self.limit_gbps,
            "noise": self.noise,
            "seed": self.seed,
            "verified": self.verified,
            "total_energy_kwh": self.total_energy_kwh,
            "total_emissions_g": self.total_emissions_g,
            "requests": [asdict(r) for r in self.requests],
        }


def slot_energy_kwh(power_w, slot_seconds: float):
    return power_w * slot_seconds / J_PER_KWH


def evaluate(
    plan: SchedulePlan,
    path_traces: Mapping[str, np.ndarray],
    models: Models,
    requests: Sequence[TransferRequest] | None = None,
    noise: float = 0.0,
    seed: int | None = None,
) -> EmissionsReport:
    """Energy and emissions of ``plan`` under the given (possibly noisy) traces.

    Power comes from the nonlinear thread curve, not the LP's linear proxy.
    When ``requests`` are given the plan is verified and per-request deadline
    flags reflect the verdict.
    """
    dt = plan.grid.slot_seconds
    failed: set[str] = set()
    verified = False
    if requests is not None:
        verdict = verify(plan, requests)
        failed = verdict.failed_requests
        verified = verdict.ok

    rows = []
    for rid, theta in plan.threads.items():
        theta = np.asarray(theta, dtype=float)
        active = np.flatnonzero(theta > 0)
        trace = np.asarray(path_traces[rid], dtype=float)
        if active.size and trace.size <= active[-1]:
            raise ValueError(f"trace for {rid!r} covers {trace.size} slots, plan uses slot {active[-1]}")
        power = power_of_threads(models.power, theta[active])
        rows.append(
            RequestEmissions(
                rid,
                float(np.sum(power) * dt / J_PER_KWH),
                float(np.sum(power * dt * trace[active]) / J_PER_KWH),
                int(active.size),
                rid not in failed,
            )
        )
    return EmissionsReport(plan.algorithm, plan.limit_gbps, rows, noise, seed, verified)


COMPARE_FIELDS = ("algorithm", "total_emissions_g", "total_energy_kwh", "pct_vs_worst", "pct_vs_fcfs")


def _pct(value: float, ref: float | None) -> float | None:
    if ref is None:
        return None
    if ref == 0:
        return 0.0 if value == 0 else None
    return 100.0 * (value - ref) / ref


def compare(reports: Sequence[EmissionsReport]) -> list[dict]:
    """One row per algorithm with its percent change against worst case and FCFS."""
    for rep in reports:
        if not rep.verified:
            raise ValueError(f"plan for {rep.algorithm!r} was not verified")
    totals = {rep.algorithm: rep for rep in reports}
    worst = totals["worst"].total_emissions_g if "worst" in totals else None
    base = totals["fcfs"].total_emissions_g if "fcfs" in totals else None
    return [
        {
            "algorithm": rep.algorithm,
            "total_emissions_g": rep.total_emissions_g,
            "total_energy_kwh": rep.total_energy_kwh,
            "pct_vs_worst": _pct(rep.total_emissions_g, worst),
            "pct_vs_fcfs": _pct(rep.total_emissions_g, base),
        }
        for rep in reports
    ]
