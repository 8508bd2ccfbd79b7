"""LinTS: carbon-aware slot allocation as a linear program.

Variables are the per-slot throughputs of every request, laid out request by
request, with request ``i`` owning only slots ``0 .. D_i - 1`` so deadlines are
structural. Rows are one byte-sufficiency constraint per request followed by
one shared-bandwidth constraint per slot.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from linsched import lp
from linsched.model import Models, threads_of_throughput
from linsched.plan import (
    SchedulePlan,
    TransferRequest,
    UnschedulableError,
    check_requests,
)
from linsched.trace import SlotGrid, TraceError

SATURATION_GUARD = 1e-6


class SolverError(RuntimeError):
    pass


def _offsets(requests: Sequence[TransferRequest]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum([r.deadline_slots for r in requests])])


def build_problem(
    requests: Sequence[TransferRequest],
    path_traces: Mapping[str, np.ndarray],
    grid: SlotGrid,
    limit_gbps: float,
) -> lp.LpProblem:
    check_requests(requests, grid)
    if not limit_gbps > 0:
        raise ValueError("bandwidth limit must be positive")
    offsets = _offsets(requests)
    n_vars = int(offsets[-1])
    n_req = len(requests)
    horizon = max(r.deadline_slots for r in requests)

    cost = np.empty(n_vars)
    for i, r in enumerate(requests):
        trace = np.asarray(path_traces[r.id], dtype=float)
        if trace.size < r.deadline_slots:
            raise TraceError(f"request {r.id!r}: deadline exceeds trace coverage")
        cost[offsets[i] : offsets[i + 1]] = trace[: r.deadline_slots]

    # byte rows: -dt * sum_j rho_ij <= -8 J_i (Gbit)
    byte_rows = np.repeat(np.arange(n_req), [r.deadline_slots for r in requests])
    byte_vals = np.full(n_vars, -grid.slot_seconds)
    # slot rows: sum_i rho_ij <= L
    slot_of_var = np.concatenate([np.arange(r.deadline_slots) for r in requests])
    rows = np.concatenate([byte_rows, n_req + slot_of_var])
    cols = np.concatenate([np.arange(n_vars), np.arange(n_vars)])
    vals = np.concatenate([byte_vals, np.ones(n_vars)])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n_req + horizon, n_vars))

    b = np.concatenate([-np.array([r.gigabits for r in requests]), np.full(horizon, float(limit_gbps))])
    bounds = np.tile([0.0, float(limit_gbps)], (n_vars, 1))
    return lp.LpProblem(cost, A, b, bounds)


def binding_requests(requests: Sequence[TransferRequest], grid: SlotGrid, limit_gbps: float) -> list[str]:
    """Requests whose combined volume overflows the capacity before their deadlines.

    With every request available from slot 0, a plan exists iff for every
    deadline ``d`` the requests due by ``d`` fit into ``d`` full slots. Returns the
    set due by the first violating ``d`` (empty when the instance is feasible).
    """
    per_slot = limit_gbps * grid.slot_seconds
    by_deadline = sorted(requests, key=lambda r: r.deadline_slots)
    demand = 0.0
    for k, r in enumerate(by_deadline):
        demand += r.gigabits
        last_of_group = k + 1 == len(by_deadline) or by_deadline[k + 1].deadline_slots != r.deadline_slots
        if last_of_group and demand > per_slot * r.deadline_slots * (1 + 1e-12):
            return [q.id for q in by_deadline[: k + 1]]
    return []


def to_threads(models: Models, rho: np.ndarray) -> np.ndarray:
    """Threads per slot with the throughput clamped just below the saturation pole."""
    guarded = np.minimum(rho, models.limit * (1 - SATURATION_GUARD))
    return threads_of_throughput(models.throughput, guarded)


def schedule(
    requests: Sequence[TransferRequest],
    path_traces: Mapping[str, np.ndarray],
    grid: SlotGrid,
    limit_gbps: float,
    models: Models | None = None,
) -> SchedulePlan:
    models = models or Models.default(limit_gbps)
    if models.limit != limit_gbps:
        raise ValueError("throughput model limit differs from the scheduling limit")
    problem = build_problem(requests, path_traces, grid, limit_gbps)
    sol = lp.solve(problem)
    if sol.status == lp.INFEASIBLE:
        binding = binding_requests(requests, grid, limit_gbps) or [r.id for r in requests]
        raise UnschedulableError(
            f"requests unschedulable within deadlines at limit {limit_gbps} Gbps", binding
        )
    if not sol.optimal:
        raise SolverError(f"LP solve {sol.status}: {sol.message}")

    offsets = _offsets(requests)
    plan = SchedulePlan("lints", limit_gbps, grid)
    for i, r in enumerate(requests):
        rho = sol.x[offsets[i] : offsets[i + 1]].copy()
        plan.throughput[r.id] = rho
        plan.threads[r.id] = to_threads(models, rho)
    return plan
