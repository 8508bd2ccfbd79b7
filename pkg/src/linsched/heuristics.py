"""Baseline slot-allocation heuristics: FCFS, EDF, single/double threshold, worst case.

Every heuristic runs each assigned request at one fixed throughput ``rho_h`` (the
throughput of ``theta_cap`` threads, capped just below the limit) and gives it
the ``S`` whole slots it needs. A slot is free for a request when its remaining
shared capacity still fits ``rho_h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from linsched.model import Models, threads_of_throughput, throughput_of_threads
from linsched.plan import SchedulePlan, TransferRequest, UnschedulableError, check_requests
from linsched.trace import SlotGrid, TraceError

CAP_EPS = 1e-12


@dataclass(frozen=True)
class HeuristicConfig:
    theta_cap: float = 32
    alpha: float = 50.0
    random_plan_count: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.theta_cap < 1:
            raise ValueError("theta_cap must be at least 1")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.random_plan_count < 1:
            raise ValueError("random_plan_count must be at least 1")


def heuristic_rate(models: Models, config: HeuristicConfig) -> tuple[float, float]:
    """Return ``(rho_h, threads)`` used for every heuristic allocation."""
    L = models.limit
    at_cap = throughput_of_threads(models.throughput, config.theta_cap)
    ceiling = L * (1 - 1e-6)
    if at_cap <= ceiling:
        return at_cap, float(config.theta_cap)
    return ceiling, threads_of_throughput(models.throughput, ceiling)


def slots_needed(request: TransferRequest, rho: float, grid: SlotGrid) -> int:
    return max(1, math.ceil(request.gigabits / (rho * grid.slot_seconds) * (1 - 1e-12)))


def edf_order(requests: Sequence[TransferRequest]) -> list[TransferRequest]:
    """Ascending deadline, ties by arrival then list position then id."""
    indexed = sorted(enumerate(requests), key=lambda p: (p[1].deadline_slots, p[1].arrival, p[0], p[1].id))
    return [r for _, r in indexed]


def arrival_order(requests: Sequence[TransferRequest]) -> list[TransferRequest]:
    return [r for _, r in sorted(enumerate(requests), key=lambda p: (p[1].arrival, p[0]))]


# Slot pickers: given the request's slot intensities, a boolean mask of slots
# with room, and the slot count S, return chosen slot indices or None.
Picker = Callable[[np.ndarray, np.ndarray, int], "np.ndarray | None"]


def pick_earliest(costs: np.ndarray, free: np.ndarray, need: int) -> np.ndarray | None:
    idx = np.flatnonzero(free)
    return idx[:need] if idx.size >= need else None


def pick_highest(costs: np.ndarray, free: np.ndarray, need: int) -> np.ndarray | None:
    idx = np.flatnonzero(free)
    if idx.size < need:
        return None
    order = np.lexsort((idx, -costs[idx]))
    return np.sort(idx[order[:need]])


def _lowest_feasible(candidates: np.ndarray, feasible: Callable[[float], bool]) -> float | None:
    """Binary search for the smallest candidate value accepted by a monotone test."""
    lo, hi = 0, candidates.size - 1
    if hi < 0 or not feasible(candidates[hi]):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def pick_single_threshold(costs: np.ndarray, free: np.ndarray, need: int) -> np.ndarray | None:
    if need == 0:
        return np.empty(0, dtype=int)
    thresholds = np.unique(costs)
    tau = _lowest_feasible(thresholds, lambda t: np.count_nonzero(free & (costs <= t)) >= need)
    if tau is None:
        return None
    return np.flatnonzero(free & (costs <= tau))[:need]


def _dt_scan(costs: np.ndarray, free: np.ndarray, need: int, high: float, alpha: float) -> list[int]:
    low = high - alpha
    chosen: list[int] = []
    running = False
    for j in range(costs.size):
        if len(chosen) >= need:
            break
        take = bool(free[j]) and costs[j] < (high if running else low)
        if take:
            chosen.append(j)
        running = take
    return chosen


def double_threshold_candidates(costs: np.ndarray, alpha: float) -> np.ndarray:
    """Intensity values, the same shifted by ``alpha``, and +inf (admits everything)."""
    return np.unique(np.concatenate([costs, costs + alpha, [np.inf]]))


def pick_double_threshold(alpha: float) -> Picker:
    def pick(costs: np.ndarray, free: np.ndarray, need: int) -> np.ndarray | None:
        if need == 0:
            return np.empty(0, dtype=int)
        candidates = double_threshold_candidates(costs, alpha)
        high = _lowest_feasible(candidates, lambda t: len(_dt_scan(costs, free, need, t, alpha)) >= need)
        if high is None:
            return None
        return np.array(_dt_scan(costs, free, need, high, alpha), dtype=int)

    return pick


def pick_random(rng: np.random.Generator) -> Picker:
    def pick(costs: np.ndarray, free: np.ndarray, need: int) -> np.ndarray | None:
        idx = np.flatnonzero(free)
        if idx.size < need:
            return None
        return np.sort(rng.choice(idx, size=need, replace=False))

    return pick


def allocate(
    name: str,
    requests: Sequence[TransferRequest],
    order: Callable[[Sequence[TransferRequest]], list[TransferRequest]],
    path_traces: Mapping[str, np.ndarray] | None,
    grid: SlotGrid,
    models: Models,
    config: HeuristicConfig,
    picker: Picker,
    strict: bool = True,
) -> SchedulePlan:
    """Greedy per-request allocation in ``order(requests)`` priority.

    With ``strict`` an :class:`UnschedulableError` listing every request that
    could not be placed is raised; otherwise those requests are simply absent.
    """
    check_requests(requests, grid)
    rho_h, threads_h = heuristic_rate(models, config)
    remaining = np.full(grid.horizon_slots, models.limit)
    plan = SchedulePlan(name, models.limit, grid)
    failed = []
    for r in order(requests):
        D = r.deadline_slots
        if path_traces is None:
            costs = np.zeros(D)
        else:
            costs = np.asarray(path_traces[r.id], dtype=float)
            if costs.size < D:
                raise TraceError(f"request {r.id!r}: deadline exceeds trace coverage")
            costs = costs[:D]
        free = remaining[:D] >= rho_h - CAP_EPS
        slots = picker(costs, free, slots_needed(r, rho_h, grid))
        if slots is None:
            failed.append(r.id)
            continue
        remaining[slots] -= rho_h
        rho = np.zeros(D)
        rho[slots] = rho_h
        theta = np.zeros(D)
        theta[slots] = threads_h
        plan.throughput[r.id] = rho
        plan.threads[r.id] = theta
    if failed and strict:
        raise UnschedulableError(f"{name}: {len(failed)} request(s) cannot fit before their deadlines", failed, plan)
    # report in the caller's request order, not priority order
    plan.throughput = {r.id: plan.throughput[r.id] for r in requests if r.id in plan.throughput}
    plan.threads = {i: plan.threads[i] for i in plan.throughput}
    return plan


def _models(limit_gbps: float, models: Models | None) -> Models:
    models = models or Models.default(limit_gbps)
    if models.limit != limit_gbps:
        raise ValueError("throughput model limit differs from the scheduling limit")
    return models


def fcfs(requests, grid, limit_gbps, config=HeuristicConfig(), models=None) -> SchedulePlan:
    """Earliest free slots, requests served in arrival order."""
    return allocate("fcfs", requests, arrival_order, None, grid, _models(limit_gbps, models), config, pick_earliest)


def edf(requests, grid, limit_gbps, config=HeuristicConfig(), models=None) -> SchedulePlan:
    return allocate("edf", requests, edf_order, None, grid, _models(limit_gbps, models), config, pick_earliest)


def single_threshold(requests, path_traces, grid, limit_gbps, config=HeuristicConfig(), models=None) -> SchedulePlan:
    """Lowest intensity threshold admitting enough free slots, earliest admitted slots taken."""
    return allocate(
        "st", requests, edf_order, path_traces, grid, _models(limit_gbps, models), config, pick_single_threshold
    )


def double_threshold(requests, path_traces, grid, limit_gbps, config=HeuristicConfig(), models=None) -> SchedulePlan:
    """Hysteresis variant of ST.

    A paused request resumes only below ``high - alpha``; a running one keeps
    its slot while intensity stays below ``high``. ``high`` is the lowest
    candidate value that still yields enough slots.
    """
    return allocate(
        "dt",
        requests,
        edf_order,
        path_traces,
        grid,
        _models(limit_gbps, models),
        config,
        pick_double_threshold(config.alpha),
    )


def worst_case(requests, path_traces, grid, limit_gbps, config=HeuristicConfig(), models=None) -> SchedulePlan:
    """Highest-emission plan among top-intensity EDF and seeded random plans.

    Candidates are scored with the simulator on the given (planning) traces;
    a random plan replaces the top-intensity plan only if strictly worse.
    """
    from linsched.sim import evaluate

    models = _models(limit_gbps, models)
    best, best_score = None, -math.inf
    try:
        best = allocate("worst", requests, edf_order, path_traces, grid, models, config, pick_highest)
        best_score = evaluate(best, path_traces, models).total_emissions_g
    except UnschedulableError:
        pass

    rng = np.random.default_rng(config.seed)
    picker = pick_random(rng)
    for _ in range(config.random_plan_count):
        try:
            cand = allocate("worst", requests, edf_order, path_traces, grid, models, config, picker)
        except UnschedulableError:
            continue
        score = evaluate(cand, path_traces, models).total_emissions_g
        if score > best_score:
            best, best_score = cand, score
    if best is None:
        raise UnschedulableError("worst: no feasible candidate plan", [r.id for r in requests])
    return best


ALGORITHMS = {
    "fcfs": lambda reqs, traces, grid, L, config, models: fcfs(reqs, grid, L, config, models),
    "edf": lambda reqs, traces, grid, L, config, models: edf(reqs, grid, L, config, models),
    "st": single_threshold,
    "dt": double_threshold,
    "worst": worst_case,
}
