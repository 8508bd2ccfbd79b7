"""Seeded benchmark scenarios: request generation, runs and aggregation."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from linsched import lints
from linsched.heuristics import ALGORITHMS as HEURISTICS
from linsched.heuristics import HeuristicConfig
from linsched.model import Models, PowerModel, ThroughputModel
from linsched.plan import SchedulePlan, TransferRequest, UnschedulableError, request_traces
from linsched.sim import EmissionsReport, compare, evaluate, verify
from linsched.trace import CarbonTrace, PathSpec, SlotGrid, add_noise, load_traces, synth_trace

log = logging.getLogger(__name__)

ALGORITHM_NAMES = ("worst", "edf", "fcfs", "dt", "st", "lints")
RUN_FIELDS = (
    "algorithm",
    "limit_gbps",
    "noise",
    "seed",
    "total_emissions_g",
    "total_energy_kwh",
    "runtime_ms",
    "feasible",
)
AGG_FIELDS = (
    "algorithm",
    "limit_gbps",
    "noise",
    "runs",
    "feasible_runs",
    "mean_emissions_g",
    "median_emissions_g",
    "q1_emissions_g",
    "q3_emissions_g",
    "mean_energy_kwh",
    "pct_vs_worst",
    "pct_vs_fcfs",
)

# Seven high-variability zones with staggered diurnal phases.
DEFAULT_SYNTHETIC_ZONES = [
    {"zone": "SYN-NM", "mean": 520.0, "amplitude": 380.0},
    {"zone": "SYN-CO", "mean": 560.0, "amplitude": 300.0},
    {"zone": "SYN-UT", "mean": 600.0, "amplitude": 260.0},
    {"zone": "SYN-WY", "mean": 700.0, "amplitude": 250.0},
    {"zone": "SYN-SD", "mean": 300.0, "amplitude": 260.0},
    {"zone": "SYN-SC", "mean": 350.0, "amplitude": 200.0},
    {"zone": "SYN-MT", "mean": 400.0, "amplitude": 330.0},
]


class ScenarioError(ValueError):
    pass


def schedule(
    algorithm: str,
    requests: Sequence[TransferRequest],
    path_traces: Mapping[str, np.ndarray],
    grid: SlotGrid,
    models: Models,
    config: HeuristicConfig = HeuristicConfig(),
) -> SchedulePlan:
    """Dispatch to LinTS or one of the heuristics by name."""
    if algorithm == "lints":
        return lints.schedule(requests, path_traces, grid, models.limit, models)
    if algorithm not in HEURISTICS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHM_NAMES)}")
    return HEURISTICS[algorithm](requests, path_traces, grid, models.limit, config, models)


@dataclass
class Scenario:
    count: int = 200
    size_bytes: tuple[float, float] = (10e9, 50e9)
    deadline_slots: tuple[int, int] | None = None
    deadline_hours: tuple[float, float] = (48, 71)
    path_nodes: tuple[int, int] = (3, 8)
    trace_file: str | None = None
    zones: list[str] | None = None
    synthetic_zones: list[dict] = field(default_factory=lambda: [dict(z) for z in DEFAULT_SYNTHETIC_ZONES])
    trace_hours: int = 72
    slot_minutes: float = 15.0
    horizon_slots: int | None = None
    limits: list[float] = field(default_factory=lambda: [0.25, 0.5, 0.75])
    noise: list[float] = field(default_factory=lambda: [0.05, 0.15])
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHM_NAMES))
    seeds: list[int] = field(default_factory=lambda: [0])
    first_hop_gbps: float = 1.0
    theta_cap: float = 32
    alpha: float = 50.0
    random_plan_count: int = 100
    s_rho: float = 1 / 24
    p_max: float = 100.0
    p_min: float = 88.0
    s_p: float = 1 / 50
    record_runtime: bool = False

    def __post_init__(self):
        self.size_bytes = tuple(self.size_bytes)
        self.deadline_hours = tuple(self.deadline_hours)
        self.path_nodes = tuple(self.path_nodes)
        if self.deadline_slots is not None:
            self.deadline_slots = tuple(int(d) for d in self.deadline_slots)
        self.validate()

    @property
    def grid(self) -> SlotGrid:
        horizon = self.horizon_slots
        if horizon is None:
            horizon = int(self.trace_hours * 3600 // (self.slot_minutes * 60))
        return SlotGrid.from_minutes(self.slot_minutes, horizon)

    @property
    def deadline_range(self) -> tuple[int, int]:
        if self.deadline_slots is not None:
            return self.deadline_slots
        dt = self.slot_minutes * 60
        return tuple(math.floor(h * 3600 / dt) for h in self.deadline_hours)

    def validate(self) -> None:
        if self.count < 0:
            raise ScenarioError("request count must be non-negative")
        lo, hi = self.size_bytes
        if not 0 < lo <= hi or not math.isfinite(hi):
            raise ScenarioError("size range must satisfy 0 < min <= max < inf")
        dlo, dhi = self.deadline_range
        if not 1 <= dlo <= dhi <= self.grid.horizon_slots:
            raise ScenarioError(f"deadline range {dlo}..{dhi} slots outside the {self.grid.horizon_slots}-slot grid")
        nlo, nhi = self.path_nodes
        if not 1 <= nlo <= nhi:
            raise ScenarioError("path node range must satisfy 1 <= min <= max")
        if not self.limits or any(not 0 < L <= self.first_hop_gbps for L in self.limits):
            raise ScenarioError("limits must lie in (0, first_hop_gbps]")
        if not self.noise or any(not 0 <= e < 1 for e in self.noise):
            raise ScenarioError("noise epsilons must lie in [0, 1)")
        if not self.algorithms:
            raise ScenarioError("algorithm list is empty")
        unknown = [a for a in self.algorithms if a not in ALGORITHM_NAMES]
        if unknown:
            raise ScenarioError(f"unknown algorithms {unknown}")
        if not self.seeds:
            raise ScenarioError("seed list is empty")
        if self.trace_file is None and not self.synthetic_zones:
            raise ScenarioError("scenario needs a trace file or synthetic zones")
        self.heuristic_config()
        self.models(self.limits[0])

    def heuristic_config(self, seed: int = 0) -> HeuristicConfig:
        return HeuristicConfig(self.theta_cap, self.alpha, self.random_plan_count, seed)

    def models(self, limit_gbps: float) -> Models:
        return Models(ThroughputModel(limit_gbps, self.s_rho), PowerModel(self.p_max, self.p_min, self.s_p))

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "Scenario":
        doc = dict(doc)
        kwargs: dict[str, Any] = {}
        reqs = doc.pop("requests", {})
        for key in ("count", "size_bytes", "deadline_slots", "deadline_hours", "path_nodes"):
            if key in reqs:
                kwargs[key] = reqs[key]
        traces = doc.pop("traces", {})
        if "file" in traces:
            kwargs["trace_file"] = traces["file"]
            kwargs["zones"] = traces.get("zones")
        if "synthetic" in traces:
            kwargs["synthetic_zones"] = traces["synthetic"].get("zones", DEFAULT_SYNTHETIC_ZONES)
            kwargs["trace_hours"] = traces["synthetic"].get("hours", 72)
        grid = doc.pop("grid", {})
        for key in ("slot_minutes", "horizon_slots"):
            if key in grid:
                kwargs[key] = grid[key]
        kwargs.update(doc.pop("heuristics", {}))
        kwargs.update(doc.pop("model", {}))
        if "repetitions" in doc:
            reps = int(doc.pop("repetitions"))
            base = int(doc.pop("base_seed", 0))
            kwargs["seeds"] = list(range(base, base + reps))
        doc.pop("name", None)
        kwargs.update(doc)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ScenarioError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
        scenario = cls.from_dict(doc)
        if scenario.trace_file is not None and not Path(scenario.trace_file).is_absolute():
            scenario.trace_file = str(Path(path).parent / scenario.trace_file)
        return scenario


def scenario_traces(scenario: Scenario, seed: int) -> dict[str, CarbonTrace]:
    """Zone traces for one repetition; synthetic phases and jitter follow the seed."""
    if scenario.trace_file is not None:
        return load_traces(scenario.trace_file, scenario.zones)
    rng = np.random.default_rng([seed, 2])
    traces = {}
    for k, z in enumerate(scenario.synthetic_zones):
        period = z.get("period_hours", 24.0)
        phase = z["phase_hours"] if "phase_hours" in z else float(rng.uniform(0, period))
        traces[z["zone"]] = synth_trace(
            z["mean"], z["amplitude"], period, scenario.trace_hours, seed=seed * 1000 + k, zone=z["zone"],
            phase_hours=phase,
        )
    return traces


def gen_requests(scenario: Scenario, seed: int, zones: Sequence[str] | None = None) -> list[TransferRequest]:
    """Requests all arriving at t = 0 with uniform sizes, deadlines and path lengths."""
    zones = list(zones) if zones is not None else [z["zone"] for z in scenario.synthetic_zones]
    if scenario.count and not zones:
        raise ScenarioError("no zones to build request paths from")
    rng = np.random.default_rng([seed, 1])
    lo, hi = scenario.size_bytes
    dlo, dhi = scenario.deadline_range
    nlo, nhi = scenario.path_nodes
    width = len(str(max(scenario.count - 1, 0)))
    out = []
    for i in range(scenario.count):
        size = int(round(rng.uniform(lo, hi)))
        deadline = int(rng.integers(dlo, dhi + 1))
        nodes = int(rng.integers(nlo, nhi + 1))
        path = [zones[k] for k in rng.integers(0, len(zones), size=nodes)]
        out.append(TransferRequest(f"req-{i:0{width}d}", size, deadline, PathSpec.equal(path)))
    return out


def noisy_traces(
    requests: Sequence[TransferRequest], clean: Mapping[str, np.ndarray], epsilon: float, seed: int
) -> dict[str, np.ndarray]:
    """One noise draw per distinct path, shared by every request on that path."""
    by_path: dict[str, np.ndarray] = {}
    out = {}
    for r in requests:
        key = r.path.key()
        if key not in by_path:
            ss = np.random.SeedSequence([seed, int(round(epsilon * 1e6)), zlib.crc32(key.encode())])
            by_path[key] = add_noise(clean[r.id], epsilon, int(ss.generate_state(1)[0]))
        out[r.id] = by_path[key]
    return out


@dataclass
class RunRecord:
    algorithm: str
    limit_gbps: float
    noise: float
    seed: int
    total_emissions_g: float | None
    total_energy_kwh: float | None
    runtime_ms: float | None
    feasible: bool
    error: str | None = None
    linear_cost: float | None = None

    def csv_row(self) -> list[str]:
        return [
            self.algorithm,
            _num(self.limit_gbps),
            _num(self.noise),
            str(self.seed),
            _num(self.total_emissions_g),
            _num(self.total_energy_kwh),
            _num(self.runtime_ms),
            "true" if self.feasible else "false",
        ]


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def run_seed(scenario: Scenario, seed: int) -> list[RunRecord]:
    traces = scenario_traces(scenario, seed)
    requests = gen_requests(scenario, seed, list(traces))
    if not requests:
        return []
    grid = scenario.grid
    clean = request_traces(requests, traces, grid)
    noisy = {eps: noisy_traces(requests, clean, eps, seed) for eps in scenario.noise}
    records = []
    for limit in scenario.limits:
        models = scenario.models(limit)
        for algo in scenario.algorithms:
            t0 = time.perf_counter()
            error = None
            try:
                plan = schedule(algo, requests, clean, grid, models, scenario.heuristic_config(seed))
                verdict = verify(plan, requests)
                if not verdict.ok:
                    error = "; ".join(verdict.violations[:5])
            except UnschedulableError as exc:
                plan, error = None, f"{exc} ({', '.join(exc.request_ids[:10])})"
            runtime = (time.perf_counter() - t0) * 1e3 if scenario.record_runtime else None
            if error:
                log.warning("seed %s limit %s %s infeasible: %s", seed, limit, algo, error)
            for eps in scenario.noise:
                if error is None:
                    rep = evaluate(plan, noisy[eps], models, requests, eps, seed)
                    records.append(
                        RunRecord(algo, limit, eps, seed, rep.total_emissions_g, rep.total_energy_kwh, runtime,
                                  True, None, plan.linear_cost(clean))
                    )
                else:
                    records.append(RunRecord(algo, limit, eps, seed, None, None, runtime, False, error))
    return records


@dataclass
class BenchmarkResult:
    runs: list[RunRecord]
    aggregates: list[dict]

    @property
    def all_feasible(self) -> bool:
        return all(r.feasible for r in self.runs)

    def runs_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RUN_FIELDS)
        for r in self.runs:
            writer.writerow(r.csv_row())
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(AGG_FIELDS)
        for row in self.aggregates:
            writer.writerow([_num(row[k]) if isinstance(row[k], float) or row[k] is None else row[k] for k in AGG_FIELDS])
        return buf.getvalue()

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"runs": out / "runs.csv", "aggregate": out / "aggregate.csv", "json": out / "results.json"}
        paths["runs"].write_text(self.runs_csv(), encoding="utf-8")
        paths["aggregate"].write_text(self.aggregate_csv(), encoding="utf-8")
        doc = {
            "runs": [r.__dict__ for r in self.runs],
            "aggregates": self.aggregates,
            "all_feasible": self.all_feasible,
        }
        paths["json"].write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return paths


def aggregate(runs: Sequence[RunRecord]) -> list[dict]:
    """Distribution of total emissions per (algorithm, limit, noise) cell."""
    cells: dict[tuple, list[RunRecord]] = {}
    for r in runs:
        cells.setdefault((r.algorithm, r.limit_gbps, r.noise), []).append(r)
    rows = []
    for (algo, limit, eps), recs in cells.items():
        ok = [r.total_emissions_g for r in recs if r.feasible]
        energy = [r.total_energy_kwh for r in recs if r.feasible]
        row = {
            "algorithm": algo,
            "limit_gbps": limit,
            "noise": eps,
            "runs": len(recs),
            "feasible_runs": len(ok),
            "mean_emissions_g": float(np.mean(ok)) if ok else None,
            "median_emissions_g": float(np.median(ok)) if ok else None,
            "q1_emissions_g": float(np.percentile(ok, 25)) if ok else None,
            "q3_emissions_g": float(np.percentile(ok, 75)) if ok else None,
            "mean_energy_kwh": float(np.mean(energy)) if energy else None,
        }
        rows.append(row)

    by_cell = {(r["algorithm"], r["limit_gbps"], r["noise"]): r for r in rows}
    for row in rows:
        for ref, key in (("worst", "pct_vs_worst"), ("fcfs", "pct_vs_fcfs")):
            other = by_cell.get((ref, row["limit_gbps"], row["noise"]))
            value, base = row["mean_emissions_g"], other and other["mean_emissions_g"]
            row[key] = 100.0 * (value - base) / base if value is not None and base else None
    return rows


def run_benchmark(scenario: Scenario, out_dir: str | Path | None = None, jobs: int = 1) -> BenchmarkResult:
    """Schedule, verify and evaluate every (seed, limit, algorithm, noise) cell.

    Seeds may run in worker processes; output order is fixed by the scenario,
    never by completion order.
    """
    if jobs > 1 and len(scenario.seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_seed = list(pool.map(run_seed, [scenario] * len(scenario.seeds), scenario.seeds))
    else:
        per_seed = [run_seed(scenario, s) for s in scenario.seeds]
    runs = [r for recs in per_seed for r in recs]
    result = BenchmarkResult(runs, aggregate(runs))
    if out_dir is not None:
        result.write(out_dir)
    return result


def compare_plans(
    plans: Sequence[SchedulePlan],
    requests: Sequence[TransferRequest],
    path_traces: Mapping[str, np.ndarray],
    models: Models,
) -> list[dict]:
    """Evaluate already-built plans on one trace set and tabulate them."""
    reports: list[EmissionsReport] = [evaluate(p, path_traces, models, requests) for p in plans]
    return compare(reports)
