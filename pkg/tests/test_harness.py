import csv
import io
import json

import numpy as np
import pytest

from linsched.harness import (
    AGG_FIELDS,
    RUN_FIELDS,
    Scenario,
    ScenarioError,
    aggregate,
    gen_requests,
    run_benchmark,
    scenario_traces,
)


def small(**kw):
    base = dict(count=20, limits=[0.5], noise=[0.05], seeds=[0], random_plan_count=10)
    base.update(kw)
    return Scenario(**base)


def test_paper_ranges():
    sc = Scenario()
    assert sc.grid.horizon_slots == 288
    assert sc.deadline_range == (192, 284)
    reqs = gen_requests(sc, seed=5)
    assert len(reqs) == 200
    for r in reqs:
        assert 10e9 <= r.size_bytes <= 50e9
        assert 192 <= r.deadline_slots <= 284
        assert 3 <= len(r.path.nodes) <= 8
        assert r.arrival == 0
        assert all(w == 1.0 for _, w in r.path.nodes)


def test_zero_count():
    assert gen_requests(small(count=0), seed=0) == []


def test_same_seed_same_requests():
    sc = small()
    assert gen_requests(sc, 3) == gen_requests(sc, 3)
    assert gen_requests(sc, 3) != gen_requests(sc, 4)


@pytest.mark.parametrize(
    "kw",
    [
        dict(size_bytes=(0, 1e9)),
        dict(size_bytes=(5e9, 1e9)),
        dict(deadline_hours=(48, 80)),
        dict(limits=[1.5]),
        dict(noise=[1.0]),
        dict(algorithms=[]),
        dict(algorithms=["magic"]),
        dict(seeds=[]),
        dict(count=-1),
    ],
)
def test_invalid_scenarios(kw):
    with pytest.raises(ScenarioError):
        small(**kw)


def test_from_dict_nested_keys():
    sc = Scenario.from_dict(
        {
            "name": "x",
            "requests": {"count": 5, "size_bytes": [1e9, 2e9], "deadline_hours": [10, 20]},
            "traces": {"synthetic": {"hours": 24, "zones": [{"zone": "Z", "mean": 300, "amplitude": 100}]}},
            "grid": {"slot_minutes": 30},
            "heuristics": {"alpha": 10},
            "limits": [0.25],
            "noise": [0.0],
            "algorithms": ["fcfs"],
            "repetitions": 3,
            "base_seed": 7,
        }
    )
    assert sc.seeds == [7, 8, 9]
    assert sc.grid.horizon_slots == 48
    assert sc.deadline_range == (20, 40)
    assert sc.alpha == 10
    with pytest.raises(ScenarioError):
        Scenario.from_dict({"bogus": 1})


def test_synthetic_traces_follow_seed():
    sc = small()
    a, b = scenario_traces(sc, 1), scenario_traces(sc, 1)
    assert all(np.array_equal(a[z].values, b[z].values) for z in a)
    c = scenario_traces(sc, 2)
    assert not all(np.array_equal(a[z].values, c[z].values) for z in a)


def test_one_algorithm_one_seed_one_row():
    res = run_benchmark(small(algorithms=["lints"]))
    assert len(res.runs) == 1
    rows = list(csv.reader(io.StringIO(res.runs_csv())))
    assert tuple(rows[0]) == RUN_FIELDS
    assert len(rows) == 2 and rows[1][-1] == "true"
    assert rows[1][RUN_FIELDS.index("runtime_ms")] == ""


def test_cell_count_and_files(tmp_path):
    sc = small(count=8, limits=[0.25, 0.5, 0.75], noise=[0.05, 0.15], seeds=[0, 1])
    res = run_benchmark(sc, tmp_path)
    assert len(res.runs) == 6 * 3 * 2 * 2
    assert len(res.aggregates) == 36
    agg = list(csv.DictReader(io.StringIO((tmp_path / "aggregate.csv").read_text())))
    assert len(agg) == 36 and tuple(agg[0]) == AGG_FIELDS
    doc = json.loads((tmp_path / "results.json").read_text())
    assert len(doc["runs"]) == len(res.runs)


def test_aggregates_recomputable_from_runs():
    res = run_benchmark(small(count=10, seeds=[0, 1, 2], algorithms=["fcfs", "lints", "worst"]))
    again = aggregate(res.runs)
    assert again == res.aggregates
    for row in res.aggregates:
        vals = [r.total_emissions_g for r in res.runs if r.algorithm == row["algorithm"]]
        assert row["mean_emissions_g"] == pytest.approx(np.mean(vals))
        assert row["q1_emissions_g"] <= row["median_emissions_g"] <= row["q3_emissions_g"]
    fcfs = next(r for r in res.aggregates if r["algorithm"] == "fcfs")
    assert fcfs["pct_vs_fcfs"] == 0.0


def test_rerun_byte_identical(tmp_path):
    sc = small(count=10, seeds=[0, 1], algorithms=["lints", "dt", "worst"])
    run_benchmark(sc, tmp_path / "a")
    run_benchmark(sc, tmp_path / "b", jobs=2)
    for name in ("runs.csv", "aggregate.csv", "results.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_all_feasible_and_worst_is_highest():
    sc = small(count=30, seeds=[0, 1, 2])
    res = run_benchmark(sc)
    assert res.all_feasible
    for seed in sc.seeds:
        cell = {r.algorithm: r.total_emissions_g for r in res.runs if r.seed == seed}
        assert cell["worst"] >= max(v for k, v in cell.items() if k != "worst")


def test_infeasible_runs_are_reported():
    # one hour of slack is not enough for 50 GB at 0.25 Gbps
    sc = small(count=3, size_bytes=(50e9, 50e9), deadline_hours=(1, 1), limits=[0.25], algorithms=["lints", "fcfs"])
    res = run_benchmark(sc)
    assert not res.all_feasible
    assert all(r.error for r in res.runs)
    assert "false" in res.runs_csv()
