import numpy as np
import pytest

from conftest import make_request, slot_bits
from linsched.harness import noisy_traces
from linsched.model import Models, power_of_threads
from linsched.plan import SchedulePlan
from linsched.sim import compare, evaluate, verify
from linsched.trace import SlotGrid

L = 0.5
MODELS = Models.default(L)


def plan_with(grid, **rows):
    plan = SchedulePlan("test", L, grid)
    for rid, (rho, theta) in rows.items():
        plan.throughput[rid] = np.asarray(rho, float)
        plan.threads[rid] = np.asarray(theta, float)
    return plan


def test_verify_accepts_exact_plan(grid4):
    req = make_request("a", slot_bits(L, grid4, 2), 4)
    plan = plan_with(grid4, a=([L, L, 0, 0], [1, 1, 0, 0]))
    assert verify(plan, [req]).ok


def test_verify_flags_missing_bytes(grid4):
    req = make_request("a", slot_bits(L, grid4, 2), 4)
    plan = plan_with(grid4, a=([L / 2, L / 2, 0, 0], [1, 1, 0, 0]))
    verdict = verify(plan, [req])
    assert not verdict.ok
    assert verdict.failed_requests == {"a"}
    assert any(v.startswith("bytes") for v in verdict.violations)


def test_verify_flags_bandwidth(grid4):
    reqs = [make_request("a", slot_bits(L, grid4, 0.75), 4), make_request("b", slot_bits(L, grid4, 0.75), 4)]
    plan = plan_with(grid4, a=([0.75 * L, 0, 0, 0], [1, 0, 0, 0]), b=([0.75 * L, 0, 0, 0], [1, 0, 0, 0]))
    verdict = verify(plan, reqs)
    assert any(v.startswith("bandwidth: slot 0") for v in verdict.violations)


def test_verify_flags_deadline(grid4):
    req = make_request("a", slot_bits(L, grid4, 1), 2)
    plan = plan_with(grid4, a=([0, 0, L, 0], [0, 0, 1, 0]))
    verdict = verify(plan, [req])
    assert any(v.startswith("deadline") for v in verdict.violations)


def test_verify_id_mismatch(grid4):
    plan = plan_with(grid4, a=([L, 0, 0, 0], [1, 0, 0, 0]))
    with pytest.raises(ValueError, match="mismatch"):
        verify(plan, [make_request("b", 1.0, 4)])


def test_unit_oracle():
    # P = p_max at infinite threads, 900 s slot, 450 gCO2/kWh
    grid = SlotGrid(900.0, 1)
    plan = plan_with(grid, a=([L], [np.inf]))
    rep = evaluate(plan, {"a": np.array([450.0])}, MODELS)
    assert rep.total_energy_kwh == pytest.approx(0.025, rel=1e-12)
    assert rep.total_emissions_g == pytest.approx(11.25, rel=1e-12)


def test_empty_plan_is_free(grid4):
    plan = plan_with(grid4, a=(np.zeros(4), np.zeros(4)))
    rep = evaluate(plan, {"a": np.full(4, 300.0)}, MODELS)
    assert rep.total_energy_kwh == 0 and rep.total_emissions_g == 0
    assert rep.requests[0].slots_used == 0


def test_emissions_scale_with_intensity(grid4):
    plan = plan_with(grid4, a=([L, 0, L, 0], [3, 0, 5, 0]))
    c = np.array([120.0, 80, 310, 45])
    once = evaluate(plan, {"a": c}, MODELS).total_emissions_g
    twice = evaluate(plan, {"a": 2 * c}, MODELS).total_emissions_g
    assert twice == pytest.approx(2 * once, rel=1e-12)


def test_energy_bounds_per_active_slot():
    rng = np.random.default_rng(3)
    grid = SlotGrid(900.0, 20)
    theta = np.where(rng.random(20) < 0.5, rng.uniform(0.1, 64, 20), 0.0)
    plan = plan_with(grid, a=(np.where(theta > 0, 0.1, 0.0), theta))
    rep = evaluate(plan, {"a": rng.uniform(10, 500, 20)}, MODELS)
    n = int(np.count_nonzero(theta))
    pm = MODELS.power
    assert n * pm.p_min * 900 / 3.6e6 <= rep.total_energy_kwh <= n * pm.p_max * 900 / 3.6e6


def test_more_threads_cost_more(grid4):
    c = {"a": np.full(4, 200.0)}
    lo = evaluate(plan_with(grid4, a=([L, 0, 0, 0], [2, 0, 0, 0])), c, MODELS).total_emissions_g
    hi = evaluate(plan_with(grid4, a=([L, 0, 0, 0], [9, 0, 0, 0])), c, MODELS).total_emissions_g
    assert hi > lo


def test_energy_matches_power_curve(grid4):
    theta = np.array([1.5, 0, 7, 20])
    plan = plan_with(grid4, a=([0.1, 0, 0.2, 0.3], theta))
    rep = evaluate(plan, {"a": np.ones(4)}, MODELS)
    expected = float(np.sum(power_of_threads(MODELS.power, theta[theta > 0]))) * 900 / 3.6e6
    assert rep.total_energy_kwh == pytest.approx(expected, rel=1e-12)


def test_short_trace_rejected(grid4):
    plan = plan_with(grid4, a=([0, 0, 0, L], [0, 0, 0, 1]))
    with pytest.raises(ValueError, match="covers"):
        evaluate(plan, {"a": np.ones(2)}, MODELS)


@pytest.mark.parametrize("eps", [0.05, 0.15])
def test_noise_bound(eps):
    rng = np.random.default_rng(8)
    grid = SlotGrid(900.0, 96)
    reqs = [make_request(f"r{i}", 50.0, 96, zones=z) for i, z in enumerate([("A",), ("B",), ("A", "B"), ("A",)])]
    clean = {r.id: rng.uniform(50, 700, 96) for r in reqs}
    clean["r3"] = clean["r0"]
    theta = np.where(rng.random(96) < 0.4, 4.0, 0.0)
    plan = plan_with(grid, **{r.id: (np.where(theta > 0, 0.1, 0.0), theta) for r in reqs})
    base = evaluate(plan, clean, MODELS)
    for seed in range(5):
        noisy = noisy_traces(reqs, clean, eps, seed)
        assert np.array_equal(noisy["r0"], noisy["r3"])  # same path, same draw
        rep = evaluate(plan, noisy, MODELS)
        for a, b in zip(rep.requests, base.requests):
            assert (1 - eps) * b.emissions_g <= a.emissions_g <= (1 + eps) * b.emissions_g
        assert rep.total_energy_kwh == base.total_energy_kwh


def test_zero_noise_is_identity():
    reqs = [make_request("a", 1.0, 4)]
    clean = {"a": np.array([1.0, 2, 3, 4])}
    assert np.array_equal(noisy_traces(reqs, clean, 0.0, 99)["a"], clean["a"])


def _verified_report(grid, name, theta, c):
    req = make_request("a", slot_bits(L, grid, 1), grid.horizon_slots)
    plan = plan_with(grid, a=(np.where(np.asarray(theta) > 0, L, 0.0) / max(1, np.count_nonzero(theta)), theta))
    plan.algorithm = name
    return evaluate(plan, {"a": c}, MODELS, [req])


def test_compare_identical_plans_zero_delta(grid4):
    c = np.array([100.0, 200, 300, 400])
    reps = [_verified_report(grid4, n, [2, 0, 0, 0], c) for n in ("worst", "fcfs", "lints")]
    for row in compare(reps):
        assert row["pct_vs_worst"] == 0 and row["pct_vs_fcfs"] == 0


def test_compare_worst_row_is_max(grid4):
    c = np.array([100.0, 200, 300, 400])
    reps = [
        _verified_report(grid4, "worst", [0, 0, 0, 2], c),
        _verified_report(grid4, "fcfs", [2, 0, 0, 0], c),
        _verified_report(grid4, "lints", [2, 0, 0, 0], c),
    ]
    rows = {r["algorithm"]: r for r in compare(reps)}
    assert rows["worst"]["pct_vs_worst"] == 0
    assert rows["lints"]["pct_vs_worst"] == pytest.approx(-75.0)
    assert rows["worst"]["pct_vs_fcfs"] == pytest.approx(300.0)


def test_compare_rejects_unverified(grid4):
    plan = plan_with(grid4, a=([L, 0, 0, 0], [1, 0, 0, 0]))
    rep = evaluate(plan, {"a": np.ones(4)}, MODELS)
    with pytest.raises(ValueError, match="not verified"):
        compare([rep])
