import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privsignal.aggregation import AggregateResult, Mode
from privsignal.control import (
    ControllerConfig, PhaseCase, ScenarioSet, SignalTimingPlan, build_p1, build_p2,
    extract_plan, plan_from_solution, point_scenario, sample_scenarios,
)
from privsignal.errors import InvalidConfig, NotOptimal
from privsignal.estimation import LAMBDA_MIN
from privsignal.lp import LpSolution, Status, solve
from privsignal.privacy import PrivacyBudget, Sensitivity
from tests.oracles.grid_p1 import grid_optimum
from tests.oracles.states import random_state

CFG = ControllerConfig()


def _agg(eta=None, p=None, t=None):
    z = np.zeros(8)
    return AggregateResult(z if eta is None else np.asarray(eta, float),
                           z if p is None else np.asarray(p, float),
                           z if t is None else np.asarray(t, float), Mode.SMPC_DP, 10)


def test_zero_load_gives_zero_queues():
    lp = build_p1(_agg(), np.full(8, LAMBDA_MIN), CFG, "15", -np.full(8, 30.0))
    sol = solve(lp)
    assert sol.optimal
    assert np.allclose(sol.x[17:], 0.0, atol=1e-9)
    plan = plan_from_solution(sol, "15")
    assert plan.violations(CFG, tol=1e-6) == []


def test_loaded_stream_matches_grid_search():
    eta = np.zeros(8)
    eta[:4] = [2, 5, 1, 0]
    lam = np.full(8, LAMBDA_MIN)
    lam[1] = 0.6          # near the 1 veh/s saturation flow of a through stream
    lam[0] = 0.05
    r_s0 = np.array([-20.0, -35.0, -50.0, -5.0, -20.0, -35.0, -50.0, -5.0])
    sol = solve(build_p1(_agg(eta), lam, CFG, "15", r_s0))
    plan = plan_from_solution(sol, "15")
    ref_obj, ref_green = grid_optimum((0, 1, 2, 3), eta, lam, r_s0, CFG)
    assert sol.objective <= ref_obj + 1e-6           # continuous optimum is never worse
    assert sol.objective >= ref_obj - 0.02 * abs(ref_obj)  # and the grid gets close
    assert plan.green[1] > CFG.g_min[1] + 1.0
    assert ref_green[1] > CFG.g_min[1]
    assert plan.violations(CFG) == []


@pytest.mark.parametrize("case", ["15", "37"])
def test_plan_identities_hold(case, rng):
    for _ in range(10):
        agg, gamma, lam, r_s0, _ = random_state(rng, CFG)
        sol = solve(build_p1(agg, lam, CFG, case, r_s0))
        plan = plan_from_solution(sol, case)
        assert plan.violations(CFG, tol=1e-6) == []
        for ring in plan.phase_case.rings:
            assert plan.green[list(ring)].sum() + CFG.interval[list(ring)].sum() == pytest.approx(
                plan.cycle, abs=1e-6)


def test_p2_single_point_scenario_equals_p1(rng):
    for _ in range(10):
        agg, gamma, lam, r_s0, case = random_state(rng, CFG)
        scen = point_scenario(agg, gamma, CFG.lambda_max)
        p1 = solve(build_p1(agg, scen.rates[0], CFG, case, r_s0))
        p2 = solve(build_p2(scen, agg.eta_hat, gamma, CFG, case, r_s0))
        assert abs(p1.objective - p2.objective) <= 1e-6
        assert plan_from_solution(p2, case).violations(CFG) == []


def test_p2_duplicate_scenarios_same_solution(rng):
    agg, gamma, lam, r_s0, case = random_state(rng, CFG)
    budget = PrivacyBudget.from_risk(0.05, 40)
    scen = sample_scenarios(agg, Sensitivity(8, 1, 60), budget, 20, gamma, rng, CFG.lambda_max)
    twice = ScenarioSet(np.vstack([scen.positions] * 2), np.vstack([scen.times] * 2),
                        np.vstack([scen.rates] * 2))
    a = solve(build_p2(scen, agg.eta_hat, gamma, CFG, case, r_s0))
    b = solve(build_p2(twice, agg.eta_hat, gamma, CFG, case, r_s0))
    assert a.objective == pytest.approx(b.objective, abs=1e-6)
    pa, pb = plan_from_solution(a, case), plan_from_solution(b, case)
    # the first-stage plan may differ only among equally good alternatives
    assert pa.violations(CFG) == [] and pb.violations(CFG) == []


def test_p2_solution_satisfies_every_scenario(rng):
    agg, gamma, lam, r_s0, case = random_state(rng, CFG)
    budget = PrivacyBudget.from_risk(0.05, 40)
    scen = sample_scenarios(agg, Sensitivity(8, 1, 60), budget, 50, gamma, rng, CFG.lambda_max)
    lp = build_p2(scen, agg.eta_hat, gamma, CFG, case, r_s0)
    sol = solve(lp)
    assert sol.optimal and np.all(sol.x[17:] >= -1e-9)
    assert lp.max_violation(sol.x) <= 1e-7


def test_scenarios_respect_support(rng):
    agg, gamma, *_ = random_state(rng, CFG)
    budget = PrivacyBudget.from_risk(0.05, 40)
    scen = sample_scenarios(agg, Sensitivity(8, 1, 60), budget, 400, gamma, rng, CFG.lambda_max)
    assert scen.size == 400
    assert np.all(scen.positions >= 0) and np.all(scen.times >= 0)
    assert np.all(scen.rates >= LAMBDA_MIN) and np.all(scen.rates <= CFG.lambda_max + 1e-12)


def test_scenarios_collapse_without_noise(rng):
    agg = _agg(np.ones(8), np.full(8, 3.0), np.full(8, 30.0))
    gamma = np.full(8, 1 / 8)
    budget = PrivacyBudget(0.05, 40, 1e12)
    scen = sample_scenarios(agg, Sensitivity(8, 1, 60), budget, 30, gamma, rng, CFG.lambda_max)
    assert np.allclose(scen.positions, 3.0) and np.allclose(scen.times, 30.0)
    assert np.allclose(scen.rates, point_scenario(agg, gamma, CFG.lambda_max).rates)


def test_scenario_mean_matches_perturbed_value(rng):
    agg = _agg(np.full(8, 10.0), np.full(8, 400.0), np.full(8, 3000.0))
    budget = PrivacyBudget.from_risk(0.05, 50)
    scen = sample_scenarios(agg, Sensitivity(8, 1, 60), budget, 100_000, np.full(8, 1 / 8), rng)
    assert scen.fallbacks == 0
    assert scen.positions[:, 0].mean() == pytest.approx(400.0, rel=0.01)


def _fake_solution(cycle, green_r1, green_r2, case="15"):
    cfg = CFG
    x = np.zeros(25)
    x[0] = cycle
    for ring, greens in zip(PhaseCase(case).rings, (green_r1, green_r2)):
        t = 0.0
        for k, g in zip(ring, greens):
            x[1 + k], x[9 + k] = t, t + g
            t += g + cfg.interval[k]
    return LpSolution(Status.OPTIMAL, x, 0.0)


def test_rounding_keeps_ring_sums():
    # C = 90.04 with hundredth-of-a-second greens
    sol = _fake_solution(90.04, [20.01, 30.01, 15.01, 13.01], [25.01, 25.01, 14.01, 14.01])
    assert plan_from_solution(sol, "15").violations(CFG, tol=1e-6) == []
    plan = extract_plan(sol, "15", CFG)
    assert plan.violations(CFG, tol=1e-9) == []
    for v in np.concatenate([plan.g_start, plan.g_end, [plan.cycle]]):
        assert abs(v * 10 - round(v * 10)) < 1e-9


def test_rounding_near_green_bounds():
    sol = _fake_solution(52.14, [10.04, 10.03, 10.04, 10.03], [10.02, 10.05, 10.02, 10.05], "37")
    plan = extract_plan(sol, "37", CFG)
    assert plan.violations(CFG, tol=1e-9) == []


def test_extract_rejects_non_optimal():
    with pytest.raises(NotOptimal):
        extract_plan(LpSolution(Status.INFEASIBLE), "15", CFG)


def test_invalid_config():
    with pytest.raises(InvalidConfig):
        ControllerConfig(g_min=70.0)
    with pytest.raises(InvalidConfig):
        ControllerConfig(headway=0.0)
    with pytest.raises(InvalidConfig):
        build_p1(_agg(), np.full(7, 0.1), CFG, "15", np.zeros(8))
    with pytest.raises(InvalidConfig):
        build_p1(_agg(), np.full(8, -0.1), CFG, "15", np.zeros(8))


def test_phase_case_rings():
    assert PhaseCase("15").rings == ((0, 1, 2, 3), (4, 5, 6, 7))
    assert PhaseCase("37").rings == ((2, 3, 0, 1), (6, 7, 4, 5))
    assert PhaseCase("15").next is PhaseCase.START_37


@settings(max_examples=25)
@given(seed=st.integers(0, 2**31), bump=st.floats(1.0, 200.0))
def test_penalty_monotone(seed, bump):
    agg, gamma, lam, r_s0, case = random_state(np.random.default_rng(seed), CFG)
    lo = solve(build_p1(agg, lam, CFG, case, r_s0, penalty=CFG.c_max))
    hi = solve(build_p1(agg, lam, CFG, case, r_s0, penalty=CFG.c_max + bump))
    assert hi.objective >= lo.objective - 1e-7


@settings(max_examples=25)
@given(seed=st.integers(0, 2**31))
def test_extracted_plans_valid(seed):
    agg, gamma, lam, r_s0, case = random_state(np.random.default_rng(seed), CFG)
    plan = extract_plan(solve(build_p1(agg, lam, CFG, case, r_s0)), case, CFG)
    assert isinstance(plan, SignalTimingPlan)
    assert plan.violations(CFG, tol=1e-9) == []
    assert np.all(plan.red_durations(CFG) > 0)
