import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cournot.catalog import example, random_instance
from cournot.cost import CostFunction
from cournot.demand import AffineDemand, PiecewiseLinearDemand
from cournot.efficiency import linearize_costs
from cournot.errors import DegenerateInstanceError, NoMaximumError, NonConvexDemandError
from cournot.model import MarketInstance, welfare
from cournot.solver import (aggregate_cost, best_response, best_response_dynamics,
                            candidate_residual, cournot_candidates, optimality_residual,
                            residual_tol, solve_cournot_candidate, solve_cournot_equilibrium,
                            solve_monopoly, solve_social_optimum, verify_equilibrium)

FAMILIES = ["affine", "log", "power", "shifted_power"]


def monopolist():
    return MarketInstance(AffineDemand(1, 1), (CostFunction.linear(0.0),))


class TestSocialOptimum:
    def test_single_free_supplier(self):
        inst = monopolist()
        opt = solve_social_optimum(inst)
        assert opt.total == pytest.approx(1.0, abs=1e-11)
        assert welfare(inst, opt.x) == pytest.approx(0.5)

    @pytest.mark.parametrize("N", [2, 5, 10])
    def test_example_eight(self, N):
        inst = example("ex8", N=N).instance
        opt = solve_social_optimum(inst)
        assert opt.total == pytest.approx(1.0, abs=1e-11)
        assert welfare(inst, opt.x) == pytest.approx(0.5, abs=1e-12)

    def test_example_one(self):
        opt = solve_social_optimum(example("ex1").instance)
        np.testing.assert_allclose(opt.x, [0.5, 0.5], atol=1e-12)

    def test_minimal_optimum_on_flat_segment(self):
        opt = solve_social_optimum(example("ex3").instance)
        np.testing.assert_allclose(opt.x, [0.5, 0.5], atol=1e-11)

    def test_degenerate_refused(self):
        inst = MarketInstance(AffineDemand(1, 1), (CostFunction.linear(1.5),), R=2)
        with pytest.raises(DegenerateInstanceError):
            solve_social_optimum(inst)

    def test_beats_random_allocations(self):
        inst = random_instance(11, "power", (3, 3))
        opt = solve_social_optimum(inst)
        w = welfare(inst, opt.x)
        rng = np.random.default_rng(0)
        trials = rng.uniform(0, 1, (1000, inst.n)) * rng.uniform(0, inst.R, (1000, 1))
        assert max(welfare(inst, x) for x in trials) <= w + 1e-12

    @pytest.mark.parametrize("family", FAMILIES)
    def test_same_price_under_other_brackets(self, family):
        inst = random_instance(5, family)
        base = inst.demand.price(solve_social_optimum(inst).total)
        for k in (1.37, 3.0, 8.0):
            other = MarketInstance(inst.demand, inst.costs, inst.R * k)
            assert inst.demand.price(solve_social_optimum(other).total) == pytest.approx(base, abs=1e-8)


class TestCandidates:
    def test_example_eight(self):
        cand = solve_cournot_candidate(example("ex8", N=10).instance)
        np.testing.assert_allclose(cand.x, [1 / 3] + [1 / 27] * 9, atol=1e-10)
        assert cand.total == pytest.approx(2 / 3, abs=1e-10)

    def test_example_two(self):
        cand = solve_cournot_candidate(example("ex2").instance)
        np.testing.assert_allclose(cand.x, [1.0], atol=1e-10)

    def test_example_two_linearized(self):
        e = example("ex2")
        lin = linearize_costs(e.instance, [1.0])
        totals = [c.total for c in cournot_candidates(lin)]
        assert any(abs(t - 7 / 3) < 1e-9 for t in totals)
        assert any(abs(t - 1.0) < 1e-9 for t in totals)
        # the kink at 4/3 is a fixed point of the map but not a candidate
        assert all(abs(t - 4 / 3) > 1e-6 for t in totals)

    def test_all_candidates_are_differentiable_points(self):
        lin = linearize_costs(example("ex2").instance, [1.0])
        for c in cournot_candidates(lin):
            assert lin.demand.dminus(c.total) == lin.demand.dplus(c.total)

    def test_needs_convex_demand(self):
        with pytest.raises(NonConvexDemandError):
            cournot_candidates(example("ex4", M=4).instance)

    def test_candidates_sorted(self):
        lin = linearize_costs(example("ex2").instance, [1.0])
        totals = [c.total for c in cournot_candidates(lin)]
        assert totals == sorted(totals)


class TestVerify:
    def test_example_two_equilibrium(self):
        assert verify_equilibrium(example("ex2").instance, [1.0]).verified

    def test_example_two_linearized_fails(self):
        lin = linearize_costs(example("ex2").instance, [1.0])
        ok, deficit = verify_equilibrium(lin, [1.0])
        assert not ok and deficit > 0

    def test_example_two_best_response(self):
        lin = linearize_costs(example("ex2").instance, [1.0])
        z, _ = best_response(lin, [1.0], 0)
        assert z == pytest.approx(7 / 3, abs=1e-6)

    def test_example_three_upper_equilibrium(self):
        assert verify_equilibrium(example("ex3").instance, [1.0, 1.0]).verified

    def test_equilibrium_solver_skips_failed_candidates(self):
        lin = linearize_costs(example("ex2").instance, [1.0])
        eq = solve_cournot_equilibrium(lin)
        assert eq.total == pytest.approx(7 / 3, abs=1e-9)
        assert eq.role == "cournot_equilibrium"


class TestAggregateCost:
    def test_cheaper_supplier_takes_all(self):
        inst = MarketInstance(AffineDemand(1, 5), (CostFunction.linear(1), CostFunction.linear(2)))
        cost, split = aggregate_cost(inst, 3.0)
        assert cost == pytest.approx(3.0)
        np.testing.assert_allclose(split, [3.0, 0.0])

    def test_symmetric_quadratics(self):
        inst = MarketInstance(AffineDemand(1, 5), (CostFunction.quadratic(1), CostFunction.quadratic(1)))
        cost, split = aggregate_cost(inst, 2.0)
        assert cost == pytest.approx(2.0)
        np.testing.assert_allclose(split, [1.0, 1.0])

    def test_zero(self):
        cost, split = aggregate_cost(example("ex3").instance, 0.0)
        assert cost == 0.0 and not split.any()

    def test_ties_split_evenly_by_capacity(self):
        _, split = aggregate_cost(example("ex3").instance, 1.0)
        np.testing.assert_allclose(split, [0.5, 0.5])

    def test_matches_brute_force(self):
        inst = MarketInstance(AffineDemand(1, 5), (CostFunction.quadratic(1.0), CostFunction.linear(0.5),
                                                   CostFunction.power(0.4, 3.0)))
        X = 1.7
        a, b = np.meshgrid(np.linspace(0, X, 801), np.linspace(0, X, 801))
        rest = X - a - b
        ok = rest >= 0
        total = (inst.costs[0].cost(a) + inst.costs[2].cost(b)
                 + inst.costs[1].cost(np.where(ok, rest, 0.0)))
        best = total[ok].min()
        cost, split = aggregate_cost(inst, X)
        assert split.sum() == pytest.approx(X)
        assert cost <= best + 1e-12


class TestMonopoly:
    def test_single_supplier(self):
        mono = solve_monopoly(monopolist())
        assert mono.total == pytest.approx(0.5, abs=1e-10)

    @pytest.mark.parametrize("N", [3, 10])
    def test_example_eight(self, N):
        mono = solve_monopoly(example("ex8", N=N).instance)
        assert mono.x[0] == pytest.approx(0.5, abs=1e-10)
        assert np.all(mono.x[1:] == 0)

    def test_flat_demand_has_no_maximum(self):
        inst = MarketInstance(PiecewiseLinearDemand([(0, 1), (1, 1)]), (CostFunction.linear(0.5),), R=4)
        with pytest.raises(NoMaximumError):
            solve_monopoly(inst)


class TestDynamics:
    def test_example_three_from_zero(self):
        dyn = best_response_dynamics(example("ex3").instance, [0.0, 0.0])
        assert dyn.converged and dyn.verified

    def test_fixed_point_needs_one_sweep(self):
        e = example("ex8", N=10)
        x = e.allocation("equilibrium")
        dyn = best_response_dynamics(e.instance, x)
        assert dyn.converged and len(dyn.trajectory) == 2
        assert np.array_equal(dyn.x, x)

    def test_agrees_with_candidate(self):
        inst = example("ex8", N=3).instance
        dyn = best_response_dynamics(inst, np.zeros(3))
        cand = solve_cournot_candidate(inst)
        assert dyn.converged
        np.testing.assert_allclose(dyn.x, cand.x, atol=1e-6)


def test_tolerance_from_environment(monkeypatch):
    monkeypatch.setenv("COURNOT_TOL", "1e-5")
    assert residual_tol() == 1e-5
    monkeypatch.delenv("COURNOT_TOL")
    assert residual_tol() == 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from(FAMILIES))
def test_optimum_conditions(seed, family):
    inst = random_instance(seed, family)
    opt = solve_social_optimum(inst)
    assert opt.verified
    assert optimality_residual(inst, opt.x) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from(FAMILIES))
def test_equilibria_are_candidates(seed, family):
    inst = random_instance(seed, family)
    for cand in cournot_candidates(inst):
        assert inst.demand.dminus(cand.total) == pytest.approx(inst.demand.dplus(cand.total), abs=1e-12)
        if verify_equilibrium(inst, cand.x).verified:
            assert candidate_residual(inst, cand.x) <= 1e-6
