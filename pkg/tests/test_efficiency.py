import json
import math

import numpy as np
import pytest

from cournot.catalog import example, random_instance
from cournot.cost import CostFunction
from cournot.demand import ShiftedPowerDemand
from cournot.efficiency import (Inapplicable, analyze, beta, bound_f, bound_g, bound_mono, bound_mu,
                                bound_st, bound_st_mono, compute_s_t, curvature, gamma,
                                linearize_costs, p0_transform, phi)
from cournot.errors import DomainError, EqualPricesError, NotAffineError, SociallyOptimalError
from cournot.model import MarketInstance
from cournot.solver import solve_cournot_candidate, solve_social_optimum


class TestGamma:
    def test_example_eight(self):
        e = example("ex8", N=10)
        assert gamma(e.instance, e.allocation("equilibrium")) == pytest.approx(56 / 81, abs=1e-12)

    def test_optimum(self):
        inst = example("ex8", N=4).instance
        assert gamma(inst, solve_social_optimum(inst).x) == 1.0

    def test_concave_example(self):
        e = example("ex4", M=10)
        assert gamma(e.instance, e.allocation("equilibrium")) == pytest.approx(0.36, abs=1e-12)


class TestBeta:
    def test_example_eight(self):
        e = example("ex8", N=10)
        assert beta(e.instance, e.allocation("equilibrium")) == pytest.approx(2 / 3)

    def test_needs_affine(self):
        e = example("ex3")
        with pytest.raises(NotAffineError):
            beta(e.instance, e.allocation("candidate"))

    def test_bound_values(self):
        assert bound_g(2 / 3) == pytest.approx(2 / 3, abs=1e-15)
        assert bound_g(1.0) == 1.0
        assert bound_g(0.5) == 0.75

    def test_bound_domain(self):
        with pytest.raises(DomainError):
            bound_g(0.3)


class TestCurvature:
    def test_example_eight(self):
        e = example("ex8", N=10)
        inst = e.instance
        c, d, cbar = curvature(inst, e.allocation("equilibrium"), solve_social_optimum(inst))
        assert (c, d, cbar) == pytest.approx((1.0, 1.0, 1.0), abs=1e-12)

    def test_affine_shifted_power(self):
        inst = MarketInstance(ShiftedPowerDemand(2.0, 1.0, 1.5),
                              (CostFunction.linear(0.2), CostFunction.quadratic(1.0)))
        cand = solve_cournot_candidate(inst)
        _, _, cbar = curvature(inst, cand.x, solve_social_optimum(inst))
        assert cbar == pytest.approx(1.0, abs=1e-9)

    def test_equal_prices(self):
        inst = example("ex1").instance
        with pytest.raises(EqualPricesError):
            curvature(inst, [0.5, 0.5], solve_social_optimum(inst))

    def test_convex_ratio_at_least_one(self):
        inst = random_instance(3, "log")
        cand = solve_cournot_candidate(inst)
        assert curvature(inst, cand.x, solve_social_optimum(inst))[2] >= 1.0


class TestBoundF:
    def test_values(self):
        assert bound_f(1.0) == pytest.approx(2 / 3, abs=1e-15)
        assert 0.5237 <= bound_f(math.e) <= 0.5245
        assert bound_f(3.0) == pytest.approx(0.5, abs=1e-15)

    def test_phi_clamps(self):
        assert phi(3.0) == 1.0
        assert phi(7.5) == 1.0
        assert phi(1.0) == pytest.approx(2.0)

    def test_domain(self):
        with pytest.raises(DomainError):
            bound_f(0.99)

    def test_strictly_decreasing(self):
        vals = np.array([bound_f(c) for c in np.linspace(1, 20, 2000)])
        assert np.all(np.diff(vals) < 0)

    def test_mono_values(self):
        assert bound_mono(1.0) == 0.75
        assert abs(bound_mono(math.e) - 0.525) <= 5e-4
        assert bound_mono(3.0) == 0.5

    def test_mono_dominates(self):
        for c in np.linspace(1, 30, 300):
            assert bound_mono(c) >= bound_f(c)


class TestExAnte:
    def test_mu_affine(self):
        assert bound_mu(example("ex8", N=3).instance) == pytest.approx(2 / 3)

    def test_mu_log_inapplicable(self):
        b = bound_mu(example("log").instance)
        assert isinstance(b, Inapplicable) and not b

    def test_mu_shifted_power_inapplicable(self):
        inst = MarketInstance(ShiftedPowerDemand(1.0, 2.0, 1.0), (CostFunction.linear(0.1),))
        assert isinstance(bound_mu(inst), Inapplicable)

    @pytest.mark.parametrize("alpha,beta_,c", [(2, 1, 0), (3, 1.5, 0.5), (1.2, 0.4, 0.3)])
    def test_log_closed_form(self, alpha, beta_, c):
        e = example("log", alpha=alpha, beta=beta_, c=c)
        s, t = compute_s_t(e.instance)
        assert s == pytest.approx(math.exp((alpha - c) / beta_), rel=1e-12)
        assert t == pytest.approx(math.exp((alpha - beta_ - c) / beta_), rel=1e-12)
        assert bound_st(e.instance) == pytest.approx(bound_f(math.e), abs=1e-12)
        assert bound_st_mono(e.instance) == pytest.approx(3 / (3 + math.e), abs=1e-12)

    @pytest.mark.parametrize("delta", [0.3, 0.5, 1.0])
    def test_power_closed_form(self, delta):
        e = example("power", alpha=1.5, beta=1.0, delta=delta, c=0.2)
        s, t = compute_s_t(e.instance)
        assert s == pytest.approx(e.values["s"], rel=1e-12)
        assert t == pytest.approx(e.values["t"], rel=1e-12)
        assert bound_st(e.instance) == pytest.approx(e.values["bound_st"], abs=1e-12)

    def test_shifted_power_s(self):
        e = example("shifted_power", alpha=2.0, beta=2.0, Q=1.5, c=0.3)
        assert compute_s_t(e.instance)[0] == pytest.approx(1.5 - (0.3 / 2.0) ** 0.5, rel=1e-12)

    @pytest.mark.parametrize("family", ["affine", "log", "power", "shifted_power"])
    def test_numeric_path_agrees(self, family):
        for seed in range(6):
            inst = random_instance(seed, family)
            s1, t1 = compute_s_t(inst)
            s2, t2 = compute_s_t(inst, closed_form=False)
            assert s2 == pytest.approx(s1, rel=1e-9)
            assert t2 == pytest.approx(t1, rel=1e-9, abs=1e-12)

    def test_nonconvex_inapplicable(self):
        inst = example("ex4", M=10).instance
        assert isinstance(bound_mu(inst), Inapplicable)
        assert isinstance(bound_st(inst), Inapplicable)
        assert isinstance(bound_st_mono(inst), Inapplicable)


class TestTransforms:
    def test_example_two_slope(self):
        lin = linearize_costs(example("ex2").instance, [1.0])
        assert lin.costs == (CostFunction.linear(2.0),)

    def test_linear_costs_unchanged(self):
        e = example("ex8", N=6)
        assert linearize_costs(e.instance, e.allocation("equilibrium")) == e.instance

    def test_refuses_optimum(self):
        inst = example("ex8", N=3).instance
        with pytest.raises(SociallyOptimalError):
            linearize_costs(inst, solve_social_optimum(inst).x)

    def test_linearized_gamma_not_larger(self):
        e = example("ex2")
        lin = linearize_costs(e.instance, [1.0])
        assert 0 < gamma(lin, [1.0]) <= gamma(e.instance, [1.0])

    def test_p0_affine_unchanged(self):
        e = example("ex8", N=10)
        inst, x = e.instance, e.allocation("equilibrium")
        p0 = p0_transform(inst, x, solve_social_optimum(inst))
        qs = np.linspace(0, 1.5, 61)
        np.testing.assert_allclose(p0.demand.price(qs), inst.demand.price(qs), atol=1e-12)

    def test_p0_log(self):
        inst = example("log").instance
        cand = solve_cournot_candidate(inst)
        opt = solve_social_optimum(inst)
        p0 = p0_transform(inst, cand.x, opt)
        g, g0 = gamma(inst, cand.x, opt), gamma(p0, cand.x)
        assert 0 < g0 <= g <= 1

    @pytest.mark.parametrize("family", ["affine", "log", "power", "shifted_power"])
    def test_p0_shape(self, family):
        inst = random_instance(21, family)
        cand = solve_cournot_candidate(inst)
        p0 = p0_transform(inst, cand.x, solve_social_optimum(inst)).demand
        assert p0.is_convex()
        slopes = np.diff([p for _, p in p0.breakpoints]) / np.diff([q for q, _ in p0.breakpoints])
        assert np.all(slopes <= 0) and np.all(np.diff(slopes) >= -1e-12)

    def test_p0_keeps_optimum(self):
        inst = random_instance(4, "power")
        cand = solve_cournot_candidate(inst)
        opt = solve_social_optimum(inst)
        p0 = p0_transform(inst, cand.x, opt)
        assert solve_social_optimum(p0).total == pytest.approx(opt.total, rel=1e-8)


class TestReport:
    def test_example_eight(self):
        a = analyze(example("ex8", N=10).instance)
        eq = a.equilibria[0]
        assert eq.gamma == pytest.approx(56 / 81, abs=1e-9)
        assert eq.bounds["bound_g"] == pytest.approx(2 / 3, abs=1e-9)
        assert a.monopoly.bounds["bound_mono"] == pytest.approx(0.75, abs=1e-9)
        assert a.monopoly.gamma == pytest.approx(0.75, abs=1e-9)

    def test_serializes_with_reasons(self):
        data = analyze(example("log").instance).to_dict()
        text = json.dumps(data)
        assert data["schema"] == 1
        cand = data["candidates"][0]
        assert cand["bound_mu"] is None
        assert "infinite" in cand["reasons"]["bound_mu"]
        assert json.loads(text)["violations"] == []

    def test_concave_example_skips_bounds(self):
        data = analyze(example("ex4", M=10).instance).to_dict()
        for cand in data["candidates"]:
            assert cand["bound_f"] is None
            assert cand["reasons"]["bound_f"] == "inverse demand is not convex"
