import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from cournot.demand import (AffineDemand, LogDemand, PiecewiseLinearDemand, PowerDemand,
                            ShiftedPowerDemand, demand_from_dict)
from cournot.errors import DomainError, InstanceError

EX2 = PiecewiseLinearDemand([(0, 4), (4 / 3, 8 / 3), (44 / 3, 0)])
EX3 = PiecewiseLinearDemand([(0, 2), (1, 1)])


def ex4(M):
    return PiecewiseLinearDemand([(0, 1), (1, 1), (1 + 1 / M, 0)])


FAMILIES = [
    AffineDemand(1.3, 2.0),
    EX2,
    EX3,
    LogDemand(2.0, 1.0),
    PowerDemand(1.5, 1.0, 0.5),
    PowerDemand(2.0, 0.7, 1.0),
    ShiftedPowerDemand(1.2, 2.5, 1.7),
    ShiftedPowerDemand(1.0, 1.0, 1.0),
]


class TestEval:
    def test_affine_midpoint(self):
        assert AffineDemand(1, 1).price(0.5) == 0.5

    def test_shifted_power_hits_zero_at_Q(self):
        assert ShiftedPowerDemand(2.0, 1.5, 3.0).price(3.0) == 0.0

    def test_log_zero_at_exp(self):
        assert LogDemand(2, 1).price(math.e ** 2) == pytest.approx(0.0, abs=1e-15)

    def test_log_infinite_at_zero(self):
        assert LogDemand(2, 1).price(0.0) == math.inf

    def test_flat_tail_after_last_breakpoint(self):
        assert EX3.price(5.0) == 1.0

    def test_negative_quantity_rejected(self):
        with pytest.raises(DomainError):
            AffineDemand(1, 1).price(-0.1)

    def test_array_input(self):
        out = AffineDemand(1, 1).price(np.array([0.0, 0.25, 2.0]))
        np.testing.assert_allclose(out, [1.0, 0.75, 0.0])


class TestDerivatives:
    def test_affine_slope(self):
        d = AffineDemand(1, 1)
        assert d.dminus(0.3) == -1.0 and d.dplus(0.3) == -1.0

    def test_kink_in_example_two(self):
        assert EX2.dminus(4 / 3) == pytest.approx(-1.0)
        assert EX2.dplus(4 / 3) == pytest.approx(-0.2)

    def test_log_slope(self):
        q = math.e ** 2
        assert LogDemand(2, 1).dminus(q) == pytest.approx(-math.exp(-2))

    def test_log_right_slope_at_zero_is_infinite(self):
        assert LogDemand(2, 1).dplus(0.0) == -math.inf

    def test_dminus_needs_positive_q(self):
        with pytest.raises(DomainError):
            AffineDemand(1, 1).dminus(0.0)

    @pytest.mark.parametrize("d", FAMILIES, ids=lambda d: d.family)
    def test_matches_finite_difference_off_kinks(self, d):
        for q in np.linspace(0.05, 0.95, 7) * d.q_max if math.isfinite(d.q_max) else np.linspace(0.2, 3, 7):
            if any(abs(q - k) < 1e-3 for k in d.kinks):
                continue
            h = 1e-6
            fd = (d.price(q + h) - d.price(q - h)) / (2 * h)
            assert d.dminus(q) == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestIntegral:
    def test_triangle(self):
        assert AffineDemand(1, 1).integral(1.0) == 0.5

    def test_full_area(self):
        a, b = 0.7, 1.9
        assert AffineDemand(a, b).integral(b / a) == pytest.approx(b * b / (2 * a))

    def test_example_three_flat_tail(self):
        assert EX3.integral(2.0) == pytest.approx(2.5)

    def test_log_at_zero(self):
        assert LogDemand(2, 1).integral(0.0) == 0.0

    @pytest.mark.parametrize("d", FAMILIES, ids=lambda d: d.family)
    def test_against_quadrature(self, d):
        top = d.q_max if math.isfinite(d.q_max) else 4.0
        rng = np.random.default_rng(3)
        for X in rng.uniform(0, 1.2 * top, 6):
            pts = [k for k in d.kinks if k < X]
            ref, _ = quad(lambda q: float(d.price(q)), 0, X, points=pts or None, limit=200,
                          epsabs=1e-13, epsrel=1e-12)
            assert d.integral(X) == pytest.approx(ref, rel=1e-9, abs=1e-12)


class TestShapeChecks:
    def test_novshek_closed_forms(self):
        assert LogDemand(2, 1).check_novshek()
        assert PowerDemand(1, 1, 0.5).check_novshek()
        assert AffineDemand(1, 1).check_novshek()

    def test_concave_counterexample_is_not_convex(self):
        assert not ex4(4).is_convex()

    def test_example_three_is_convex(self):
        assert EX3.is_convex()

    @pytest.mark.parametrize("d", FAMILIES, ids=lambda d: d.family)
    def test_convex_families(self, d):
        assert d.is_convex()


class TestConstruction:
    def test_power_delta_range(self):
        with pytest.raises(InstanceError):
            PowerDemand(1, 1, 1.5)

    def test_shifted_power_beta_range(self):
        with pytest.raises(InstanceError):
            ShiftedPowerDemand(1, 0.5, 1)

    def test_increasing_pieces_rejected(self):
        with pytest.raises(InstanceError):
            PiecewiseLinearDemand([(0, 1), (1, 2)])

    def test_unknown_family(self):
        with pytest.raises(InstanceError):
            demand_from_dict({"family": "cubic"})

    @pytest.mark.parametrize("d", FAMILIES, ids=lambda d: d.family)
    def test_json_round_trip(self, d):
        again = demand_from_dict(d.to_dict())
        qs = np.linspace(0.01, 3, 11)
        np.testing.assert_array_equal(again.price(qs), d.price(qs))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_monotone(d, q1, q2):
    lo, hi = sorted((q1, q2))
    assert d.price(lo) >= d.price(hi)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(1e-3, 5.0))
def test_left_slope_below_right_slope(d, q):
    assert d.dminus(q) <= d.dplus(q) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(0.05, 4.0), st.floats(1e-4, 0.05))
def test_integral_is_concave(d, X, h):
    F = d.integral
    assert F(X + h) - F(X) <= h * d.price(X) + 1e-12
    assert h * d.price(X) <= F(X) - F(X - h) + 1e-12
