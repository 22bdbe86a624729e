import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbplan.closed_form import (
    NoClosedFormCost, RegionBounds, check_interval, closed_form_regions, indifference_cost,
    min_closed_form_cost, tau_double_prime, tau_prime, theorem1_condition,
)
from qbplan.special import PHI0


def brute_condition(c, r, tau, delta, n=200_001):
    """Independent check: dense scan with an erfc-based loss integral."""
    z_lo = (2 * math.pi * c * c) ** 0.5
    half = r / 2
    z_hi = (math.sqrt(half * half + half / (math.pi * c * c)) - half) ** -0.5
    if z_lo > z_hi:
        return True
    z = np.linspace(z_lo, z_hi, n)
    s = z * delta * tau / 2
    erfc = np.vectorize(math.erfc)
    om = np.exp(-s * s / 2) / math.sqrt(2 * math.pi) - s * 0.5 * erfc(s / math.sqrt(2))
    return float(np.max(z * om)) < c


class TestPrecisionThresholds:
    def test_tau_prime(self):
        assert tau_prime(0.1, 1.0) == pytest.approx(3.52063357061913, rel=1e-13)
        assert tau_prime(0.1, 1.0) == tau_prime(0.1, 1.0)
        assert tau_prime(1e6, 1.0) < 1e-6

    def test_tau_double_prime(self):
        assert tau_double_prime(0.1) == pytest.approx(15.915494309189533, rel=1e-14)
        assert tau_double_prime(0.081) == pytest.approx(24.2577264276627550, rel=1e-13)
        assert tau_double_prime(0.2) == pytest.approx(tau_double_prime(0.1) / 4, rel=1e-14)

    def test_interval(self):
        iv = check_interval(0.09, 1.0)
        assert 0 < iv.z_lo <= iv.z_hi and not iv.empty


class TestCondition:
    @pytest.mark.parametrize("c,expected", [(0.09, True), (0.05, False), (0.2, True),
                                            (0.08, False), (0.1, True), (0.01, False)])
    def test_paper_config(self, c, expected):
        assert theorem1_condition(c, 1.0, 0.25, 10.0) is expected
        assert brute_condition(c, 1.0, 0.25, 10.0) is expected

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.005, 0.5), st.floats(0.1, 5), st.floats(0.05, 5), st.floats(0, 30))
    def test_agrees_with_brute_force(self, c, r, tau, delta):
        fast = theorem1_condition(c, r, tau, delta)
        slow = brute_condition(c, r, tau, delta, n=20_001)
        if fast != slow:
            # only tolerable right at the boundary
            iv = check_interval(c, r)
            z = np.linspace(iv.z_lo, iv.z_hi, 20_001)
            from qbplan.special import omega
            assert abs(np.max(z * omega(z * delta * tau / 2)) - c) < 1e-6

    def test_degenerate_width_takes_same_path(self):
        # delta = 0: max_z z*phi(0) = phi(0)/sqrt(tau') which always exceeds c
        assert theorem1_condition(0.3, 1.0, 1.0, 0.0) is False

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 5), st.floats(0.05, 5), st.floats(0, 30))
    def test_monotone_in_cost(self, r, tau, delta):
        costs = np.linspace(0.005, 0.5, 50)
        flags = [theorem1_condition(c, r, tau, delta) for c in costs]
        first = flags.index(True) if True in flags else len(flags)
        assert all(flags[first:])

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.01, 0.5), st.floats(0.1, 5), st.floats(0.05, 5), st.floats(0, 20))
    def test_monotone_in_width(self, c, r, tau, delta):
        if theorem1_condition(c, r, tau, delta):
            assert theorem1_condition(c, r, tau, delta * 1.5 + 0.1)


class TestRegions:
    def test_paper_level_0(self):
        b = closed_form_regions(0.09, 1.0, 0.25)
        # mpmath root of omega at 30 digits
        assert b.b_continue == pytest.approx(2.24074053302177624, abs=1e-9)
        assert b.b_stop == pytest.approx(2.61096130306165439, abs=1e-9)
        assert b.provenance == "closed_form"

    def test_paper_level_1(self):
        b = closed_form_regions(0.09, 1.0, 1.25)
        assert b.b_continue == pytest.approx(0.397960432192369951, abs=1e-9)
        assert b.b_stop == pytest.approx(0.804052543046966273, abs=1e-9)

    def test_clamp_stops_everywhere(self):
        b = closed_form_regions(1.0, 1.0, 1.0)
        assert (b.b_continue, b.b_stop) == (0.0, 0.0)

    @given(st.floats(0.005, 0.39), st.floats(0.1, 5), st.floats(0.01, 30))
    def test_nesting(self, c, r, tau):
        b = closed_form_regions(c, r, tau)
        assert 0 <= b.b_continue <= b.b_stop

    def test_stop_bound_decreasing_in_cost(self):
        for tau in (0.25, 1.25, 4.0):
            bs = [closed_form_regions(c, 1.0, tau).b_stop for c in np.linspace(0.01, 0.3, 30)]
            assert all(a >= b for a, b in zip(bs, bs[1:]))

    def test_region_bounds_validation(self):
        with pytest.raises(ValueError):
            RegionBounds(1.0, 2.0, 1.0, "closed_form")
        with pytest.raises(ValueError):
            RegionBounds(1.0, 0.0, 1.0, "guess")

    def test_labels(self):
        b = RegionBounds(1.0, 0.5, 1.0, "closed_form")
        assert [b.label(m) for m in (0.0, 0.5, 0.7, 1.0, -1.2, -0.7)] == \
            ["Continue", "Continue", "Indeterminate", "Stop1", "Stop0", "Indeterminate"]
        empty = RegionBounds(1.0, 0.0, 0.0, "closed_form")
        assert empty.label(0.0) == "Stop1"
        assert empty.indeterminate_width() == 0.0
        assert RegionBounds(1.0, 0.0, 0.3, "iterated").indeterminate_width() == 0.6


class TestThresholdCost:
    def test_paper_threshold(self):
        c = min_closed_form_cost(1.0, 0.25, 10.0, 1.0)
        assert 0.0805 < c < 0.0815

    def test_bracketing(self):
        c = min_closed_form_cost(1.0, 0.25, 10.0, 1.0)
        assert not theorem1_condition(c * (1 - 1e-3), 1.0, 0.25, 10.0)
        assert theorem1_condition(c * (1 + 1e-3), 1.0, 0.25, 10.0)

    def test_filters_cost_grid(self):
        c = min_closed_form_cost(1.0, 0.25, 10.0, 1.0)
        grid = [round(0.01 * i, 2) for i in range(1, 11)]
        assert [x for x in grid if x > c] == [0.09, 0.1]

    def test_no_cost_in_range(self):
        with pytest.raises(NoClosedFormCost, match="no closed-form cost in range"):
            min_closed_form_cost(1.0, 0.25, 10.0, 0.05)

    def test_wider_prior_not_costlier(self):
        assert min_closed_form_cost(1.0, 0.25, 20.0, 1.0) <= min_closed_form_cost(1.0, 0.25, 10.0, 1.0)


class TestIndifferenceCost:
    def test_paper_value(self):
        assert indifference_cost(4.0, 0.25, 1.0) == pytest.approx(7.88e-3, abs=5e-5)

    @pytest.mark.parametrize("mu", [0.3, 1.0, 4.0, 6.0])
    def test_round_trip(self, mu):
        c = indifference_cost(mu, 0.25, 1.0)
        assert closed_form_regions(c, 1.0, 0.25).b_continue == pytest.approx(mu, abs=1e-6)

    def test_small_mu_limit(self):
        a = math.sqrt(0.25 * 1.25)
        assert indifference_cost(1e-9, 0.25, 1.0) == pytest.approx(PHI0 / a, rel=1e-8)
