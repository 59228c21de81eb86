import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import NAMED_COSTS, piecewise_costs
from oracles import conjugate_by_grid, right_derivative_fd
from urbanbt.costs import (
    TransportationCost,
    biconjugate_check,
    conjugate,
    dual_network_cost,
    optimal_friction,
    tau_eval,
)

LINEAR = NAMED_COSTS["linear"]
CAPPED = NAMED_COSTS["capped"]
TWO_SLOPE = NAMED_COSTS["two_slope"]


def test_tau_examples():
    assert tau_eval(CAPPED, 0.5) == 0.5
    assert tau_eval(TransportationCost.power(0.5), 4.0) == 2.0
    assert tau_eval(TWO_SLOPE, 3.0) == 4.0
    assert tau_eval(TWO_SLOPE, 0.0) == 0.0
    with pytest.raises(ValueError):
        tau_eval(CAPPED, -0.1)


@pytest.mark.parametrize(
    "bps, slopes",
    [([], []), ([0.0, 1.0], [1.0]), ([0.5], [1.0]), ([0.0, 1.0], [1.0, 1.0]), ([0.0, 1.0], [1.0, -1.0]), ([0.0, 0.0], [2.0, 1.0])],
)
def test_invalid_piecewise_costs(bps, slopes):
    with pytest.raises(ValueError):
        TransportationCost.piecewise_linear(bps, slopes)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 1.5])
def test_invalid_power(alpha):
    with pytest.raises(ValueError):
        TransportationCost.power(alpha)


def test_conjugate_of_linear():
    eps = conjugate(LINEAR)
    assert eps(1.0) == 0.0 and eps(3.0) == 0.0
    assert eps(0.999) == math.inf and eps(0.0) == math.inf
    assert eps.zero_threshold == 1.0


def test_conjugate_of_capped():
    eps = conjugate(CAPPED)
    for b in [0.0, 0.25, 0.5, 1.0, 2.0]:
        assert eps(b) == pytest.approx(max(0.0, 1.0 - b), abs=1e-15)
    assert eps.domain_min == 0.0


def test_conjugate_of_two_slope():
    eps = conjugate(TWO_SLOPE)
    assert eps(0.5) == math.inf
    assert eps(1.0) == 1.0
    assert eps(1.5) == 0.5
    assert eps(2.0) == 0.0
    assert eps(10.0) == 0.0
    assert eps.breakpoints() == [(1.0, 1.0), (2.0, 0.0)]


def test_power_conjugate_closed_form():
    alpha = 0.6
    eps = conjugate(TransportationCost.power(alpha))
    assert eps(0.0) == math.inf
    for b in [0.3, 1.0, 2.5]:
        # maximiser m* = (alpha / b)^(1 / (1 - alpha))
        m = (alpha / b) ** (1 / (1 - alpha))
        assert eps(b) == pytest.approx(m**alpha - b * m, rel=1e-12)


@pytest.mark.parametrize("name", sorted(NAMED_COSTS))
def test_conjugate_matches_grid_oracle(name):
    tc = NAMED_COSTS[name]
    eps = conjugate(tc)
    for b in np.linspace(0.0, 3.0, 31):
        ref, unbounded = conjugate_by_grid(tc, b)
        if math.isinf(eps(b)):
            assert unbounded
        else:
            assert not unbounded
            assert abs(eps(b) - ref) <= 1e-2


def test_optimal_friction_examples():
    assert optimal_friction(CAPPED, 0.5) == 1.0
    assert 1.0 * 0.5 + conjugate(CAPPED)(1.0) == tau_eval(CAPPED, 0.5)
    assert optimal_friction(CAPPED, 2.0) == 0.0
    assert conjugate(CAPPED)(0.0) == 1.0
    # at a kink the right derivative is used
    assert optimal_friction(CAPPED, 1.0) == 0.0
    assert optimal_friction(TWO_SLOPE, 1.0) == 1.0
    with pytest.raises(ValueError):
        optimal_friction(TransportationCost.power(0.5), 0.0)


@pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
@pytest.mark.parametrize("inv_mass", [4, 8, 16])
def test_power_friction_labels(alpha, inv_mass):
    tc = TransportationCost.power(alpha)
    b = optimal_friction(tc, 1 / inv_mass)
    assert b == pytest.approx(alpha * inv_mass ** (1 - alpha), rel=1e-12)
    assert b == pytest.approx(right_derivative_fd(tc, 1 / inv_mass), abs=1e-5)
    assert b / inv_mass + conjugate(tc)(b) == pytest.approx(tau_eval(tc, 1 / inv_mass), rel=1e-12)


def test_power_friction_tends_to_one_as_alpha_to_one():
    for m in [0.01, 0.25, 4.0]:
        assert optimal_friction(TransportationCost.power(1 - 1e-9), m) == pytest.approx(1.0, abs=1e-7)


def test_dual_network_cost_examples():
    assert dual_network_cost(CAPPED, [(1.0, 0.5)]) == (0.5, [1.0])
    assert dual_network_cost(CAPPED, []) == (0.0, [])
    assert dual_network_cost(CAPPED, [(2.0, 0.5), (1.0, 3.0)]) == (2.0, [1.0, 0.0])
    with pytest.raises(ValueError):
        dual_network_cost(TransportationCost.power(0.5), [(1.0, 1.0)])


def test_biconjugate_examples():
    assert biconjugate_check(CAPPED, [0, 0.5, 1, 2], [0, 1]) == 0.0
    assert biconjugate_check(LINEAR, [0, 0.5, 3], [1]) == 0.0
    assert biconjugate_check(CAPPED, [0, 0.5, 1, 2], [0, 0.5, 1]) == 0.0


@given(piecewise_costs(), st.floats(0.0, 6.0), st.floats(0.0, 20.0))
def test_fenchel_young(tc, b, m):
    assert conjugate(tc)(b) >= tau_eval(tc, m) - b * m - 1e-12 * (1 + m)


@given(piecewise_costs())
def test_maintenance_cost_convex_nonincreasing(tc):
    eps = conjugate(tc)
    bs = np.linspace(eps.domain_min, tc.slope_at_zero + 1.0, 61)
    vals = np.array([eps(b) for b in bs])
    assert np.all(np.isfinite(vals))
    assert np.all(np.diff(vals) <= 1e-12)
    assert np.all(np.diff(vals, 2) >= -1e-9)
    assert all(eps(b) == 0.0 for b in bs if b >= tc.slope_at_zero)


@given(piecewise_costs())
def test_finiteness_of_conjugate_matches_oracle(tc):
    eps = conjugate(tc)
    for b in np.linspace(0.0, tc.slope_at_zero, 9):
        _, unbounded = conjugate_by_grid(tc, b)
        # below the last slope tau(m) - bm grows without bound
        assert math.isinf(eps(b)) == unbounded or math.isclose(b, tc.slopes[-1])


@given(piecewise_costs(), st.lists(st.floats(0.0, 20.0), min_size=2, max_size=10))
def test_optimal_friction_nonincreasing(tc, ms):
    ms = sorted(ms)
    bs = [optimal_friction(tc, m) for m in ms]
    assert all(x >= y for x, y in zip(bs, bs[1:]))


@given(st.floats(0.51, 0.99), st.lists(st.floats(1e-3, 20.0), min_size=2, max_size=10))
def test_power_friction_nonincreasing(alpha, ms):
    tc = TransportationCost.power(alpha)
    ms = sorted(ms)
    bs = [optimal_friction(tc, m) for m in ms]
    assert all(x >= y for x, y in zip(bs, bs[1:]))


@given(piecewise_costs(), st.lists(st.tuples(st.floats(0.01, 2.0), st.floats(0.0, 10.0)), max_size=20))
def test_dual_network_cost_identity(tc, segs):
    total, frictions = dual_network_cost(tc, segs)
    ref = math.fsum(length * tau_eval(tc, m) for length, m in segs)
    assert total == pytest.approx(ref, rel=1e-12, abs=1e-12)
    assert all(0.0 <= b <= tc.slope_at_zero for b in frictions)


@given(piecewise_costs())
def test_biconjugate_exact_with_all_slopes(tc):
    m_grid = list(tc.breakpoints) + [tc.breakpoints[-1] + 1.0, 0.5 * tc.breakpoints[-1] + 0.1]
    assert biconjugate_check(tc, m_grid, list(tc.slopes)) <= 1e-12
