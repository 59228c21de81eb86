import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import beckmann_lp
from urbanbt.flow import cancel_zero_cost_cycles, min_cost_flow, undirected_min_cost_flow


def test_two_routes_prefers_cheaper():
    # 0 -> 1 directly (cost 3) or via 2 (1 + 1)
    sol = min_cost_flow(3, [0, 0, 2], [1, 2, 1], [3.0, 1.0, 1.0], [1.0, -1.0, 0.0])
    assert sol.feasible
    assert sol.cost == 2.0
    assert sol.flow.tolist() == [0.0, 1.0, 1.0]


def test_infeasible_when_disconnected():
    sol = min_cost_flow(3, [0], [1], [1.0], [1.0, 0.0, -1.0])
    assert not sol.feasible
    assert sol.cost == np.inf


def test_rejects_negative_cost():
    with pytest.raises(ValueError):
        min_cost_flow(2, [0], [1], [-1.0], [1.0, -1.0])


def test_zero_cost_cycle_cancelled():
    # triangle of zero-cost edges carrying a circulation plus a real unit flow
    flow = np.array([1.0, 1.0, 1.0, 1.0])
    out = cancel_zero_cost_cycles(4, [0, 1, 2, 0], [1, 2, 0, 3], [0.0, 0.0, 0.0, 1.0], flow)
    assert out.tolist() == [0.0, 0.0, 0.0, 1.0]


@st.composite
def flow_problems(draw):
    n = draw(st.integers(2, 7))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=len(pairs), unique=True))
    costs = draw(st.lists(st.sampled_from([0.0, 0.5, 1.0, 1.5, 2.0, 3.25]), min_size=len(edges), max_size=len(edges)))
    raw = draw(st.lists(st.integers(-4, 4), min_size=n, max_size=n))
    supply = np.array(raw, dtype=float)
    supply[-1] -= supply.sum()
    return n, [u for u, _ in edges], [v for _, v in edges], np.array(costs), supply


@given(flow_problems())
def test_matches_lp_oracle_and_certificate(problem):
    n, eu, ev, cost, supply = problem
    net, sol = undirected_min_cost_flow(n, eu, ev, cost, supply)
    ref = beckmann_lp(n, eu, ev, cost, supply)
    if not sol.feasible:
        assert ref == np.inf
        return
    assert sol.cost == pytest.approx(ref, abs=1e-9)
    # conservation
    div = np.zeros(n)
    np.add.at(div, eu, net)
    np.add.at(div, ev, -net)
    assert np.allclose(div, supply, atol=1e-9)
    # cost of the reported net flow equals the optimum
    assert float(np.abs(net) @ cost) == pytest.approx(ref, abs=1e-9)
    # reduced costs are nonnegative in both directions
    p = sol.potential
    for u, v, c in zip(eu, ev, cost):
        assert c + p[u] - p[v] >= -1e-9
        assert c + p[v] - p[u] >= -1e-9
