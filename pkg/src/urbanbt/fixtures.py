"""Executable counterexample and illustration instances.

Each constructor returns a :class:`Fixture` whose expectations can be
checked with :func:`check_fixture`.  Instances that do not fit into
``[-1, 1]^n`` at their natural size are scaled by 1/2; frictions are doubled
where that keeps the reference distances unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .beckmann import beckmann_solve
from .costs import TransportationCost, optimal_friction
from .geometry import (
    CityInstance,
    DiscreteMeasure,
    StreetArc,
    build_augmented_graph,
    measure_terminals,
    segment_segment_distance,
    segments_overlap,
)
from .instance import Instance, Settings
from .metric import MetricQuery, clamp_friction, friction_relax, truncate_network, urban_metric
from .transport import kr_potentials, wasserstein_on_graph

INF = math.inf


@dataclass(frozen=True)
class Expectation:
    quantity: str
    comparator: str  # "eq", "le", "ge", "inf"
    reference: float
    params: dict[str, Any] = field(default_factory=dict)
    tol: float = 1e-12


@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    city: CityInstance
    mu_plus: DiscreteMeasure
    mu_minus: DiscreteMeasure
    expectations: tuple[Expectation, ...]
    subdivision_h: float = 1.0
    tau: TransportationCost | None = None
    notes: dict[str, Any] = field(default_factory=dict)

    def graph(self, city: CityInstance | None = None, extra_terminals=()):
        city = self.city if city is None else city
        terms = measure_terminals(self.mu_plus, self.mu_minus) + list(extra_terminals)
        return build_augmented_graph(city, terms, self.subdivision_h)


def fixture_comb(m: int = 64, b: float = 1.0, a: float = 2.0) -> Fixture:
    """Isolated points ``i/m`` on ``[0, 1]`` tagged with friction ``b < a``."""
    if m < 1:
        raise ValueError("comb needs at least one gap")
    nodes = [(i / m, 0.0) for i in range(m + 1)]
    city = CityInstance(nodes, (), a, node_friction={i: b for i in range(m + 1)})
    k = 2.0 * m
    exps = (
        Expectation("metric", "eq", a, {"source": (0.0, 0.0), "target": (1.0, 0.0)}),
        Expectation("relaxed_metric", "eq", b, {"source": (0.0, 0.0), "target": (1.0, 0.0), "k": k}),
        Expectation("wasserstein", "eq", a),
        Expectation("smooth_dual", "eq", b, {"k": k}),
    )
    return Fixture(
        "comb",
        city,
        DiscreteMeasure.dirac((0.0, 0.0)),
        DiscreteMeasure.dirac((1.0, 0.0)),
        exps,
        subdivision_h=1.0,
        notes={"m": m, "b": b, "a": a},
    )


def sine_polyline(n: int, periods: int = 16) -> list[tuple[float, float]]:
    """Vertices of ``t -> (t, sin(1/t))`` for ``t`` in ``[t_min, 1]``, uniform in ``1/t``.

    ``t_min`` is a crest (``sin(1/t_min) = 1``) so the curve ends next to ``(0, 1)``.
    """
    u_max = math.pi / 2 + 2 * math.pi * periods
    us = [1.0 + (u_max - 1.0) * i / n for i in range(n + 1)]
    return [(1.0 / u, math.sin(u)) for u in reversed(us)]


def fixture_sine(n: int = 400, periods: int = 16) -> Fixture:
    """Street of friction 1 from ``x`` to ``y`` beside a zero-friction topologist's sine curve.

    Coordinates are halved (``x = (0, 1/2)``, ``y = (1/2, 1)``) and frictions
    doubled, so all distances equal their unscaled values.
    """
    x = (0.0, 0.5)
    y = (0.5, 1.0)
    curve = [(0.5 * t, 0.5 * s) for t, s in sine_polyline(n, periods)]
    nodes = [x, y, (0.0, -0.5)] + curve
    first = 3
    arcs = [StreetArc(0, 1, 2.0), StreetArc(2, 0, 0.0)]
    arcs += [StreetArc(first + i, first + i + 1, 0.0) for i in range(n)]
    arcs.append(StreetArc(first + n, 1, 0.0))
    city = CityInstance(nodes, arcs, INF)
    sqrt2 = math.sqrt(2.0)
    pts = {"source": x, "target": y}
    exps = (
        Expectation("metric", "eq", sqrt2, pts),
        Expectation("relaxed_metric", "le", 0.05, {**pts, "k": 100.0}),
        Expectation("clamped_metric", "eq", sqrt2, {**pts, "lambda": 0.1}),
        Expectation("wasserstein", "eq", sqrt2),
        Expectation("smooth_dual", "le", 0.05, {"k": 100.0}),
    )
    return Fixture(
        "sine",
        city,
        DiscreteMeasure.dirac(x),
        DiscreteMeasure.dirac(y),
        exps,
        subdivision_h=2.0,
        notes={"n": n, "periods": periods, "curve_nodes": (first, first + n)},
    )


def fixture_interval_cover(m: int = 8, b: float = 1.0, a: float = INF) -> Fixture:
    """``[0, 1]`` as ``m`` abutting streets; removing any street leaves a gap."""
    nodes = [(i / m, 0.0) for i in range(m + 1)]
    arcs = [StreetArc(i, i + 1, b) for i in range(m)]
    city = CityInstance(nodes, arcs, a)
    pts = {"source": (0.0, 0.0), "target": (1.0, 0.0)}
    drop = min(4, m - 1)
    keep = [i for i in range(m) if i != drop]
    exps = [Expectation("metric", "eq", b, pts)]
    if math.isinf(a):
        exps.append(Expectation("truncated_metric", "inf", INF, {**pts, "keep": keep}))
    else:
        exps.append(Expectation("truncated_metric", "le", b + a / m, {**pts, "keep": keep}))
    return Fixture(
        "interval_cover",
        city,
        DiscreteMeasure.dirac((0.0, 0.0)),
        DiscreteMeasure.dirac((1.0, 0.0)),
        tuple(exps),
        subdivision_h=1.0,
        notes={"m": m, "b": b, "a": a},
    )


# Branching tree of the ring irrigation sketch, halved to fit the unit cube.
_RING_LEVEL0 = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
_RING_LEVEL1 = [
    (1.5, 0.5), (1.5, -0.5), (-1.5, 0.5), (-1.5, -0.5),
    (0.5, 1.5), (-0.5, 1.5), (0.5, -1.5), (-0.5, -1.5),
]
_RING_LEVEL2 = [
    (1.5, 1.0), (2.0, 0.5), (1.5, -1.0), (2.0, -0.5),
    (-1.5, 1.0), (-2.0, 0.5), (-1.5, -1.0), (-2.0, -0.5),
    (0.5, 2.0), (1.0, 1.5), (-0.5, 2.0), (-1.0, 1.5),
    (0.5, -2.0), (1.0, -1.5), (-0.5, -2.0), (-1.0, -1.5),
]


def fixture_ring(levels: int = 2, alpha: float = 0.9) -> Fixture:
    """Central source feeding ``4 * 2**levels`` sinks through a binary tree of streets."""
    if levels not in (1, 2):
        raise ValueError("levels must be 1 or 2")
    if not 0.5 < alpha < 1.0:
        raise ValueError("alpha must lie in (1/2, 1)")
    half = lambda p: (0.5 * p[0], 0.5 * p[1])  # noqa: E731
    nodes = [(0.0, 0.0)] + [half(p) for p in _RING_LEVEL0 + _RING_LEVEL1]
    arcs = [StreetArc(0, 1 + i, 1.0) for i in range(4)]
    arcs += [StreetArc(1 + i // 2, 5 + i, 1.0) for i in range(8)]
    leaves = list(range(5, 13))
    if levels == 2:
        nodes += [half(p) for p in _RING_LEVEL2]
        arcs += [StreetArc(5 + i // 2, 13 + i, 1.0) for i in range(16)]
        leaves = list(range(13, 29))
    city = CityInstance(nodes, arcs, INF)
    mass = 1.0 / len(leaves)
    mu_minus = DiscreteMeasure(tuple((nodes[i], mass) for i in leaves))
    # root-to-leaf path through the first child at every level
    path = [nodes[0], nodes[1], nodes[5]] + ([nodes[13]] if levels == 2 else [])
    refs = [alpha * 4 ** (1 - alpha), alpha * 8 ** (1 - alpha), alpha * 16 ** (1 - alpha)]
    exps = tuple(
        Expectation("path_friction", "eq", refs[i], {"from": path[i], "to": path[i + 1]})
        for i in range(len(path) - 1)
    )
    return Fixture(
        "ring",
        city,
        DiscreteMeasure.dirac((0.0, 0.0)),
        mu_minus,
        exps,
        subdivision_h=2.0,
        tau=TransportationCost.power(alpha),
        notes={"levels": levels, "alpha": alpha},
    )


def fixture_v_vs_y(tau: TransportationCost, mass: float = 0.5) -> Fixture:
    """Two sources of ``mass`` each at ``(-1/2, 0)``, ``(1/2, 0)``; one sink at ``(0, 1)``.

    The candidate network is the two direct streets; the ambient friction is
    ``tau'(0)``.  No expectations: brute force supplies the reference value.
    """
    a = tau.slope_at_zero
    nodes = [(-0.5, 0.0), (0.5, 0.0), (0.0, 1.0)]
    city = CityInstance(nodes, [StreetArc(0, 2, a), StreetArc(1, 2, a)], a)
    mu_plus = DiscreteMeasure(((nodes[0], mass), (nodes[1], mass)))
    mu_minus = DiscreteMeasure.dirac(nodes[2], 2 * mass)
    return Fixture("v_vs_y", city, mu_plus, mu_minus, (), subdivision_h=2.0, tau=tau)


FIXTURES = {
    "comb": fixture_comb,
    "sine": fixture_sine,
    "interval_cover": fixture_interval_cover,
    "ring": fixture_ring,
}


def to_instance(fx: Fixture) -> Instance:
    return Instance(fx.city, fx.mu_plus, fx.mu_minus, fx.tau, Settings(subdivision_h=fx.subdivision_h))


@dataclass(frozen=True)
class ExpectationResult:
    expectation: Expectation
    observed: float
    passed: bool


def _metric_between(fx: Fixture, city: CityInstance, params) -> float:
    g = fx.graph(city, [params["source"], params["target"]])
    q = MetricQuery(g.snap(params["source"]), g.snap(params["target"]))
    return urban_metric(g, q).distance


def evaluate(fx: Fixture, exp: Expectation) -> float:
    p = exp.params
    q = exp.quantity
    if q == "metric":
        return _metric_between(fx, fx.city, p)
    if q == "relaxed_metric":
        return _metric_between(fx, friction_relax(fx.city, p["k"]), p)
    if q == "clamped_metric":
        return _metric_between(fx, clamp_friction(fx.city, p["lambda"]), p)
    if q == "truncated_metric":
        return _metric_between(fx, truncate_network(fx.city, p["keep"]), p)
    if q == "wasserstein":
        return wasserstein_on_graph(fx.graph(), fx.mu_plus, fx.mu_minus)[0]
    if q == "smooth_dual":
        g = fx.graph(friction_relax(fx.city, p["k"]))
        return kr_potentials(g, fx.mu_plus, fx.mu_minus)[0]
    if q == "path_friction":
        g = fx.graph()
        _, flux = beckmann_solve(g, fx.mu_plus, fx.mu_minus)
        u, v = g.snap(p["from"]), g.snap(p["to"])
        for e in range(g.n_edges):
            if {int(g.edge_u[e]), int(g.edge_v[e])} == {u, v}:
                return optimal_friction(fx.tau, abs(float(flux.flows[e])))
        raise KeyError(f"no edge between {p['from']} and {p['to']}")
    raise ValueError(f"unknown quantity {q!r}")


def _compare(exp: Expectation, observed: float) -> bool:
    ref = exp.reference
    if exp.comparator == "inf":
        return math.isinf(observed)
    if exp.comparator == "eq":
        return abs(observed - ref) <= exp.tol * max(1.0, abs(ref))
    if exp.comparator == "le":
        return observed <= ref + exp.tol
    if exp.comparator == "ge":
        return observed >= ref - exp.tol
    raise ValueError(f"unknown comparator {exp.comparator!r}")


def check_fixture(fx: Fixture) -> list[ExpectationResult]:
    results = []
    for exp in fx.expectations:
        observed = evaluate(fx, exp)
        results.append(ExpectationResult(exp, observed, _compare(exp, observed)))
    return results


def _planar_compatible(nodes, e, f) -> bool:
    """Segments ``e`` and ``f`` meet at most in a shared endpoint."""
    p1, q1, p2, q2 = nodes[e[0]], nodes[e[1]], nodes[f[0]], nodes[f[1]]
    if set(e) & set(f):
        return not segments_overlap(p1, q1, p2, q2)
    return segment_segment_distance(p1, q1, p2, q2) > 1e-6


def random_instance(
    seed: int,
    max_nodes: int = 30,
    max_arcs: int = 60,
    max_atoms: int = 8,
    subdivision_h: float = 0.5,
) -> Instance:
    """Random planar city with finite ambient friction and balanced atomic measures.

    Streets do not cross.  About half of the atoms sit on network nodes, the
    rest anywhere in the square.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_nodes + 1))
    nodes = [tuple(p) for p in rng.uniform(-1.0, 1.0, size=(n, 2)).tolist()]
    a = float(rng.uniform(1.0, 3.0))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    n_arcs = int(rng.integers(1, min(max_arcs, len(pairs)) + 1))
    kept: list[tuple[int, int]] = []
    for k in rng.permutation(len(pairs)).tolist():
        if len(kept) == n_arcs:
            break
        i, j = pairs[k]
        if all(_planar_compatible(nodes, (i, j), other) for other in kept):
            kept.append((i, j))
    arcs = [StreetArc(i, j, float(rng.uniform(0.0, a))) for i, j in sorted(kept)]
    city = CityInstance(tuple(nodes), tuple(arcs), a)

    def measure(k: int) -> list[tuple[tuple[float, float], float]]:
        pts = []
        for _ in range(k):
            if rng.random() < 0.5:
                pts.append(nodes[int(rng.integers(n))])
            else:
                pts.append(tuple(rng.uniform(-1.0, 1.0, size=2).tolist()))
        masses = rng.uniform(0.1, 1.0, size=k)
        return list(zip(pts, (masses / masses.sum()).tolist()))

    plus = measure(int(rng.integers(1, max_atoms + 1)))
    minus = measure(int(rng.integers(1, max_atoms + 1)))
    return Instance(
        city,
        DiscreteMeasure(tuple(plus)),
        DiscreteMeasure(tuple(minus)),
        settings=Settings(subdivision_h=subdivision_h),
    )
