"""Generalized urban metric on an augmented graph and its approximants.

``urban_metric`` is an exact label-setting shortest path on the graph.  The
city transformations return new cities whose metrics approximate the original
one: ``friction_relax`` (ball-minimum relaxation ``b_k``), ``truncate_network``
(finite sub-networks ``S^N``) and ``clamp_friction`` (``max(lambda, b)``).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path

from .geometry import (
    AugmentedGraph,
    CityInstance,
    OffroadRelaxation,
    StreetArc,
    segment_segment_distance,
)

INF = math.inf


@dataclass(frozen=True)
class MetricQuery:
    source: int
    target: int


@dataclass(frozen=True)
class MetricResult:
    distance: float
    path: tuple[int, ...]


def dijkstra(g: AugmentedGraph, source: int, target: int | None = None):
    """Distances and predecessor edges from ``source``.

    Ties are broken by vertex id through the heap ordering; a label only
    changes on strict improvement, so results are reproducible.
    """
    n = g.n_vertices
    if not 0 <= source < n:
        raise IndexError(f"vertex {source} out of range")
    dist = [INF] * n
    pred = [-1] * n
    done = [False] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    adj = g.adjacency
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            break
        for v, c, e in adj[u]:
            nd = d + c
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = e
                heapq.heappush(heap, (nd, v))
    return dist, pred


def urban_metric(g: AugmentedGraph, q: MetricQuery) -> MetricResult:
    n = g.n_vertices
    for v in (q.source, q.target):
        if not 0 <= v < n:
            raise IndexError(f"vertex {v} out of range (graph has {n} vertices)")
    dist, pred = dijkstra(g, q.source, q.target)
    d = dist[q.target]
    if math.isinf(d):
        return MetricResult(INF, ())
    path = [q.target]
    while path[-1] != q.source:
        e = pred[path[-1]]
        u, v = int(g.edge_u[e]), int(g.edge_v[e])
        path.append(u if v == path[-1] else v)
    return MetricResult(d, tuple(reversed(path)))


def path_cost(g: AugmentedGraph, path: Sequence[int]) -> float:
    """Cheapest edge-by-edge cost of a vertex path."""
    total = 0.0
    for a, b in zip(path, path[1:]):
        total += min(c for v, c, _ in g.adjacency[a] if v == b)
    return total


def distance_table(g: AugmentedGraph, sources: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """``table[i, j] = d(sources[i], targets[j])``, one Dijkstra per distinct source."""
    table = np.empty((len(sources), len(targets)))
    cache: dict[int, list[float]] = {}
    for i, s in enumerate(sources):
        if s not in cache:
            cache[s] = dijkstra(g, s)[0]
        table[i] = [cache[s][t] for t in targets]
    return table


def distance_matrix(g: AugmentedGraph) -> np.ndarray:
    """All-pairs distances via scipy's compiled Dijkstra (bulk checks only)."""
    n = g.n_vertices
    dense = np.full((n, n), INF)
    np.minimum.at(dense, (g.edge_u, g.edge_v), g.edge_cost)
    dense = np.minimum(dense, dense.T)
    graph = csgraph_from_dense(dense, null_value=INF)
    return shortest_path(graph, method="D", directed=False)


def _elements(city: CityInstance) -> list[tuple[tuple, tuple, float]]:
    elems = [(city.nodes[a.u], city.nodes[a.v], a.friction) for a in city.arcs]
    elems += [(city.nodes[i], city.nodes[i], f) for i, f in sorted(city.node_friction.items())]
    return elems


def friction_relax(city: CityInstance, k: float) -> CityInstance:
    """Replace friction by ``min(k, a, min of the friction field within 1/k)``.

    Arc frictions use segment-to-segment distances to every street and tagged
    point; offroad edges of graphs built from the result use the distance of
    their midpoint (see :class:`OffroadRelaxation`).
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    if city.relaxation is not None:
        raise ValueError("city is already relaxed")
    r = 1.0 / k
    cap = min(float(k), city.ambient_friction)
    elems = _elements(city)
    dim = city.dimension
    lo = np.array([np.minimum(p, q) for p, q, _ in elems]).reshape(len(elems), dim) - r
    hi = np.array([np.maximum(p, q) for p, q, _ in elems]).reshape(len(elems), dim) + r

    def relaxed(p, q, own: float) -> float:
        best = min(cap, own)
        box_lo, box_hi = np.minimum(p, q), np.maximum(p, q)
        near = np.all((lo <= box_hi) & (hi >= box_lo), axis=1)
        for j in np.flatnonzero(near):
            p2, q2, f = elems[j]
            if f < best and segment_segment_distance(p, q, p2, q2) <= r:
                best = f
        return best

    arcs = tuple(
        StreetArc(a.u, a.v, relaxed(city.nodes[a.u], city.nodes[a.v], a.friction)) for a in city.arcs
    )
    node_friction = {
        i: relaxed(city.nodes[i], city.nodes[i], f) for i, f in city.node_friction.items()
    }
    relaxation = OffroadRelaxation(radius=r, elements=tuple(elems))
    return CityInstance(city.nodes, arcs, cap, node_friction, relaxation)


def truncate_network(city: CityInstance, keep: Iterable[int]) -> CityInstance:
    keep = sorted(set(int(i) for i in keep))
    for i in keep:
        if not 0 <= i < len(city.arcs):
            raise IndexError(f"arc {i} does not exist")
    return replace(city, arcs=tuple(city.arcs[i] for i in keep))


def clamp_friction(city: CityInstance, lam: float) -> CityInstance:
    if not 0 < lam < city.ambient_friction:
        raise ValueError(f"lambda must lie in (0, a) = (0, {city.ambient_friction}), got {lam}")
    arcs = tuple(StreetArc(a.u, a.v, max(a.friction, lam)) for a in city.arcs)
    node_friction = {i: max(f, lam) for i, f in city.node_friction.items()}
    return replace(city, arcs=arcs, node_friction=node_friction)
