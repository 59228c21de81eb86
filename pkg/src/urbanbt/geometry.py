"""Cities, discrete measures and the augmented graph all computations run on.

A city is a finite polyhedral street network embedded in the cube
``[-1, 1]^n`` with a constant friction per street and an ambient (offroad)
friction ``a`` that may be infinite.  :func:`build_augmented_graph` turns a
city plus a set of terminal points into a finite undirected graph whose
shortest paths approximate the infimum over Lipschitz paths.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

INF = math.inf
COINCIDENCE_TOL = 1e-9

Point = tuple[float, ...]

NETWORK_NODE = "network-node"
SUBDIVISION = "subdivision"
TERMINAL = "terminal"

NETWORK = "network"
OFFROAD = "offroad"


def as_point(coords: Iterable[float]) -> Point:
    p = tuple(float(c) for c in coords)
    if not p:
        raise ValueError("point must have at least one coordinate")
    for c in p:
        if not math.isfinite(c):
            raise ValueError(f"non-finite coordinate in {p}")
        if c < -1.0 or c > 1.0:
            raise ValueError(f"point {p} lies outside the domain [-1, 1]^n")
    return p


def euclid(p: Sequence[float], q: Sequence[float]) -> float:
    if len(p) != len(q):
        raise ValueError(f"dimension mismatch: {len(p)} vs {len(q)}")
    return math.dist(p, q)


def point_segment_distance(x: Sequence[float], p: Sequence[float], q: Sequence[float]) -> float:
    d = [qi - pi for pi, qi in zip(p, q)]
    dd = sum(di * di for di in d)
    if dd == 0.0:
        return math.dist(x, p)
    t = sum((xi - pi) * di for xi, pi, di in zip(x, p, d)) / dd
    t = min(1.0, max(0.0, t))
    return math.dist(x, [pi + t * di for pi, di in zip(p, d)])


def segment_segment_distance(p1, q1, p2, q2) -> float:
    """Distance between the closed segments [p1, q1] and [p2, q2] in any dimension."""
    d1 = np.subtract(q1, p1, dtype=float)
    d2 = np.subtract(q2, p2, dtype=float)
    r = np.subtract(p1, p2, dtype=float)
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a == 0.0 and e == 0.0:
        return float(np.linalg.norm(r))
    if a == 0.0:
        s, t = 0.0, min(1.0, max(0.0, f / e))
    else:
        c = float(d1 @ r)
        if e == 0.0:
            t, s = 0.0, min(1.0, max(0.0, -c / a))
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > 0.0 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t, s = 0.0, min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t, s = 1.0, min(1.0, max(0.0, (b - c) / a))
    c1 = np.asarray(p1, dtype=float) + s * d1
    c2 = np.asarray(p2, dtype=float) + t * d2
    return float(np.linalg.norm(c1 - c2))


def points_to_segment_distance(xs: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Vectorised :func:`point_segment_distance` for an ``(N, n)`` array of points."""
    d = q - p
    dd = float(d @ d)
    if dd == 0.0:
        return np.linalg.norm(xs - p, axis=1)
    t = np.clip((xs - p) @ d / dd, 0.0, 1.0)
    return np.linalg.norm(xs - (p + t[:, None] * d), axis=1)


@dataclass(frozen=True)
class StreetArc:
    u: int
    v: int
    friction: float

    def __post_init__(self):
        if not self.friction >= 0.0:
            raise ValueError(f"arc friction must be nonnegative, got {self.friction}")


@dataclass(frozen=True)
class OffroadRelaxation:
    """Ball-minimum rule for offroad costs produced by ``friction_relax``.

    An offroad edge whose midpoint lies within ``radius`` of one of the
    ``elements`` (segments ``(p, q, friction)``; isolated points have ``p == q``)
    is charged the smallest such friction instead of the ambient value.
    """

    radius: float
    elements: tuple[tuple[Point, Point, float], ...]


@dataclass(frozen=True)
class CityInstance:
    nodes: tuple[Point, ...]
    arcs: tuple[StreetArc, ...]
    ambient_friction: float
    # friction carried by network points that have no incident arc; they have
    # zero length, so only the ball-minimum relaxation ever sees them
    node_friction: dict[int, float] = field(default_factory=dict)
    relaxation: OffroadRelaxation | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(as_point(p) for p in self.nodes))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        a = float(self.ambient_friction)
        if not a >= 0.0:
            raise ValueError(f"ambient friction must be nonnegative, got {a}")
        object.__setattr__(self, "ambient_friction", a)
        dims = {len(p) for p in self.nodes}
        if len(dims) > 1:
            raise ValueError("all nodes must have the same dimension")
        n = len(self.nodes)
        for i, arc in enumerate(self.arcs):
            if not (0 <= arc.u < n and 0 <= arc.v < n):
                raise ValueError(f"arc {i} references a missing node")
            if arc.friction > a:
                raise ValueError(f"arc {i} friction {arc.friction} exceeds ambient friction {a}")
            if euclid(self.nodes[arc.u], self.nodes[arc.v]) == 0.0:
                raise ValueError(f"arc {i} has zero length")
        for node, f in self.node_friction.items():
            if not 0 <= node < n:
                raise ValueError(f"node friction given for missing node {node}")
            if not 0.0 <= f <= a:
                raise ValueError(f"node {node} friction {f} must lie in [0, {a}]")

    @property
    def dimension(self) -> int:
        return len(self.nodes[0]) if self.nodes else 0

    @cached_property
    def arc_lengths(self) -> tuple[float, ...]:
        return tuple(euclid(self.nodes[arc.u], self.nodes[arc.v]) for arc in self.arcs)

    def arc_segment(self, i: int) -> tuple[Point, Point]:
        arc = self.arcs[i]
        return self.nodes[arc.u], self.nodes[arc.v]


@dataclass(frozen=True)
class DiscreteMeasure:
    atoms: tuple[tuple[Point, float], ...]

    def __post_init__(self):
        atoms = tuple((as_point(p), float(m)) for p, m in self.atoms)
        for p, m in atoms:
            if not (m > 0.0 and math.isfinite(m)):
                raise ValueError(f"atom mass at {p} must be positive and finite, got {m}")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def dirac(cls, point: Iterable[float], mass: float = 1.0) -> "DiscreteMeasure":
        return cls(((tuple(point), mass),))

    @property
    def points(self) -> list[Point]:
        return [p for p, _ in self.atoms]

    @property
    def masses(self) -> list[float]:
        return [m for _, m in self.atoms]

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    def __len__(self) -> int:
        return len(self.atoms)


def check_balanced(mu_plus: DiscreteMeasure, mu_minus: DiscreteMeasure, tol: float = 1e-9) -> None:
    if abs(mu_plus.total_mass - mu_minus.total_mass) > tol:
        raise ValueError(
            f"measures have different total mass: {mu_plus.total_mass} vs {mu_minus.total_mass}"
        )


class _PointIndex:
    """Hash lookup of points up to the coincidence tolerance."""

    def __init__(self, tol: float = COINCIDENCE_TOL):
        self.tol = tol
        self._cells: dict[tuple[int, ...], list[int]] = {}
        self._points: list[Point] = []

    def _key(self, p: Sequence[float]) -> tuple[int, ...]:
        return tuple(math.floor(c / self.tol) for c in p)

    def find(self, p: Sequence[float]) -> int | None:
        key = self._key(p)
        best, best_d = None, INF
        for off in itertools.product((-1, 0, 1), repeat=len(key)):
            for idx in self._cells.get(tuple(k + o for k, o in zip(key, off)), ()):
                d = math.dist(p, self._points[idx])
                if d <= self.tol and (d < best_d or (d == best_d and idx < best)):
                    best, best_d = idx, d
        return best

    def add(self, p: Point) -> int:
        idx = len(self._points)
        self._points.append(p)
        self._cells.setdefault(self._key(p), []).append(idx)
        return idx


@dataclass(frozen=True, eq=False)
class AugmentedGraph:
    """Undirected geometric graph; edge ``e`` joins ``edge_u[e]`` and ``edge_v[e]``.

    ``edge_cost`` is the cost of moving one unit of mass across the whole edge,
    i.e. cost-per-length times ``edge_length``.  Network edges come first
    (grouped by parent arc, ``edge_arc``), offroad edges after them with
    ``edge_arc == -1``.
    """

    coords: np.ndarray
    origin: tuple[str, ...]
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_length: np.ndarray
    edge_cost_per_length: np.ndarray
    edge_arc: np.ndarray
    node_vertex: tuple[int, ...]
    terminal_vertex: tuple[int, ...]
    ambient_friction: float
    _index: _PointIndex = field(repr=False, default=None)

    @property
    def n_vertices(self) -> int:
        return len(self.origin)

    @property
    def n_edges(self) -> int:
        return len(self.edge_u)

    @cached_property
    def edge_cost(self) -> np.ndarray:
        return self.edge_cost_per_length * self.edge_length

    @cached_property
    def is_network(self) -> np.ndarray:
        return self.edge_arc >= 0

    def edge_kind(self, e: int) -> str:
        return NETWORK if self.edge_arc[e] >= 0 else OFFROAD

    @property
    def network_edges(self) -> np.ndarray:
        return np.flatnonzero(self.is_network)

    @property
    def offroad_edges(self) -> np.ndarray:
        return np.flatnonzero(~self.is_network)

    @cached_property
    def adjacency(self) -> list[list[tuple[int, float, int]]]:
        """Per vertex: ``(neighbour, cost, edge id)`` in edge-id order."""
        adj: list[list[tuple[int, float, int]]] = [[] for _ in range(self.n_vertices)]
        cost = self.edge_cost.tolist()
        for e, (u, v) in enumerate(zip(self.edge_u.tolist(), self.edge_v.tolist())):
            adj[u].append((v, cost[e], e))
            adj[v].append((u, cost[e], e))
        return adj

    def vertex_at(self, point: Sequence[float]) -> int | None:
        return self._index.find(point)

    def snap(self, point: Sequence[float]) -> int:
        v = self.vertex_at(point)
        if v is None:
            raise ValueError(f"point {tuple(point)} is not a vertex of the graph (tol {COINCIDENCE_TOL})")
        return v

    def with_cost_per_length(self, cost_per_length: np.ndarray) -> "AugmentedGraph":
        cpl = np.asarray(cost_per_length, dtype=float)
        if cpl.shape != self.edge_length.shape:
            raise ValueError("one cost per edge required")
        return AugmentedGraph(
            coords=self.coords,
            origin=self.origin,
            edge_u=self.edge_u,
            edge_v=self.edge_v,
            edge_length=self.edge_length,
            edge_cost_per_length=cpl,
            edge_arc=self.edge_arc,
            node_vertex=self.node_vertex,
            terminal_vertex=self.terminal_vertex,
            ambient_friction=self.ambient_friction,
            _index=self._index,
        )


def dyadic_level(length: float, h: float) -> int:
    """Smallest ``j`` with ``length / 2**j <= h``."""
    j = max(0, math.ceil(math.log2(length / h))) if length > h else 0
    while length / 2**j > h:
        j += 1
    while j > 0 and length / 2 ** (j - 1) <= h:
        j -= 1
    return j


def segments_overlap(p1, q1, p2, q2) -> bool:
    """True when two segments share a piece of positive length."""
    d1 = np.subtract(q1, p1, dtype=float)
    d2 = np.subtract(q2, p2, dtype=float)
    a, e, b = float(d1 @ d1), float(d2 @ d2), float(d1 @ d2)
    if a * e - b * b > 1e-12 * a * e:
        return False
    if segment_segment_distance(p1, q1, p2, q2) > COINCIDENCE_TOL:
        return False
    if point_segment_distance(p2, p1, q1) > COINCIDENCE_TOL and point_segment_distance(q2, p1, q1) > COINCIDENCE_TOL:
        # p2 and q2 far from [p1, q1]: overlap only if [p2, q2] contains [p1, q1]
        return point_segment_distance(p1, p2, q2) <= COINCIDENCE_TOL
    s = sorted(float(np.subtract(x, p1, dtype=float) @ d1) / a for x in (p2, q2))
    return (min(1.0, s[1]) - max(0.0, s[0])) * math.sqrt(a) > COINCIDENCE_TOL


def _segment_crossing(p1, q1, p2, q2) -> Point | None:
    """Single common point of two non-parallel segments, if they meet."""
    d1 = np.subtract(q1, p1, dtype=float)
    d2 = np.subtract(q2, p2, dtype=float)
    r = np.subtract(p1, p2, dtype=float)
    a, e, b = float(d1 @ d1), float(d2 @ d2), float(d1 @ d2)
    denom = a * e - b * b
    if denom <= 1e-12 * a * e:
        return None
    c, f = float(d1 @ r), float(d2 @ r)
    s = (b * f - c * e) / denom
    t = (a * f - b * c) / denom
    if not (-1e-12 <= s <= 1 + 1e-12 and -1e-12 <= t <= 1 + 1e-12):
        return None
    c1 = np.asarray(p1, dtype=float) + min(1.0, max(0.0, s)) * d1
    c2 = np.asarray(p2, dtype=float) + min(1.0, max(0.0, t)) * d2
    if float(np.linalg.norm(c1 - c2)) > COINCIDENCE_TOL:
        return None
    return tuple(c1.tolist())


def _split_points(city: CityInstance, terminals: list[Point]) -> dict[int, list[tuple[float, Point]]]:
    """Interior points of each arc where it must be split, as ``(parameter, point)``."""
    n_arcs = len(city.arcs)
    if n_arcs == 0:
        return {}
    ends = [city.arc_segment(i) for i in range(n_arcs)]
    P = np.array([p for p, _ in ends], dtype=float)
    Q = np.array([q for _, q in ends], dtype=float)
    lo = np.minimum(P, Q) - COINCIDENCE_TOL
    hi = np.maximum(P, Q) + COINCIDENCE_TOL

    points: list[Point] = list(city.nodes) + list(terminals)
    for i in range(n_arcs - 1):
        cand = np.flatnonzero(np.all((lo[i + 1 :] <= hi[i]) & (hi[i + 1 :] >= lo[i]), axis=1)) + i + 1
        for j in cand.tolist():
            if segments_overlap(P[i], Q[i], P[j], Q[j]):
                raise ValueError(f"arcs {i} and {j} overlap; friction would be ambiguous")
            x = _segment_crossing(P[i], Q[i], P[j], Q[j])
            if x is not None:
                points.append(x)

    lengths = np.linalg.norm(Q - P, axis=1)
    out: dict[int, list[tuple[float, Point]]] = {}
    for x in points:
        xa = np.asarray(x, dtype=float)
        for i in np.flatnonzero(np.all((lo <= xa) & (hi >= xa), axis=1)).tolist():
            d = Q[i] - P[i]
            s = float((xa - P[i]) @ d) / float(d @ d)
            along = s * lengths[i]
            if along <= COINCIDENCE_TOL or along >= lengths[i] - COINCIDENCE_TOL:
                continue
            if point_segment_distance(x, ends[i][0], ends[i][1]) <= COINCIDENCE_TOL:
                out.setdefault(i, []).append((s, x))
    return out


def build_augmented_graph(
    city: CityInstance, terminals: Iterable[Sequence[float]], subdivision_h: float
) -> AugmentedGraph:
    h = float(subdivision_h)
    if not math.isfinite(h) or h <= 0.0:
        raise ValueError(f"subdivision_h must be finite and positive, got {subdivision_h}")
    terminals = [as_point(t) for t in terminals]
    dim = city.dimension or (len(terminals[0]) if terminals else 0)
    for t in terminals:
        if len(t) != dim:
            raise ValueError(f"terminal {t} has dimension {len(t)}, expected {dim}")

    index = _PointIndex()
    coords: list[Point] = []
    origin: list[str] = []

    def vertex(p: Point, tag: str) -> int:
        found = index.find(p)
        if found is not None:
            return found
        coords.append(p)
        origin.append(tag)
        return index.add(p)

    node_vertex = tuple(vertex(p, NETWORK_NODE) for p in city.nodes)

    # the network is a point set: streets meet where they cross, and nodes or
    # terminals lying inside a street split it
    on_arc = _split_points(city, terminals)

    eu: list[int] = []
    ev: list[int] = []
    elen: list[float] = []
    ecpl: list[float] = []
    earc: list[int] = []
    for i, arc in enumerate(city.arcs):
        p, q = city.arc_segment(i)
        length = city.arc_lengths[i]
        parts = 2 ** dyadic_level(length, h)
        params = [(k / parts, None) for k in range(1, parts)]
        params += on_arc.get(i, [])
        params.sort(key=lambda item: item[0])
        chain = [node_vertex[arc.u]]
        for s, pt in params:
            if pt is None:
                pt = tuple(pi + s * (qi - pi) for pi, qi in zip(p, q))
            w = vertex(pt, SUBDIVISION)
            if w != chain[-1]:
                chain.append(w)
        if node_vertex[arc.v] != chain[-1]:
            chain.append(node_vertex[arc.v])
        for a, b in zip(chain, chain[1:]):
            eu.append(a)
            ev.append(b)
            elen.append(euclid(coords[a], coords[b]))
            ecpl.append(arc.friction)
            earc.append(i)

    terminal_vertex = tuple(vertex(t, TERMINAL) for t in terminals)

    xy = np.array(coords, dtype=float).reshape(len(coords), dim)
    n_v = len(coords)
    relax = city.relaxation
    if n_v > 1 and (math.isfinite(city.ambient_friction) or relax is not None):
        iu, ju = np.triu_indices(n_v, 1)
        lengths = np.linalg.norm(xy[ju] - xy[iu], axis=1)
        cpl = np.full(len(iu), city.ambient_friction)
        if relax is not None:
            mids = 0.5 * (xy[iu] + xy[ju])
            tree = cKDTree(mids)
            for p, q, f in relax.elements:
                if f >= city.ambient_friction:
                    continue
                p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
                reach = 0.5 * float(np.linalg.norm(q - p)) + relax.radius
                cand = np.array(tree.query_ball_point(0.5 * (p + q), reach * (1 + 1e-12)), dtype=np.int64)
                if cand.size == 0:
                    continue
                near = cand[points_to_segment_distance(mids[cand], p, q) <= relax.radius]
                cpl[near] = np.minimum(cpl[near], f)
        keep = np.isfinite(cpl)
        eu.extend(iu[keep].tolist())
        ev.extend(ju[keep].tolist())
        elen.extend(lengths[keep].tolist())
        ecpl.extend(cpl[keep].tolist())
        earc.extend([-1] * int(keep.sum()))

    return AugmentedGraph(
        coords=xy,
        origin=tuple(origin),
        edge_u=np.array(eu, dtype=np.int64),
        edge_v=np.array(ev, dtype=np.int64),
        edge_length=np.array(elen, dtype=float),
        edge_cost_per_length=np.array(ecpl, dtype=float),
        edge_arc=np.array(earc, dtype=np.int64),
        node_vertex=node_vertex,
        terminal_vertex=terminal_vertex,
        ambient_friction=city.ambient_friction,
        _index=index,
    )


def measure_terminals(*measures: DiscreteMeasure) -> list[Point]:
    return [p for mu in measures for p in mu.points]
