"""Branched transport as urban planning: alternating minimisation and oracles.

On a fixed candidate graph the coupled objective

    sum_network (b_e |xi_e| + eps(b_e)) len_e + tau'(0) sum_offroad |F_e| len_e

is convex in the flux for fixed frictions (a min-cost flow) and separable and
convex in the frictions for a fixed flux (minimised by ``b_e = tau'_+(|xi_e|)``).
Eliminating the flux gives the urban planning cost of the city, eliminating
the frictions gives the branched transport cost of the flux.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .beckmann import MassFlux, beckmann_solve, flux_cost
from .costs import MaintenanceCost, TransportationCost, conjugate, optimal_friction, tau_eval
from .geometry import (
    AugmentedGraph,
    CityInstance,
    DiscreteMeasure,
    StreetArc,
    build_augmented_graph,
    euclid,
    measure_terminals,
    segments_overlap,
)
from .transport import wasserstein_on_graph

INF = math.inf


@dataclass(frozen=True, eq=False)
class BilevelState:
    city: CityInstance
    flux: MassFlux
    frictions: np.ndarray
    objective: float
    iteration: int


def urban_planning_cost(
    city: CityInstance,
    eps: MaintenanceCost,
    mu_plus: DiscreteMeasure,
    mu_minus: DiscreteMeasure,
    subdivision_h: float | None = None,
) -> float:
    """``W_{d_{S,a,b}}(mu_plus, mu_minus) + sum_arcs eps(b) len``.

    ``subdivision_h=None`` keeps every arc as a single segment.
    """
    a = eps.zero_threshold
    if city.ambient_friction != a:
        raise ValueError(
            f"ambient friction {city.ambient_friction} must equal inf eps^-1(0) = {a}"
        )
    maintenance = [eps(arc.friction) * length for arc, length in zip(city.arcs, city.arc_lengths)]
    if any(math.isinf(m) for m in maintenance):
        return INF
    h = subdivision_h if subdivision_h is not None else max(city.arc_lengths, default=1.0)
    g = build_augmented_graph(city, measure_terminals(mu_plus, mu_minus), h)
    w, _ = wasserstein_on_graph(g, mu_plus, mu_minus)
    return w + math.fsum(maintenance)


def _coupled_objective(g, frictions, eps, slope0, flux) -> float:
    net = g.is_network
    m = np.abs(flux.flows)
    lengths = g.edge_length
    terms = (frictions * m[net] * lengths[net]).tolist()
    terms += [eps(float(b)) * float(l) for b, l in zip(frictions, lengths[net])]
    terms += (slope0 * m[~net] * lengths[~net]).tolist()
    return math.fsum(terms)


def city_from_graph(g: AugmentedGraph, frictions, ambient: float) -> CityInstance:
    """City whose streets are the network edges of ``g`` with the given frictions."""
    nodes = [tuple(p) for p in g.coords.tolist()]
    arcs = [
        StreetArc(int(g.edge_u[e]), int(g.edge_v[e]), float(b))
        for e, b in zip(g.network_edges, frictions)
    ]
    return CityInstance(nodes, arcs, ambient)


def alternate_minimize(
    g: AugmentedGraph,
    tc: TransportationCost,
    mu_plus: DiscreteMeasure,
    mu_minus: DiscreteMeasure,
    max_iter: int = 100,
    tol: float = 1e-9,
    init_friction=None,
) -> tuple[BilevelState, list[float]]:
    """Alternate exact flux and friction steps on the candidate graph ``g``.

    The trace records the coupled objective after every half-step.  The run
    stops once a flux step fails to improve on the preceding friction step by
    more than ``tol`` (relative); the returned state pairs the last flux with
    its optimal frictions.
    """
    slope0 = tc.slope_at_zero
    if not math.isfinite(slope0):
        raise ValueError("growth condition violated: tau'(0) is infinite")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if g.ambient_friction != slope0:
        raise ValueError(f"graph ambient friction {g.ambient_friction} must equal tau'(0) = {slope0}")
    eps = conjugate(tc)
    net = g.is_network
    n_net = int(net.sum())
    if init_friction is None:
        b = np.full(n_net, slope0)
    else:
        b = np.asarray(init_friction, dtype=float).copy()
        if b.shape != (n_net,) or np.any(b < 0) or np.any(b > slope0):
            raise ValueError("init_friction needs one value in [0, tau'(0)] per network edge")

    cpl = np.where(net, 0.0, slope0)
    trace: list[float] = []
    seen: set[bytes] = set()
    best: tuple[MassFlux, np.ndarray, float] | None = None
    iteration = 0
    for iteration in range(1, max_iter + 1):
        cpl[net] = b
        value, flux = beckmann_solve(g.with_cost_per_length(cpl), mu_plus, mu_minus)
        if math.isinf(value):
            raise ValueError("measures cannot be connected in the candidate graph")
        coupled = _coupled_objective(g, b, eps, slope0, flux)
        trace.append(coupled)
        if best is not None and coupled >= best[2] - tol * max(1.0, abs(best[2])):
            iteration -= 1
            break
        key = b.tobytes()
        if key in seen:
            raise RuntimeError("friction pattern repeated while the objective still decreased")
        seen.add(key)
        b = np.array([optimal_friction(tc, float(x)) for x in np.abs(flux.flows[net])])
        j = flux_cost(tc, flux, g)
        trace.append(j)
        best = (flux, b.copy(), j)

    flux, frictions, j = best
    state = BilevelState(
        city=city_from_graph(g, frictions, slope0),
        flux=flux,
        frictions=frictions,
        objective=_coupled_objective(g, frictions, eps, slope0, flux),
        iteration=iteration,
    )
    return state, trace


def equivalence_check(
    g: AugmentedGraph,
    tc: TransportationCost,
    mu_plus: DiscreteMeasure,
    mu_minus: DiscreteMeasure,
    tol: float = 1e-6,
    **alternation,
) -> tuple[float, float, float]:
    """Branched cost and urban planning cost at the alternation fixed point."""
    state, _ = alternate_minimize(g, tc, mu_plus, mu_minus, **alternation)
    j = flux_cost(tc, state.flux, g)
    u = urban_planning_cost(state.city, conjugate(tc), mu_plus, mu_minus)
    gap = abs(j - u)
    if gap > tol * max(1.0, j):
        raise AssertionError(f"branched cost {j} and urban planning cost {u} differ by {gap}")
    return j, u, gap


@dataclass(frozen=True)
class Topology:
    kind: str  # "star" or "branch"
    hub: tuple[float, ...]
    members: tuple[int, ...] = ()
    point: tuple[float, ...] | None = None


def _hub_side(mu_plus: DiscreteMeasure, mu_minus: DiscreteMeasure):
    if len(mu_plus) == 1:
        return mu_plus.points[0], mu_minus
    if len(mu_minus) == 1:
        return mu_minus.points[0], mu_plus
    raise ValueError("brute force needs a single source or a single sink")


def grid_points(dim: int, resolution: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, resolution)
    return np.array(list(itertools.product(axis, repeat=dim)))


def topology_cost(tc: TransportationCost, hub, others: DiscreteMeasure, topo: Topology) -> float:
    """Branched transport cost of the straight-segment tree described by ``topo``."""
    terms = []
    grouped = set(topo.members)
    for i, (x, m) in enumerate(others.atoms):
        if i in grouped:
            terms.append(tau_eval(tc, m) * euclid(x, topo.point))
        else:
            terms.append(tau_eval(tc, m) * euclid(x, hub))
    if grouped:
        total = math.fsum(others.masses[i] for i in grouped)
        terms.append(tau_eval(tc, total) * euclid(topo.point, hub))
    return math.fsum(terms)


def brute_force_branched(
    mu_plus: DiscreteMeasure,
    mu_minus: DiscreteMeasure,
    tc: TransportationCost,
    topology_grid_resolution: int,
) -> tuple[float, Topology]:
    """Enumerate direct stars and single-branch-point trees on a grid.

    One side must be a single atom (the hub).  Every subset of at least two
    atoms on the other side may be merged at a grid point before travelling
    to the hub together; the rest travel directly.
    """
    if len(mu_plus) + len(mu_minus) > 4:
        raise ValueError("instance too large for brute force (at most 4 atoms)")
    if not 1 <= topology_grid_resolution <= 64:
        raise ValueError("grid resolution must lie in [1, 64]")
    hub, others = _hub_side(mu_plus, mu_minus)
    star = Topology("star", hub)
    best_value, best = topology_cost(tc, hub, others, star), star
    grid = grid_points(len(hub), topology_grid_resolution)
    hub_arr = np.asarray(hub)
    pts = np.asarray(others.points)
    masses = np.asarray(others.masses)
    tau_single = np.array([tau_eval(tc, m) for m in masses])
    direct = tau_single * np.linalg.norm(pts - hub_arr, axis=1)
    to_hub = np.linalg.norm(grid - hub_arr, axis=1)
    for size in range(2, len(others) + 1):
        for members in itertools.combinations(range(len(others)), size):
            idx = list(members)
            rest = [i for i in range(len(others)) if i not in members]
            cost = tau_eval(tc, math.fsum(masses[idx])) * to_hub + direct[rest].sum()
            for i in idx:
                cost = cost + tau_single[i] * np.linalg.norm(grid - pts[i], axis=1)
            k = int(np.argmin(cost))
            topo = Topology("branch", hub, tuple(members), tuple(grid[k].tolist()))
            value = topology_cost(tc, hub, others, topo)
            if value < best_value:
                best_value, best = value, topo
    return best_value, best


def topology_arcs(hub, others: DiscreteMeasure, topo: Topology) -> list[tuple[tuple, tuple]]:
    """Straight segments of a topology, dropping degenerate ones."""
    segs = []
    for i, x in enumerate(others.points):
        end = topo.point if i in topo.members else hub
        segs.append((tuple(x), tuple(end)))
    if topo.members:
        segs.append((tuple(topo.point), tuple(hub)))
    return [(p, q) for p, q in segs if euclid(p, q) > 0]


@dataclass(frozen=True, eq=False)
class CandidateResult:
    point: tuple[float, ...]
    value: float
    state: BilevelState
    warm: bool


def candidate_city(hub, others: DiscreteMeasure, point, friction: float) -> CityInstance:
    """Direct streets from every atom to the hub plus a Y through ``point``.

    Streets that would run along an already placed street are left out; the
    placed streets cover them.
    """
    nodes = [tuple(hub)] + [tuple(x) for x in others.points]
    candidates = []
    p = tuple(float(c) for c in point)
    if all(euclid(p, q) > 0 for q in nodes):
        nodes.append(p)
        j = len(nodes) - 1
        candidates += [(i + 1, j) for i in range(len(others))]
        candidates.append((j, 0))
    candidates += [(i + 1, 0) for i in range(len(others))]
    kept: list[tuple[int, int]] = []
    for u, v in candidates:
        if euclid(nodes[u], nodes[v]) == 0:
            continue
        if any(segments_overlap(nodes[u], nodes[v], nodes[a], nodes[b]) for a, b in kept):
            continue
        kept.append((u, v))
    return CityInstance(nodes, [StreetArc(u, v, friction) for u, v in kept], friction)


def _tree_friction(g: AugmentedGraph, tc: TransportationCost, hub, others: DiscreteMeasure, point):
    """Frictions for the tree that merges every atom at ``point``; ``tau'(0)`` elsewhere."""
    slope0 = tc.slope_at_zero
    mass_on = {}
    hub_v = g.snap(hub)
    p_v = g.vertex_at(point)
    if p_v is None or p_v == hub_v:
        return None
    for x, m in others.atoms:
        mass_on[frozenset((g.snap(x), p_v))] = m
    mass_on[frozenset((p_v, hub_v))] = others.total_mass
    b = []
    for e in g.network_edges:
        key = frozenset((int(g.edge_u[e]), int(g.edge_v[e])))
        m = mass_on.get(key)
        b.append(slope0 if m is None else optimal_friction(tc, m))
    return np.array(b)


def _solve_candidate(args) -> CandidateResult:
    mu_plus, mu_minus, tc, point, max_iter, tol = args
    hub, others = _hub_side(mu_plus, mu_minus)
    city = candidate_city(hub, others, point, tc.slope_at_zero)
    h = 4.0 * math.sqrt(len(hub))
    g = build_augmented_graph(city, measure_terminals(mu_plus, mu_minus), h)
    best = None
    inits = [(None, False)]
    warm = _tree_friction(g, tc, hub, others, point)
    if warm is not None:
        inits.append((warm, True))
    for init, is_warm in inits:
        state, _ = alternate_minimize(g, tc, mu_plus, mu_minus, max_iter, tol, init)
        value = flux_cost(tc, state.flux, g)
        if best is None or value < best.value:
            best = CandidateResult(tuple(point), value, state, is_warm)
    return best


def alternation_grid_search(
    mu_plus: DiscreteMeasure,
    mu_minus: DiscreteMeasure,
    tc: TransportationCost,
    resolution: int,
    max_iter: int = 100,
    tol: float = 1e-9,
    workers: int | None = None,
) -> tuple[CandidateResult, list[CandidateResult]]:
    """Alternate on the candidate graph of every grid point and keep the cheapest.

    Each candidate is solved from ``b = tau'(0)`` and from the frictions of the
    tree merged at the grid point.  ``workers > 1`` spreads candidates over
    processes.
    """
    hub, _ = _hub_side(mu_plus, mu_minus)
    jobs = [(mu_plus, mu_minus, tc, tuple(p.tolist()), max_iter, tol) for p in grid_points(len(hub), resolution)]
    if workers and workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_candidate, jobs, chunksize=32))
    else:
        results = [_solve_candidate(job) for job in jobs]
    best = min(results, key=lambda r: r.value)
    return best, results
