"""Uncapacitated min-cost flow by successive shortest paths with node potentials.

Every augmentation runs a multi-source Dijkstra on reduced costs from all
nodes with remaining excess to the nearest node with remaining deficit.
Potentials are updated with ``min(dist, dist_to_sink)`` so reduced costs stay
nonnegative on every residual arc; at termination they certify optimality and
are returned as the dual solution.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

INF = math.inf


@dataclass
class FlowSolution:
    flow: np.ndarray
    potential: np.ndarray
    cost: float
    feasible: bool
    augmentations: int


def min_cost_flow(
    n_nodes: int,
    tails,
    heads,
    costs,
    supply,
    tol: float = 1e-12,
    max_augmentations: int = 1_000_000,
) -> FlowSolution:
    """Solve ``min sum c_a f_a`` s.t. ``out - in = supply``, ``f >= 0``.

    Arcs are directed and uncapacitated; costs must be finite and nonnegative.
    ``supply`` must sum to zero (up to ``tol`` times its scale).  The returned
    potentials ``p`` satisfy ``c_a + p[tail] - p[head] >= 0`` on every arc
    with equality wherever flow is positive.
    """
    tails = [int(t) for t in tails]
    heads = [int(h) for h in heads]
    cost = [float(c) for c in costs]
    if any(not (c >= 0.0 and math.isfinite(c)) for c in cost):
        raise ValueError("arc costs must be finite and nonnegative")
    excess = [float(s) for s in supply]
    if len(excess) != n_nodes:
        raise ValueError("one supply value per node required")
    scale = max(1.0, math.fsum(s for s in excess if s > 0))
    eps = tol * scale

    out_arcs: list[list[int]] = [[] for _ in range(n_nodes)]
    in_arcs: list[list[int]] = [[] for _ in range(n_nodes)]
    for a, (t, h) in enumerate(zip(tails, heads)):
        out_arcs[t].append(a)
        in_arcs[h].append(a)

    flow = [0.0] * len(cost)
    pot = [0.0] * n_nodes
    feasible = True
    rounds = 0

    while True:
        sources = [v for v in range(n_nodes) if excess[v] > eps]
        if not sources or all(e >= -eps for e in excess):
            break
        if rounds >= max_augmentations:
            raise RuntimeError("min-cost flow did not terminate")
        rounds += 1

        dist = [INF] * n_nodes
        pred = [-1] * n_nodes  # arc used to reach the node
        pred_fwd = [True] * n_nodes
        done = [False] * n_nodes
        heap = []
        for s in sources:
            dist[s] = 0.0
            heap.append((0.0, s))
        heapq.heapify(heap)
        sink = -1
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            if excess[u] < -eps:
                sink = u
                break
            pu = pot[u]
            for a in out_arcs[u]:
                v = heads[a]
                if done[v]:
                    continue
                rc = cost[a] + pu - pot[v]
                nd = d + (rc if rc > 0.0 else 0.0)
                if nd < dist[v]:
                    dist[v] = nd
                    pred[v] = a
                    pred_fwd[v] = True
                    heapq.heappush(heap, (nd, v))
            for a in in_arcs[u]:
                if flow[a] <= eps:
                    continue
                v = tails[a]
                if done[v]:
                    continue
                rc = -cost[a] + pu - pot[v]
                nd = d + (rc if rc > 0.0 else 0.0)
                if nd < dist[v]:
                    dist[v] = nd
                    pred[v] = a
                    pred_fwd[v] = False
                    heapq.heappush(heap, (nd, v))

        if sink < 0:
            feasible = False
            break

        reach = dist[sink]
        for v in range(n_nodes):
            pot[v] += dist[v] if dist[v] < reach else reach

        delta = -excess[sink]
        path = []
        v = sink
        while pred[v] >= 0:
            a = pred[v]
            path.append((a, pred_fwd[v]))
            if pred_fwd[v]:
                v = tails[a]
            else:
                delta = min(delta, flow[a])
                v = heads[a]
        delta = min(delta, excess[v])
        for a, fwd in path:
            if fwd:
                flow[a] += delta
            else:
                flow[a] -= delta
                if flow[a] <= eps:
                    flow[a] = 0.0
        excess[v] -= delta
        excess[sink] += delta

    f = np.array(flow)
    total = math.fsum(c * x for c, x in zip(cost, flow)) if feasible else INF
    return FlowSolution(f, np.array(pot), total, feasible, rounds)


def cancel_zero_cost_cycles(n_nodes: int, eu, ev, cost, flow, tol: float = 0.0) -> np.ndarray:
    """Remove directed flow cycles made only of zero-cost edges.

    ``flow`` is a signed flow on undirected edges ``(eu[e], ev[e])`` (positive
    means ``eu -> ev``).  Divergence and total cost are unchanged; the total
    absolute flow strictly decreases with every cancelled cycle.
    """
    f = np.array(flow, dtype=float)
    eu = np.asarray(eu)
    ev = np.asarray(ev)
    zero = np.flatnonzero((np.asarray(cost) == 0.0) & (np.abs(f) > tol))
    while len(zero):
        succ: dict[int, list[tuple[int, int]]] = {}
        for e in zero.tolist():
            a, b = (int(eu[e]), int(ev[e])) if f[e] > 0 else (int(ev[e]), int(eu[e]))
            succ.setdefault(a, []).append((b, e))
        cycle = _find_cycle(succ)
        if cycle is None:
            break
        amount = min(abs(f[e]) for e in cycle)
        for e in cycle:
            f[e] -= math.copysign(amount, f[e])
            if abs(f[e]) <= tol:
                f[e] = 0.0
        zero = np.flatnonzero((np.asarray(cost) == 0.0) & (np.abs(f) > tol))
    return f


def _find_cycle(succ: dict[int, list[tuple[int, int]]]) -> list[int] | None:
    state: dict[int, int] = {}  # 1 = on stack, 2 = finished
    for root in sorted(succ):
        if state.get(root):
            continue
        stack = [(root, iter(succ.get(root, ())))]
        path_nodes = [root]
        path_edges: list[int] = []
        state[root] = 1
        while stack:
            node, it = stack[-1]
            step = next(it, None)
            if step is None:
                state[node] = 2
                stack.pop()
                path_nodes.pop()
                if path_edges:
                    path_edges.pop()
                continue
            nxt, e = step
            if state.get(nxt) == 1:
                k = path_nodes.index(nxt)
                return path_edges[k:] + [e]
            if not state.get(nxt):
                state[nxt] = 1
                stack.append((nxt, iter(succ.get(nxt, ()))))
                path_nodes.append(nxt)
                path_edges.append(e)
    return None


def undirected_min_cost_flow(n_nodes: int, eu, ev, edge_cost, supply, tol: float = 1e-12):
    """Min-cost flow on an undirected graph; returns ``(signed edge flow, solution)``.

    Each edge becomes two opposed arcs of equal cost; the net flow is reported
    per edge and zero-cost circulations are cancelled afterwards.
    """
    eu = np.asarray(eu, dtype=np.int64)
    ev = np.asarray(ev, dtype=np.int64)
    c = np.asarray(edge_cost, dtype=float)
    tails = np.empty(2 * len(eu), dtype=np.int64)
    heads = np.empty_like(tails)
    tails[0::2], heads[0::2] = eu, ev
    tails[1::2], heads[1::2] = ev, eu
    sol = min_cost_flow(n_nodes, tails, heads, np.repeat(c, 2), supply, tol=tol)
    net = sol.flow[0::2] - sol.flow[1::2]
    net = cancel_zero_cost_cycles(n_nodes, eu, ev, c, net)
    return net, sol
