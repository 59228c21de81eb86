"""Wasserstein-1 distance, optimal plans and Kantorovich-Rubinstein potentials."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flow import min_cost_flow, undirected_min_cost_flow
from .geometry import AugmentedGraph, DiscreteMeasure, check_balanced
from .metric import distance_table

INF = math.inf


@dataclass(frozen=True)
class TransportPlan:
    entries: tuple[tuple[int, int, float], ...]

    def marginals(self, n_plus: int, n_minus: int) -> tuple[np.ndarray, np.ndarray]:
        rows = np.zeros(n_plus)
        cols = np.zeros(n_minus)
        for i, j, m in self.entries:
            rows[i] += m
            cols[j] += m
        return rows, cols

    def cost(self, table: np.ndarray) -> float:
        return math.fsum(m * table[i, j] for i, j, m in self.entries)


@dataclass(frozen=True)
class PotentialVector:
    """Potential ``phi`` on every graph vertex."""

    values: np.ndarray

    def __getitem__(self, v: int) -> float:
        return float(self.values[v])

    def max_violation(self, vertices, table: np.ndarray) -> float:
        """Largest ``|phi(u) - phi(v)| - d(u, v)`` over pairs with finite distance."""
        phi = self.values[np.asarray(vertices)]
        diff = np.abs(phi[:, None] - phi[None, :]) - table
        diff = diff[np.isfinite(table)]
        return float(diff.max()) if diff.size else 0.0

    def edge_violation(self, g: AugmentedGraph) -> float:
        """Largest ``|phi(u) - phi(v)| - cost(u, v)`` over graph edges."""
        if g.n_edges == 0:
            return 0.0
        diff = np.abs(self.values[g.edge_u] - self.values[g.edge_v]) - g.edge_cost
        return float(diff.max())


def _balanced_masses(mu_plus: DiscreteMeasure, mu_minus: DiscreteMeasure):
    check_balanced(mu_plus, mu_minus)
    plus = np.array(mu_plus.masses, dtype=float)
    minus = np.array(mu_minus.masses, dtype=float)
    # remove the admitted sub-tolerance mismatch so the flow problem is exact
    if len(minus):
        minus = minus * (plus.sum() / minus.sum())
    return plus, minus


def wasserstein(
    table, mu_plus: DiscreteMeasure, mu_minus: DiscreteMeasure
) -> tuple[float, TransportPlan]:
    """Exact transportation LP over a ``len(mu_plus) x len(mu_minus)`` cost table.

    Infinite entries are forbidden cells; if no finite plan exists the value
    is ``inf`` and the plan is empty.
    """
    table = np.asarray(table, dtype=float)
    if table.shape != (len(mu_plus), len(mu_minus)):
        raise ValueError(f"distance table has shape {table.shape}, expected {(len(mu_plus), len(mu_minus))}")
    if np.any(table < 0) or np.any(np.isnan(table)):
        raise ValueError("distances must be nonnegative")
    plus, minus = _balanced_masses(mu_plus, mu_minus)
    n_p, n_m = len(plus), len(minus)
    ii, jj = np.nonzero(np.isfinite(table))
    sol = min_cost_flow(
        n_p + n_m,
        ii,
        n_p + jj,
        table[ii, jj],
        np.concatenate([plus, -minus]),
    )
    if not sol.feasible:
        return INF, TransportPlan(())
    entries = tuple(
        (int(i), int(j), float(f)) for i, j, f in zip(ii, jj, sol.flow) if f > 0.0
    )
    plan = TransportPlan(entries)
    return plan.cost(table), plan


def support_vertices(g: AugmentedGraph, mu: DiscreteMeasure) -> list[int]:
    return [g.snap(p) for p in mu.points]


def wasserstein_on_graph(
    g: AugmentedGraph, mu_plus: DiscreteMeasure, mu_minus: DiscreteMeasure
) -> tuple[float, TransportPlan]:
    """W over the graph metric: distance table between supports, then the plan LP."""
    table = distance_table(g, support_vertices(g, mu_plus), support_vertices(g, mu_minus))
    return wasserstein(table, mu_plus, mu_minus)


def vertex_supply(g: AugmentedGraph, mu_plus: DiscreteMeasure, mu_minus: DiscreteMeasure) -> np.ndarray:
    plus, minus = _balanced_masses(mu_plus, mu_minus)
    supply = np.zeros(g.n_vertices)
    np.add.at(supply, support_vertices(g, mu_plus), plus)
    np.add.at(supply, support_vertices(g, mu_minus), -minus)
    return supply


def kr_potentials(
    g: AugmentedGraph, mu_plus: DiscreteMeasure, mu_minus: DiscreteMeasure
) -> tuple[float, PotentialVector]:
    """Dual potentials from the graph min-cost-flow certificate.

    ``phi = -p`` where ``p`` are the solver's node potentials, so
    ``|phi(u) - phi(v)| <= cost(u, v)`` on every edge and
    ``sum phi d(mu_plus - mu_minus)`` equals the optimal transport cost.
    """
    supply = vertex_supply(g, mu_plus, mu_minus)
    _, sol = undirected_min_cost_flow(g.n_vertices, g.edge_u, g.edge_v, g.edge_cost, supply)
    if not sol.feasible:
        raise ValueError("Wasserstein distance is infinite: no dual certificate exists")
    phi = -sol.potential
    phi = phi - phi.min()
    value = math.fsum((phi * supply).tolist())
    return value, PotentialVector(phi)
