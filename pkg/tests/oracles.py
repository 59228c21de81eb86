"""Independent reference computations used only by the tests."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

# tighter than the HiGHS defaults (1e-7) so the oracle can judge 1e-8 agreement
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}

M_GRID = np.round(np.arange(0.0, 100.0 + 1e-9, 0.01), 10)


def tau_on_grid(tau, ms: np.ndarray) -> np.ndarray:
    """Vectorised tau: a concave piecewise-linear cost is the minimum of its affine pieces."""
    if tau.kind == "power":
        return ms**tau.alpha
    intercept = 0.0
    lines = []
    for i, (m, s) in enumerate(zip(tau.breakpoints, tau.slopes)):
        if i:
            intercept += (tau.slopes[i - 1] - s) * m
        lines.append(intercept + s * ms)
    return np.min(lines, axis=0)


def conjugate_by_grid(tau, b: float) -> tuple[float, bool]:
    """``max_m tau(m) - b m`` over ``m`` in ``{0, 0.01, ..., 100}``.

    The flag is true when the maximum sits at the right end of the grid,
    i.e. the supremum is presumably unbounded.
    """
    vals = tau_on_grid(tau, M_GRID) - b * M_GRID
    k = int(np.argmax(vals))
    return float(vals[k]), k == len(M_GRID) - 1


def right_derivative_fd(tau, m: float, step: float = 1e-7) -> float:
    return (tau(m + step) - tau(m)) / step


def transport_lp(table: np.ndarray, plus, minus) -> float:
    """Transportation LP solved by HiGHS; infinite cells are excluded."""
    table = np.asarray(table, dtype=float)
    n_p, n_m = table.shape
    cells = [(i, j) for i in range(n_p) for j in range(n_m) if np.isfinite(table[i, j])]
    if not cells:
        return np.inf
    a_eq = np.zeros((n_p + n_m, len(cells)))
    for k, (i, j) in enumerate(cells):
        a_eq[i, k] = 1.0
        a_eq[n_p + j, k] = 1.0
    res = linprog(
        [table[i, j] for i, j in cells],
        A_eq=a_eq,
        b_eq=np.concatenate([plus, minus]),
        bounds=(0, None),
        method="highs",
        options=HIGHS_OPTIONS,
    )
    return float(res.fun) if res.status == 0 else np.inf


def beckmann_lp(n: int, eu, ev, cost, supply) -> float:
    """Undirected min-cost flow as an LP with one variable per direction."""
    m = len(eu)
    a_eq = np.zeros((n, 2 * m))
    for e, (u, v) in enumerate(zip(eu, ev)):
        a_eq[u, e] += 1.0
        a_eq[v, e] -= 1.0
        a_eq[v, m + e] += 1.0
        a_eq[u, m + e] -= 1.0
    res = linprog(np.concatenate([cost, cost]), A_eq=a_eq, b_eq=supply, bounds=(0, None), method="highs", options=HIGHS_OPTIONS)
    return float(res.fun) if res.status == 0 else np.inf


def floyd_warshall(n: int, eu, ev, cost) -> np.ndarray:
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for u, v, c in zip(eu, ev, cost):
        d[u, v] = min(d[u, v], c)
        d[v, u] = min(d[v, u], c)
    for k in range(n):
        d = np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :])
    return d
