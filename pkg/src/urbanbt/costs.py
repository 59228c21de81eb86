"""Transportation costs, their maintenance-cost conjugates and friction selection.

Two families are supported, both with exact conjugates:

* ``piecewise_linear`` concave costs given by breakpoints ``0 = m_0 < ... < m_K``
  and strictly decreasing slopes ``s_0 > ... > s_K >= 0``;
* ``power`` costs ``tau(m) = m**alpha`` with ``0 < alpha < 1``.

The maintenance cost is ``eps(b) = sup_{m >= 0} tau(m) - b m``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

INF = math.inf

PIECEWISE_LINEAR = "piecewise_linear"
POWER = "power"


@dataclass(frozen=True)
class TransportationCost:
    kind: str
    breakpoints: tuple[float, ...] = ()
    slopes: tuple[float, ...] = ()
    alpha: float | None = None

    def __post_init__(self):
        if self.kind == PIECEWISE_LINEAR:
            bp = tuple(float(m) for m in self.breakpoints)
            sl = tuple(float(s) for s in self.slopes)
            if not bp or len(bp) != len(sl):
                raise ValueError("need one slope per breakpoint")
            if bp[0] != 0.0:
                raise ValueError("first breakpoint must be 0")
            if any(b1 >= b2 for b1, b2 in zip(bp, bp[1:])):
                raise ValueError("breakpoints must be strictly increasing")
            if any(s1 <= s2 for s1, s2 in zip(sl, sl[1:])):
                raise ValueError("slopes must be strictly decreasing (concavity)")
            if not all(math.isfinite(s) for s in sl) or sl[-1] < 0.0:
                raise ValueError("slopes must be finite and nonnegative")
            object.__setattr__(self, "breakpoints", bp)
            object.__setattr__(self, "slopes", sl)
            values = [0.0]
            for i in range(1, len(bp)):
                values.append(values[-1] + sl[i - 1] * (bp[i] - bp[i - 1]))
            object.__setattr__(self, "_values", tuple(values))
        elif self.kind == POWER:
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError(f"power exponent must lie in (0, 1), got {self.alpha}")
        else:
            raise ValueError(f"unknown transportation cost kind {self.kind!r}")

    @classmethod
    def piecewise_linear(cls, breakpoints: Sequence[float], slopes: Sequence[float]) -> "TransportationCost":
        return cls(PIECEWISE_LINEAR, tuple(breakpoints), tuple(slopes))

    @classmethod
    def power(cls, alpha: float) -> "TransportationCost":
        return cls(POWER, alpha=float(alpha))

    @property
    def values(self) -> tuple[float, ...]:
        """``tau`` at the breakpoints."""
        return self._values

    @property
    def slope_at_zero(self) -> float:
        return self.slopes[0] if self.kind == PIECEWISE_LINEAR else INF

    def __call__(self, m: float) -> float:
        return tau_eval(self, m)


def tau_eval(tc: TransportationCost, m: float) -> float:
    if m < 0:
        raise ValueError(f"mass must be nonnegative, got {m}")
    if tc.kind == POWER:
        return m**tc.alpha
    i = bisect.bisect_right(tc.breakpoints, m) - 1
    return tc.values[i] + tc.slopes[i] * (m - tc.breakpoints[i])


@dataclass(frozen=True)
class MaintenanceCost:
    """Convex nonincreasing conjugate of a transportation cost.

    For the piecewise-linear family ``eps`` is affine between consecutive
    slopes of ``tau``: on ``[s_i, s_{i-1}]`` it equals ``tau(m_i) - b m_i``.
    """

    kind: str
    knots: tuple[float, ...] = ()
    anchors: tuple[tuple[float, float], ...] = ()
    alpha: float | None = None

    @property
    def domain_min(self) -> float:
        """``inf dom(eps)``."""
        return self.knots[-1] if self.kind == PIECEWISE_LINEAR else 0.0

    @property
    def zero_threshold(self) -> float:
        """``inf eps^{-1}(0)``, the ambient friction paired with this cost."""
        return self.knots[0] if self.kind == PIECEWISE_LINEAR else INF

    def __call__(self, b: float) -> float:
        if b < 0:
            raise ValueError(f"friction must be nonnegative, got {b}")
        if self.kind == POWER:
            if b == 0.0:
                return INF
            if math.isinf(b):
                return 0.0
            a = self.alpha
            return (1.0 - a) * (a / b) ** (a / (1.0 - a))
        # knots are the slopes s_0 > s_1 > ... > s_K
        for s, (m, v) in zip(self.knots, self.anchors):
            if s <= b:
                return v - b * m if m else v
        return INF

    def breakpoints(self) -> list[tuple[float, float]]:
        """``(b, eps(b))`` at the kinks, ascending in ``b`` (piecewise-linear only)."""
        return [(s, self(s)) for s in reversed(self.knots)]


def conjugate(tc: TransportationCost) -> MaintenanceCost:
    if tc.kind == POWER:
        return MaintenanceCost(POWER, alpha=tc.alpha)
    anchors = tuple(zip(tc.breakpoints, tc.values))
    return MaintenanceCost(PIECEWISE_LINEAR, knots=tc.slopes, anchors=anchors)


def optimal_friction(tc: TransportationCost, m: float) -> float:
    """Right derivative of ``tau`` at ``m``, i.e. ``-max d(-tau)(m)``."""
    if m < 0:
        raise ValueError(f"mass must be nonnegative, got {m}")
    if tc.kind == POWER:
        if m == 0:
            raise ValueError("optimal friction of a power cost is infinite at zero mass")
        return tc.alpha * m ** (tc.alpha - 1.0)
    return tc.slopes[bisect.bisect_right(tc.breakpoints, m) - 1]


def dual_network_cost(
    tc: TransportationCost, flux_magnitudes: Iterable[tuple[float, float]]
) -> tuple[float, list[float]]:
    """Evaluate ``sum len * (b m + eps(b))`` at the pointwise optimal frictions.

    ``flux_magnitudes`` holds ``(length, |flux|)`` per segment.  The result
    equals ``sum len * tau(m)``.
    """
    if not math.isfinite(tc.slope_at_zero):
        raise ValueError("growth condition violated: tau'(0) is infinite")
    eps = conjugate(tc)
    terms: list[float] = []
    frictions: list[float] = []
    for length, m in flux_magnitudes:
        if length <= 0:
            raise ValueError(f"segment length must be positive, got {length}")
        b = optimal_friction(tc, m)
        frictions.append(b)
        terms.append(length * (b * m + eps(b)))
    return math.fsum(terms), frictions


def biconjugate_check(
    tc: TransportationCost, m_grid: Iterable[float], b_grid: Iterable[float]
) -> float:
    """Largest deviation of ``tau`` from its lower envelope ``min_b b m + eps(b)``."""
    eps = conjugate(tc)
    lines = [(b, eps(b)) for b in b_grid]
    lines = [(b, e) for b, e in lines if math.isfinite(e)]
    gap = 0.0
    for m in m_grid:
        env = min((b * m + e for b, e in lines), default=INF)
        gap = max(gap, abs(tau_eval(tc, m) - env))
    return gap
