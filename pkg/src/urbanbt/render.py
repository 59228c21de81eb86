"""Deterministic SVG drawings of planar cities, measures and fluxes."""

from __future__ import annotations

from typing import Sequence

from .geometry import CityInstance, DiscreteMeasure

SIZE = 600.0
MARGIN = 20.0
MAX_FLUX_WIDTH = 8.0


def _xy(p: Sequence[float]) -> tuple[str, str]:
    scale = (SIZE - 2 * MARGIN) / 2.0
    x = MARGIN + (p[0] + 1.0) * scale
    y = MARGIN + (1.0 - p[1]) * scale
    return f"{x:.3f}", f"{y:.3f}"


def _line(p, q, cls: str, width: float) -> str:
    x1, y1 = _xy(p)
    x2, y2 = _xy(q)
    return f'<line class="{cls}" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke-width="{width:.3f}"/>'


def _circle(p, cls: str, r: float) -> str:
    cx, cy = _xy(p)
    return f'<circle class="{cls}" cx="{cx}" cy="{cy}" r="{r:.3f}"/>'


def render_svg(
    city: CityInstance,
    mu_plus: DiscreteMeasure | None = None,
    mu_minus: DiscreteMeasure | None = None,
    flux: Sequence[tuple[Sequence[float], Sequence[float], float]] = (),
) -> str:
    """Streets as thin lines, isolated network points as markers, flux as scaled strokes.

    ``flux`` holds ``(p, q, flow)`` triples; stroke width is proportional to
    ``|flow|``.
    """
    if city.dimension not in (0, 2):
        raise ValueError("only planar cities can be rendered")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE:.0f}" height="{SIZE:.0f}" '
        f'viewBox="0 0 {SIZE:.0f} {SIZE:.0f}">',
        "<style>.arc{stroke:#888}.flux{stroke:#c0392b;stroke-opacity:0.8}"
        ".node{fill:#444}.source{fill:#2471a3}.sink{fill:#229954}</style>",
        '<g id="network">',
    ]
    for arc in city.arcs:
        out.append(_line(city.nodes[arc.u], city.nodes[arc.v], "arc", 1.0))
    touched = {i for arc in city.arcs for i in (arc.u, arc.v)}
    for i, p in enumerate(city.nodes):
        if i not in touched:
            out.append(_circle(p, "node", 2.0))
    out.append("</g>")
    flows = [(p, q, abs(f)) for p, q, f in flux if f != 0]
    if flows:
        top = max(f for _, _, f in flows)
        out.append('<g id="flux">')
        for p, q, f in flows:
            out.append(_line(p, q, "flux", MAX_FLUX_WIDTH * f / top))
        out.append("</g>")
    out.append('<g id="measures">')
    for mu, cls in ((mu_plus, "source"), (mu_minus, "sink")):
        if mu is not None:
            for p in mu.points:
                out.append(_circle(p, cls, 4.0))
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
