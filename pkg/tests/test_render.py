import xml.etree.ElementTree as ET

from urbanbt.beckmann import beckmann_solve
from urbanbt.fixtures import fixture_comb, fixture_ring
from urbanbt.render import render_svg

NS = "{http://www.w3.org/2000/svg}"


def elements(svg, cls):
    root = ET.fromstring(svg)
    return [el for el in root.iter() if el.get("class") == cls]


def test_ring_renders_tree_and_flux():
    for levels in (1, 2):
        fx = fixture_ring(levels)
        g = fx.graph()
        _, flux = beckmann_solve(g, fx.mu_plus, fx.mu_minus)
        triples = [(g.coords[g.edge_u[e]].tolist(), g.coords[g.edge_v[e]].tolist(), f) for e, f in flux.edge_flows.items()]
        svg = render_svg(fx.city, fx.mu_plus, fx.mu_minus, triples)
        assert len(elements(svg, "arc")) == len(fx.city.arcs)
        lines = elements(svg, "flux")
        assert len(lines) == len(fx.city.arcs)
        widths = sorted({float(el.get("stroke-width")) for el in lines})
        # stroke width proportional to flow: trunk mass 1/4 gets the full width
        assert widths[-1] == 8.0
        assert widths[0] == 8.0 / 2**levels
        assert len(elements(svg, "sink")) == 4 * 2**levels
        assert svg == render_svg(fx.city, fx.mu_plus, fx.mu_minus, triples)


def test_network_only_and_comb_markers():
    fx = fixture_comb()
    svg = render_svg(fx.city, fx.mu_plus, fx.mu_minus)
    assert elements(svg, "flux") == []
    assert len(elements(svg, "node")) == 65
    ring = fixture_ring(1)
    assert elements(render_svg(ring.city), "flux") == []
