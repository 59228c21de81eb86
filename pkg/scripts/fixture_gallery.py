"""Check every built-in fixture and draw it with its minimal flux.

    python3 scripts/fixture_gallery.py --out gallery
"""

import argparse
import math
from pathlib import Path

from urbanbt.beckmann import beckmann_solve
from urbanbt.fixtures import FIXTURES, check_fixture, fixture_ring, to_instance
from urbanbt.instance import dump_instance
from urbanbt.render import render_svg


def flux_triples(fx):
    g = fx.graph()
    value, flux = beckmann_solve(g, fx.mu_plus, fx.mu_minus)
    if math.isinf(value):
        return value, []
    coords = g.coords.tolist()
    return value, [(coords[g.edge_u[e]], coords[g.edge_v[e]], f) for e, f in flux.edge_flows.items()]


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", default="gallery", help="output directory")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    fixtures = {name: make() for name, make in sorted(FIXTURES.items())}
    fixtures["ring1"] = fixture_ring(1)
    for name, fx in fixtures.items():
        for r in check_fixture(fx):
            e = r.expectation
            status = "ok" if r.passed else "FAIL"
            print(f"{name:15s} {e.quantity:16s} {e.comparator} {e.reference:.6g}: observed {r.observed:.12g} [{status}]")
        value, triples = flux_triples(fx)
        (out / f"{name}.json").write_text(dump_instance(to_instance(fx)))
        (out / f"{name}.svg").write_text(render_svg(fx.city, fx.mu_plus, fx.mu_minus, triples))
        print(f"{name:15s} flow value {value:.12g}, drawing in {out / (name + '.svg')}")


if __name__ == "__main__":
    main()
