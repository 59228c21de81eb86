"""Two sources, one sink: alternating minimisation with an outer grid search vs brute force.

    python3 scripts/v_vs_y.py --mass 0.5 1.0 --resolution 33
"""

import argparse
import time

from urbanbt.bilevel import alternation_grid_search, brute_force_branched
from urbanbt.costs import TransportationCost
from urbanbt.fixtures import fixture_v_vs_y


def parse_cost(text):
    bps, slopes = text.split("/")
    return TransportationCost.piecewise_linear([float(x) for x in bps.split(",")], [float(x) for x in slopes.split(",")])


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--mass", type=float, nargs="+", default=[0.5, 1.0], help="mass of each source")
    parser.add_argument("--tau", type=parse_cost, default="0,1/2,1", help="BREAKPOINTS/SLOPES of a concave cost")
    parser.add_argument("--resolution", type=int, default=33)
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args()

    for mass in args.mass:
        fx = fixture_v_vs_y(args.tau, mass)
        start = time.perf_counter()
        best, results = alternation_grid_search(fx.mu_plus, fx.mu_minus, args.tau, args.resolution, workers=args.workers)
        elapsed = time.perf_counter() - start
        ref, topo = brute_force_branched(fx.mu_plus, fx.mu_minus, args.tau, args.resolution)
        shape = "V" if topo.kind == "star" else f"Y at {topo.point}"
        print(f"mass {mass}: alternation {best.value:.12f} at {best.point} ({len(results)} candidates, {elapsed:.2f} s)")
        print(f"mass {mass}: brute force {ref:.12f}, {shape}, |diff| = {abs(best.value - ref):.2e}")


if __name__ == "__main__":
    main()
