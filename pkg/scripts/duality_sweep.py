"""Plan value vs flow value on random planar cities.

    python3 scripts/duality_sweep.py --count 50 --h 0.5
"""

import argparse
import time

from urbanbt.beckmann import duality_gap
from urbanbt.fixtures import random_instance
from urbanbt.geometry import build_augmented_graph, measure_terminals
from urbanbt.transport import kr_potentials


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--count", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0, help="first seed")
    parser.add_argument("--h", type=float, default=0.5, help="subdivision length")
    args = parser.parse_args()

    print("seed,vertices,edges,w,b,gap,kr_value")
    worst = 0.0
    start = time.perf_counter()
    for seed in range(args.seed, args.seed + args.count):
        inst = random_instance(seed, subdivision_h=args.h)
        g = build_augmented_graph(inst.city, measure_terminals(inst.mu_plus, inst.mu_minus), args.h)
        w, b, gap = duality_gap(g, inst.mu_plus, inst.mu_minus)
        kr, _ = kr_potentials(g, inst.mu_plus, inst.mu_minus)
        worst = max(worst, gap / max(1.0, w))
        print(f"{seed},{g.n_vertices},{g.n_edges},{w:.17g},{b:.17g},{gap:.3e},{kr:.17g}")
    print(f"# worst relative gap {worst:.3e} over {args.count} instances, {time.perf_counter() - start:.2f} s")


if __name__ == "__main__":
    main()
