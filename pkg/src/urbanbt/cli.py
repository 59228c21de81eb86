"""Command-line interface: ``urbanbt <command> ...``.

Exit status is 0 on success, 1 on invalid input and 2 when the result
contains an infinite value (the JSON is still written).  Solver settings given
as flags override the ``settings`` block of the instance file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .beckmann import beckmann_solve, duality_gap, flux_cost
from .bilevel import alternate_minimize
from .costs import TransportationCost, conjugate
from .fixtures import FIXTURES, to_instance
from .geometry import build_augmented_graph, measure_terminals
from .instance import (
    Instance,
    InstanceError,
    contains_inf,
    dump_instance,
    dump_result,
    format_float,
    load_instance,
)
from .metric import MetricQuery, clamp_friction, friction_relax, truncate_network, urban_metric
from .render import render_svg
from .transport import wasserstein_on_graph

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFINITE = 2

BATCH_COMMANDS = ("wasserstein", "beckmann", "dualgap", "bilevel")


def _graph(inst: Instance, city=None, h=None, extra=()):
    city = inst.city if city is None else city
    h = inst.subdivision_h if h is None else h
    return build_augmented_graph(city, measure_terminals(inst.mu_plus, inst.mu_minus) + list(extra), h)


def _pt(g, v: int) -> list[float]:
    return [float(c) for c in g.coords[v]]


def _flux_entries(g, flows) -> list[dict]:
    out = []
    for e in np.flatnonzero(flows):
        out.append(
            {
                "u": _pt(g, int(g.edge_u[e])),
                "v": _pt(g, int(g.edge_v[e])),
                "kind": g.edge_kind(int(e)),
                "flow": float(flows[e]),
            }
        )
    return out


def run_metric(inst: Instance, source: int, target: int, keep=None, h=None, relax=None, clamp=None) -> dict:
    city = inst.city
    n = len(city.nodes)
    for v in (source, target):
        if not 0 <= v < n:
            raise IndexError(f"node {v} out of range (instance has {n} nodes)")
    if keep is not None:
        city = truncate_network(city, keep)
    if clamp is not None:
        city = clamp_friction(city, clamp)
    if relax is not None:
        city = friction_relax(city, relax)
    g = _graph(inst, city, h)
    res = urban_metric(g, MetricQuery(g.node_vertex[source], g.node_vertex[target]))
    return {"distance": res.distance, "path": [_pt(g, v) for v in res.path]}


def run_wasserstein(inst: Instance, h=None) -> dict:
    g = _graph(inst, h=h)
    value, plan = wasserstein_on_graph(g, inst.mu_plus, inst.mu_minus)
    return {
        "value": value,
        "plan": [{"source": i, "sink": j, "mass": m} for i, j, m in plan.entries],
    }


def run_beckmann(inst: Instance, h=None) -> dict:
    g = _graph(inst, h=h)
    value, flux = beckmann_solve(g, inst.mu_plus, inst.mu_minus)
    return {"value": value, "flux": _flux_entries(g, flux.flows)}


def run_dualgap(inst: Instance, h=None) -> dict:
    w, b, gap = duality_gap(_graph(inst, h=h), inst.mu_plus, inst.mu_minus)
    return {"w": w, "b": b, "gap": gap}


def run_bilevel(inst: Instance, h=None, max_iter=None, tol=None) -> dict:
    if inst.tau is None:
        raise InstanceError("bilevel needs a 'tau' entry in the instance")
    settings = inst.settings.merged(subdivision_h=h, max_iter=max_iter, tol=tol)
    g = _graph(inst, h=settings.subdivision_h)
    state, trace = alternate_minimize(
        g,
        inst.tau,
        inst.mu_plus,
        inst.mu_minus,
        max_iter=100 if settings.max_iter is None else settings.max_iter,
        tol=1e-9 if settings.tol is None else settings.tol,
    )
    frictions = [
        {"u": _pt(g, int(g.edge_u[e])), "v": _pt(g, int(g.edge_v[e])), "friction": float(b)}
        for e, b in zip(g.network_edges, state.frictions)
    ]
    return {
        "objective": state.objective,
        "branched_cost": flux_cost(inst.tau, state.flux, g),
        "iterations": state.iteration,
        "trace": [float(t) for t in trace],
        "frictions": frictions,
        "flux": _flux_entries(g, state.flux.flows),
    }


def parse_tau(text: str) -> TransportationCost:
    """``power:ALPHA`` or ``pl:M0,M1,.../S0,S1,...`` (breakpoints, then slopes)."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "power":
            return TransportationCost.power(float(rest))
        if kind == "pl":
            bps, _, sls = rest.partition("/")
            return TransportationCost.piecewise_linear(
                [float(x) for x in bps.split(",")], [float(x) for x in sls.split(",")]
            )
    except ValueError as exc:
        raise InstanceError(f"bad tau {text!r}: {exc}") from None
    raise InstanceError(f"bad tau {text!r}: expected power:ALPHA or pl:BREAKPOINTS/SLOPES")


def parse_grid(text: str) -> list[float]:
    """``start:stop:num`` (inclusive linspace) or a comma-separated list."""
    try:
        if text.count(":") == 2:
            start, stop, num = text.split(":")
            return np.linspace(float(start), float(stop), int(num)).tolist()
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise InstanceError(f"bad grid {text!r}") from None


def run_conjugate(tau_text: str, grid_text: str) -> str:
    eps = conjugate(parse_tau(tau_text))
    lines = ["b,eps"]
    for b in parse_grid(grid_text):
        if b < 0:
            raise InstanceError("friction grid must be nonnegative")
        e = eps(b)
        lines.append(f"{format_float(b)},{'inf' if math.isinf(e) else format_float(e)}")
    return "\n".join(lines) + "\n"


def run_render(inst: Instance, result: dict | None) -> str:
    flux = []
    if result is not None:
        for item in result.get("flux", []):
            flow = item["flow"]
            flux.append((item["u"], item["v"], math.inf if flow == "inf" else float(flow)))
    return render_svg(inst.city, inst.mu_plus, inst.mu_minus, flux)


def _emit(result: dict, out) -> int:
    out.write(dump_result(result) + "\n")
    return EXIT_INFINITE if contains_inf(result) else EXIT_OK


def _instance_command(cmd: str, inst: Instance, args) -> dict:
    if cmd == "wasserstein":
        return run_wasserstein(inst, args.h)
    if cmd == "beckmann":
        return run_beckmann(inst, args.h)
    if cmd == "dualgap":
        return run_dualgap(inst, args.h)
    if cmd == "bilevel":
        return run_bilevel(inst, args.h, args.max_iter, args.tol)
    raise ValueError(cmd)


def _batch_one(job) -> tuple[str, int, str]:
    cmd, path, out_dir, args = job
    target = Path(out_dir) / f"{Path(path).stem}.{cmd}.json"
    try:
        result = _instance_command(cmd, load_instance(path), args)
    except (ValueError, IndexError) as exc:
        return str(path), EXIT_INVALID, str(exc)
    text = dump_result(result) + "\n"
    target.write_text(text)
    return str(path), EXIT_INFINITE if contains_inf(result) else EXIT_OK, str(target)


def _run_batch(cmd: str, args) -> int:
    src = Path(args.batch)
    if not src.is_dir():
        raise InstanceError(f"{src} is not a directory")
    out_dir = Path(args.out_dir) if args.out_dir else src
    out_dir.mkdir(parents=True, exist_ok=True)
    files = sorted(p for p in src.glob("*.json") if p.name.count(".") == 1)
    jobs = [(cmd, str(p), str(out_dir), args) for p in files]
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(_batch_one, jobs))
    status = EXIT_OK
    for path, code, info in results:
        print(f"{path}\t{code}\t{info}")
        status = max(status, code)
    return status


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="urbanbt", description="Urban metrics, optimal transport and branched transport on street networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metric", help="urban distance between two network nodes")
    p.add_argument("instance")
    p.add_argument("source", type=int)
    p.add_argument("target", type=int)
    p.add_argument("--keep", type=_int_list, help="comma-separated arc ids to keep")
    p.add_argument("--relax", type=float, metavar="K", help="ball-minimum relaxation with radius 1/K")
    p.add_argument("--clamp", type=float, metavar="LAMBDA", help="raise frictions to at least LAMBDA")
    p.add_argument("--h", type=float, help="subdivision length")

    for name, text in (
        ("wasserstein", "Wasserstein-1 distance and optimal plan"),
        ("beckmann", "minimal-flow value and flux"),
        ("dualgap", "plan value, flow value and their gap"),
        ("bilevel", "alternating minimisation of the coupled objective"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("instance", nargs="?")
        p.add_argument("--h", type=float, help="subdivision length")
        p.add_argument("--batch", metavar="DIR", help="run on every *.json in DIR in parallel")
        p.add_argument("--out-dir", help="where batch results go (default: DIR)")
        p.add_argument("--workers", type=int, default=None)
        if name == "bilevel":
            p.add_argument("--max-iter", type=int)
            p.add_argument("--tol", type=float)
        else:
            p.set_defaults(max_iter=None, tol=None)

    p = sub.add_parser("conjugate", help="maintenance cost on a friction grid (CSV)")
    p.add_argument("tau", help="power:ALPHA or pl:M0,M1,.../S0,S1,...")
    p.add_argument("--b-grid", default="0:2:21", help="start:stop:num or comma list")

    p = sub.add_parser("render", help="draw an instance and optionally a flux result as SVG")
    p.add_argument("instance")
    p.add_argument("--result", help="JSON output of beckmann or bilevel")
    p.add_argument("-o", "--output", help="SVG path (default: stdout)")

    p = sub.add_parser("fixture", help="write a built-in example instance")
    p.add_argument("name", choices=sorted(FIXTURES))
    p.add_argument("-o", "--output")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    return parser


def _fixture_params(items: list[str]) -> dict:
    params = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise InstanceError(f"bad --param {item!r}, expected KEY=VALUE")
        params[key] = int(value) if value.lstrip("-").isdigit() else float(value)
    return params


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors are validation errors; exit code 2 is reserved for "inf" results
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    out = sys.stdout
    try:
        cmd = args.command
        if cmd == "metric":
            inst = load_instance(args.instance)
            return _emit(run_metric(inst, args.source, args.target, args.keep, args.h, args.relax, args.clamp), out)
        if cmd in BATCH_COMMANDS:
            if args.batch:
                return _run_batch(cmd, args)
            if not args.instance:
                raise InstanceError("an instance path or --batch DIR is required")
            return _emit(_instance_command(cmd, load_instance(args.instance), args), out)
        if cmd == "conjugate":
            out.write(run_conjugate(args.tau, args.b_grid))
            return EXIT_OK
        if cmd == "render":
            inst = load_instance(args.instance)
            result = None
            if args.result:
                result = json.loads(Path(args.result).read_text())
            svg = run_render(inst, result)
            if args.output:
                Path(args.output).write_text(svg)
            else:
                out.write(svg)
            return EXIT_OK
        if cmd == "fixture":
            fx = FIXTURES[args.name](**_fixture_params(args.param))
            text = dump_instance(to_instance(fx))
            if args.output:
                Path(args.output).write_text(text)
            else:
                out.write(text)
            return EXIT_OK
    except (ValueError, IndexError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
