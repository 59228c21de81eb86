import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from urbanbt.costs import TransportationCost
from urbanbt.geometry import CityInstance, DiscreteMeasure, StreetArc, segments_overlap

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

coord = st.floats(-1.0, 1.0, allow_nan=False).map(lambda x: round(x, 3))
points2 = st.tuples(coord, coord)


@st.composite
def cities(draw, max_nodes=6, max_arcs=8, finite_ambient=True):
    nodes = draw(st.lists(points2, min_size=2, max_size=max_nodes, unique=True))
    if finite_ambient:
        a = draw(st.floats(0.5, 4.0))
    else:
        a = draw(st.one_of(st.floats(0.5, 4.0), st.just(math.inf)))
    pairs = [(i, j) for i in range(len(nodes)) for j in range(i + 1, len(nodes))]
    chosen = draw(st.lists(st.sampled_from(pairs), max_size=max_arcs, unique=True))
    kept = []
    for i, j in chosen:
        if not any(segments_overlap(nodes[i], nodes[j], nodes[k], nodes[l]) for k, l in kept):
            kept.append((i, j))
    top = a if math.isfinite(a) else 4.0
    arcs = [StreetArc(i, j, draw(st.floats(0.0, top))) for i, j in kept]
    return CityInstance(tuple(nodes), tuple(arcs), a)


@st.composite
def measure_pairs(draw, points=points2, max_atoms=3):
    def one():
        atoms = draw(st.lists(st.tuples(points, st.floats(0.1, 1.0)), min_size=1, max_size=max_atoms))
        total = math.fsum(m for _, m in atoms)
        return DiscreteMeasure(tuple((p, m / total) for p, m in atoms))

    return one(), one()


@st.composite
def piecewise_costs(draw, max_pieces=4):
    k = draw(st.integers(1, max_pieces))
    gaps = draw(st.lists(st.floats(0.1, 3.0), min_size=k - 1, max_size=k - 1))
    bps = [0.0]
    for g in gaps:
        bps.append(round(bps[-1] + g, 6))
    slopes = sorted(set(round(s, 6) for s in draw(st.lists(st.floats(0.0, 5.0), min_size=k, max_size=k))), reverse=True)
    if len(slopes) < k:
        slopes = [float(k - i) for i in range(k)]
    return TransportationCost.piecewise_linear(bps, slopes)


NAMED_COSTS = {
    "linear": TransportationCost.piecewise_linear([0.0], [1.0]),
    "capped": TransportationCost.piecewise_linear([0.0, 1.0], [1.0, 0.0]),
    "two_slope": TransportationCost.piecewise_linear([0.0, 1.0], [2.0, 1.0]),
}


def random_piecewise_cost(rng: np.random.Generator) -> TransportationCost:
    k = int(rng.integers(2, 6))
    bps = np.concatenate([[0.0], np.cumsum(rng.uniform(0.2, 2.0, size=k - 1))])
    slopes = np.sort(rng.choice(np.arange(0.0, 5.0, 0.25), size=k, replace=False))[::-1]
    return TransportationCost.piecewise_linear(bps.tolist(), slopes.tolist())


@pytest.fixture(scope="session")
def sine_fixture():
    from urbanbt.fixtures import fixture_sine

    return fixture_sine()


SESSION_START = [0.0]
CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion n")
    config.addinivalue_line("markers", "run_last: run after every other test in the session")


def pytest_sessionstart(session):
    import time

    SESSION_START[0] = time.perf_counter()


def pytest_collection_modifyitems(items):
    items.sort(key=lambda item: item.get_closest_marker("run_last") is not None)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    n, text = mark.args
    if report.when == "setup" and report.passed:
        return
    prev = CRITERIA.get(n, (text, "PASS"))[1]
    status = "PASS" if report.passed and prev == "PASS" else "FAIL"
    CRITERIA[n] = (text, status)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        text, status = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {text}")
