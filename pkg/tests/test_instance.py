import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import cities, measure_pairs
from urbanbt.costs import TransportationCost
from urbanbt.instance import (
    Instance,
    InstanceError,
    Settings,
    dump_instance,
    dump_result,
    format_float,
    load_instance,
    parse_instance,
)

BASE = {
    "dimension": 2,
    "ambient_friction": 3.0,
    "nodes": [[0.0, 0.0], [1.0, 0.0]],
    "arcs": [{"u": 0, "v": 1, "friction": 2.0}],
    "mu_plus": [{"point": [0.0, 0.0], "mass": 1.0}],
    "mu_minus": [{"point": [1.0, 0.0], "mass": 1.0}],
}


def test_parse_minimal():
    inst = parse_instance(BASE)
    assert inst.city.arcs[0].friction == 2.0
    assert inst.tau is None
    assert inst.subdivision_h == 0.25


def test_inf_sentinel():
    inst = parse_instance({**BASE, "ambient_friction": "inf"})
    assert inst.city.ambient_friction == math.inf
    assert json.loads(dump_instance(inst))["ambient_friction"] == "inf"


@pytest.mark.parametrize(
    "patch, word",
    [
        ({"colour": 1}, "colour"),
        ({"arcs": [{"u": 0, "v": 1, "friction": 2.0, "speed": 1}]}, "speed"),
        ({"settings": {"subdivision_h": 0.5, "solver": "x"}}, "solver"),
        ({"mu_plus": [{"point": [0.0, 0.0], "mass": 1.0, "label": "a"}]}, "label"),
        ({"tau": {"kind": "power", "params": {"beta": 0.5}}}, "beta"),
    ],
)
def test_unknown_keys_named(patch, word):
    with pytest.raises(InstanceError, match=word):
        parse_instance({**BASE, **patch})


@pytest.mark.parametrize(
    "patch",
    [
        {"dimension": 0},
        {"ambient_friction": "lots"},
        {"nodes": [[0.0, 0.0], [2.0, 0.0]]},
        {"nodes": [[0.0, 0.0], [1.0]]},
        {"arcs": [{"u": 0, "v": 1, "friction": 5.0}]},
        {"arcs": [{"u": 0, "v": 1}]},
        {"mu_minus": [{"point": [1.0, 0.0], "mass": -1.0}]},
        {"tau": {"kind": "cubic"}},
    ],
)
def test_invalid_values_rejected(patch):
    with pytest.raises(InstanceError):
        parse_instance({**BASE, **patch})


def test_missing_key():
    obj = dict(BASE)
    del obj["arcs"]
    with pytest.raises(InstanceError, match="arcs"):
        parse_instance(obj)


def test_load_errors(tmp_path):
    with pytest.raises(InstanceError):
        load_instance(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InstanceError):
        load_instance(bad)


def test_settings_precedence():
    s = Settings(subdivision_h=0.5, max_iter=10)
    merged = s.merged(subdivision_h=0.1, max_iter=None, tol=1e-6)
    assert merged == Settings(subdivision_h=0.1, max_iter=10, tol=1e-6)


@given(
    cities(finite_ambient=False),
    measure_pairs(points=st.tuples(st.floats(-1, 1), st.floats(-1, 1))),
    st.one_of(st.none(), st.floats(0.51, 0.99).map(TransportationCost.power)),
)
def test_round_trip_bit_exact(city, mus, tau):
    inst = Instance(city, mus[0], mus[1], tau, Settings(subdivision_h=0.3, tol=1e-7))
    text = dump_instance(inst)
    back = parse_instance(json.loads(text))
    assert back.city.nodes == city.nodes
    assert back.city.arcs == city.arcs
    assert back.city.ambient_friction == city.ambient_friction
    assert back.mu_plus.atoms == mus[0].atoms and back.mu_minus.atoms == mus[1].atoms
    assert back.settings == inst.settings
    assert back.tau == tau
    assert dump_instance(back) == text


def test_float_format():
    assert format_float(2.0) == "2.0"
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(math.inf) == '"inf"'
    assert format_float(1e-20) == "9.9999999999999995e-21"
    assert float(format_float(math.pi)) == math.pi


def test_dump_result_layout():
    text = dump_result({"distance": 2.0, "path": [[0.0, 1.0]], "n": 3, "tag": "x", "empty": []})
    assert text == '{\n  "distance": 2.0,\n  "path": [\n    [0.0, 1.0]\n  ],\n  "n": 3,\n  "tag": "x",\n  "empty": []\n}'
    assert json.loads(text)["path"] == [[0.0, 1.0]]
