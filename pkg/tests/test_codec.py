import sys
import pathlib
import json
from fractions import Fraction

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from codec import (
    CodecError,
    algebra_from_json,
    algebra_to_json,
    jsonable,
    load_json,
    load_morphism,
    load_object,
    object_from_json,
    object_to_json,
    tower_morphism_from_json,
    tower_morphism_to_json,
    tower_to_json,
    write_json,
)
from finalg import Verdict, get_field, truncated_polynomial_algebra, upper_triangular_algebra
from finmod import direct_sum, regular_module
from systems import make_left_system, regular_discrete
from tower import HypothesisFlags, build

F2 = get_field(2)
F3 = get_field(3)
Q = get_field(0)


def test_algebra_round_trip_keeps_structure():
    ut = upper_triangular_algebra(F3)
    data = algebra_to_json(ut)
    assert data["labels"] == ["E11", "E12", "E22"]
    back = algebra_from_json(json.loads(json.dumps(data)))
    assert np.array_equal(back.table, ut.table)
    assert back.labels == ut.labels


def test_rational_entries_are_decimal_strings():
    a = truncated_polynomial_algebra(Q, 2)
    data = algebra_to_json(a)
    assert data["unit"] == ["1", "0"]
    assert algebra_from_json(data).field is Q


def test_algebra_errors_carry_json_path():
    with pytest.raises(CodecError) as info:
        algebra_from_json({"char": 2})
    assert info.value.where == "$"
    assert "dim" in str(info.value)
    with pytest.raises(CodecError) as info:
        algebra_from_json({"char": 4, "dim": 1, "unit": ["1"], "structure_constants": [[0, 0, 0, "1"]]})
    assert info.value.where == "$.char"
    with pytest.raises(CodecError) as info:
        algebra_from_json({"char": 2, "dim": 1, "unit": ["1"], "structure_constants": [[0, 0, 3, "1"]]})
    assert info.value.where == "$.structure_constants[0]"


def test_invalid_algebra_is_reported():
    # e1·e1 = e0 + e1 with e1·e0 = 0 is not unital
    data = {"char": 2, "dim": 2, "unit": ["1", "0"],
            "structure_constants": [[0, 0, 0, "1"], [0, 1, 1, "1"], [1, 1, 0, "1"], [1, 1, 1, "1"]]}
    with pytest.raises(CodecError):
        algebra_from_json(data)


def test_load_json_reports_line_and_column(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "char": ,\n}\n', encoding="utf-8")
    with pytest.raises(CodecError) as info:
        load_json(bad)
    assert info.value.where.startswith(f"{bad}:2:")
    with pytest.raises(CodecError):
        load_json(tmp_path / "missing.json")


def test_write_json_is_atomic_and_sorted(tmp_path):
    target = tmp_path / "out" / "report.json"
    write_json(target, {"b": 1, "a": [1, 2]})
    text = target.read_text(encoding="utf-8")
    assert text.index('"a"') < text.index('"b"')
    assert not list(target.parent.glob("*.tmp"))


def test_builder_morphism_is_rebuilt_with_overrides():
    f = build("half_speed", F2, 3)
    data = json.loads(json.dumps(tower_morphism_to_json(f)))
    assert data["builder"] == {"family": "half_speed", "depth": 3, "char": 2}
    g = tower_morphism_from_json(data, depth=4, char=3)
    assert g.depth == 4
    assert g.field.characteristic == 3
    assert g.target.dims() == [1, 1, 2, 2]


def test_explicit_morphism_round_trip():
    f = build("upper_triangular_corner_top", F2, 2)
    data = json.loads(json.dumps(tower_morphism_to_json(f)))
    data["builder"] = None
    g = tower_morphism_from_json(data)
    assert g.builder is None
    assert g.source.dims() == f.source.dims()
    assert all(np.array_equal(a.matrix, b.matrix) for a, b in zip(g.maps, f.maps))
    assert tower_morphism_from_json(data, depth=1).depth == 1


def test_declared_flags_survive(tmp_path):
    f = build("triangular_to_full", F2, 2).with_source_flags(HypothesisFlags(forgetful_fully_faithful=True))
    path = write_json(tmp_path / "m.json", tower_morphism_to_json(f))
    assert load_morphism(path).source.flags.forgetful_fully_faithful


def test_towers_can_be_file_references(tmp_path):
    f = build("levelwise_quotient", F2, 2)
    write_json(tmp_path / "source.json", tower_to_json(f.source))
    write_json(tmp_path / "target.json", tower_to_json(f.target))
    data = tower_morphism_to_json(f)
    data.update(builder=None, source="source.json", target="target.json")
    path = write_json(tmp_path / "m.json", data)
    g = load_morphism(path)
    assert g.source.dims() == [1, 2] and g.target.dims() == [1, 1]


def test_invalid_level_map_rejected():
    f = build("identity", F2, 2)
    data = tower_morphism_to_json(f)
    data["builder"] = None
    data["maps"][1] = {"columns": [["1", "0"], ["1", "1"]]}
    with pytest.raises(CodecError):
        tower_morphism_from_json(data)


def test_objects_round_trip(tmp_path):
    tower = build("identity", F3, 3).source
    top = direct_sum(regular_module(tower.level(3)), regular_module(tower.level(3)))
    system = make_left_system(tower, top, name="free rank 2")
    path = write_json(tmp_path / "p.json", object_to_json(system))
    back = load_object(path)
    assert back.dims() == system.dims() == [2, 4, 6]
    discrete = regular_discrete(tower, 2)
    again = object_from_json(json.loads(json.dumps(object_to_json(discrete))), tower)
    assert again.level == 2 and again.dim == 2
    assert again.tower is tower


def test_object_errors():
    tower = build("identity", F2, 2).source
    with pytest.raises(CodecError) as info:
        object_from_json({"kind": "sheaf"}, tower)
    assert info.value.where == "$.kind"
    bad_module = {"kind": "discrete", "level": 1, "module": {"side": "left", "dim": 1, "action": [[["1"]]]}}
    with pytest.raises(CodecError):
        object_from_json(bad_module, tower)


def test_stored_tower_must_match_the_given_one():
    stored = build("identity", F3, 3).source
    data = json.loads(json.dumps(object_to_json(regular_discrete(stored, 2))))
    assert object_from_json(data, build("identity", F3, 3).source).dim == 2
    for other in (build("identity", F3, 2).source, build("identity", F2, 3).source):
        with pytest.raises(CodecError) as info:
            object_from_json(data, other)
        assert info.value.where == "$.tower"
    del data["tower"]
    assert object_from_json(data, build("identity", F3, 3).source).level == 2


def test_jsonable_values():
    assert jsonable(Fraction(1, 2)) == "1/2"
    assert jsonable(np.int64(3)) == 3
    assert jsonable(np.bool_(True)) is True
    assert jsonable(F3.array([[1, 2]])) == [["1", "2"]]
    verdict = jsonable(Verdict(False, level=2, detail="x", witness=F2.array([1])))
    assert verdict == {"holds": False, "level": 2, "detail": "x", "depth": None, "witness": ["1"]}
