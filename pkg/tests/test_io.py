import numpy as np
import pytest

from sispa.hardness import SetCoverInstance, reduce
from sispa.io import (
    format_set_cover,
    load_hardness_instance,
    load_valuation,
    parse_set_cover,
    read_csv,
    save_valuation,
    write_csv,
    write_json,
)
from sispa.valuations import CoverageValuation, ExplicitXOS


def test_valuation_file_round_trip(tmp_path):
    for val in (ExplicitXOS([[1, 2], [3, 0]]), CoverageValuation([1.5], [[0], []])):
        path = tmp_path / "v.json"
        save_valuation(val, path)
        np.testing.assert_array_equal(load_valuation(path).value_table(), val.value_table())


def test_set_cover_round_trip():
    sc = SetCoverInstance(3, ((1, 2), (2, 3), (1, 3)))
    assert parse_set_cover(format_set_cover(sc)) == sc


def test_set_cover_comments_and_blank_lines():
    sc = parse_set_cover("# worked example\n2 2 1\n\n1\n2\n")
    assert sc.sets == (frozenset({1}), frozenset({2}))


@pytest.mark.parametrize("text", [
    "",
    "2 2\n1\n2\n",
    "2 3 1\n1\n2\n",
    "2 2 1\n1 2\n2\n",
    "3 2 2\n1 1\n2 3\n",
    "2 2 1\n1\n3\n",
])
def test_set_cover_parse_errors(text):
    with pytest.raises(ValueError):
        parse_set_cover(text)


def test_hardness_instance_file(tmp_path):
    inst = reduce(SetCoverInstance(2, ((1,), (2,))))
    write_json(inst.to_dict(), tmp_path / "h.json")
    back = load_hardness_instance(tmp_path / "h.json")
    np.testing.assert_array_equal(back.thresholds, inst.thresholds)
    assert back.v == inst.v


def test_csv_round_trip(tmp_path):
    rows = [{"a": 1, "b": "x"}, {"a": 2, "b": ""}]
    write_csv(rows, tmp_path / "t.csv", ["a", "b"])
    assert read_csv(tmp_path / "t.csv") == [{"a": "1", "b": "x"}, {"a": "2", "b": ""}]
