import json
import math

import numpy as np

from isoflow.io import format_number, read_csv, to_jsonable, write_csv, write_json


def test_format_number_round_trips():
    for x in (0.1, 1 / 3, -2.5e-300, 123456789.123456789, math.pi):
        assert float(format_number(x)) == x
    assert format_number(-0.0) == "0"
    assert format_number(np.int64(7)) == "7"
    assert format_number(float("nan")) == "nan"


def test_csv_is_rfc4180(tmp_path):
    path = write_csv(tmp_path / "t.csv", ("a", "b,c"), [(1.5, "x,y"), (np.float64(2.0), 3)])
    raw = path.read_bytes()
    assert raw == b'a,"b,c"\r\n1.5,"x,y"\r\n2,3\r\n'


def test_csv_read_back(tmp_path):
    path = write_csv(tmp_path / "t.csv", ("q", "V"), [(0.1, 1 / 3), (0.2, -1e-17)])
    header, data = read_csv(path)
    assert header == ["q", "V"]
    assert data[0, 1] == 1 / 3 and data[1, 1] == -1e-17


def test_json_stable_and_clean(tmp_path):
    obj = {"b": np.array([1.0, np.nan]), "a": {"z": np.float32(0.5), "y": True}, "c": 1 + 2j}
    path = write_json(tmp_path / "r.json", obj)
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert json.loads(text) == {"a": {"y": True, "z": 0.5}, "b": [1.0, None], "c": {"im": 2.0, "re": 1.0}}
    assert to_jsonable(np.int32(3)) == 3
