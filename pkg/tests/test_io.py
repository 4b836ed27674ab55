import json
import math

import numpy as np
import pandas as pd
import pytest

from src.errors import ValidationError
from src.functions import Exponential
from src.io import (
    load_family,
    load_json_object,
    save_dataframe_to_csv,
    to_csv_text,
    to_json_text,
)


def test_load_inline_and_file_json(tmp_path):
    loaded = load_json_object('{"family": "linear", "alpha": 2}')
    assert loaded == {"family": "linear", "alpha": 2}
    path = tmp_path / "family.json"
    path.write_text(json.dumps({"family": "exponential", "alpha": 0.1, "beta": 1.0}))
    m = load_family(str(path))
    assert isinstance(m, Exponential)
    assert m.beta == 1.0


@pytest.mark.parametrize("source", ["missing-file.json", "{not json", "[1, 2]"])
def test_load_json_errors(source):
    with pytest.raises(ValidationError):
        load_json_object(source)


def test_json_text_replaces_non_finite_values():
    raw = {
        "a": math.nan,
        "b": [np.float64(1.5), math.inf],
        "c": np.int64(3),
        "d": np.bool_(True),
    }
    payload = json.loads(to_json_text(raw))
    assert payload == {"a": None, "b": [1.5, None], "c": 3, "d": True}


def test_csv_text_keeps_full_precision():
    text = to_csv_text(pd.DataFrame({"x": [0.1], "y": [math.nan]}))
    assert text == "x,y\n0.10000000000000001,\n"


def test_save_dataframe_to_csv(tmp_path):
    out = tmp_path / "frame.csv"
    save_dataframe_to_csv(pd.DataFrame({"n": [0, 1]}), str(out))
    assert out.read_text() == "n\n0\n1\n"
    with pytest.raises(ValidationError):
        missing = tmp_path / "absent" / "frame.csv"
        save_dataframe_to_csv(pd.DataFrame({"n": [0]}), str(missing))
