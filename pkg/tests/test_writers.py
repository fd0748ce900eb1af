import json
import logging
import os

import numpy as np
import pandas as pd
import pytest

from riesz_adi.services.outputs import writers
from riesz_adi.services.outputs.writers import (
    format_float,
    write_columns_atomic,
    write_csv_atomic,
    write_json_atomic,
    write_matrix_csv,
    write_text_atomic,
)
from riesz_adi import config
from riesz_adi.services.utils.logger import app_logger, setup_logger


@pytest.mark.parametrize(
    "value, expected",
    [
        (0.1, "0.1"),
        (1 / 3, "0.3333333333333333"),
        (np.float64(2.5e-7), "2.5e-07"),
        (3, "3.0"),
        (None, ""),
        (float("nan"), ""),
    ],
)
def test_format_float(value, expected):
    assert format_float(value) == expected


def test_csv_floats_round_trip(tmp_path):
    frame = pd.DataFrame({"n": [1, 2], "value": [0.1 + 0.2, np.nan]})
    path = write_csv_atomic(frame, str(tmp_path / "nested" / "out.csv"))
    assert open(path).read() == "n,value\n1,0.30000000000000004\n2,\n"
    assert [name for name in os.listdir(tmp_path / "nested")] == ["out.csv"]


def test_json_keys_sorted(tmp_path):
    path = write_json_atomic({"b": np.float64(0.5), "a": np.arange(2)}, str(tmp_path / "out.json"))
    text = open(path).read()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1], "b": 0.5}


def test_columns_file_loads_with_numpy(tmp_path):
    path = write_columns_atomic([(1.0, 2.0), (3.0, 4.5)], str(tmp_path / "out.dat"), header="x y")
    assert open(path).readline() == "# x y\n"
    assert np.loadtxt(path).tolist() == [[1.0, 2.0], [3.0, 4.5]]


def test_matrix_csv(tmp_path):
    path = write_matrix_csv(np.array([[1.0, 0.5], [0.25, 2.0]]), str(tmp_path / "m.csv"))
    assert open(path).read() == "1.0,0.5\n0.25,2.0\n"


def test_transient_os_error_is_retried(tmp_path, monkeypatch):
    real_replace = os.replace
    calls = []

    def flaky_replace(src, dst):
        calls.append(dst)
        if len(calls) == 1:
            raise OSError("device busy")
        return real_replace(src, dst)

    monkeypatch.setattr(writers.os, "replace", flaky_replace)
    path = write_text_atomic("ok\n", str(tmp_path / "out.txt"))
    assert open(path).read() == "ok\n"
    assert len(calls) == 2
    assert os.listdir(tmp_path) == ["out.txt"]


def test_persistent_os_error_is_raised(tmp_path, monkeypatch):
    def broken_replace(src, dst):
        raise OSError("read-only file system")

    monkeypatch.setattr(writers.os, "replace", broken_replace)
    with pytest.raises(OSError):
        write_text_atomic("x", str(tmp_path / "out.txt"))
    assert os.listdir(tmp_path) == []


def test_setup_logger_adds_handlers_once(tmp_path):
    log_file = str(tmp_path / "logs" / "run.log")
    logger = setup_logger("riesz_adi.test", log_file=log_file, level=logging.DEBUG)
    again = setup_logger("riesz_adi.test", log_file=log_file)
    assert logger is again
    assert len(logger.handlers) == 2
    logger.info("hello")
    for handler in logger.handlers:
        handler.flush()
    assert "hello" in open(log_file).read()
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)


def test_application_logger_is_named_after_project():
    assert app_logger.name == config.PROJECT
