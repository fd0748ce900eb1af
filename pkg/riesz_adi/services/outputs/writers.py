"""
Atomic writers for result files.

Every file is written to a temporary sibling first and moved into place with
``os.replace``, so readers never see a half-written report. Floats are
rendered with ``repr``, the shortest string that round-trips, which keeps
files byte-identical across runs and platforms.
"""

import json
import os
import tempfile
from typing import Any, Iterable

import numpy as np
import pandas as pd
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from ..utils.logger import app_logger


def format_float(value: Any) -> str:
    """
    Shortest round-trip decimal form of a number; empty for None/NaN.
    """
    if value is None:
        return ""
    number = float(value)
    if np.isnan(number):
        return ""
    return repr(number)


def _log_retry(retry_state: Any) -> None:
    """
    Log retry attempts with details from the retry state.

    :param retry_state: The state object provided by tenacity on retry.
    """
    waiting = retry_state.next_action.sleep
    attempt = retry_state.attempt_number
    exception = retry_state.outcome.exception() if retry_state.outcome.failed else None
    app_logger.warning(
        f"Write attempt {attempt} failed: {exception}. Retrying in {waiting:.2f} seconds."
    )


@retry(
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=0.1, min=0.1, max=2),
    retry=retry_if_exception_type(OSError),
    before_sleep=_log_retry,
    reraise=True,
)
def write_text_atomic(text: str, path: str) -> str:
    """
    Write text to ``path`` through a temporary file and an atomic rename.

    :param text: File contents.
    :param path: Destination path; parent directories are created.
    :return: The destination path.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


def write_csv_atomic(frame: pd.DataFrame, path: str) -> str:
    """
    Write a DataFrame as CSV; float columns are pre-formatted with ``format_float``.
    """
    formatted = frame.copy()
    for column in formatted.columns:
        if pd.api.types.is_float_dtype(formatted[column].dtype):
            formatted[column] = formatted[column].map(format_float)
    text = formatted.to_csv(index=False, lineterminator="\n")
    path = write_text_atomic(text, path)
    app_logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json_atomic(payload: Any, path: str) -> str:
    """
    Write a JSON document with sorted keys and round-trip floats.
    """
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default, allow_nan=True)
    path = write_text_atomic(text + "\n", path)
    app_logger.info(f"Wrote {path}")
    return path


def write_columns_atomic(rows: Iterable[Iterable[float]], path: str, header: str = "") -> str:
    """
    Write whitespace-separated numeric columns, the format gnuplot reads.
    """
    lines = [f"# {header}"] if header else []
    lines.extend(" ".join(format_float(v) for v in row) for row in rows)
    return write_text_atomic("\n".join(lines) + "\n", path)


def write_matrix_csv(matrix: np.ndarray, path: str) -> str:
    """
    Write a 2D array row-major as headerless CSV.
    """
    rows = (",".join(format_float(v) for v in row) for row in np.atleast_2d(matrix))
    return write_text_atomic("\n".join(rows) + "\n", path)
