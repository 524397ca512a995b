"""Matrix file formats: headerless CSV and a tiny JSON container.

CSV files are plain comma-separated decimal floats, one row per line, no
header (CRLF or LF).  The JSON container is
``{"rows": r, "cols": c, "data": [row-major floats]}``.  Floats are written
with 17 significant digits, so write-then-read round-trips exactly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import MatrixFileError
from .linalg import as_matrix

FORMATS = ("csv", "mtxjson")


def _parse_float(token: str, path: str, line_no: int, col_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MatrixFileError(
            f"{path}:{line_no}:{col_no}: not a number: {token!r}"
        ) from None
    if not np.isfinite(value):
        raise MatrixFileError(
            f"{path}:{line_no}:{col_no}: non-finite entry: {token!r}"
        )
    return value


def read_matrix_csv(path: str) -> np.ndarray:
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if line == "" and not rows:
                raise MatrixFileError(f"{path}:{line_no}: empty line")
            if line == "":
                continue  # trailing newline
            tokens = line.split(",")
            row = [
                _parse_float(tok.strip(), path, line_no, col_no)
                for col_no, tok in enumerate(tokens, start=1)
            ]
            if rows and len(row) != len(rows[0]):
                raise MatrixFileError(
                    f"{path}:{line_no}: row has {len(row)} entries, "
                    f"expected {len(rows[0])}"
                )
            rows.append(row)
    if not rows:
        raise MatrixFileError(f"{path}: empty file")
    return np.array(rows, dtype=float)


def read_matrix_mtxjson(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MatrixFileError(f"{path}: invalid JSON: {exc}") from None
    for key in ("rows", "cols", "data"):
        if key not in payload:
            raise MatrixFileError(f"{path}: missing key {key!r}")
    rows, cols = payload["rows"], payload["cols"]
    data = payload["data"]
    if not isinstance(rows, int) or not isinstance(cols, int) or rows < 1 or cols < 1:
        raise MatrixFileError(f"{path}: rows/cols must be positive integers")
    if len(data) != rows * cols:
        raise MatrixFileError(
            f"{path}: data has {len(data)} entries, expected {rows * cols}"
        )
    arr = np.array(data, dtype=float).reshape(rows, cols)
    if not np.all(np.isfinite(arr)):
        raise MatrixFileError(f"{path}: non-finite entries")
    return arr


def read_matrix(path: str, fmt: str | None = None) -> np.ndarray:
    """Read a matrix, inferring the format from the extension unless given."""
    if fmt is None:
        fmt = "mtxjson" if os.path.splitext(path)[1].lower() == ".json" else "csv"
    if fmt == "csv":
        return read_matrix_csv(path)
    if fmt == "mtxjson":
        return read_matrix_mtxjson(path)
    raise MatrixFileError(f"unknown matrix format {fmt!r}")


def format_csv(matrix: np.ndarray) -> str:
    mat = as_matrix(matrix, "matrix")
    return "\n".join(",".join(f"{v:.17g}" for v in row) for row in mat) + "\n"


def write_matrix(path: str, matrix, fmt: str = "csv") -> None:
    mat = as_matrix(matrix, "matrix")
    if fmt == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(format_csv(mat))
    elif fmt == "mtxjson":
        payload = {
            "rows": mat.shape[0],
            "cols": mat.shape[1],
            "data": [float(f"{v:.17g}") for v in mat.ravel()],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    else:
        raise MatrixFileError(f"unknown matrix format {fmt!r}")
