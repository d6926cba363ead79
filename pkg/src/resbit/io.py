"""Readers and writers for tables and transformed matrices.

Matrices travel either as CSV (a header of output dimension names, then one
row per record with 17 significant digits) or in the ``RBIT`` framing::

    b"RBIT" | version u16 | n_rows u64 | n_cols u64 | n_rows * n_cols f64

all little-endian, values row-major.
"""

from __future__ import annotations

import io
import struct

import numpy as np
import pandas as pd

from .exceptions import SchemaError, ShapeError

MAGIC = b"RBIT"
BIN_VERSION = 1
_HEADER = struct.Struct("<4sHQQ")


def read_table(source, delimiter=",", chunksize=None):
    """Read a CSV with every cell kept as a string; empty cells stay ``""``."""
    return pd.read_csv(source, sep=delimiter, dtype=str, keep_default_na=False,
                       na_filter=False, chunksize=chunksize, encoding="utf-8")


def write_table(frame, dest, delimiter=",", header=True):
    frame.to_csv(dest, sep=delimiter, index=False, header=header, float_format="%.17g",
                 lineterminator="\n")


def format_matrix_csv(matrix, names=None, delimiter=",", header=True):
    matrix = np.asarray(matrix, dtype=np.float64)
    buf = io.StringIO()
    if header and names is not None:
        buf.write(delimiter.join(names) + "\n")
    for row in matrix:
        buf.write(delimiter.join("%.17g" % v for v in row) + "\n")
    return buf.getvalue()


def parse_matrix_csv(text, delimiter=","):
    """Inverse of :func:`format_matrix_csv`; a non-numeric first line is a header."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines:
        try:
            [float(v) for v in lines[0].split(delimiter)]
        except ValueError:
            lines = lines[1:]
    if not lines:
        return np.zeros((0, 0))
    try:
        rows = [[float(v) for v in ln.split(delimiter)] for ln in lines]
    except ValueError as exc:
        raise SchemaError(f"matrix CSV: {exc}") from None
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ShapeError("matrix CSV rows have differing widths")
    return np.asarray(rows, dtype=np.float64)


def encode_matrix_bin(matrix) -> bytes:
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    if matrix.ndim != 2:
        raise ShapeError("only 2-D matrices can be framed")
    n_rows, n_cols = matrix.shape
    return _HEADER.pack(MAGIC, BIN_VERSION, n_rows, n_cols) + matrix.tobytes()


def decode_matrix_bin(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise ShapeError("truncated RBIT header")
    magic, version, n_rows, n_cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SchemaError("not an RBIT matrix")
    if version != BIN_VERSION:
        raise SchemaError(f"unsupported RBIT version {version}")
    payload = data[_HEADER.size:]
    if len(payload) != 8 * n_rows * n_cols:
        raise ShapeError("RBIT payload size does not match its header")
    return np.frombuffer(payload, dtype="<f8").reshape(n_rows, n_cols).astype(np.float64)


def read_matrix(path, delimiter=","):
    """Load a matrix file, detecting the RBIT framing by its magic bytes."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == MAGIC:
        return decode_matrix_bin(data)
    return parse_matrix_csv(data.decode("utf-8"), delimiter)
