"""Matrix CSV reading and writing.

Format: an optional single header line starting with '#', then one row per
line of comma-separated decimal floats. Floats are written with %.17g so
files round-trip float64 exactly and identical inputs give identical bytes.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import ColumnCountMismatch, ParseError


def write_matrix_csv(path: str | os.PathLike, matrix: np.ndarray, header: str | None = None) -> None:
    data = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    lines = []
    if header is not None:
        lines.append(header if header.startswith("#") else "# " + header)
    for row in data:
        lines.append(",".join("%.17g" % v for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path: str | os.PathLike, expected_cols: int | None = None) -> np.ndarray:
    text = Path(path).read_text()
    rows: list[list[float]] = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if rows:
                raise ParseError(f"{path}: line {lineno}: header allowed only as first line")
            continue
        tokens = stripped.split(",")
        try:
            values = [float(t) for t in tokens]
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ColumnCountMismatch(
                f"{path}: line {lineno}: expected {width} columns, got {len(values)}"
            )
        rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    matrix = np.asarray(rows, dtype=np.float64)
    if expected_cols is not None and matrix.shape[1] != expected_cols:
        raise ColumnCountMismatch(f"{path}: expected {expected_cols} columns, got {matrix.shape[1]}")
    return matrix
