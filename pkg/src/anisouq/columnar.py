"""Plain-text columnar files.

Layout::

    # anisouq-table 1
    # case_id = channel_180
    # units.k = m2/s2
    x,y,k
    0.1,0.25,1.0e-3
    ...

Lines starting with ``#`` carry ``key = value`` metadata, the first other line
is a comma-separated header and every following line one row.  Floats are
written with ``repr`` so a write/read cycle is lossless and byte-stable.
"""
from __future__ import annotations

import os
from typing import Mapping

import numpy as np

from .errors import InvalidInput, ParseError

MAGIC = "anisouq-table 1"


def write_table(path, columns: Mapping[str, np.ndarray], meta: Mapping[str, str] | None = None):
    names = list(columns)
    if not names:
        raise InvalidInput("cannot write a table without columns")
    for name in names:
        if "," in name or not name.strip():
            raise InvalidInput(f"bad column name {name!r}")
    data = [np.asarray(columns[n], dtype=float).ravel() for n in names]
    n_rows = {len(c) for c in data}
    if len(n_rows) > 1:
        raise InvalidInput("columns have different lengths")
    lines = [f"# {MAGIC}"]
    for key, value in (meta or {}).items():
        value = str(value)
        if "\n" in value or "=" in key:
            raise InvalidInput(f"bad metadata entry {key!r}")
        lines.append(f"# {key} = {value}")
    lines.append(",".join(names))
    if data[0].size:
        matrix = np.column_stack(data)
        lines.extend(",".join(map(repr, row)) for row in matrix.tolist())
    text = "\n".join(lines) + "\n"
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_table(path):
    """Read a columnar file.

    Returns
    -------
    columns : dict[str, numpy.ndarray]
    meta : dict[str, str]

    Raises
    ------
    ParseError
        On a non-numeric or non-finite cell; ``row`` is the 0-based data row.
    """
    with open(os.fspath(path), encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    meta: dict[str, str] = {}
    header = None
    body_start = len(raw)
    for i, line in enumerate(raw):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            entry = stripped[1:].strip()
            if "=" in entry:
                key, value = entry.split("=", 1)
                meta[key.strip()] = value.strip()
            continue
        header = [h.strip() for h in stripped.split(",")]
        body_start = i + 1
        break
    if header is None:
        raise InvalidInput(f"{path}: no header row")
    if len(set(header)) != len(header):
        raise InvalidInput(f"{path}: duplicate column names")

    rows = [line.split(",") for line in raw[body_start:] if line.strip()]
    ncol = len(header)
    for r, cells in enumerate(rows):
        if len(cells) != ncol:
            raise ParseError(r, header[min(len(cells), ncol - 1)], f"expected {ncol} cells, found {len(cells)}")
    if rows:
        try:
            matrix = np.array(rows, dtype=float)
        except ValueError:
            matrix = None
        if matrix is None or not np.all(np.isfinite(matrix)):
            _locate_bad_cell(rows, header)
    else:
        matrix = np.empty((0, ncol))
    columns = {name: matrix[:, j].copy() for j, name in enumerate(header)}
    return columns, meta


def _locate_bad_cell(rows, header):
    for r, cells in enumerate(rows):
        for name, cell in zip(header, cells):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(r, name, f"not a number: {cell.strip()!r}") from None
            if not np.isfinite(value):
                raise ParseError(r, name, f"non-finite value {cell.strip()!r}")
    raise AssertionError("unreachable")  # pragma: no cover
