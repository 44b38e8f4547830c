"""CSV input for networks and item responses, and stable-format output helpers.

Networks come either as an N x N adjacency table (header row optional) or as
an edge list ``from,to[,weight]``.  Item responses are an N x M table with an
optional header row of item identifiers.  Empty fields or ``NA`` mark missing
cells and become mask entries, never values.  All numeric output uses a fixed
repr-based float format so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import ItemResponses, NetworkData

__all__ = [
    "DataError",
    "read_network_csv",
    "read_items_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_json",
]

_NA_TOKENS = {"", "na", "nan", "n/a", "null"}


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def _parse_cell(token: str) -> float:
    token = token.strip()
    if token.lower() in _NA_TOKENS:
        return np.nan
    try:
        return float(token)
    except ValueError as err:
        raise DataError(f"cannot parse {token!r} as a number") from err


def _read_rows(path) -> list:
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"empty input file: {path}")
    return rows


def _is_numeric_row(row: Sequence[str]) -> bool:
    for token in row:
        t = token.strip().lower()
        if t in _NA_TOKENS:
            continue
        try:
            float(t)
        except ValueError:
            return False
    return True


def _looks_like_edge_list(rows: list) -> bool:
    widths = {len(r) for r in rows}
    if not widths <= {2, 3}:
        return False
    # a 2x2 or 3x3 numeric table is an adjacency matrix, not an edge list
    return len(rows) != len(rows[0])


def read_network_csv(path, kind: Optional[str] = None, fmt: str = "auto") -> NetworkData:
    """Load a network from an adjacency table or an edge list.

    ``fmt`` is "adjacency", "edgelist" or "auto".  Edge lists may carry
    labels; nodes are ordered by sorted label (numeric sort when all labels
    are numeric).  ``kind`` defaults to binary when every observed value is
    0/1, else continuous.
    """
    rows = _read_rows(path)
    if fmt == "auto":
        header_like = not _is_numeric_row(rows[0])
        body = rows[1:] if header_like else rows
        fmt = "edgelist" if body and _looks_like_edge_list(body) else "adjacency"
    if fmt == "edgelist":
        matrix, mask = _edge_list_to_matrix(rows)
    elif fmt == "adjacency":
        matrix, mask = _adjacency_from_rows(rows, path)
    else:
        raise DataError(f"unknown network format {fmt!r}")
    if kind is None:
        observed = matrix[mask]
        kind = "binary" if observed.size and np.isin(observed, (0.0, 1.0)).all() else "continuous"
    try:
        return NetworkData(np.where(mask, matrix, 0.0), kind=kind, mask=mask)
    except ValueError as err:
        raise DataError(str(err)) from err


def _adjacency_from_rows(rows, path):
    if not _is_numeric_row(rows[0]) and len(rows) == len(rows[0]) + 1:
        rows = rows[1:]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DataError(f"adjacency matrix in {path} is not square")
    matrix = np.array([[_parse_cell(c) for c in r] for r in rows])
    mask = ~np.isnan(matrix)
    np.fill_diagonal(mask, False)
    return matrix, mask


def _all_non_numeric(row) -> bool:
    for token in row:
        try:
            float(token.strip())
            return False
        except ValueError:
            continue
    return True


def _edge_list_to_matrix(rows):
    # a header like "from,to,weight" is non-numeric everywhere; an edge row
    # with label endpoints still has a numeric weight
    if _all_non_numeric(rows[0]) and len(rows) > 1:
        rows = rows[1:]
    pairs = []
    for r in rows:
        if len(r) not in (2, 3):
            raise DataError("edge list rows must be from,to[,weight]")
        w = _parse_cell(r[2]) if len(r) == 3 else 1.0
        pairs.append((r[0].strip(), r[1].strip(), w))
    labels = sorted({p[0] for p in pairs} | {p[1] for p in pairs}, key=_label_key)
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    matrix = np.zeros((n, n))
    for a, b, w in pairs:
        matrix[index[a], index[b]] = w
    mask = np.ones((n, n), dtype=bool)
    np.fill_diagonal(mask, False)
    return matrix, mask


def _label_key(label: str):
    try:
        return (0, float(label), "")
    except ValueError:
        return (1, 0.0, label)


def read_items_csv(path, kind: str = "continuous") -> ItemResponses:
    """Load an N x M item-response table; a non-numeric first row is a header."""
    rows = _read_rows(path)
    if not _is_numeric_row(rows[0]):
        rows = rows[1:]
        if not rows:
            raise DataError(f"no data rows in {path}")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DataError(f"ragged item table in {path}")
    values = np.array([[_parse_cell(c) for c in r] for r in rows])
    try:
        return ItemResponses(values, kind=kind)
    except ValueError as err:
        raise DataError(str(err)) from err


def write_matrix_csv(path, matrix: np.ndarray, header: Optional[Sequence[str]] = None) -> None:
    """Write a matrix with a fixed float format (byte-stable across runs)."""
    matrix = np.atleast_2d(np.asarray(matrix))
    with open(path, "w", newline="") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix_csv(path, has_header: bool = False):
    rows = _read_rows(path)
    header = None
    if has_header or not _is_numeric_row(rows[0]):
        header = rows[0]
        rows = rows[1:]
    return np.array([[_parse_cell(c) for c in r] for r in rows]), header


def write_json(path, payload: dict) -> None:
    """Deterministic JSON output: sorted keys, repr floats."""
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj)}")
