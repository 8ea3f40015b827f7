"""CSV persistence for run records.

Format: UTF-8, comma separated, one header row, LF line endings, values
written with 12 significant digits. Column order is the insertion order of
the record mapping (see :func:`filtrans.harness.scenarios.record_columns`).
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np


class TraceFormatError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def format_value(v: float) -> str:
    return f"{v:.12g}"


def emit_csv(columns: dict, path) -> Path:
    """Write ``{name: 1-D array}`` as CSV; an all-empty mapping gives a header-only file."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    n_rows = arrays[0].shape[0] if arrays else 0
    if any(a.shape != (n_rows,) for a in arrays):
        raise ValueError("all columns must be 1-D arrays of equal length")
    buf = io.StringIO()
    buf.write(",".join(names) + "\n")
    for i in range(n_rows):
        buf.write(",".join(format_value(a[i]) for a in arrays) + "\n")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    """Inverse of :func:`emit_csv`; ragged or non-numeric rows raise with their line number."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError("empty file", line=1) from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise TraceFormatError("duplicate column names", line=1)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise TraceFormatError(f"expected {len(header)} fields, found {len(row)}", line=line_no)
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise TraceFormatError(str(exc), line=line_no) from None
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}
