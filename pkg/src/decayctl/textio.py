"""Plain-text column readers shared by the spectrum, harmonic and band loaders."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np


def read_columns(path, ncols: int) -> np.ndarray:
    """Numeric table with ``ncols`` columns.

    Columns may be separated by whitespace or commas; text after '#' is a
    comment.  Raises ValueError on a malformed row.
    """
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != ncols:
            raise ValueError(f"{path}:{lineno}: expected {ncols} columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def format_number(x: float) -> str:
    """Fixed 12-significant-digit rendering used by every emitted table."""
    return format(float(x), ".12g")


def write_csv(rows, header, stream=None) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else format_number(v) for v in row) + "\n")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
