"""Deterministic CSV writing: fixed line endings, shortest round-trip floats."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence


def fmt(value) -> str:
    """Render a cell; floats use repr for byte-stable round-trip output."""
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(cell) for cell in row])
    return path
