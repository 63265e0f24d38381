"""CSV and JSON output.

Numbers are written with 17 significant digits so values round-trip
exactly.  Every file goes to a temporary name in its destination directory
first and is then renamed into place.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .snapshot import SolutionSnapshot
from .spectral import Field, TorusGrid

logger = logging.getLogger(__name__)


def format_number(value: Any) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return "%.17g" % float(value)


def atomic_write_text(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.info("wrote %s", path)
    return path


def render_rows(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else format_number(v) for v in row])
    return buffer.getvalue()


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return atomic_write_text(path, render_rows(header, rows))


def field_header(d: int) -> List[str]:
    return [f"i{axis}" for axis in range(d)] + ["re", "im"]


def field_rows(f: Field) -> Iterable[Tuple[Any, ...]]:
    values = f.values
    for index in itertools.product(range(f.grid.n), repeat=f.grid.d):
        value = values[index]
        yield (*index, value.real, value.imag)


def write_field_csv(path: Path, f: Field) -> Path:
    return write_rows(path, field_header(f.grid.d), field_rows(f))


def read_field_csv(path: Path, grid: TorusGrid) -> Field:
    """Read a field written by :func:`write_field_csv`."""
    values = np.zeros(grid.shape, dtype=complex)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != field_header(grid.d):
            raise ValueError(f"{path} has header {header}, expected {field_header(grid.d)}")
        for row in reader:
            index = tuple(int(v) for v in row[: grid.d])
            values[index] = complex(float(row[grid.d]), float(row[grid.d + 1]))
    return Field(grid, values)


def write_manifest(path: Path, manifest: Dict[str, Any]) -> Path:
    return atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def solution_manifest(
    snapshot: SolutionSnapshot,
    data_file: str,
    config: Optional[Dict[str, Any]] = None,
    seed: Optional[int] = None,
    **extra: Any,
) -> Dict[str, Any]:
    manifest = {
        "version": __version__,
        "seed": seed,
        **snapshot.to_dict(),
        "data_file": data_file,
        "config": config or {},
    }
    manifest.update(extra)
    return manifest


def write_solution(
    snapshot: SolutionSnapshot,
    dest_dir: Path,
    stem: str,
    config: Optional[Dict[str, Any]] = None,
    seed: Optional[int] = None,
) -> Tuple[Path, Path]:
    """Write a snapshot as ``<stem>.csv`` plus ``<stem>.json``.

    Returns:
        Paths of the CSV and the manifest
    """
    dest_dir = Path(dest_dir)
    csv_path = write_field_csv(dest_dir / f"{stem}.csv", snapshot.field)
    manifest = solution_manifest(snapshot, csv_path.name, config, seed)
    manifest_path = write_manifest(dest_dir / f"{stem}.json", manifest)
    return csv_path, manifest_path
