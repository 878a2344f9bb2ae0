"""Plot-ready CSV and canonical JSON persistence.

Fields are written one lattice node per row with 17 significant digits,
which round-trips IEEE doubles exactly; reports are serialized with
sorted keys so that identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grids import Grid, ScalarField

_COORDS = {1: ("x",), 2: ("x", "y")}


def fmt17(value) -> str:
    """Shortest-exact decimal form of a double."""
    return format(float(value), ".17g")


def write_field_csv(path, field: ScalarField, extra=()) -> None:
    """One row per lattice node: coordinates, value, optional extra
    columns given as (name, per-node array) pairs."""
    grid = field.grid
    names = list(_COORDS[grid.dim]) + ["u"] + [name for name, _ in extra]
    columns = [grid.points[:, a] for a in range(grid.dim)]
    columns.append(np.asarray(field.values, dtype=float))
    for _, values in extra:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (grid.points.shape[0],):
            raise ValueError(
                f"extra column must hold one value per node, got shape {arr.shape}"
            )
        columns.append(arr)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(grid.points.shape[0]):
            writer.writerow([fmt17(col[i]) for col in columns])


def read_field_csv(grid: Grid, path) -> ScalarField:
    """Rebuild a scalar field from a csv produced by write_field_csv."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        value_col = header.index("u")
        values = [float(row[value_col]) for row in reader]
    if len(values) != grid.points.shape[0]:
        raise ValueError(
            f"csv holds {len(values)} nodes, grid has {grid.points.shape[0]}"
        )
    return grid.field(np.asarray(values, dtype=float))


def write_rows_csv(path, header, rows) -> None:
    """Generic numeric table: header list plus per-row value lists."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [str(v) if isinstance(v, int) else fmt17(v) for v in row]
            )


def float_list(values) -> list:
    return [float(v) for v in np.asarray(values, dtype=float).ravel()]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(canonical_json(obj), encoding="utf-8")
