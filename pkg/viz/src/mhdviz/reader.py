"""Readers for solver snapshot files.

Two formats are produced by the solver CLI:

* 2D: legacy ASCII VTK STRUCTURED_POINTS with CELL_DATA scalars and
  vectors (x runs fastest in the flat cell ordering);
* 1D: CSV profiles with header x,rho,mx,my,mz,Bx,By,Bz,E,p.

Both parse into a Snapshot of named cell-centered fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["Snapshot", "read_snapshot", "read_vtk", "read_profile_csv"]


@dataclass
class Snapshot:
    """Grid geometry plus named cell fields.

    2D fields have shape (nx, ny); vector fields (nx, ny, 3).  1D profiles
    use ny = 0 and 1D arrays.
    """

    dim: int
    origin: tuple
    spacing: tuple
    shape: tuple
    fields: dict = field(default_factory=dict)

    @property
    def extent(self):
        """(x0, x1, y0, y1) of the cell-centered grid (2D only)."""
        nx, ny = self.shape
        return (
            self.origin[0], self.origin[0] + nx * self.spacing[0],
            self.origin[1], self.origin[1] + ny * self.spacing[1],
        )

    def field_names(self):
        return sorted(self.fields)

    def get(self, name: str) -> np.ndarray:
        if name not in self.fields:
            raise KeyError(
                f"snapshot has no field {name!r}; available: "
                f"{', '.join(self.field_names())}"
            )
        return self.fields[name]


def read_vtk(path) -> Snapshot:
    """Parse a legacy ASCII STRUCTURED_POINTS file with CELL_DATA."""
    lines = Path(path).read_text().splitlines()
    it = iter(range(len(lines)))
    dims = origin = spacing = None
    n_cells = None
    i = 0

    def tokens(line):
        return line.split()

    while i < len(lines):
        t = tokens(lines[i])
        if not t:
            i += 1
            continue
        key = t[0].upper()
        if key == "DIMENSIONS":
            dims = tuple(int(v) for v in t[1:4])
        elif key == "ORIGIN":
            origin = tuple(float(v) for v in t[1:4])
        elif key == "SPACING":
            spacing = tuple(float(v) for v in t[1:4])
        elif key == "CELL_DATA":
            n_cells = int(t[1])
            i += 1
            break
        i += 1
    if dims is None or origin is None or spacing is None or n_cells is None:
        raise ValueError(f"{path}: not a structured-points cell-data file")
    nx, ny = dims[0] - 1, dims[1] - 1
    if nx * ny != n_cells:
        raise ValueError(f"{path}: CELL_DATA count {n_cells} != {nx}*{ny}")

    fields: dict[str, np.ndarray] = {}

    def grab_scalars(count):
        vals = []
        nonlocal i
        while len(vals) < count:
            vals.extend(float(v) for v in lines[i].split())
            i += 1
        return np.array(vals)

    while i < len(lines):
        t = tokens(lines[i])
        if not t:
            i += 1
            continue
        key = t[0].upper()
        if key == "SCALARS":
            name = t[1]
            i += 1
            if lines[i].upper().startswith("LOOKUP_TABLE"):
                i += 1
            flat = grab_scalars(n_cells)
            fields[name] = flat.reshape((ny, nx)).T  # x fastest
        elif key == "VECTORS":
            name = t[1]
            i += 1
            flat = grab_scalars(3 * n_cells).reshape(n_cells, 3)
            fields[name] = flat.reshape((ny, nx, 3)).transpose(1, 0, 2)
        else:
            i += 1
    return Snapshot(dim=2, origin=origin[:2], spacing=spacing[:2],
                    shape=(nx, ny), fields=fields)


def read_profile_csv(path) -> Snapshot:
    """Parse a 1D profile CSV into per-column fields plus velocity/B vectors."""
    text = Path(path).read_text().splitlines()
    header = text[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged CSV")
    cols = {name: data[:, i] for i, name in enumerate(header)}
    x = cols.pop("x")
    dx = float(x[1] - x[0]) if len(x) > 1 else 1.0
    fields = dict(cols)
    fields["x"] = x
    return Snapshot(dim=1, origin=(float(x[0] - dx / 2), 0.0), spacing=(dx, 0.0),
                    shape=(len(x), 0), fields=fields)


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    if path.suffix == ".vtk":
        return read_vtk(path)
    if path.suffix == ".csv":
        return read_profile_csv(path)
    raise ValueError(f"unrecognized snapshot extension: {path.name}")
