"""Field and table output: legacy ASCII VTK, CSV."""
import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

VTK_TRIANGLE = 5
VTK_QUADRATIC_TRIANGLE = 22


def _fmt(v):
    return repr(float(v))


def vtk_cells(space):
    """Cell connectivity and VTK cell type for the space.

    P2 triangles become 6-node quadratic triangles (corners, then the
    midpoints of edges 01, 12, 20). Higher degrees are written as their
    corner triangles, with every node still present as a point.
    """
    cd = space.cell_dofs
    if space.degree == 2:
        # local edge e is opposite vertex e: edge 2 = (0,1), edge 0 = (1,2), edge 1 = (2,0)
        return cd[:, [0, 1, 2, 5, 3, 4]], VTK_QUADRATIC_TRIANGLE
    return cd[:, :3], VTK_TRIANGLE


def export_vtk(space, coeffs, path, name="deflection"):
    """Write the field as a legacy ASCII unstructured grid with point scalar ``name``."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (space.n_dofs,):
        raise ValueError(f"expected {space.n_dofs} coefficients, got {coeffs.shape}")
    cells, ctype = vtk_cells(space)
    pts = space.node_coords
    out = io.StringIO()
    out.write("# vtk DataFile Version 3.0\n")
    out.write(f"{name} P{space.degree}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    out.write(f"POINTS {len(pts)} double\n")
    for x, y in pts:
        out.write(f"{_fmt(x)} {_fmt(y)} 0.0\n")
    nl = cells.shape[1]
    out.write(f"CELLS {len(cells)} {len(cells) * (nl + 1)}\n")
    for row in cells:
        out.write(f"{nl} " + " ".join(map(str, row)) + "\n")
    out.write(f"CELL_TYPES {len(cells)}\n")
    out.write(f"{ctype}\n" * len(cells))
    out.write(f"POINT_DATA {len(pts)}\nSCALARS {name} double 1\nLOOKUP_TABLE default\n")
    for v in coeffs:
        out.write(_fmt(v) + "\n")
    Path(path).write_text(out.getvalue())


def export_solution_csv(space, coeffs, path):
    """One row per DOF node: dof, x, y, deflection."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dof", "x", "y", "deflection"])
        for i, ((x, y), v) in enumerate(zip(space.node_coords, coeffs)):
            w.writerow([i, _fmt(x), _fmt(y), _fmt(v)])


@dataclass
class RateTable:
    """Rows of numbers under named columns; NaN is written as an empty cell."""

    columns: tuple
    rows: list = field(default_factory=list)

    def column(self, name):
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows], dtype=np.float64)

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow(["" if (isinstance(v, float) and math.isnan(v)) else (v if isinstance(v, int) else _fmt(v)) for v in r])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text):
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        rows = []
        for rec in reader:
            if len(rec) != len(header):
                raise ValueError(f"row has {len(rec)} cells, header has {len(header)}")
            row = []
            for cell in rec:
                if cell == "":
                    row.append(float("nan"))
                elif cell.lstrip("-").isdigit():
                    row.append(int(cell))
                else:
                    row.append(float(cell))
            rows.append(tuple(row))
        return cls(header, rows)

    def __eq__(self, other):
        if not isinstance(other, RateTable) or self.columns != other.columns or len(self.rows) != len(other.rows):
            return False
        a = np.array(self.rows, dtype=np.float64)
        b = np.array(other.rows, dtype=np.float64)
        return bool(np.array_equal(a, b, equal_nan=True))


def observed_rates(h, errors):
    """Rates log(e_i / e_{i+1}) / log(h_i / h_{i+1}); NaN for the first row."""
    h = np.asarray(h, dtype=np.float64)
    e = np.asarray(errors, dtype=np.float64)
    rates = np.full(len(e), np.nan)
    if len(e) > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            rates[1:] = np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
    return rates


def rate_table(ns, hs, errors):
    """Table with columns n, h, then each error followed by its observed rate."""
    cols = ["n", "h"]
    data = [list(map(int, ns)), list(map(float, hs))]
    for name, vals in errors.items():
        cols += [name, f"{name}_rate"]
        data += [list(map(float, vals)), list(observed_rates(hs, vals))]
    rows = [tuple(col[i] for col in data) for i in range(len(ns))]
    return RateTable(tuple(cols), rows)


def export_csv(table, path):
    Path(path).write_text(table.to_csv())
