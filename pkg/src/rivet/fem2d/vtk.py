"""Legacy ASCII VTK output of nodal fields."""
from __future__ import annotations

from pathlib import Path

import numpy as np

_CELL_TYPE = {"quad4": 9, "tri3": 5}


def write_vtk(path, mesh, u=None, z=None, title="rivet snapshot"):
    """Write an unstructured grid with point data ``z`` and vector ``u``."""
    n = mesh.n_nodes
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n} double"]
    lines += [f"{x:.15g} {y:.15g} 0" for x, y in mesh.nodes]
    cells = [(g.kind, c) for g in mesh.groups for c in g.conn]
    size = sum(len(c) + 1 for _, c in cells)
    lines.append(f"CELLS {len(cells)} {size}")
    lines += [f"{len(c)} " + " ".join(map(str, c)) for _, c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += [str(_CELL_TYPE[k]) for k, _ in cells]
    if u is not None or z is not None:
        lines.append(f"POINT_DATA {n}")
    if z is not None:
        lines += ["SCALARS z double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.15g}" for v in np.asarray(z, float)]
    if u is not None:
        uv = np.asarray(u, float).reshape(n, 2)
        lines.append("VECTORS u double")
        lines += [f"{a:.15g} {b:.15g} 0" for a, b in uv]
    Path(path).write_text("\n".join(lines) + "\n")
