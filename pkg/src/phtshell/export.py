"""Legacy ASCII VTK output of density fields and T-mesh wireframes."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .phtspace import Field
from .shellgeom import MidSurface

VTK_LINE = 3
VTK_QUAD = 9
THRESHOLD = 0.5


def threshold(values):
    """Solid (1) where the density is at least one half, void (0) elsewhere."""
    return (np.asarray(values) >= THRESHOLD).astype(int)


def _tessellate(space, n):
    g = np.linspace(0.0, 1.0, n + 1)
    uu, ww = np.meshgrid(g, g, indexing="xy")
    u, w = uu.ravel(), ww.ravel()
    pts, levels, eids = [], [], []
    for e in space.elements:
        s0, t0, s1, t1 = space.mesh.element_rect(e)
        pts.append(np.column_stack([s0 + (s1 - s0) * u, t0 + (t1 - t0) * w]))
        levels.append(space.mesh.elements[e].level)
        eids.append(e)
    return np.concatenate(pts), levels, eids


def _element_values(rho: Field, eids, n):
    """Density at the tessellation points, evaluated element by element."""
    g = np.linspace(0.0, 1.0, n + 1)
    uu, ww = np.meshgrid(g, g, indexing="xy")
    u, w = uu.ravel(), ww.ravel()
    sp = rho.space
    out = []
    for e in eids:
        N = sp.element_basis(e, u, w, 1)[0]
        out.append(rho.coeffs[sp.elem_ids[e], 0] @ N)
    return np.concatenate(out)


def export_vtk(space, surf: MidSurface, rho: Field, path, n: int = 4, wireframe: bool = True):
    """Write the tessellated density surface; returns the written path(s)."""
    if n < 1:
        raise ValueError("tessellation needs n >= 1")
    path = Path(path)
    params, levels, eids = _tessellate(space, n)
    X = surf(params)
    dens = _element_values(rho, eids, n)
    npe = (n + 1) ** 2
    cells = []
    for k in range(len(eids)):
        base = k * npe
        for j in range(n):
            for i in range(n):
                a = base + j * (n + 1) + i
                cells.append((a, a + 1, a + n + 2, a + n + 1))
    lines = ["# vtk DataFile Version 3.0", "phtshell density", "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(X)} double"]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in X]
    lines.append(f"CELLS {len(cells)} {5 * len(cells)}")
    lines += [f"4 {a} {b} {c} {d}" for a, b, c, d in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += [str(VTK_QUAD)] * len(cells)
    lines.append(f"CELL_DATA {len(cells)}")
    lines += ["SCALARS level int 1", "LOOKUP_TABLE default"]
    lines += [str(lv) for lv in levels for _ in range(n * n)]
    lines.append(f"POINT_DATA {len(X)}")
    lines += ["SCALARS density double 1", "LOOKUP_TABLE default"]
    lines += [repr(float(v)) for v in dens]
    lines += ["SCALARS thresholded int 1", "LOOKUP_TABLE default"]
    lines += [str(v) for v in threshold(dens)]
    path.write_text("\n".join(lines) + "\n")
    written = [path]
    if wireframe:
        wpath = path.with_name(path.stem + "_mesh.vtk")
        export_wireframe(space, surf, wpath)
        written.append(wpath)
    return written


def export_wireframe(space, surf: MidSurface, path):
    """Element edges as line cells (shared edges are written once per element)."""
    corners = []
    for e in space.elements:
        s0, t0, s1, t1 = space.mesh.element_rect(e)
        corners += [(s0, t0), (s1, t0), (s1, t1), (s0, t1)]
    X = surf(np.array(corners))
    m = len(space.elements)
    lines = ["# vtk DataFile Version 3.0", "phtshell T-mesh", "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(X)} double"]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in X]
    lines.append(f"CELLS {4 * m} {12 * m}")
    for k in range(m):
        b = 4 * k
        lines += [f"2 {b + i} {b + (i + 1) % 4}" for i in range(4)]
    lines.append(f"CELL_TYPES {4 * m}")
    lines += [str(VTK_LINE)] * (4 * m)
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)
