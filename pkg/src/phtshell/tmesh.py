"""Hierarchical T-meshes over the unit parameter square.

Coordinates are exact integers.  A level-0 cell spans ``2**LMAX`` units in
each direction, so the mesh-line ``s = i / nx`` of level ``l`` sits at an
integer multiple of ``2**(LMAX - l)`` and dyadic bisection never leaves the
integer lattice.  Parameter values are recovered as ``x / (nx * 2**LMAX)``.

Elements live in an append-only tree: subdivision deactivates a cell and
appends its four children, so element ids stay valid across refinements and
across :meth:`HierTMesh.copy`.
"""
from __future__ import annotations

import copy
import enum
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigurationError, UsageError

LMAX = 16


class VertexClass(enum.Enum):
    BOUNDARY = "boundary"
    CROSSING = "crossing"
    TJUNCTION = "tjunction"

    @property
    def is_basis(self) -> bool:
        return self is not VertexClass.TJUNCTION


@dataclass(slots=True)
class Element:
    s0: int
    t0: int
    s1: int
    t1: int
    level: int
    parent: int | None = None
    children: tuple[int, int, int, int] | None = None
    active: bool = True

    @property
    def rect(self) -> tuple[int, int, int, int]:
        return self.s0, self.t0, self.s1, self.t1

    @property
    def corners(self) -> tuple[tuple[int, int], ...]:
        """Corner keys ordered SW, SE, NW, NE."""
        return ((self.s0, self.t0), (self.s1, self.t0),
                (self.s0, self.t1), (self.s1, self.t1))


class HierTMesh:
    """Hierarchical T-mesh built by dyadic cross insertion.

    Parameters
    ----------
    nx, ny : int
        Resolution of the level-0 tensor-product mesh.
    """

    def __init__(self, nx: int, ny: int):
        if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
            raise ConfigurationError(f"mesh resolution must be positive integers, got ({nx}, {ny})")
        self.nx, self.ny = int(nx), int(ny)
        self.unit = 1 << LMAX
        self.ds = self.nx * self.unit
        self.dt = self.ny * self.unit
        self.elements: list[Element] = []
        self.vertices: dict[tuple[int, int], VertexClass] = {}
        u = self.unit
        for j in range(self.ny):
            for i in range(self.nx):
                self.elements.append(Element(i * u, j * u, (i + 1) * u, (j + 1) * u, 0))
        for j in range(self.ny + 1):
            for i in range(self.nx + 1):
                key = (i * u, j * u)
                self.vertices[key] = (VertexClass.BOUNDARY if self.on_boundary(key)
                                      else VertexClass.CROSSING)
        self._active_cache: list[int] | None = None

    # ------------------------------------------------------------------ basics
    @property
    def initial_resolution(self) -> tuple[int, int]:
        return self.nx, self.ny

    @property
    def level_count(self) -> int:
        return 1 + max(self.elements[e].level for e in self.active_elements())

    def copy(self) -> "HierTMesh":
        new = copy.copy(self)
        new.elements = [copy.copy(e) for e in self.elements]
        new.vertices = dict(self.vertices)
        new._active_cache = None
        return new

    def active_elements(self) -> list[int]:
        if self._active_cache is None:
            self._active_cache = [i for i, e in enumerate(self.elements) if e.active]
        return self._active_cache

    def n_active(self) -> int:
        return len(self.active_elements())

    def on_boundary(self, v: tuple[int, int]) -> bool:
        x, y = v
        return x == 0 or y == 0 or x == self.ds or y == self.dt

    def to_units(self, s, t) -> tuple[int, int]:
        """Map parameter values (float or Fraction) to lattice units (floored)."""
        if not (0 <= s <= 1 and 0 <= t <= 1):
            raise UsageError(f"point ({s}, {t}) lies outside the unit square")
        x = Fraction(s) * self.ds if isinstance(s, (int, Fraction)) else s * self.ds
        y = Fraction(t) * self.dt if isinstance(t, (int, Fraction)) else t * self.dt
        return int(x // 1), int(y // 1)

    def param(self, v: tuple[int, int]) -> tuple[float, float]:
        return v[0] / self.ds, v[1] / self.dt

    def param_exact(self, v: tuple[int, int]) -> tuple[Fraction, Fraction]:
        return Fraction(v[0], self.ds), Fraction(v[1], self.dt)

    def key_of(self, s, t) -> tuple[int, int]:
        """Exact lattice key of a vertex given by parameter values."""
        x, y = Fraction(s) * self.ds, Fraction(t) * self.dt
        if x.denominator != 1 or y.denominator != 1:
            raise UsageError(f"({s}, {t}) is not a lattice point")
        return int(x), int(y)

    def element_size(self, eid: int) -> tuple[float, float]:
        e = self.elements[eid]
        return (e.s1 - e.s0) / self.ds, (e.t1 - e.t0) / self.dt

    def element_rect(self, eid: int) -> tuple[float, float, float, float]:
        e = self.elements[eid]
        return e.s0 / self.ds, e.t0 / self.dt, e.s1 / self.ds, e.t1 / self.dt

    # ---------------------------------------------------------------- location
    def locate(self, x: int, y: int) -> int:
        """Active element containing lattice point ``(x, y)``.

        Elements are half-open ``[s0, s1) x [t0, t1)`` except on the upper
        domain boundary, which is closed.
        """
        if not (0 <= x <= self.ds and 0 <= y <= self.dt):
            raise UsageError(f"lattice point ({x}, {y}) outside domain")
        i = min(x // self.unit, self.nx - 1)
        j = min(y // self.unit, self.ny - 1)
        eid = j * self.nx + i
        el = self.elements[eid]
        while not el.active:
            mx = (el.s0 + el.s1) >> 1
            my = (el.t0 + el.t1) >> 1
            eid = el.children[(x >= mx) + 2 * (y >= my)]
            el = self.elements[eid]
        return eid

    def element_at(self, s, t) -> int:
        """Active element containing parameter point ``(s, t)``."""
        return self.locate(*self.to_units(s, t))

    def quadrant_cells(self, v: tuple[int, int]) -> tuple[int | None, ...]:
        """Active cells touching ``v`` from the NE, NW, SW and SE sides."""
        x, y = v
        east, west = x < self.ds, x > 0
        north, south = y < self.dt, y > 0
        return (self.locate(x, y) if east and north else None,
                self.locate(x - 1, y) if west and north else None,
                self.locate(x - 1, y - 1) if west and south else None,
                self.locate(x, y - 1) if east and south else None)

    def edge_directions(self, v: tuple[int, int]) -> tuple[bool, bool, bool, bool]:
        """Whether mesh edges leave interior vertex ``v`` towards +s, +t, -s, -t."""
        ne, nw, sw, se = self.quadrant_cells(v)
        return ne != se, ne != nw, nw != sw, sw != se

    def classify(self, v: tuple[int, int]) -> VertexClass:
        """Derive the class of vertex ``v`` from its incident edges."""
        if self.on_boundary(v):
            return VertexClass.BOUNDARY
        return VertexClass.CROSSING if all(self.edge_directions(v)) else VertexClass.TJUNCTION

    def tjunction_source(self, v: tuple[int, int]) -> int:
        """The coarse cell whose edge passes through T-junction ``v``."""
        ne, nw, sw, se = self.quadrant_cells(v)
        ps, pt, ms, mt = ne != se, ne != nw, nw != sw, sw != se
        if not ps:
            return ne
        if not pt:
            return ne
        if not ms:
            return nw
        if not mt:
            return sw
        raise UsageError(f"vertex {self.param(v)} is not a T-junction")

    def is_basis_vertex(self, v: tuple[int, int]) -> bool:
        cls = self.vertices.get(v)
        return cls is not None and cls.is_basis

    def basis_vertices(self) -> list[tuple[int, int]]:
        """Basis vertices sorted by (t, s)."""
        return sorted((v for v, c in self.vertices.items() if c.is_basis),
                      key=lambda v: (v[1], v[0]))

    def count_vertices(self) -> tuple[int, int, int]:
        """Return ``(V^b, V^+, n_tjunctions)``."""
        nb = nc = nt = 0
        for c in self.vertices.values():
            if c is VertexClass.BOUNDARY:
                nb += 1
            elif c is VertexClass.CROSSING:
                nc += 1
            else:
                nt += 1
        return nb, nc, nt

    # -------------------------------------------------------------- refinement
    def subdivide(self, eid: int) -> list[tuple[int, int]]:
        """Split active element ``eid`` into four quadrants.

        Returns the vertices that became basis vertices.
        """
        el = self.elements[eid]
        if not el.active:
            raise UsageError(f"element {eid} is not active")
        if el.level >= LMAX:
            raise UsageError(f"element {eid} already at the maximum depth {LMAX}")
        mx = (el.s0 + el.s1) >> 1
        my = (el.t0 + el.t1) >> 1
        lvl = el.level + 1
        base = len(self.elements)
        self.elements.extend([
            Element(el.s0, el.t0, mx, my, lvl, eid),
            Element(mx, el.t0, el.s1, my, lvl, eid),
            Element(el.s0, my, mx, el.t1, lvl, eid),
            Element(mx, my, el.s1, el.t1, lvl, eid),
        ])
        el.children = (base, base + 1, base + 2, base + 3)
        el.active = False
        self._active_cache = None

        promoted = []
        for v in ((mx, my), (mx, el.t0), (el.s1, my), (mx, el.t1), (el.s0, my)):
            before = self.vertices.get(v)
            now = self.classify(v)
            self.vertices[v] = now
            if now.is_basis and (before is None or not before.is_basis):
                promoted.append(v)
        return promoted

    def subdivide_many(self, eids) -> list[tuple[int, int]]:
        promoted = []
        for e in sorted(set(eids)):
            promoted.extend(self.subdivide(e))
        # a vertex promoted early can never be demoted later
        return promoted

    # --------------------------------------------------------------- adjacency
    def cells_touching(self, x0: int, x1: int, y0: int, y1: int) -> list[int]:
        """Active cells whose closed rectangle meets ``[x0,x1] x [y0,y1]``."""
        u = self.unit
        i_lo = max(0, -(-x0 // u) - 1)
        i_hi = min(self.nx - 1, x1 // u)
        j_lo = max(0, -(-y0 // u) - 1)
        j_hi = min(self.ny - 1, y1 // u)
        out = []
        stack = [j * self.nx + i for j in range(j_lo, j_hi + 1) for i in range(i_lo, i_hi + 1)]
        elements = self.elements
        while stack:
            eid = stack.pop()
            e = elements[eid]
            if e.s0 > x1 or e.s1 < x0 or e.t0 > y1 or e.t1 < y0:
                continue
            if e.active:
                out.append(eid)
            else:
                stack.extend(e.children)
        return sorted(out)

    def neighbors(self, eid: int) -> set[int]:
        """Active elements sharing at least a point with ``eid``."""
        e = self.elements[eid]
        if not e.active:
            raise UsageError(f"element {eid} is not active")
        found = set(self.cells_touching(e.s0, e.s1, e.t0, e.t1))
        found.discard(eid)
        return found

    def _cells_across(self, eid: int) -> list[list[int]]:
        """For each edge of ``eid``, the active cells on the other side."""
        e = self.elements[eid]
        out = []
        for (x0, x1, y0, y1, side) in ((e.s0, e.s1, e.t0, e.t0, "s"), (e.s0, e.s1, e.t1, e.t1, "n"),
                                       (e.s0, e.s0, e.t0, e.t1, "w"), (e.s1, e.s1, e.t0, e.t1, "e")):
            cells = []
            for c in self.cells_touching(x0, x1, y0, y1):
                o = self.elements[c]
                if side == "s" and o.t1 == e.t0 and o.s0 < e.s1 and o.s1 > e.s0:
                    cells.append(c)
                elif side == "n" and o.t0 == e.t1 and o.s0 < e.s1 and o.s1 > e.s0:
                    cells.append(c)
                elif side == "w" and o.s1 == e.s0 and o.t0 < e.t1 and o.t1 > e.t0:
                    cells.append(c)
                elif side == "e" and o.s0 == e.s1 and o.t0 < e.t1 and o.t1 > e.t0:
                    cells.append(c)
            out.append(cells)
        return out

    def support_cells(self, v: tuple[int, int]) -> set[int]:
        """Active cells on which the basis functions anchored at ``v`` live.

        The cells around ``v`` plus everything reached through T-junctions
        lying inside the edges of cells already collected.
        """
        cls = self.vertices.get(v)
        if cls is None or not cls.is_basis:
            raise UsageError(f"{self.param(v)} is not a basis vertex")
        found = {c for c in self.quadrant_cells(v) if c is not None}
        todo = list(found)
        while todo:
            d = todo.pop()
            for cells in self._cells_across(d):
                if len(cells) > 1:
                    for c in cells:
                        if c not in found:
                            found.add(c)
                            todo.append(c)
        return found

    def support_mesh(self, v: tuple[int, int]) -> tuple[int, int, int, int]:
        """Bounding rectangle ``(x0, x1, y0, y1)`` of the support of ``v``'s basis."""
        cells = [self.elements[c] for c in self.support_cells(v)]
        return (min(c.s0 for c in cells), max(c.s1 for c in cells),
                min(c.t0 for c in cells), max(c.t1 for c in cells))

    def coord_level(self, x: int) -> int:
        """Coarsest level whose grid contains lattice coordinate ``x``."""
        if x == 0:
            return 0
        tz = (x & -x).bit_length() - 1
        return max(0, LMAX - tz)

    def birth_level(self, v: tuple[int, int]) -> int:
        return max(self.coord_level(v[0]), self.coord_level(v[1]))

    def birth_box(self, v: tuple[int, int]) -> tuple[int, int, int, int]:
        """Two-cell box at ``v``'s creation level, clamped to the domain."""
        h = 1 << (LMAX - self.birth_level(v))
        x, y = v
        return max(0, x - h), min(self.ds, x + h), max(0, y - h), min(self.dt, y + h)

    # ------------------------------------------------------------------- io
    def dump(self) -> str:
        """One ``level s0 t0 s1 t1`` line per active element, exact rationals."""
        lines = [f"# tmesh {self.nx} {self.ny}"]
        for eid in self.active_elements():
            e = self.elements[eid]
            vals = (Fraction(e.s0, self.ds), Fraction(e.t0, self.dt),
                    Fraction(e.s1, self.ds), Fraction(e.t1, self.dt))
            lines.append(f"{e.level} " + " ".join(str(q) for q in vals))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dump(cls, text: str) -> "HierTMesh":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# tmesh"):
            raise ConfigurationError("mesh dump must start with '# tmesh nx ny'")
        _, _, nx, ny = lines[0].split()
        mesh = cls(int(nx), int(ny))
        rects = []
        for n, ln in enumerate(lines[1:], start=2):
            parts = ln.split()
            if len(parts) != 5:
                raise ConfigurationError(f"mesh dump line {n}: expected 5 fields")
            lvl = int(parts[0])
            s0, t0 = mesh.key_of(Fraction(parts[1]), Fraction(parts[2]))
            rects.append((lvl, s0, t0))
        for lvl, s0, t0 in sorted(rects):
            eid = mesh.locate(s0, t0)
            while mesh.elements[eid].level < lvl:
                mesh.subdivide(eid)
                eid = mesh.locate(s0, t0)
        return mesh


def build_tensor_mesh(nx: int, ny: int) -> HierTMesh:
    return HierTMesh(nx, ny)
