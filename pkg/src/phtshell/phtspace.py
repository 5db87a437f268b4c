"""PHT-spline spaces S(3,3,1,1,T) over hierarchical T-meshes.

Every basis vertex carries four functions.  A function of the space is
fully determined by its geometric information ``[f, f_s, f_t, f_st]`` at the
basis vertices: on each cell the bicubic piece is the Hermite patch of its
four corner data, and the data at a T-junction corner is read off the
coarser cell whose edge runs through it.  The basis functions anchored at
``v`` are the four C1 bicubic B-splines of ``v``'s two-cell box at the level
where ``v`` first appeared, truncated so that their data vanishes at every
other basis vertex.  Bezier ordinates per cell are derived from that data
and cached for assembly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bezier import bernstein3, hermite_to_bezier, spline_pair
from .errors import ConfigurationError, UsageError
from .tmesh import HierTMesh

# slot -> (s factor, t factor); factor 0 leans towards the lower knot span
SLOT_FACTORS = ((0, 0), (1, 0), (1, 1), (0, 1))
# corner order SW, SE, NW, NE as (s end, t end)
CORNER_ENDS = ((0, 0), (1, 0), (0, 1), (1, 1))

_DROP_TOL = 1e-14


class PhtSpace:
    """Basis of the PHT-spline space on ``mesh``.

    The mesh must not be modified afterwards; :func:`refine` works on a copy.
    """

    def __init__(self, mesh: HierTMesh):
        self.mesh = mesh
        self.vertices = mesh.basis_vertices()
        self.vertex_index = {v: i for i, v in enumerate(self.vertices)}
        self.dim = 4 * len(self.vertices)
        self.G = np.array([self._vertex_data(v) for v in self.vertices]).reshape(-1, 4, 4)
        self.elements = list(mesh.active_elements())
        self.elem_ids: dict[int, np.ndarray] = {}
        self.elem_ord: dict[int, np.ndarray] = {}
        self._build_patches()
        self._func_elems = None

    # ---------------------------------------------------------------- build
    def _vertex_data(self, v):
        x0, x1, y0, y1 = self.mesh.birth_box(v)
        ds, dt = self.mesh.ds, self.mesh.dt
        a_s = spline_pair((v[0] - x0) / ds, (x1 - v[0]) / ds)
        a_t = spline_pair((v[1] - y0) / dt, (y1 - v[1]) / dt)
        rows = []
        for fs, ft in SLOT_FACTORS:
            rows.append([a_s[fs, 0] * a_t[ft, 0], a_s[fs, 1] * a_t[ft, 0],
                         a_s[fs, 0] * a_t[ft, 1], a_s[fs, 1] * a_t[ft, 1]])
        return rows

    def _corner_data(self, v, tcache):
        """``(ids, L)`` with L of shape (m, 4) for the functions seen at ``v``."""
        k = self.vertex_index.get(v)
        if k is not None:
            return np.arange(4 * k, 4 * k + 4), self.G[k]
        hit = tcache.get(v)
        if hit is not None:
            return hit
        src = self.mesh.tjunction_source(v)
        ids = self.elem_ids[src]
        s, t = self.mesh.param(v)
        data = self._patch_info(src, np.array([s]), np.array([t]))[:, 0, :]
        hs, ht = self.mesh.element_size(src)
        scaled = np.abs(data) * np.array([1.0, hs, ht, hs * ht])
        keep = scaled.max(axis=1) > _DROP_TOL
        tcache[v] = (ids[keep], data[keep])
        return tcache[v]

    def _build_patches(self):
        mesh = self.mesh
        tcache = {}
        order = sorted(self.elements, key=lambda e: mesh.elements[e].level)
        for eid in order:
            el = mesh.elements[eid]
            parts = [self._corner_data(c, tcache) for c in el.corners]
            ids = np.unique(np.concatenate([p[0] for p in parts]))
            pos = {int(i): n for n, i in enumerate(ids)}
            dm = np.zeros((len(ids), 4, 4))
            for (a, b), (cids, L) in zip(CORNER_ENDS, parts):
                rows = [pos[int(i)] for i in cids]
                dm[rows, 2 * a, 2 * b] = L[:, 0]
                dm[rows, 2 * a + 1, 2 * b] = L[:, 1]
                dm[rows, 2 * a, 2 * b + 1] = L[:, 2]
                dm[rows, 2 * a + 1, 2 * b + 1] = L[:, 3]
            hs, ht = mesh.element_size(eid)
            self.elem_ids[eid] = ids
            self.elem_ord[eid] = hermite_to_bezier(hs) @ dm @ hermite_to_bezier(ht).T

    # ------------------------------------------------------------- evaluate
    def element_basis(self, eid: int, u, w, nderiv: int = 1) -> np.ndarray:
        """Basis values on element ``eid`` at local coordinates ``(u, w)``.

        Returns shape ``(k, m, P)`` with k = 3 for ``nderiv=1`` (N, N_s, N_t)
        and k = 6 for ``nderiv=2`` (adds N_st, N_ss, N_tt).  Derivatives are
        taken with respect to the global parameters.
        """
        hs, ht = self.mesh.element_size(eid)
        B = self.elem_ord[eid]
        bs, bt = bernstein3(u), bernstein3(w)
        out = [np.einsum("pi,mij,pj->mp", bs[0], B, bt[0]),
               np.einsum("pi,mij,pj->mp", bs[1], B, bt[0]) / hs,
               np.einsum("pi,mij,pj->mp", bs[0], B, bt[1]) / ht]
        if nderiv >= 2:
            out += [np.einsum("pi,mij,pj->mp", bs[1], B, bt[1]) / (hs * ht),
                    np.einsum("pi,mij,pj->mp", bs[2], B, bt[0]) / hs ** 2,
                    np.einsum("pi,mij,pj->mp", bs[0], B, bt[2]) / ht ** 2]
        return np.array(out)

    def local_coords(self, eid: int, s, t):
        s0, t0, s1, t1 = self.mesh.element_rect(eid)
        return (np.asarray(s) - s0) / (s1 - s0), (np.asarray(t) - t0) / (t1 - t0)

    def _patch_info(self, eid, s, t):
        """Geometric information of every function on ``eid``: (m, P, 4)."""
        u, w = self.local_coords(eid, s, t)
        vals = self.element_basis(eid, u, w, nderiv=2)
        return np.stack([vals[0], vals[1], vals[2], vals[3]], axis=-1)

    def group_points(self, points) -> dict[int, np.ndarray]:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        groups: dict[int, list[int]] = {}
        for n, (s, t) in enumerate(pts):
            groups.setdefault(self.mesh.element_at(s, t), []).append(n)
        return {e: np.array(ix) for e, ix in groups.items()}

    def basis_matrix(self, points, nderiv: int = 0):
        """Dense ``(k, P, dim)`` matrix of basis values at ``points``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = {0: 1, 1: 3, 2: 6}[nderiv]
        out = np.zeros((k, len(pts), self.dim))
        for eid, ix in self.group_points(pts).items():
            u, w = self.local_coords(eid, pts[ix, 0], pts[ix, 1])
            vals = self.element_basis(eid, u, w, nderiv=max(nderiv, 1))[:k]
            out[:, ix[:, None], self.elem_ids[eid][None, :]] = vals.transpose(0, 2, 1)
        return out

    # --------------------------------------------------------------- queries
    def anchor(self, i: int) -> tuple[tuple[int, int], int]:
        """Anchor vertex key and slot (1..4) of basis function ``i``."""
        return self.vertices[i // 4], i % 4 + 1

    def basis_level(self, i: int) -> int:
        return self.mesh.birth_level(self.vertices[i // 4])

    def vertex_functions(self, v) -> np.ndarray:
        k = self.vertex_index.get(v)
        if k is None:
            raise UsageError(f"{self.mesh.param(v)} is not a basis vertex")
        return np.arange(4 * k, 4 * k + 4)

    def function_elements(self, i: int) -> list[int]:
        if self._func_elems is None:
            fe = [[] for _ in range(self.dim)]
            for eid in self.elements:
                for j in self.elem_ids[eid]:
                    fe[j].append(eid)
            self._func_elems = fe
        return self._func_elems[i]

    def patches(self, i: int) -> dict[int, np.ndarray]:
        """Bezier ordinates (4x4, s-major) of basis function ``i`` per element."""
        out = {}
        for eid in self.function_elements(i):
            row = int(np.searchsorted(self.elem_ids[eid], i))
            out[eid] = self.elem_ord[eid][row]
        return out

    def max_functions_per_element(self) -> int:
        return max(len(v) for v in self.elem_ids.values())

    def center_matrix(self):
        """Sparse ``(n_elements, dim)`` matrix of basis values at element centres."""
        import scipy.sparse as sp
        rows, cols, vals = [], [], []
        half = np.array([0.5])
        for n, eid in enumerate(self.elements):
            v = self.element_basis(eid, half, half, nderiv=1)[0][:, 0]
            rows.append(np.full(len(v), n))
            cols.append(self.elem_ids[eid])
            vals.append(v)
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(len(self.elements), self.dim))


ORDERS = {"value": 1, "grad": 3, "mixed2": 4, "hessian": 6}


@dataclass(frozen=True, eq=False)
class Field:
    """Coefficients over a :class:`PhtSpace`, ``d`` values per basis function."""

    space: PhtSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != self.space.dim:
            raise UsageError(f"field has {c.shape[0]} coefficient rows, space dimension is {self.space.dim}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]

    def evaluate(self, points, order: str = "value") -> np.ndarray:
        """Values and derivatives at ``points``; shape ``(P, k, d)``.

        The k axis holds ``f, f_s, f_t, f_st, f_ss, f_tt`` truncated to the
        requested order (value: 1, grad: 3, mixed2: 4, hessian: 6).
        """
        k = ORDERS[order]
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros((len(pts), k, self.d))
        sp = self.space
        nd = 2 if k > 3 else 1
        for eid, ix in sp.group_points(pts).items():
            u, w = sp.local_coords(eid, pts[ix, 0], pts[ix, 1])
            vals = sp.element_basis(eid, u, w, nderiv=nd)[:k]
            out[ix] = np.einsum("kmp,md->pkd", vals, self.coeffs[sp.elem_ids[eid]])
        return out

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(points)[:, 0, :]


def build_level0(mesh: HierTMesh) -> PhtSpace:
    if any(mesh.elements[e].level for e in mesh.active_elements()):
        raise UsageError("build_level0 expects an unrefined tensor-product mesh")
    return PhtSpace(mesh)


def refine(space: PhtSpace, elements) -> PhtSpace:
    """Space over the mesh obtained by subdividing ``elements``."""
    elements = sorted(set(int(e) for e in elements))
    for e in elements:
        if e >= len(space.mesh.elements) or not space.mesh.elements[e].active:
            raise UsageError(f"element {e} is not active")
    mesh = space.mesh.copy()
    mesh.subdivide_many(elements)
    return PhtSpace(mesh)


def geometric_info(field: Field, v) -> np.ndarray:
    """``[f, f_s, f_t, f_st]`` at basis vertex ``v``; shape (4, d)."""
    mesh = field.space.mesh
    if not mesh.is_basis_vertex(v):
        raise UsageError(f"{mesh.param(v)} is not a basis vertex")
    return field.evaluate([mesh.param(v)], "mixed2")[0]


def geometric_info_many(field: Field, points) -> np.ndarray:
    return field.evaluate(points, "mixed2")


def _check_nested(coarse: HierTMesh, fine: HierTMesh):
    if (coarse.nx, coarse.ny) != (fine.nx, fine.ny) or len(fine.elements) < len(coarse.elements):
        raise UsageError("target space is not built on a refinement of the source mesh")
    for eid in coarse.active_elements():
        if coarse.elements[eid].rect != fine.elements[eid].rect:
            raise UsageError("target space is not built on a refinement of the source mesh")


def coefficients_from_info(space: PhtSpace, info: np.ndarray) -> np.ndarray:
    """Solve ``P = L . G^-1`` per basis vertex; ``info`` has shape (nv, 4, d)."""
    P = np.linalg.solve(np.transpose(space.G, (0, 2, 1)), info)
    return P.reshape(space.dim, -1)


def inherit(field: Field, space: PhtSpace) -> Field:
    """Re-express ``field`` exactly in the finer space ``space``."""
    _check_nested(field.space.mesh, space.mesh)
    pts = [space.mesh.param(v) for v in space.vertices]
    info = field.evaluate(pts, "mixed2")
    return Field(space, coefficients_from_info(space, info))


def interpolate(space: PhtSpace, func) -> Field:
    """Field matching ``func``'s geometric information at every basis vertex.

    ``func(s, t)`` must return an array of shape (4, d) ordered
    ``f, f_s, f_t, f_st``.  Bicubic C1 functions are reproduced exactly.
    """
    info = np.array([np.asarray(func(*space.mesh.param(v)), dtype=float).reshape(4, -1)
                     for v in space.vertices])
    return Field(space, coefficients_from_info(space, info))


# ------------------------------------------------------------ serialization
def field_to_text(field: Field) -> str:
    """One line per basis function: ``s t slot c_1 .. c_d`` (anchor exact)."""
    mesh = field.space.mesh
    lines = [f"# field dim={field.space.dim} d={field.d}"]
    for i in range(field.space.dim):
        v, slot = field.space.anchor(i)
        s, t = mesh.param_exact(v)
        vals = " ".join(repr(float(x)) for x in field.coeffs[i])
        lines.append(f"{s} {t} {slot} {vals}")
    return "\n".join(lines) + "\n"


def field_from_text(space: PhtSpace, text: str) -> Field:
    mesh = space.mesh
    rows = {}
    d = None
    for n, ln in enumerate(text.splitlines(), start=1):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) < 4:
            raise ConfigurationError(f"field line {n}: expected 's t slot values...'")
        try:
            v = mesh.key_of(Fraction(parts[0]), Fraction(parts[1]))
            slot = int(parts[2])
            vals = [float(x) for x in parts[3:]]
        except (ValueError, ZeroDivisionError, UsageError) as exc:
            raise ConfigurationError(f"field line {n}: {exc}") from exc
        if d is None:
            d = len(vals)
        if len(vals) != d or not 1 <= slot <= 4 or v not in space.vertex_index:
            raise ConfigurationError(f"field line {n}: does not match the space")
        rows[4 * space.vertex_index[v] + slot - 1] = vals
    if len(rows) != space.dim:
        raise ConfigurationError(f"field text has {len(rows)} entries, space needs {space.dim}")
    return Field(space, np.array([rows[i] for i in range(space.dim)]))
